"""Parameter triple for a polytropic star and the critical exponent thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def support_threshold(d: int) -> float:
    """Adiabatic index above which the gas star has compact support: 2d/(d+2)."""
    return 2.0 * d / (d + 2.0)


def stability_threshold(d: int) -> float:
    """Adiabatic index at and above which the potential term is non-negative: 2(d-1)/d."""
    return 2.0 * (d - 1.0) / d


@dataclass(frozen=True)
class StarConfig:
    """Physical parameters (d, gamma, rho_center) of a polytropic star.

    Units are normalized so that the pressure law is p = rho^gamma (gas) or
    p = rho^gamma - 1 (liquid), hence the liquid boundary density is 1.

    d            spatial dimension, integer >= 3
    gamma        adiabatic index in [1, 2]
    rho_center   central density rho(0) > 0; a liquid truncation radius exists
                 only when rho_center > 1
    """

    d: int
    gamma: float
    rho_center: float

    def __post_init__(self):
        if not isinstance(self.d, int) or isinstance(self.d, bool):
            raise ValueError(f"dimension d must be an integer, got {self.d!r}")
        if self.d < 3:
            raise ValueError(f"dimension d must be >= 3, got {self.d}")
        if not (1.0 <= self.gamma <= 2.0):
            raise ValueError(f"gamma must lie in [1, 2], got {self.gamma}")
        if not (self.rho_center > 0.0 and math.isfinite(self.rho_center)):
            raise ValueError(f"rho_center must be positive and finite, got {self.rho_center}")

    @property
    def isothermal(self) -> bool:
        """True when gamma == 1 (log-enthalpy branch)."""
        return self.gamma == 1.0

    @property
    def alpha(self) -> float:
        """Density exponent in the enthalpy source w^alpha: alpha = 1/(gamma-1)."""
        if self.isothermal:
            raise ValueError("alpha is undefined at gamma = 1")
        return 1.0 / (self.gamma - 1.0)

    @property
    def enthalpy_center(self) -> float:
        """Central enthalpy: rho0^(gamma-1) for gamma > 1, ln(rho0) at gamma = 1."""
        if self.isothermal:
            return math.log(self.rho_center)
        return self.rho_center ** (self.gamma - 1.0)

    @property
    def boundary_enthalpy(self) -> float:
        """Enthalpy value at density 1 (the liquid surface): w = 1, or h = 0."""
        return 0.0 if self.isothermal else 1.0

    def enthalpy_of_rho(self, rho):
        """Map density to the enthalpy variable (w = rho^(gamma-1), or h = ln rho)."""
        if self.isothermal:
            return np.log(rho)
        return np.asarray(rho) ** (self.gamma - 1.0)

    def rho_of_enthalpy(self, enthalpy):
        """Inverse map; negative w (past a compact-support surface) clamps to rho = 0."""
        if self.isothermal:
            return np.exp(enthalpy)
        return np.maximum(np.asarray(enthalpy), 0.0) ** (1.0 / (self.gamma - 1.0))
