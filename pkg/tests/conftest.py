import functools

import pytest

from lanemden import StarConfig, integrate_gas_profile


@functools.lru_cache(maxsize=None)
def _cached_profile(d, gamma, rho0, tol, r_max, stop_at_liquid):
    return integrate_gas_profile(
        StarConfig(d, gamma, rho0), tol=tol, r_max=r_max, stop_at_liquid=stop_at_liquid
    )


def get_profile(d, gamma, rho0, tol=1e-10, r_max=20.0, stop_at_liquid=False):
    """Profiles are immutable, so one integration per parameter set serves all tests."""
    return _cached_profile(d, gamma, rho0, tol, r_max, stop_at_liquid)


def get_liquid(d, gamma, rho0, tol=1e-10, r_max=50.0):
    return _cached_profile(d, gamma, rho0, tol, r_max, True)


@pytest.fixture(scope="session")
def profile_factory():
    return get_profile


@pytest.fixture(scope="session")
def liquid_factory():
    return get_liquid
