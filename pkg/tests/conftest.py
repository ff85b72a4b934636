import pytest

from lrising.backend import census_contours


@pytest.fixture(scope="session")
def census_m4():
    """Shared small contour census (alpha=0.3, J=10, C=14)."""
    return census_contours(4, 14.0, 0.3, 10.0, want_samples=5000, seed=1)


@pytest.fixture(scope="session")
def census_m6():
    """The acceptance-scale census; built once per session (tens of seconds)."""
    return census_contours(6, 14.0, 0.3, 10.0, want_samples=30000, seed=1)
