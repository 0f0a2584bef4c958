import numpy as np
import pytest

from alleekit.model import KineticParams


@pytest.fixture
def p_main() -> KineticParams:
    """The workhorse parameter set used throughout: alpha=0.07, beta=0.2,
    gamma=1.2, eta=0.1, sigma=2.7 (sigma swept where noted)."""
    return KineticParams(alpha=0.07, beta=0.2, gamma=1.2, sigma=2.7, eta=0.1)


@pytest.fixture
def p_ratio() -> KineticParams:
    """Ratio-dependent limit (alpha=0) of the same set, sigma near the
    coexistence fold."""
    return KineticParams(alpha=0.0, beta=0.2, gamma=1.2, sigma=3.95, eta=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)
