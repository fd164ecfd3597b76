import numpy as np
import pytest

from blochspec import OperatorSpec


@pytest.fixture
def free2():
    return OperatorSpec.build(2, 0.0)


@pytest.fixture
def odd3():
    """Certified odd-order fixture, p3 = 0.5 exp(i 2 pi x)."""
    return OperatorSpec.build(3, 0.0, p3={1: 0.5})


@pytest.fixture
def drift2():
    """Certified second-order drift fixture, p2 = 0.9 (e^{i2pi x} + e^{-i2pi x})."""
    return OperatorSpec.build(2, 1.0, p2={1: 0.9, -1: 0.9})


@pytest.fixture
def gasymov():
    return OperatorSpec.build(2, 0.0, p2={1: 1.0})


@pytest.fixture
def drift4():
    """Certified fourth-order fixture."""
    return OperatorSpec.build(4, 6.0, p2={1: 0.3, -1: 0.3}, p4={2: 0.2 + 0.1j})


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)
