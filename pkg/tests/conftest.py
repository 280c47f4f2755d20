import numpy as np
import pytest

from clipreg.netcore import DomainSpec, Layer, RepNet
from clipreg.measure import FunctionOracle, build_quadrature


def random_net(rng, domain, max_width=3, max_depth=3):
    """Random valid net with mixed widths and depth <= max_depth."""
    r = int(rng.integers(0, max_depth + 1))
    widths = [domain.n] + [int(rng.integers(1, max_width + 1)) for _ in range(r)] + [1]
    layers = []
    for d_in, d_out in zip(widths[:-1], widths[1:]):
        layers.append(Layer(rng.uniform(-domain.q, domain.q, (d_out, d_in)),
                            rng.uniform(-1.0, 1.0, d_out)))
    return RepNet(domain, tuple(layers))


def const_oracle(value):
    return FunctionOracle(lambda X: np.full(len(X), float(value)),
                          f"const({value})", clamp=False)


@pytest.fixture(scope="session")
def dom1():
    return DomainSpec(1, 1.0)


@pytest.fixture(scope="session")
def dom2():
    return DomainSpec(2, 1.0)


@pytest.fixture(scope="session")
def quad1(dom1):
    return build_quadrature(dom1, "low-discrepancy", 2048, seed=3)


@pytest.fixture(scope="session")
def quad2(dom2):
    return build_quadrature(dom2, "low-discrepancy", 2048, seed=3)
