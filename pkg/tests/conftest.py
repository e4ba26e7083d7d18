import numpy as np
import pytest

from fkising.lattice import BoundaryCondition, build_domain


@pytest.fixture
def dom_2x2():
    return build_domain(1.0, (0, 0, 1, 1))


@pytest.fixture
def dom_2site():
    return build_domain(1.0, (0, 0, 1, 0.3))


@pytest.fixture
def dom_1site():
    return build_domain(1.0, (0, 0, 0.5, 0.5))


@pytest.fixture
def dom_3x3():
    return build_domain(1.0, (0, 0, 2, 2))


FREE = BoundaryCondition.FREE
PLUS = BoundaryCondition.PLUS_WIRED


def random_bonds(domain, rng, p=0.5, bc=FREE):
    """Random bond configuration respecting the boundary condition."""
    vals = np.zeros(domain.n_edges, dtype=np.uint8)
    vals[: domain.n_internal] = rng.random(domain.n_internal) < p
    if bc is PLUS:
        vals[domain.n_internal:] = rng.random(domain.n_external) < p
    return vals
