import numpy as np
import pytest

from latticedress.modes import FieldSpecies, LatticeSpec, ModeSystem


@pytest.fixture(scope="session")
def system3():
    """Single scalar, 3 momentum modes k = -1, 0, 1, unit mass, L = 2*pi."""
    return ModeSystem(LatticeSpec(dim=1, sites_per_dim=3), [FieldSpecies("phi", 1.0)])


@pytest.fixture(scope="session")
def system5():
    """Single scalar, 5 momentum modes k = -2..2, unit mass, L = 2*pi (p = k)."""
    return ModeSystem(LatticeSpec(dim=1, sites_per_dim=5), [FieldSpecies("phi", 1.0)])


@pytest.fixture(scope="session")
def system1():
    """A single mode (1-site lattice)."""
    return ModeSystem(LatticeSpec(dim=1, sites_per_dim=1), [FieldSpecies("phi", 1.0)])


def mode(system, k, species=None):
    name = species or system.species[0].name
    return system.mode(name, (k,) if isinstance(k, int) else tuple(k))


def random_series(system, rng, max_terms=3, max_degree=2):
    """A random low-degree operator series with complex Gaussian coefficients."""
    from latticedress.algebra import OperatorSeries

    modes = system.modes
    raw = []
    for _ in range(rng.integers(1, max_terms + 1)):
        nc = int(rng.integers(0, max_degree + 1))
        na = int(rng.integers(0, max_degree + 1))
        creators = [modes[i] for i in rng.integers(0, len(modes), nc)]
        annihilators = [modes[i] for i in rng.integers(0, len(modes), na)]
        coeff = complex(rng.normal(), rng.normal())
        raw.append((creators, annihilators, coeff))
    return OperatorSeries.from_terms(system, raw, order=0)


def run_property_suite(system, basis, n_instances=200, seed=20260824):
    """Randomized invariants of the operator algebra.

    Per instance: associativity of the normal-ordered product, the Jacobi
    identity, the dagger anti-homomorphism, agreement of the symbolic product
    with the matrix product on a low-quanta sub-block, and the fast
    free-commutator path against the generic commutator.  Returns the number
    of instances checked; raises AssertionError on the first violation.
    """
    from latticedress.algebra import ad_h0, commutator, dagger, normal_order_product
    from latticedress.models import free_hamiltonian
    from latticedress.numerics import matrix_of_terms

    rng = np.random.default_rng(seed)
    h0 = free_hamiltonian(system, 0)
    idx = basis.block_indices(2)
    tol = 1e-9
    for i in range(n_instances):
        p = random_series(system, rng)
        q = random_series(system, rng)
        r = random_series(system, rng)

        assoc = normal_order_product(normal_order_product(p, q), r) - \
            normal_order_product(p, normal_order_product(q, r))
        assert assoc.max_abs() < tol, f"associativity violated at instance {i}"

        jac = commutator(commutator(p, q), r) + commutator(commutator(q, r), p) \
            + commutator(commutator(r, p), q)
        assert jac.max_abs() < tol, f"Jacobi identity violated at instance {i}"

        anti = dagger(normal_order_product(p, q)) - \
            normal_order_product(dagger(q), dagger(p))
        assert anti.max_abs() < tol, f"dagger anti-homomorphism violated at instance {i}"

        mp = matrix_of_terms(p.orders[0], basis).toarray()
        mq = matrix_of_terms(q.orders[0], basis).toarray()
        mpq = matrix_of_terms(normal_order_product(p, q).orders[0], basis).toarray()
        diff = (mp @ mq - mpq)[np.ix_(idx, idx)]
        assert np.abs(diff).max() < tol, f"matrix homomorphism violated at instance {i}"

        free = ad_h0(p, system.energy) - commutator(p, h0)
        assert free.max_abs() < tol, f"free-commutator shortcut violated at instance {i}"
    return n_instances
