"""Randomized invariants of the operator algebra (fixed seed)."""

from latticedress.numerics import FockBasis

from conftest import run_property_suite


def test_randomized_algebra_invariants(system3):
    basis = FockBasis(system3, 6, 6)
    checked = run_property_suite(system3, basis, n_instances=200, seed=20260824)
    assert checked == 200
