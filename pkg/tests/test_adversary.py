import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus.adversary import (
    GENERAL,
    NONNEGATIVE,
    ExpansionFunctional,
    ProductQuadratic,
    ProverAnsatz,
    QuadraticForm,
    SwapAgainst,
    batched_expansion,
    batched_product_quadratic,
    batched_quadratic,
    best_separable_value,
    grid_bruteforce,
    maximize_acceptance,
    omega,
    omega_report,
    sphere_grid,
)
from qmaplus.complexity import random_psd
from qmaplus.graphs import cycle_graph
from qmaplus.proptest import swap_probability
from qmaplus.qstate import StateVector, haar_state, make_rng, vec

from conftest import seeds


def test_ansatz_validation():
    with pytest.raises(ValueError):
        ProverAnsatz((2,), "weird")
    with pytest.raises(ValueError):
        ProverAnsatz((2,), NONNEGATIVE, params=[np.array([1.0, -1.0]) / math.sqrt(2)])
    ProverAnsatz((2,), GENERAL, params=[np.array([1.0, -1.0]) / math.sqrt(2)])


@given(seeds, st.integers(1, 6))
def test_quadratic_general_hits_top_eigenvalue(seed, d):
    M = random_psd(d, make_rng(seed))
    rep = maximize_acceptance(QuadraticForm(M), ProverAnsatz((d,), GENERAL), restarts=3, seed=seed)
    assert abs(rep.best_value - np.linalg.eigvalsh(M)[-1]) < 1e-8
    assert rep.monotone


def test_swap_against_target():
    t = haar_state(3, 1)
    rep = maximize_acceptance(SwapAgainst(t), ProverAnsatz((3,), GENERAL), restarts=2)
    assert abs(rep.best_value - 1) < 1e-9
    assert abs(swap_probability(rep.argmax[0], t) - 1) < 1e-9


@given(seeds, st.integers(2, 3))
def test_nonneg_search_matches_grid(seed, d):
    M = random_psd(d, make_rng(seed), real=True)
    rep = maximize_acceptance(QuadraticForm(M), ProverAnsatz((d,)), restarts=10, seed=seed)
    grid, _ = grid_bruteforce(batched_quadratic(M), (d,), step=0.01)
    assert rep.best_value >= grid - 1e-3
    assert rep.best_value <= np.linalg.eigvalsh(M)[-1] + 1e-9


def test_product_quadratic_matches_batched():
    M = random_psd(4, make_rng(3))
    F = ProductQuadratic(M, (2, 2))
    f = batched_product_quadratic(M, (2, 2))
    a, b = vec(haar_state(2, 1)), vec(haar_state(2, 2))
    assert abs(F.value([a, b]) - float(f(a, b))) < 1e-12


def test_expansion_functional_consistency():
    G = cycle_graph(5)
    F = ExpansionFunctional(G)
    f = batched_expansion(F)
    x, y = np.abs(vec(haar_state(5, 1))), np.abs(vec(haar_state(5, 2)))
    assert abs(F.value([x, y]) - float(f(x, y))) < 1e-12
    # the effective matrix reproduces the value in each slot
    for i, z in ((0, x), (1, y)):
        E = F.effective_matrix(i, [x, y])
        assert abs(np.real(np.vdot(z, E @ z)) - F.value([x, y])) < 1e-12
    u = np.full(5, 1 / math.sqrt(5))
    assert abs(F.value([u, u]) - 1) < 1e-12


def test_sphere_grid_unit_vectors():
    g = sphere_grid(3, 0.1)
    assert np.allclose(np.linalg.norm(g, axis=1), 1) and np.all(g >= 0)
    c = sphere_grid(2, 0.5, nonneg=False, phases=4)
    assert np.allclose(np.linalg.norm(c, axis=1), 1)
    with pytest.raises(ValueError):
        grid_bruteforce(batched_quadratic(np.eye(5)), (5,))


def test_omega_examples():
    epr = StateVector.normalized([1, 0, 0, 1])
    assert abs(omega(epr, (2, 2)) - 0.5) < 1e-12
    ghz = StateVector.normalized([1, 0, 0, 0, 0, 0, 0, 1])
    assert abs(omega(ghz, (2, 2, 2)) - 0.5) < 1e-9
    assert abs(best_separable_value(np.outer(vec(epr), vec(epr)), (2, 2)) - 0.5) < 1e-9


@given(seeds)
def test_omega_bounds(seed):
    x = vec(haar_state(8, seed))
    rep = omega_report(x, (2, 2, 2), restarts=5, seed=seed)
    assert 1 / 8 - 1e-12 <= rep.value <= rep.upper_bound + 1e-12 <= 1 + 1e-12
    p = np.kron(np.kron(vec(haar_state(2, seed)), vec(haar_state(2, seed + 1))), vec(haar_state(2, seed + 2)))
    assert abs(omega(p, (2, 2, 2)) - 1) < 1e-9
