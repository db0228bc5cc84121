import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus.proptest import (
    TestMode,
    TiltedFamily,
    heavy_support,
    is_eps_tilted,
    matching_expectation,
    nearest_subset_state,
    nearest_subset_state_bruteforce,
    pair_swap_matrix,
    perfect_matchings,
    poisson_binomial_pmf,
    product_test,
    product_test_reduced_oracle,
    sparsity_test,
    sparsity_test_II,
    subset_p_tilde,
    swap_circuit_probability,
    swap_density_oracle,
    swap_probability,
    swap_test,
    symmetric_projector,
    symmetry_test,
    validity_test,
    validity_zero_probability,
)
from qmaplus.qstate import (
    LabeledState,
    NonnegState,
    StateVector,
    SubsetState,
    haar_state,
    random_nonneg_state,
    vec,
)

from conftest import seeds

EXACT = TestMode.exact()


# ---------------------------------------------------------------- swap test

def test_swap_known_values():
    a, b = StateVector.basis(2, 0), StateVector.basis(2, 1)
    assert swap_probability(a, a) == 1
    assert swap_probability(a, b) == 0.5
    assert abs(swap_probability(a, StateVector.normalized([1, 1])) - 0.75) < 1e-15


@given(seeds, st.integers(1, 16))
def test_swap_three_ways_agree(seed, d):
    a, b = haar_state(d, seed), haar_state(d, seed + 1)
    p = swap_probability(a, b)
    assert 0.5 - 1e-12 <= p <= 1 + 1e-12
    assert abs(p - swap_density_oracle(a, b)) < 1e-12
    assert abs(p - swap_circuit_probability(a, b)) < 1e-12


def test_symmetric_projector_is_projector():
    P = symmetric_projector(3)
    assert np.allclose(P @ P, P) and np.allclose(P, P.conj().T)
    assert abs(np.trace(P).real - 6) < 1e-12


def test_swap_monte_carlo_close():
    a, b = haar_state(4, 1), haar_state(4, 2)
    p = swap_probability(a, b)
    est = swap_test(a, b, TestMode.monte_carlo(seed=3, trials=20_000))
    assert abs(est - p) <= 4 * math.sqrt(p * (1 - p) / 20_000) + 1e-9


# ------------------------------------------------------------ symmetry test

def test_matching_expectation_bruteforce():
    fam = TiltedFamily([haar_state(3, s) for s in range(6)])
    P = pair_swap_matrix(fam)
    ms = list(perfect_matchings(list(range(6))))
    assert len(ms) == 15
    brute = np.mean([np.prod([P[i, j] for i, j in m]) for m in ms])
    assert abs(matching_expectation(P) - brute) < 1e-12
    assert abs(symmetry_test(fam).acceptance - brute) < 1e-12


def test_symmetry_identical_copies_accept():
    assert abs(symmetry_test(TiltedFamily.copies(haar_state(5, 0), 8)).acceptance - 1) < 1e-12


def test_symmetry_orthogonal_pairs():
    fam = TiltedFamily([StateVector.basis(4, i) for i in range(4)])
    assert abs(symmetry_test(fam).acceptance - 0.5 ** 2) < 1e-12


def test_symmetry_odd_size_rejected():
    with pytest.raises(ValueError):
        symmetry_test(TiltedFamily([haar_state(2, s) for s in range(3)]))


def test_eps_tilted():
    psi = haar_state(4, 0)
    fam = TiltedFamily([psi] * 9 + [haar_state(4, 99)])
    ok, R = is_eps_tilted(fam, 0.1)
    assert ok and len(R) >= 9
    ok, _ = is_eps_tilted(TiltedFamily([StateVector.basis(4, i) for i in range(4)]), 0.2)
    assert not ok


# ------------------------------------------------------------ sparsity test

def test_sparsity_example_quarter_density():
    s = SubsetState(8, (0, 1)).state()
    fam = TiltedFamily.copies(s, 4)
    out = sparsity_test(fam, fam, 0.01)
    assert abs(2 * out.alpha - 1 - 0.25) < 1e-12
    assert abs(2 * out.beta - 1 - 0.25) < 1e-12
    assert abs(2 * out.lam - 1 - 1.0) < 1e-12
    # disjoint psi/phi supports: lambda at its floor
    t = TiltedFamily.copies(SubsetState(8, (2, 3)).state(), 4)
    out = sparsity_test(fam, t, 0.01)
    assert abs(out.lam - 0.5) < 1e-12


def test_sparsity_target_window():
    u = TiltedFamily.copies(SubsetState(8, (0, 1)).state(), 4)
    assert sparsity_test_II(u, u, 0.25, 1e-4).alpha == pytest.approx(0.625)
    with pytest.raises(ValueError):
        sparsity_test_II(u, u, 1.5, 1e-4)


def test_sparsity_verdict_probability_matches_mc():
    fam = TiltedFamily([random_nonneg_state(8, s) for s in range(6)])
    ex = sparsity_test(fam, fam, 0.2)
    mc = sparsity_test(fam, fam, 0.2, TestMode.monte_carlo(seed=4, trials=20_000))
    p = ex.verdict_probability
    assert abs(mc.acceptance - p) <= 4 * math.sqrt(p * (1 - p) / 20_000) + 1e-9


@given(st.lists(st.floats(0, 1), min_size=0, max_size=8))
def test_poisson_binomial(p):
    pmf = poisson_binomial_pmf(np.array(p))
    assert abs(pmf.sum() - 1) < 1e-12 and np.all(pmf >= -1e-15)
    assert abs(np.arange(len(pmf)) @ pmf - sum(p)) < 1e-9


@given(seeds, st.integers(2, 8), st.data())
def test_nearest_subset_matches_bruteforce(seed, n, data):
    u = random_nonneg_state(n, seed)
    size = data.draw(st.integers(1, n))
    _, dist = nearest_subset_state(u, size)
    assert abs(dist - nearest_subset_state_bruteforce(u, size)) < 1e-12


def test_heavy_support():
    u = NonnegState(np.array([0.8, 0.6, 0.0, 0.0]))
    S, mass = heavy_support(u, 0.5)
    assert list(S) == [0, 1] and abs(mass - 1) < 1e-12


# ------------------------------------------------------------ validity test

def test_validity_values_q2():
    valid = LabeledState.from_labeling([0, 1, 1, 0], 2)
    assert abs(validity_zero_probability(valid) - 0.5) < 1e-12
    full = LabeledState.from_subset(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert abs(validity_zero_probability(full) - 1.0) < 1e-12


@given(st.integers(2, 4), st.lists(st.integers(0, 3), min_size=1, max_size=6))
def test_p_tilde_matches_dft(q, raw):
    counts = [min(c, q) for c in raw]
    if sum(counts) == 0:
        counts[0] = 1
    S = [(i, v) for i, c in enumerate(counts) for v in range(c)]
    psi = LabeledState.from_subset(len(counts), q, S)
    assert abs(validity_zero_probability(psi) - subset_p_tilde(counts, q)) < 1e-12


@given(seeds, st.integers(1, 5), st.integers(2, 4))
def test_valid_labelings_hit_one_over_q(seed, n, q):
    lab = np.random.default_rng(seed).integers(0, q, n)
    psi = LabeledState.from_labeling(lab.tolist(), q)
    assert abs(validity_zero_probability(psi) - 1 / q) < 1e-12


def test_validity_test_accepts_valid_family():
    fam = TiltedFamily.copies(LabeledState.from_labeling([0, 1, 2], 3), 4)
    out = validity_test(fam, 3, 3, 0.05)
    assert out.accept and abs(out.alpha - 1 / 3) < 1e-12


# ------------------------------------------------------------- product test

def test_product_test_epr_and_ghz():
    epr = StateVector.normalized([1, 0, 0, 1])
    assert abs(product_test(epr, epr, [2, 2]) - 0.75) < 1e-12
    ghz = StateVector.normalized([1, 0, 0, 0, 0, 0, 0, 1])
    assert abs(product_test(ghz, ghz, [2, 2, 2]) - product_test_reduced_oracle(ghz, ghz, [2, 2, 2])) < 1e-12


@given(seeds, st.sampled_from([[2, 2], [2, 3], [3, 2], [2, 2, 2]]))
def test_product_test_oracle(seed, part):
    d = int(np.prod(part))
    a, b = haar_state(d, seed), haar_state(d, seed + 5)
    assert abs(product_test(a, b, part) - product_test_reduced_oracle(a, b, part)) < 1e-12


@given(seeds)
def test_product_states_accept(seed):
    a = np.kron(vec(haar_state(2, seed)), vec(haar_state(3, seed + 1)))
    assert abs(product_test(a, a, [2, 3]) - 1) < 1e-12


def test_product_partition_mismatch():
    with pytest.raises(ValueError):
        product_test(haar_state(4, 0), haar_state(4, 1), [3, 2])
