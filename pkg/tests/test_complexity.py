import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus.complexity import (
    arthur_decode,
    decode_fidelity,
    decompose_four,
    four_s_audit,
    four_s_bound_check,
    gap_f,
    product_test_bound_audit,
    random_psd,
    reencode_plus,
    sequential_swap_acceptance,
    symmetric_projector_identity_check,
    verify_gap_max,
)
from qmaplus.proptest import TestMode, product_test
from qmaplus.qstate import haar_state, make_rng, vec

from conftest import seeds


def test_decompose_example():
    psi = np.array([0, 1, 1, 1j]) / math.sqrt(3)
    dec = decompose_four(psi)
    np.testing.assert_allclose(dec.weights, [2 / 3, 1 / 3, 0, 0], atol=1e-15)
    np.testing.assert_allclose(dec.reconstruct(), psi, atol=1e-15)


@given(seeds, st.integers(1, 8))
def test_decompose_reconstructs(seed, d):
    x = vec(haar_state(d, seed))
    dec = decompose_four(x)
    assert abs(dec.weights.sum() - 1) < 1e-12
    assert np.allclose(dec.reconstruct(), x, atol=1e-12)
    assert all(np.all(p >= 0) for p in dec.parts)
    assert np.dot(dec.parts[0], dec.parts[2]) == 0 and np.dot(dec.parts[1], dec.parts[3]) == 0


def test_four_s_minus_projector():
    minus = np.array([1, -1]) / math.sqrt(2)
    rep = four_s_bound_check(np.outer(minus, minus), oracle=True)
    assert abs(rep.s_plus - 0.5) < 1e-9 and rep.passed


@given(seeds, st.integers(1, 5))
def test_four_s_random(seed, d):
    rep = four_s_bound_check(random_psd(d, make_rng(seed)), restarts=4, seed=seed)
    assert rep.passed and rep.s_plus <= rep.lam_max + 1e-9


def test_four_s_audit_small():
    assert four_s_audit(50, 4)["passed"]
    with pytest.raises(ValueError):
        four_s_bound_check(-np.eye(2))


def test_decode_example():
    d = arthur_decode(reencode_plus(np.array([1, -1j]) / math.sqrt(2)), outcome=(0, 0))
    assert abs(d.p00 - 0.25) < 1e-12


@given(seeds, st.integers(1, 8))
def test_decode_fidelity(seed, d):
    x = vec(haar_state(d, seed))
    enc = reencode_plus(x)
    assert np.all(enc.encoded >= 0) and abs(np.linalg.norm(enc.state) - 1) < 1e-12
    p00, fid = decode_fidelity(x)
    assert abs(p00 - 0.25) < 1e-12 and abs(fid - 1) < 1e-12


def test_gap_function():
    assert abs(gap_f(2 / 3, 0) - 7 / 9) < 1e-15
    for p in (0.0, 0.3, 1.0):
        assert abs(gap_f(p, 1) - p) < 1e-15
    rep = verify_gap_max()
    assert rep.passed and abs(rep.grid_max - 7 / 9) < 1e-9
    with pytest.raises(ValueError):
        gap_f(1.2, 0)


def test_product_audit():
    rep = product_test_bound_audit((2, 2), samples=100)
    assert rep.passed and rep.violations_any == 0


def test_symmetric_projector_average():
    rep = symmetric_projector_identity_check(2, samples=20_000)
    assert rep.eigenvalues_ok and rep.swap_identity_error < 1e-12
    assert rep.deviation < 0.02
    with pytest.raises(ValueError):
        symmetric_projector_identity_check(7)


@given(seeds, st.integers(1, 3))
def test_sequential_swap_factorizes(seed, reps):
    joint, prod = sequential_swap_acceptance(haar_state(2, seed), haar_state(2, seed + 1), reps)
    assert abs(joint - prod) < 1e-12


def test_product_test_mc():
    x = vec(haar_state(4, 5))
    p = product_test(x, x, (2, 2))
    est = product_test(x, x, (2, 2), TestMode.monte_carlo(seed=1, trials=20_000))
    assert abs(est - p) <= 4 * math.sqrt(p * (1 - p) / 20_000) + 1e-9
