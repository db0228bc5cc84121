import math

import numpy as np
import pytest

from qmaplus.proptest import TestMode, TiltedFamily
from qmaplus.protocols.csp import (
    CSP_MENU,
    CspProtocolConfig,
    CspToyInstance,
    apply_A,
    apply_B,
    apply_M_k,
    constraints_pair,
    csp_honest_proofs,
    csp_protocol,
    csp_regularize,
    csp_theta,
    encoding_state,
    parity_csp,
    prime_check,
    prime_size_window,
    random_csp,
    valid_encoding_kept_acceptance,
)
from qmaplus.qstate import haar_state, random_nonneg_state

PLANT = [0, 1, 1, 0, 1, 0]


@pytest.fixture(scope="module")
def inst():
    return random_csp(6, 8, 2, seed=1, planted=PLANT)


@pytest.fixture(scope="module")
def reg(inst):
    d = max(2, max(inst.degree(i) for i in range(inst.N)) - 1)
    return csp_regularize(inst, d)


def as_matrix(fn, dim):
    return np.array([fn(np.eye(dim)[e]).reshape(-1) for e in range(dim)]).T


def test_instance_basics(inst):
    assert inst.index_maps_consistent()
    assert inst.value(PLANT) == 1.0
    assert inst.exhaustive_value()[0] == 1.0
    back = CspToyInstance.from_dict(inst.to_dict())
    assert back.value(PLANT) == 1.0 and back.R == inst.R


def test_operators_are_isometries(inst, reg):
    S = inst.alphabet
    A = as_matrix(lambda v: apply_A(inst, v), inst.R * S)
    assert np.allclose(A.T @ A, np.eye(inst.R * S))
    B = as_matrix(lambda v: apply_B(inst, v), inst.R * S)
    assert np.allclose(B.conj().T @ B, np.eye(inst.R * S))
    dim = inst.R * S * inst.N * inst.s
    for k in range(reg.d):
        M = as_matrix(lambda v: apply_M_k(reg, v.reshape(inst.R, S, inst.N, inst.s), k), dim)
        assert np.allclose(M.T @ M, np.eye(dim))
        assert set(np.unique(M)) <= {0.0, 1.0}


def test_honest_completeness(inst, reg):
    Psi, Phi = csp_honest_proofs(reg, PLANT, 4)
    out = csp_protocol(reg, Psi, Phi, None, CspProtocolConfig(0.5))
    assert tuple(out.subtests) == CSP_MENU
    assert out.details["kept_acceptance"] == pytest.approx(1.0)
    assert out.subtests["constraints"] == 1.0


def test_prime_gate(inst, reg):
    Psi, Phi = csp_honest_proofs(reg, PLANT, 2)
    cfg = CspProtocolConfig(0.5)
    assert csp_protocol(reg, Psi, Phi, [4] * len(inst.class_degrees), cfg).overall == 0.0
    assert prime_check(reg, None)
    assert not prime_check(reg, [2] * (len(inst.class_degrees) + 1))
    lo, hi = prime_size_window(1000)
    assert hi == 10 and lo == 10 - 4 * 4


def test_exact_and_monte_carlo_agree(reg):
    Psi, Phi = csp_honest_proofs(reg, PLANT, 4)
    cfg = CspProtocolConfig(0.5)
    ex = csp_protocol(reg, Psi, Phi, None, cfg)
    mc = csp_protocol(reg, Psi, Phi, None, cfg, TestMode.monte_carlo(seed=5, trials=10_000))
    p = ex.overall_verdict_probability
    assert abs(mc.overall - p) <= 4 * math.sqrt(p * (1 - p) / 10_000) + 1e-9


def test_closed_form_matches_pair_computation():
    u = parity_csp(2, [[0, 1]] * 4, [0, 1, 0, 1])
    assert u.exhaustive_value()[0] == 0.5
    ru = csp_regularize(u, 3)
    V = ru.all_encodings()
    closed = valid_encoding_kept_acceptance(ru, V, V)
    rng = np.random.default_rng(0)
    for a, b in rng.integers(0, len(V), (30, 2)):
        pair = constraints_pair(ru, encoding_state(u, V[a]), encoding_state(u, V[b]))
        assert abs(pair.kept_acceptance - closed[a, b]) < 1e-12


def test_unsat_rejection_floor():
    u = parity_csp(2, [[0, 1]] * 4, [0, 1, 0, 1])
    ru = csp_regularize(u, 3)
    V = ru.all_encodings()
    rej = 1 - valid_encoding_kept_acceptance(ru, V, V)
    assert rej.min() >= (1 - 0.5) / (4 * 3 + 2) - 1e-6
    assert csp_theta(0.5, 3) == pytest.approx(1 - 0.5 / 28)


def test_random_proof_not_accepted_fully(inst, reg):
    fam = TiltedFamily([random_nonneg_state(inst.R * inst.alphabet, s) for s in range(8)])
    assert csp_protocol(reg, fam, fam, None, CspProtocolConfig(0.5)).overall < 0.9


def test_shape_validation(reg):
    fam = TiltedFamily([haar_state(4, s) for s in range(4)])
    with pytest.raises(ValueError):
        csp_protocol(reg, fam, fam)
