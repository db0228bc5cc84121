import math

import numpy as np
import pytest

from qmaplus.graphs import expansion, planted_sse_no, planted_sse_yes
from qmaplus.proptest import TestMode, TiltedFamily
from qmaplus.protocols.sse import (
    SSE_MENU,
    SseProtocolConfig,
    expansion_test,
    family_expansion_value,
    sse_honest_proofs,
    sse_protocol,
    sse_soundness_search,
)
from qmaplus.qstate import SubsetState, haar_state, random_nonneg_state


@pytest.fixture(scope="module")
def yes():
    return planted_sse_yes(16, 4, 0.25, 0.1, seed=1)


def test_config_validation():
    with pytest.raises(ValueError):
        SseProtocolConfig(0.0, 0.1)
    with pytest.raises(ValueError):
        SseProtocolConfig(0.25, 0.1, eps=0.0)
    assert SseProtocolConfig(0.25, 0.1).max_density == pytest.approx(0.275)


def test_honest_completeness(yes):
    cfg = SseProtocolConfig(0.25, 0.1)
    Psi, Phi = sse_honest_proofs(yes, k=4)
    out = sse_protocol(yes, Psi, Phi, cfg)
    assert tuple(out.subtests) == SSE_MENU
    assert out.subtests["symmetry"] == pytest.approx(1.0)
    assert out.subtests["sparsity"] == 1.0
    assert out.subtests["expansion"] >= 1 - 0.1 - 1e-12
    assert out.overall >= 1 - 0.1 - 1e-12
    assert abs(out.details["density"] - 0.25) < 1e-12


@pytest.mark.parametrize("n,d,eta", [(16, 4, 0.1), (32, 4, 0.1), (32, 6, 0.05)])
def test_expansion_on_flat_states(n, d, eta):
    # on a flat set, matching r keeps a fraction 1 - c_r of S inside S
    inst = planted_sse_yes(n, d, 0.25, eta, seed=1)
    S = np.array(inst.witness)
    inside = np.zeros(n, dtype=bool)
    inside[S] = True
    c = np.array([np.mean(~inside[p[S]]) for p in inst.graph.perms])
    s = SubsetState(n, tuple(S)).state()
    want = 0.5 + 0.5 * np.mean((1 - c) ** 2)
    assert abs(expansion_test(s, s, inst.graph) - want) < 1e-12
    assert abs(c.mean() - expansion(inst.graph, S)) < 1e-12


def test_family_expansion_bounds(yes):
    fam = TiltedFamily([random_nonneg_state(16, s) for s in range(8)])
    v = family_expansion_value(fam, yes.graph)
    assert 0.5 - 1e-12 <= v <= 1 + 1e-12


def test_exact_and_monte_carlo_agree(yes):
    cfg = SseProtocolConfig(0.25, 0.1)
    Psi, Phi = sse_honest_proofs(yes, k=4)
    ex = sse_protocol(yes, Psi, Phi, cfg)
    mc = sse_protocol(yes, Psi, Phi, cfg, TestMode.monte_carlo(seed=7, trials=10_000))
    p = ex.overall_verdict_probability
    assert abs(mc.overall - p) <= 4 * math.sqrt(p * (1 - p) / 10_000) + 1e-9
    assert sum(mc.transcript["menu_counts"].values()) == 10_000


def test_monte_carlo_is_reproducible(yes):
    cfg = SseProtocolConfig(0.25, 0.1)
    Psi, Phi = sse_honest_proofs(yes, k=2)
    a = sse_protocol(yes, Psi, Phi, cfg, TestMode.monte_carlo(seed=3, trials=500))
    b = sse_protocol(yes, Psi, Phi, cfg, TestMode.monte_carlo(seed=3, trials=500))
    assert a.to_dict() == b.to_dict()


def test_dense_proof_fails_density_rider(yes):
    cfg = SseProtocolConfig(0.25, 0.1)
    u = TiltedFamily.copies(SubsetState(16, range(8)).state(), 8)
    out = sse_protocol(yes, u, u, cfg)
    assert out.subtests["sparsity"] == 0.0


def test_family_shape_checks(yes):
    cfg = SseProtocolConfig(0.25, 0.1)
    fam = TiltedFamily([haar_state(8, s) for s in range(4)])
    with pytest.raises(ValueError):
        sse_protocol(yes, fam, fam, cfg)


def test_soundness_probe_small():
    no = planted_sse_no(10, 6, 0.2, 0.2, seed=0)
    rep = sse_soundness_search(no, SseProtocolConfig(0.2, 0.2), restarts=5, scan_restarts=1)
    assert rep.passed
    assert rep.expansion_max <= 1 + 1e-12
