import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given

from qmaplus.graphs import ExpanderFamily, complete_graph, graph_from_networkx
from qmaplus.proptest import TestMode, TiltedFamily
from qmaplus.protocols.ug import (
    UG_MENU,
    GeneralUg,
    Pi_matrix,
    UgInstance,
    UgProtocolConfig,
    apply_Pi_r,
    labeling_test,
    minority_count,
    minority_bound_check,
    random_general_ug,
    regularization_report,
    regularize_ug,
    ug_honest_proofs,
    ug_labeling_sweep,
    ug_planted,
    ug_protocol,
    unequal_edges,
)
from qmaplus.qstate import haar_state, random_nonneg_state, vec

from conftest import seeds

LABELS = [0, 1, 2, 0, 1, 2, 0, 1]


@pytest.fixture(scope="module")
def graph():
    return graph_from_networkx(nx.random_regular_graph(3, 8, seed=1))


@pytest.fixture(scope="module")
def sat(graph):
    return ug_planted(graph, 3, LABELS, 0.0, seed=2)


def test_planted_satisfiable(sat):
    assert sat.value(LABELS) == 1.0
    assert sat.exhaustive_value()[0] == 1.0


def test_config_defaults():
    cfg = UgProtocolConfig(0.1, 0.2)
    assert cfg.theta_value == pytest.approx(0.5 * ((1 + 0.81) / 2 + 1.2 / 2))
    assert cfg.nu_for(3) == pytest.approx(1e-4 ** (1 / 24) * 3 ** (1 / 3))
    assert cfg.d_for(3) == cfg.nu_for(3)
    assert UgProtocolConfig(0.1, 0.2, validity_d=0.05).d_for(3) == 0.05


def test_pi_matrices_are_permutations(sat):
    for r in range(sat.d):
        M = Pi_matrix(sat, r)
        assert np.allclose(M.T @ M, np.eye(24))
        x = vec(haar_state(24, r))
        assert np.allclose(apply_Pi_r(sat, r, x).amps, M @ x)
    with pytest.raises(ValueError):
        apply_Pi_r(sat, sat.d, vec(haar_state(24, 0)))


def test_honest_completeness(sat):
    cfg = UgProtocolConfig(0.0, 0.2)
    Psi, Gam = ug_honest_proofs(sat, LABELS, 4)
    out = ug_protocol(sat, Psi, Gam, cfg)
    assert tuple(out.subtests) == UG_MENU
    assert all(v >= 0.99 for v in out.subtests.values())
    assert out.details["validity_alpha"] == pytest.approx(1 / 3)


def test_labeling_per_pair_at_least_value(graph):
    noisy = ug_planted(graph, 3, LABELS, 0.25, seed=2)
    v = noisy.value(LABELS)
    cfg = UgProtocolConfig(1 - v, 0.2)
    Psi, _ = ug_honest_proofs(noisy, LABELS, 4)
    P0, P1 = Psi.halves()
    out = labeling_test(P0, P1, noisy, cfg)
    assert np.all(out.per_pair >= v - 1e-12)


def test_exact_and_monte_carlo_agree(sat):
    cfg = UgProtocolConfig(0.0, 0.2)
    Psi, Gam = ug_honest_proofs(sat, LABELS, 4)
    ex = ug_protocol(sat, Psi, Gam, cfg)
    mc = ug_protocol(sat, Psi, Gam, cfg, TestMode.monte_carlo(seed=11, trials=10_000))
    p = ex.overall_verdict_probability
    assert abs(mc.overall - p) <= 4 * math.sqrt(p * (1 - p) / 10_000) + 1e-9


def test_random_proof_rejected_often(sat):
    cfg = UgProtocolConfig(0.0, 0.2)
    fam = TiltedFamily([random_nonneg_state(24, s) for s in range(8)])
    assert ug_protocol(sat, fam, fam, cfg).overall < 0.9


def test_labeling_sweep(graph):
    small = ug_planted(complete_graph(4), 2, [0, 1, 0, 1], 0.0, seed=0)
    res = ug_labeling_sweep(small, UgProtocolConfig(0.0, 0.2))
    assert res["max_overall"] >= 0.99 and len(res["argmax"]) == 4


def test_instance_validation(graph):
    bad = np.zeros((graph.d, graph.n, 3), dtype=np.int64)
    with pytest.raises(ValueError):
        UgInstance(graph, 3, bad)


def test_regularization():
    g = random_general_ug(5, 6, 2, seed=3)
    reg = regularize_ug(g, 3, ExpanderFamily(3))
    rep = regularization_report(reg)
    assert rep["edge_identity"]
    assert rep["soundness_implication"] and rep["completeness_implication"]
    assert rep["regularized_value"] == pytest.approx(rep["predicted"])
    assert reg.instance.graph.d == 4 and reg.instance.graph.is_undirected()
    assert rep["min_cheeger"] >= 2


def test_regularization_degree_mismatch():
    with pytest.raises(ValueError):
        regularize_ug(GeneralUg(2, 2, [(0, 1, (0, 1))]), 3, ExpanderFamily(4))


@pytest.mark.parametrize("q", [2, 3])
def test_minority_bound(q):
    assert minority_bound_check(q=q)["holds"]


@given(seeds)
def test_minority_on_complete_graph(seed):
    L = np.random.default_rng(seed).integers(0, 3, (20, 5))
    assert np.all(unequal_edges(complete_graph(5), L) >= minority_count(L, 3))
