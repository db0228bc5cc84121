
import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus.graphs import (
    ExpanderFamily,
    RegularGraph,
    analytic_sse_max,
    certified_expander,
    cheeger,
    classify_sse,
    complete_graph,
    cycle_graph,
    decompose_into_permutations,
    disjoint_union,
    dyadic_round,
    expansion,
    flat_alpha,
    flat_bound_check,
    graph_from_networkx,
    min_expansion,
    planted_sse_no,
    planted_sse_yes,
    quadratic_form_bound_audit,
    sse_fact_holds,
)

from conftest import seeds


def rr(d, n, seed):
    return graph_from_networkx(nx.random_regular_graph(d, n, seed=seed))


def test_cycle_expansion_example():
    assert expansion(cycle_graph(8), [0, 1, 2, 3]) == 0.25
    assert expansion(cycle_graph(8), [5]) == 1.0


def test_complete_graph_cheeger():
    c = cheeger(complete_graph(5))
    assert c.cheeger == 3 and c.method == "exhaustive"
    assert cheeger(complete_graph(5), "spectral").cheeger <= 3 + 1e-12


@given(seeds, st.sampled_from([(3, 8), (4, 9), (3, 10)]))
def test_spectral_is_lower_bound(seed, dn):
    d, n = dn
    G = rr(d, n, seed)
    assert cheeger(G, "spectral").cheeger <= cheeger(G).cheeger + 1e-9


@given(seeds, st.sampled_from([(3, 8), (4, 7), (2, 6)]), st.data())
def test_expansion_complement_identity(seed, dn, data):
    d, n = dn
    G = rr(d, n, seed)
    S = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n - 1)))
    T = [v for v in range(n) if v not in S]
    assert 0 <= expansion(G, S) <= 1
    # the cut is the same seen from either side
    assert abs(expansion(G, S) * len(S) - expansion(G, T) * len(T)) < 1e-12


@given(seeds, st.sampled_from([(3, 8), (4, 9), (5, 10)]))
def test_decomposition_roundtrip(seed, dn):
    d, n = dn
    A = nx.to_numpy_array(nx.random_regular_graph(d, n, seed=seed), dtype=np.int64)
    G = decompose_into_permutations(A)
    assert G.d == d and np.array_equal(G.adjacency(), A)
    G2 = RegularGraph.from_text(G.to_text())
    assert np.array_equal(G2.perms, G.perms)


def test_occurrence_pairing_involution():
    # a loop at vertex 0 of the second block pairs with itself
    loops = RegularGraph([[0, 2, 1], [0, 2, 1]])
    G = disjoint_union(cycle_graph(4), loops)
    pair = G.occurrence_pairing()
    for r in range(G.d):
        for i in range(G.n):
            rb = pair[r, i]
            j = G.perms[r, i]
            assert G.perms[rb, j] == i
            assert pair[rb, j] == r


def test_bad_inputs():
    with pytest.raises(ValueError):
        RegularGraph([[0, 0, 1]])
    with pytest.raises(ValueError):
        expansion(cycle_graph(4), [])
    with pytest.raises(ValueError):
        RegularGraph.from_text("3 2\n0 1 2\n")


def test_certified_expanders():
    for n in (1, 2, 3, 4):
        cert = certified_expander(n, 3)
        assert cert.cheeger >= 2 and cert.graph.d == 3
    with pytest.raises(ValueError):
        certified_expander(5, 3)
    fam = ExpanderFamily(3, allowed_sizes=[1, 2, 4])
    assert fam.covered_size(3) == 2 and fam.covered_size(0) == 0
    with pytest.raises(ValueError):
        fam.certificate(3)


def test_planted_instances():
    yes = planted_sse_yes(16, 4, 0.25, 0.1, seed=1)
    assert yes.label == "yes" and expansion(yes.graph, yes.witness) <= 0.1 + 1e-12
    no = planted_sse_no(16, 10, 0.125, 0.1)
    m, _ = min_expansion(no.graph, 2)
    assert m >= 0.9 - 1e-12
    assert classify_sse(yes.graph, 0.1, 0.25).label == "yes"


def test_sse_fact():
    G = complete_graph(8)
    assert sse_fact_holds(G, 0.1, 0.25, 1.0)


def test_analytic_sse_complete_graph():
    # K_n restricted to s vertices: top eigenvalue (s - 1) / (n - 1)
    res = analytic_sse_max(complete_graph(8), 0.5)
    assert abs(res.value - 3 / 7) < 1e-9
    assert abs(res.components["principal_exact"] - 3 / 7) < 1e-12
    assert res.components["ascent"] <= 3 / 7 + 1e-9


def test_flat_bounds():
    A = cycle_graph(6).adjacency()
    assert flat_bound_check(A, [0], [1], 0.5)
    assert not flat_bound_check(A, [0], [1], 0.49)
    alpha, arg = flat_alpha(A, 2)
    assert abs(alpha - 0.5) < 1e-12 and arg is not None
    with pytest.raises(ValueError):
        flat_bound_check(A, [0, 1], [1], 0.5)


@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=12))
def test_dyadic_round_support_and_magnitudes(u):
    u = np.array(u)
    r = dyadic_round(u, seed=1)
    assert np.array_equal(r != 0, u != 0)
    nz = u != 0
    mags = np.abs(r[nz])
    assert np.allclose(np.log2(mags), np.round(np.log2(mags)))
    assert np.all(mags >= np.abs(u[nz]) - 1e-15) and np.all(mags < 2 * np.abs(u[nz]) + 1e-15)


def test_dyadic_round_unbiased():
    u = np.array([0.3, -0.2, 0.05, 0.5])
    mean = np.mean([dyadic_round(u, seed=s) for s in range(20_000)], axis=0)
    assert np.allclose(mean, u, atol=0.01)
    with pytest.raises(ValueError):
        dyadic_round([0.7])


def test_quadratic_audit_petersen():
    A = nx.to_numpy_array(nx.petersen_graph())
    alpha, _ = flat_alpha(A, 4)
    rep = quadratic_form_bound_audit(A, 0.3, min(alpha, 1 - 1e-9))
    assert rep.passed and rep.vectors_checked > 0
