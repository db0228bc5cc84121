import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus import pcp as P

from conftest import seeds

SMALL = P.QuadSystem(np.array([[1, 0, 0, 1], [0, 1, 0, 0]]), np.array([1, 0]), 2)


def and_system():
    c = P.Circuit(1, 1, [P.Gate("AND", (0, 1))])
    return c, P.circuit_to_quadsystem(c)


def test_primes():
    assert P.prime_in_interval(7) == 7
    assert P.prime_in_interval(100) == 97
    assert [k for k in range(30) if P.is_prime(k)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


@given(st.integers(2, 100_000))
def test_prime_in_interval_window(n):
    p = P.prime_in_interval(n)
    assert n - 4 * n ** (2 / 3) <= p <= n and P.is_prime(p)
    assert not any(P.is_prime(k) for k in range(p + 1, n + 1))


def test_line_counts_and_first_line():
    assert P.lines_through_count(1, 3) == 7
    assert P.line_from_index(0, (2,), 3) == ((0,), (2,))
    with pytest.raises(IndexError):
        P.line_from_index(7, (0,), 3)


@pytest.mark.parametrize("n,p", [(1, 3), (2, 3), (1, 5), (2, 5)])
def test_line_index_bijection(n, p):
    for pt in itertools.product(range(p), repeat=n):
        lines = P.lines_through_bruteforce(pt, p)
        assert len(lines) == P.lines_through_count(n, p)
        for k, (a, b) in enumerate(lines):
            assert P.line_index(a, b, pt, p) == k
            assert P.line_from_index(k, pt, p) == (a, b)


def test_line_not_through_point():
    with pytest.raises(ValueError):
        P.line_index((0,), (1,), (0,), 3)


@given(seeds)
def test_circuit_reduction_preserves_satisfiability(seed):
    rng = np.random.default_rng(seed)
    c = P.random_formula(int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 5)), seed=seed)
    Q = P.circuit_to_quadsystem(c)
    assert Q.rank() == Q.rows
    for x in itertools.product((0, 1), repeat=c.num_inputs):
        assert c.satisfiable_with(x) == any(True for _ in Q.solutions_extending(x))


def test_honest_proof_accepted():
    for Q, x in (and_system()[1], [1]), (SMALL, [0, 1]):
        proof = P.hadamard_prover(Q, next(Q.solutions_extending(x)))
        assert P.hadamard_accept_prob(proof, Q, x).accept == 1.0
    proof = P.hadamard_prover(SMALL, (0, 1))
    assert P.hadamard_accept_prob_bruteforce(proof, SMALL, [0, 1]) == 1.0


@pytest.mark.parametrize("table,idx", [("Y", 1), ("Y", 2), ("Z", 5), ("Z", 0)])
def test_corrupted_proof_product_formula(table, idx):
    x = [0, 1]
    proof = P.hadamard_prover(SMALL, (0, 1)).flipped(table, idx)
    exact = P.hadamard_accept_prob(proof, SMALL, x).accept
    assert exact < 1
    assert abs(exact - P.hadamard_accept_prob_bruteforce(proof, SMALL, x)) < 1e-12


def test_wrong_input_rejected_sometimes():
    proof = P.hadamard_prover(SMALL, (0, 1))
    assert P.hadamard_accept_prob(proof, SMALL, [1, 0]).accept < 1


def test_verifier_matches_enumeration_on_samples():
    _, Q = and_system()
    x = [1]
    proof = P.hadamard_prover(Q, next(Q.solutions_extending(x))).flipped("Y", 3)
    L = P.HadamardLayout(Q)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, L.size, 3000)
    hits = np.mean([P.hadamard_verifier(proof, Q, x, L.decode(int(i))) for i in idx])
    p = P.hadamard_accept_prob(proof, Q, x).accept
    assert abs(hits - p) <= 4 * np.sqrt(p * (1 - p) / len(idx)) + 1e-9


def test_layout_roundtrip():
    L = P.HadamardLayout(SMALL)
    for i in np.random.default_rng(1).integers(0, L.size, 200):
        assert L.encode(L.decode(int(i))) == int(i)


def test_adjacency_index_maps():
    L = P.HadamardLayout(SMALL)
    bf = P.adjacency_bruteforce(L)
    rng = np.random.default_rng(2)
    for var, mask in bf.items():
        adj = P.HadamardAdjacency(L, var)
        hits = np.flatnonzero(mask)
        assert adj.count == hits.size
        pick = np.unique(np.concatenate([[0, hits.size - 1], rng.integers(0, hits.size, 2000)]))
        assert np.array_equal(adj.index(hits[pick]), pick)
        assert np.array_equal(adj.from_index(pick), hits[pick])
        assert P.hadamard_adj_index(SMALL, var, int(hits[-1])) == hits.size - 1
        assert L.encode(P.hadamard_adj_from_index(SMALL, var, 0)) == hits[0]


def test_uniformity_same_type_counts():
    _, Q = and_system()
    rep = P.uniformity_audit(Q)
    assert rep.exhaustive
    assert "Y-input" in rep.uniform_types
    assert rep.members["Y-input"] == Q.m


def test_quadsystem_serialization_and_checks():
    Q2 = P.QuadSystem.from_dict(SMALL.to_dict())
    assert np.array_equal(Q2.A, SMALL.A) and Q2.m == SMALL.m
    assert P.f2_rank([0b11, 0b01, 0b10]) == 2
    bits = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1])
    assert np.array_equal(P.unpack_bits(P.pack_bits(bits), bits.size), bits)
