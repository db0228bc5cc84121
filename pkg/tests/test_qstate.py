import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmaplus.qstate import (
    LabeledState,
    NonnegState,
    RegisterSpec,
    StateVector,
    SubsetState,
    dft_value_register,
    haar_state,
    make_rng,
    measure_distribution,
    measure_register,
    overlap,
    random_nonneg_state,
    spawn_seeds,
    subset_state_distance,
    tensor,
    trace_distance_pure,
    vec,
)

from conftest import seeds

ket0, ket1 = StateVector.basis(2, 0), StateVector.basis(2, 1)
plus = StateVector.normalized([1, 1])


def test_tensor_basis_and_linearity():
    t = tensor(ket0, ket1)
    assert t.dim == 4 and vec(t)[1] == 1
    np.testing.assert_allclose(vec(tensor(plus, ket0)), np.array([1, 0, 1, 0]) / math.sqrt(2))


def test_tensor_keeps_nonnegativity():
    a, b = random_nonneg_state(3, 1), random_nonneg_state(4, 2)
    assert isinstance(tensor(a, b), NonnegState)


@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_tensor_norm(seed, da, db):
    t = tensor(haar_state(da, seed), haar_state(db, seed + 1))
    assert abs(np.linalg.norm(vec(t)) - 1) < 1e-12


def test_overlap_basics():
    assert overlap(ket0, ket0) == 1
    assert overlap(ket0, ket1) == 0
    with pytest.raises(ValueError):
        overlap(ket0, StateVector.basis(3, 0))


@given(seeds, st.integers(2, 8))
def test_overlap_permutation_invariant(seed, d):
    a, b = vec(haar_state(d, seed)), vec(haar_state(d, seed + 7))
    p = make_rng(seed).permutation(d)
    assert abs(abs(overlap(a, b)) - abs(overlap(a[p], b[p]))) < 1e-12


def test_trace_distance_cases():
    assert trace_distance_pure(plus, plus) == 0
    assert abs(trace_distance_pure(ket0, ket1) - 1) < 1e-15


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_trace_distance_tensor_subadditive(seed, d1, d2):
    a, b = haar_state(d1, seed), haar_state(d1, seed + 1)
    c, d = haar_state(d2, seed + 2), haar_state(d2, seed + 3)
    lhs = trace_distance_pure(tensor(a, c), tensor(b, d)) ** 2
    assert lhs <= trace_distance_pure(a, b) ** 2 + trace_distance_pure(c, d) ** 2 + 1e-12


def test_subset_state_distance():
    assert subset_state_distance(SubsetState(5, (1, 2)), SubsetState(5, (1, 2))) == 0
    S, T = SubsetState(5, (0,)), SubsetState(5, (0, 1))
    assert abs(subset_state_distance(S, T) - math.sqrt(0.5)) < 1e-15
    assert abs(subset_state_distance(S, T) - trace_distance_pure(S.state(), T.state())) < 1e-12
    with pytest.raises(ValueError):
        subset_state_distance(SubsetState(5, (0, 3)), T)


@given(st.integers(2, 8), st.data())
def test_subset_distance_agrees_with_vectors(n, data):
    T = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
    S = data.draw(st.sets(st.sampled_from(sorted(T)), min_size=1))
    a, b = SubsetState(n, tuple(S)), SubsetState(n, tuple(T))
    assert abs(subset_state_distance(a, b) - trace_distance_pure(a.state(), b.state())) < 1e-12


def test_dft_probabilities():
    # valid labeling state on two vertices: value-0 probability 1/q
    psi = LabeledState.from_subset(2, 2, [(0, 0), (1, 1)])
    dist = measure_distribution(dft_value_register(psi), RegisterSpec((2, 2), 1))
    assert abs(dist[0] - 0.5) < 1e-12
    # superposed values on one vertex: value 0 with certainty
    phi = LabeledState.from_subset(2, 2, [(0, 0), (0, 1)])
    dist = measure_distribution(dft_value_register(phi), RegisterSpec((2, 2), 1))
    assert abs(dist[0] - 1) < 1e-12


@given(seeds, st.integers(1, 5), st.integers(2, 4))
def test_dft_preserves_norm(seed, n, q):
    psi = LabeledState(n, q, vec(haar_state(n * q, seed)))
    assert abs(np.linalg.norm(dft_value_register(psi).amps) - 1) < 1e-12


def test_measurement():
    out, post = measure_register(tensor(ket0, ket1), RegisterSpec((2, 2), 1), seed=0)
    assert out == 1 and abs(vec(post)[1] - 1) < 1e-12
    phi = LabeledState.from_subset(2, 2, [(0, 0), (0, 1)])
    np.testing.assert_allclose(measure_distribution(phi, RegisterSpec((2, 2), 1)), [0.5, 0.5])
    with pytest.raises(ValueError):
        measure_distribution(phi, RegisterSpec((3, 2), 1))


def test_sampling_matches_distribution():
    psi = haar_state(6, 3)
    spec = RegisterSpec((3, 2), 0)
    p = measure_distribution(psi, spec)
    n = 4000
    counts = np.bincount([measure_register(psi, spec, seed=s)[0] for s in range(n)], minlength=3)
    sigma = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(counts / n - p) <= 4 * sigma + 1e-12)


def test_seeds_and_serialization():
    assert spawn_seeds(3, 4) == spawn_seeds(3, 4)
    assert len(set(spawn_seeds(3, 50))) == 50
    s = haar_state(5, 9)
    assert np.allclose(StateVector.from_json(s.to_json()).amps, s.amps)
    sub = SubsetState(6, (4, 1))
    assert SubsetState.from_dict(sub.to_dict()) == sub
    with pytest.raises(ValueError):
        StateVector([1, 1])


def test_labeled_state_roundtrip():
    L = LabeledState.from_labeling([2, 0, 1], 3)
    assert L.labeling() == (2, 0, 1) and L.is_valid()
    assert LabeledState.from_subset(2, 2, [(0, 0), (0, 1)]).labeling() is None
