"""Dense statevector primitives.

States are stored as immutable numpy arrays. Non-negative states keep a real
array and expose a complex view when mixed with general states. The value
register of a labeled state over ``[n] x [q]`` is flattened as ``i * q + v``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-9
ORACLE_ATOL = 1e-12


def make_rng(seed=None) -> np.random.Generator:
    """Seeded generator; accepts an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed, count: int) -> list[int]:
    """Derive ``count`` independent integer seeds from a master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class StateVector:
    """Unit vector of complex amplitudes."""

    def __init__(self, amps, *, check: bool = True):
        arr = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if arr.size == 0:
            raise ValueError("state must have positive dimension")
        if check:
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"state is not normalized (norm={norm:.12g})")
        self._amps = _freeze(arr)

    @classmethod
    def normalized(cls, amps):
        arr = np.asarray(amps, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(arr / norm)

    @classmethod
    def basis(cls, dim: int, index: int):
        arr = np.zeros(dim, dtype=np.complex128)
        arr[index] = 1.0
        return cls(arr)

    @property
    def amps(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return int(self._amps.size)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"

    def to_dict(self) -> dict:
        a = np.asarray(self.amps, dtype=np.complex128)
        return {"dim": self.dim, "amps": [[float(z.real), float(z.imag)] for z in a]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "StateVector":
        amps = np.array([complex(re, im) for re, im in doc["amps"]])
        if len(amps) != doc["dim"]:
            raise ValueError("dim does not match number of amplitudes")
        return cls(amps)

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        return cls.from_dict(json.loads(text))


class NonnegState(StateVector):
    """Unit vector with real non-negative amplitudes."""

    def __init__(self, values, *, check: bool = True):
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            if np.max(np.abs(arr.imag), initial=0.0) > ATOL:
                raise ValueError("non-negative state has imaginary amplitudes")
            arr = arr.real
        arr = np.asarray(arr, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValueError("state must have positive dimension")
        if check:
            if np.min(arr) < -ATOL:
                raise ValueError("non-negative state has a negative amplitude")
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"state is not normalized (norm={norm:.12g})")
        self._values = _freeze(np.maximum(arr, 0.0))

    @classmethod
    def normalized(cls, values):
        arr = np.maximum(np.asarray(values, dtype=np.float64).reshape(-1), 0.0)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(arr / norm)

    @classmethod
    def basis(cls, dim: int, index: int):
        arr = np.zeros(dim)
        arr[index] = 1.0
        return cls(arr)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def amps(self) -> np.ndarray:
        return self._values.astype(np.complex128)

    @property
    def dim(self) -> int:
        return int(self._values.size)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._values, dtype=dtype)

    @classmethod
    def from_dict(cls, doc: dict) -> "NonnegState":
        return cls(StateVector.from_dict(doc).amps)


def vec(x) -> np.ndarray:
    """Raw amplitude array of a state or array-like (real arrays stay real)."""
    if isinstance(x, NonnegState):
        return x.values
    if isinstance(x, StateVector):
        return x.amps
    return np.asarray(x)


def uniform_state(n: int) -> NonnegState:
    return NonnegState(np.full(n, 1.0 / np.sqrt(n)))


def haar_state(dim: int, seed=None) -> StateVector:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    rng = make_rng(seed)
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(z / np.linalg.norm(z))


def random_nonneg_state(dim: int, seed=None, sparsity: float | None = None) -> NonnegState:
    """Random non-negative unit vector; ``sparsity`` keeps that fraction of entries."""
    rng = make_rng(seed)
    x = np.abs(rng.normal(size=dim))
    if sparsity is not None:
        keep = max(1, int(round(sparsity * dim)))
        mask = np.zeros(dim, dtype=bool)
        mask[rng.choice(dim, size=keep, replace=False)] = True
        x = np.where(mask, x, 0.0)
    return NonnegState(x / np.linalg.norm(x))


@dataclass(frozen=True)
class SubsetState:
    """Flat state 1_S / sqrt(|S|) on ``n`` basis vectors."""

    n: int
    S: tuple

    def __post_init__(self):
        s = tuple(sorted(set(int(i) for i in self.S)))
        if not s:
            raise ValueError("subset state needs a non-empty set")
        if s[0] < 0 or s[-1] >= self.n:
            raise ValueError("subset indices out of range")
        object.__setattr__(self, "S", s)

    def __len__(self) -> int:
        return len(self.S)

    def vector(self) -> np.ndarray:
        v = np.zeros(self.n)
        v[list(self.S)] = 1.0 / np.sqrt(len(self.S))
        return v

    def state(self) -> NonnegState:
        return NonnegState(self.vector())

    def complement(self) -> "SubsetState":
        return SubsetState(self.n, tuple(sorted(set(range(self.n)) - set(self.S))))

    def to_dict(self) -> dict:
        return {"n": self.n, "S": list(self.S)}

    @classmethod
    def from_dict(cls, doc: dict) -> "SubsetState":
        return cls(int(doc["n"]), tuple(doc["S"]))


class LabeledState(StateVector):
    """State on ``[n] x [q]`` with amplitude of ``(i, v)`` at index ``i * q + v``."""

    def __init__(self, n: int, q: int, amps, *, check: bool = True):
        arr = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if arr.size != n * q:
            raise ValueError(f"expected {n * q} amplitudes, got {arr.size}")
        super().__init__(arr, check=check)
        self.n = int(n)
        self.q = int(q)

    @property
    def block(self) -> np.ndarray:
        return self.amps.reshape(self.n, self.q)

    @classmethod
    def from_labeling(cls, labels: Sequence[int], q: int) -> "LabeledState":
        n = len(labels)
        arr = np.zeros((n, q))
        for i, v in enumerate(labels):
            if not 0 <= v < q:
                raise ValueError("label out of range")
            arr[i, v] = 1.0
        return cls(n, q, arr.reshape(-1) / np.sqrt(n))

    @classmethod
    def from_subset(cls, n: int, q: int, pairs: Iterable[tuple[int, int]]) -> "LabeledState":
        arr = np.zeros((n, q))
        for i, v in pairs:
            arr[i, v] = 1.0
        total = arr.sum()
        if total == 0:
            raise ValueError("empty subset")
        return cls(n, q, arr.reshape(-1) / np.sqrt(total))

    def labeling(self) -> tuple[int, ...] | None:
        """The encoded labeling when the state is in the valid set, else None."""
        b = self.block
        target = 1.0 / np.sqrt(self.n)
        labels = []
        for row in b:
            nz = np.flatnonzero(np.abs(row) > ATOL)
            if len(nz) != 1 or abs(row[nz[0]] - target) > ATOL:
                return None
            labels.append(int(nz[0]))
        return tuple(labels)

    def is_valid(self) -> bool:
        return self.labeling() is not None


def as_labeled(x, n: int, q: int) -> LabeledState:
    if isinstance(x, LabeledState) and x.n == n and x.q == q:
        return x
    return LabeledState(n, q, vec(x))


def tensor(a, b) -> StateVector:
    """Kronecker product; stays non-negative when both factors are."""
    if isinstance(a, NonnegState) and isinstance(b, NonnegState):
        return NonnegState(np.kron(a.values, b.values), check=False)
    return StateVector(np.kron(vec(a), vec(b)), check=False)


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")


def overlap(a, b) -> complex:
    """Inner product <a|b>, conjugate-linear in the first argument."""
    x, y = vec(a), vec(b)
    _check_dims(x, y)
    return complex(np.vdot(x, y))


def trace_distance_pure(a, b) -> float:
    """Trace distance sqrt(1 - |<a|b>|^2) between pure states."""
    x, y = vec(a), vec(b)
    ov = overlap(x, y)
    r = abs(ov)
    # 1 - |ov| from the phase-aligned difference keeps precision near r = 1
    phase = np.conj(ov) / r if r > 0 else 1.0
    gap = 0.5 * float(np.linalg.norm(x - phase * y) ** 2)
    return float(np.sqrt(max(0.0, gap * (1.0 + min(r, 1.0)))))


def subset_state_distance(S: SubsetState, T: SubsetState) -> float:
    """Trace distance between nested subset states, S contained in T."""
    if S.n != T.n:
        raise ValueError("subset states live in different dimensions")
    if not set(S.S) <= set(T.S):
        raise ValueError("sets are not nested; use trace_distance_pure instead")
    return float(np.sqrt((len(T) - len(S)) / len(T)))


def dft_matrix(q: int) -> np.ndarray:
    k = np.arange(q)
    return np.exp(2j * np.pi * np.outer(k, k) / q) / np.sqrt(q)


def dft_value_register(psi: LabeledState) -> LabeledState:
    """Apply the unitary q-point DFT to the value register of each vertex block."""
    if psi.q < 2:
        raise ValueError("value register needs q >= 2")
    out = psi.block @ dft_matrix(psi.q).T
    return LabeledState(psi.n, psi.q, out.reshape(-1), check=False)


@dataclass(frozen=True)
class RegisterSpec:
    """Index space viewed as a tensor of ``shape``; ``axis`` is the measured register."""

    shape: tuple
    axis: int

    def check(self, dim: int) -> None:
        if int(np.prod(self.shape)) != dim:
            raise ValueError(f"register shape {self.shape} does not cover dimension {dim}")
        if not 0 <= self.axis < len(self.shape):
            raise ValueError("register axis out of range")


def measure_distribution(psi, spec: RegisterSpec) -> np.ndarray:
    """Outcome distribution of measuring register ``spec.axis`` in the computational basis."""
    x = vec(psi)
    spec.check(x.size)
    t = np.abs(x.reshape(spec.shape)) ** 2
    axes = tuple(i for i in range(len(spec.shape)) if i != spec.axis)
    p = t.sum(axis=axes)
    return p / p.sum()


def measure_register(psi, spec: RegisterSpec, seed=None, outcome: int | None = None):
    """Sample (or force) an outcome and return it with the renormalized post-measurement state."""
    x = np.asarray(vec(psi), dtype=np.complex128)
    p = measure_distribution(x, spec)
    if outcome is None:
        outcome = int(make_rng(seed).choice(len(p), p=p))
    elif p[outcome] <= 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    t = x.reshape(spec.shape)
    mask = np.zeros(spec.shape[spec.axis], dtype=bool)
    mask[outcome] = True
    shaped = [1] * len(spec.shape)
    shaped[spec.axis] = spec.shape[spec.axis]
    post = np.where(mask.reshape(shaped), t, 0.0).reshape(-1)
    return outcome, StateVector(post / np.linalg.norm(post))
