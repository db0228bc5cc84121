"""Property-testing primitives on families of proofs.

Every test runs in one of two modes. ``TestMode.exact()`` returns closed-form
expectations: fractions are expected per-member acceptance rates and verdicts
compare those expectations against the thresholds. Alongside, each threshold
test reports ``verdict_probability``, the exact probability that the literal
randomized test (empirical fractions against thresholds) accepts. Monte Carlo
mode samples the measurements; its acceptance frequency estimates
``verdict_probability`` and its mean fractions estimate the exact fractions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import networkx as nx
import numpy as np

from .qstate import (
    ATOL,
    LabeledState,
    StateVector,
    as_labeled,
    dft_value_register,
    make_rng,
    measure_distribution,
    RegisterSpec,
    vec,
)

# slack used when comparing exact expectations against thresholds
THRESHOLD_TOL = 1e-12
EXACT_MATCHING_MAX_K = 16


@dataclass(frozen=True)
class TestMode:
    """Exact expectations or seeded Monte Carlo with a number of independent runs."""

    __test__ = False

    kind: str = "exact"
    seed: int | None = None
    trials: int = 1

    def __post_init__(self):
        if self.kind not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    @classmethod
    def exact(cls) -> "TestMode":
        return cls("exact")

    @classmethod
    def monte_carlo(cls, seed: int, trials: int = 10_000) -> "TestMode":
        return cls("monte_carlo", int(seed), int(trials))

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)

    def to_dict(self) -> dict:
        return {"mode": self.kind, "seed": self.seed, "trials": self.trials}


EXACT = TestMode.exact()


class TiltedFamily:
    """Ordered family of equal-dimension states (a prover's batch of copies)."""

    def __init__(self, states: Sequence):
        states = list(states)
        if not states:
            raise ValueError("empty family")
        dims = {int(np.asarray(vec(s)).size) for s in states}
        if len(dims) != 1:
            raise ValueError("family members differ in dimension")
        self.states = states
        self._matrix = None

    @classmethod
    def copies(cls, state, k: int) -> "TiltedFamily":
        return cls([state] * k)

    @property
    def k(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return int(np.asarray(vec(self.states[0])).size)

    def matrix(self) -> np.ndarray:
        """Members stacked as rows (complex)."""
        if self._matrix is None:
            m = np.array([np.asarray(vec(s), dtype=np.complex128) for s in self.states])
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    def nonneg_matrix(self) -> np.ndarray:
        m = self.matrix()
        if np.max(np.abs(m.imag)) > ATOL or np.min(m.real) < -ATOL:
            raise ValueError("family has members with negative or complex amplitudes")
        return np.maximum(m.real, 0.0)

    def halves(self) -> tuple["TiltedFamily", "TiltedFamily"]:
        if self.k % 2:
            raise ValueError("family size must be even to split")
        h = self.k // 2
        return TiltedFamily(self.states[:h]), TiltedFamily(self.states[h:])

    def tensor(self, other: "TiltedFamily") -> "TiltedFamily":
        """Member-wise tensor product, pairing member i with member i."""
        if self.k != other.k:
            raise ValueError("families differ in size")
        a, b = self.matrix(), other.matrix()
        return TiltedFamily([StateVector(np.kron(x, y), check=False) for x, y in zip(a, b)])


# ---------------------------------------------------------------- swap test

def swap_probability(a, b) -> float:
    """Closed form 1/2 + |<a|b>|^2 / 2."""
    x, y = np.asarray(vec(a)), np.asarray(vec(b))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    return min(0.5 + 0.5 * abs(np.vdot(x, y)) ** 2, 1.0)


def swap_circuit_probability(a, b) -> float:
    """Ancilla-0 probability from simulating H, controlled-SWAP, H on |0>|a>|b>."""
    x, y = np.asarray(vec(a), dtype=np.complex128), np.asarray(vec(b), dtype=np.complex128)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    ab = np.outer(x, y)
    branch0 = 0.5 * (ab + ab.T)
    return float(np.sum(np.abs(branch0) ** 2))


def symmetric_projector(d: int) -> np.ndarray:
    """(I + SWAP) / 2 on C^d (x) C^d."""
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    return 0.5 * (np.eye(d * d) + swap)


def swap_density_oracle(a, b) -> float:
    """tr(Pi_sym (rho (x) sigma)) built from explicit density matrices."""
    x, y = np.asarray(vec(a), dtype=np.complex128), np.asarray(vec(b), dtype=np.complex128)
    rho = np.kron(np.outer(x, x.conj()), np.outer(y, y.conj()))
    return float(np.real(np.trace(symmetric_projector(x.size) @ rho)))


def swap_test(a, b, mode: TestMode = EXACT) -> float:
    """Swap test acceptance.

    Exact mode returns the acceptance probability. Monte Carlo mode runs
    ``mode.trials`` independent circuits and returns the accepted fraction, so
    a single trial yields 0.0 or 1.0.
    """
    if mode.is_exact:
        return swap_probability(a, b)
    p = swap_circuit_probability(a, b)
    return float(mode.rng().binomial(mode.trials, min(max(p, 0.0), 1.0)) / mode.trials)


def pair_swap_matrix(family: TiltedFamily) -> np.ndarray:
    g = family.matrix() @ family.matrix().conj().T
    return np.minimum(0.5 + 0.5 * np.abs(g) ** 2, 1.0)


# ---------------------------------------------------------- symmetry test

def perfect_matchings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of an even-sized list, first element paired first."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1:]
        for m in perfect_matchings(remaining):
            yield [(first, partner)] + m


def random_matching(k: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    perm = rng.permutation(k)
    return [(int(perm[2 * t]), int(perm[2 * t + 1])) for t in range(k // 2)]


def matching_expectation(P: np.ndarray) -> float:
    """E over uniform perfect matchings of the product of matched pair entries (bitmask DP)."""
    k = P.shape[0]
    full = (1 << k) - 1

    @lru_cache(maxsize=None)
    def f(mask: int) -> float:
        if mask == full:
            return 1.0
        i = next(t for t in range(k) if not mask >> t & 1)
        rest = [j for j in range(i + 1, k) if not mask >> j & 1]
        total = 0.0
        for j in rest:
            total += P[i, j] * f(mask | 1 << i | 1 << j)
        return total / len(rest)

    return f(0)


@dataclass
class SymmetryOutcome:
    acceptance: float
    method: str
    matching: list | None = None
    draws: np.ndarray | None = None

    @property
    def verdict_probability(self) -> float:
        return self.acceptance


def symmetry_test(family: TiltedFamily, mode: TestMode = EXACT, *, samples: int = 20_000,
                  seed: int = 0) -> SymmetryOutcome:
    """Swap-test a uniformly random perfect matching of the family; accept iff all pairs pass.

    Exact mode uses a subset dynamic program for k <= 16 and a matching-sampled
    estimate (``samples`` matchings from ``seed``) above that, except when all
    pair probabilities coincide and the value is a closed-form power.
    """
    k = family.k
    if k % 2:
        raise ValueError("symmetry test needs an even family size")
    P = pair_swap_matrix(family)
    off = P[~np.eye(k, dtype=bool)]
    if mode.is_exact:
        if k == 0 or np.ptp(off) <= 1e-15:
            return SymmetryOutcome(float(off[0] ** (k // 2)) if k else 1.0, "closed_form")
        if k <= EXACT_MATCHING_MAX_K:
            return SymmetryOutcome(matching_expectation(P), "exact")
        rng = make_rng(seed)
        vals = [np.prod([P[i, j] for i, j in random_matching(k, rng)]) for _ in range(samples)]
        return SymmetryOutcome(float(np.mean(vals)), "sampled")
    rng = mode.rng()
    draws = np.zeros(mode.trials, dtype=bool)
    first = None
    for t in range(mode.trials):
        m = random_matching(k, rng)
        first = first or m
        probs = np.array([P[i, j] for i, j in m])
        draws[t] = bool(np.all(rng.random(len(probs)) < probs))
    acc = float(draws.mean()) if mode.trials else 0.0
    return SymmetryOutcome(acc, "monte_carlo", first, draws)


def trace_distance_matrix(family: TiltedFamily) -> np.ndarray:
    g = family.matrix() @ family.matrix().conj().T
    return np.sqrt(np.clip(1.0 - np.abs(g) ** 2, 0.0, 1.0))


def is_eps_tilted(family: TiltedFamily, eps: float) -> tuple[bool, tuple[int, ...]]:
    """Decide whether some R with |R| >= (1-eps)k has pairwise trace distance <= sqrt(eps).

    The neighbourhood certificate (members with more than k/2 neighbours within
    sqrt(eps)/2) is tried first; otherwise an exact maximum clique is computed.
    """
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    k = family.k
    need = (1 - eps) * k - 1e-12
    D = trace_distance_matrix(family)
    r = np.sqrt(eps)
    near = D <= r / 2 + ATOL
    good = [i for i in range(k) if near[i].sum() > k / 2]
    if len(good) >= need and np.all(D[np.ix_(good, good)] <= r + ATOL):
        return True, tuple(good)
    close = D <= r + ATOL
    g = nx.Graph()
    g.add_nodes_from(range(k))
    g.add_edges_from((i, j) for i in range(k) for j in range(i + 1, k) if close[i, j])
    clique, _ = nx.max_weight_clique(g, weight=None)
    clique = tuple(sorted(clique))
    return len(clique) >= need, clique


# ---------------------------------------------------------- sparsity tests

def poisson_binomial_pmf(p: np.ndarray) -> np.ndarray:
    """Distribution of the number of successes of independent Bernoulli(p_i)."""
    pmf = np.array([1.0])
    for pi in np.asarray(p, dtype=float):
        pmf = np.convolve(pmf, [1.0 - pi, pi])
    return pmf


@dataclass
class SparsityOutcome:
    alpha: float
    beta: float
    lam: float
    accept: bool
    eps: float
    verdict_probability: float | None = None
    acceptance: float | None = None
    target: float | None = None
    mode: str = "exact"
    draws: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "lambda": self.lam, "accept": self.accept,
            "eps": self.eps, "verdict_probability": self.verdict_probability,
            "acceptance": self.acceptance, "target": self.target, "mode": self.mode,
        }


def _sparsity_rule(eps: float, target: float | None, max_density: float | None,
                   tol: float) -> Callable:
    r = np.sqrt(eps)

    def rule(a, b, l):
        ok = (np.abs(a + b - 1.5) <= r + tol) & (l <= 0.5 + r + tol)
        if target is not None:
            ok = ok & (np.abs(2 * a - 1 - target) <= r + tol)
        if max_density is not None:
            ok = ok & (2 * a - 1 <= max_density + tol)
        return ok

    return rule


def sparsity_swap_probabilities(psi: TiltedFamily, phi: TiltedFamily):
    """Per-member swap acceptance for the three batches (Psi0 vs uniform, Phi0 vs uniform, Psi1 vs Phi1)."""
    if psi.k != phi.k or psi.k % 2:
        raise ValueError("families must have equal even size 2k")
    if psi.dim != phi.dim:
        raise ValueError("families live in different dimensions")
    P, F = psi.nonneg_matrix(), phi.nonneg_matrix()
    h = psi.k // 2
    n = psi.dim
    u = np.full(n, 1.0 / np.sqrt(n))
    pa = 0.5 + 0.5 * (P[:h] @ u) ** 2
    pb = 0.5 + 0.5 * (F[:h] @ u) ** 2
    pl = 0.5 + 0.5 * np.sum(P[h:] * F[h:], axis=1) ** 2
    return tuple(np.clip(x, 0.0, 1.0) for x in (pa, pb, pl))


def sparsity_test(psi: TiltedFamily, phi: TiltedFamily, eps: float, mode: TestMode = EXACT, *,
                  target: float | None = None, max_density: float | None = None) -> SparsityOutcome:
    """Sparsity test with optional target window on 2*alpha-1 and an upper cap on it."""
    pa, pb, pl = sparsity_swap_probabilities(psi, phi)
    h = len(pa)
    if mode.is_exact:
        a, b, l = float(pa.mean()), float(pb.mean()), float(pl.mean())
        accept = bool(_sparsity_rule(eps, target, max_density, THRESHOLD_TOL)(a, b, l))
        rule = _sparsity_rule(eps, target, max_density, 1e-12)
        fx = np.arange(h + 1) / h
        px, py, pz = poisson_binomial_pmf(pa), poisson_binomial_pmf(pb), poisson_binomial_pmf(pl)
        A, B = np.meshgrid(fx, fx, indexing="ij")
        ab_ok = rule(A, B, np.zeros_like(A))
        l_ok = fx <= 0.5 + np.sqrt(eps) + 1e-12
        vp = float(np.sum(np.outer(px, py) * ab_ok) * np.sum(pz[l_ok]))
        return SparsityOutcome(a, b, l, accept, eps, vp, float(accept), target, "exact")
    rng = mode.rng()
    t = mode.trials
    xa = rng.binomial(1, np.broadcast_to(pa, (t, h))).mean(axis=1)
    xb = rng.binomial(1, np.broadcast_to(pb, (t, h))).mean(axis=1)
    xl = rng.binomial(1, np.broadcast_to(pl, (t, h))).mean(axis=1)
    ok = _sparsity_rule(eps, target, max_density, 1e-12)(xa, xb, xl)
    freq = float(ok.mean())
    accept = bool(ok[0]) if t == 1 else freq > 0.5
    return SparsityOutcome(float(xa.mean()), float(xb.mean()), float(xl.mean()), accept, eps,
                           None, freq, target, "monte_carlo", ok)


def sparsity_test_I(psi: TiltedFamily, phi: TiltedFamily, eps: float,
                    mode: TestMode = EXACT) -> SparsityOutcome:
    return sparsity_test(psi, phi, eps, mode)


def sparsity_test_II(psi: TiltedFamily, phi: TiltedFamily, gamma: float, eps: float,
                     mode: TestMode = EXACT) -> SparsityOutcome:
    if not 0 < gamma < 1:
        raise ValueError("target sparsity must lie in (0, 1)")
    return sparsity_test(psi, phi, eps, mode, target=gamma)


def heavy_support(u, gamma: float) -> tuple[np.ndarray, float]:
    """Coordinates with u_i >= sqrt(gamma/n) and the squared mass they carry."""
    x = np.maximum(np.asarray(vec(u)).real, 0.0)
    n = x.size
    S = np.flatnonzero(x >= np.sqrt(gamma / n))
    return S, float(np.sum(x[S] ** 2))


def nearest_subset_state(u, size: int) -> tuple[tuple[int, ...], float]:
    """Closest flat state of a given support size to a non-negative u (top entries)."""
    x = np.asarray(vec(u)).real
    order = np.argsort(-x, kind="stable")[:size]
    ov = x[order].sum() / np.sqrt(size)
    return tuple(sorted(int(i) for i in order)), float(np.sqrt(max(0.0, 1.0 - ov ** 2)))


def nearest_subset_state_bruteforce(u, size: int) -> float:
    x = np.asarray(vec(u)).real
    best = 0.0
    for S in itertools.combinations(range(x.size), size):
        best = max(best, x[list(S)].sum() ** 2 / size)
    return float(np.sqrt(max(0.0, 1.0 - best)))


# ------------------------------------------------------------ validity test

def validity_zero_probability(psi: LabeledState) -> float:
    """Probability of value 0 after the DFT: sum_i |sum_v psi_iv|^2 / q."""
    b = psi.block
    return float(np.sum(np.abs(b.sum(axis=1)) ** 2) / psi.q)


def subset_p_tilde(counts: Sequence[int], q: int) -> float:
    """sum_i c_i^2 / (|S| q) for a subset state with c_i values on vertex i."""
    c = np.asarray(counts, dtype=float)
    return float(np.sum(c ** 2) / (c.sum() * q))


@dataclass
class ValidityOutcome:
    alpha: float
    accept: bool
    d: float
    q: int
    verdict_probability: float | None = None
    acceptance: float | None = None
    mode: str = "exact"
    draws: np.ndarray | None = None


def validity_test(family: TiltedFamily, n: int, q: int, d: float,
                  mode: TestMode = EXACT) -> ValidityOutcome:
    """DFT the value register of each member and count outcome 0; accept iff alpha <= 1/q + d."""
    members = [as_labeled(s, n, q) for s in family.states]
    thr = 1.0 / q + d
    if mode.is_exact:
        p = np.array([validity_zero_probability(s) for s in members])
        a = float(p.mean())
        k = len(p)
        pmf = poisson_binomial_pmf(p)
        vp = float(pmf[np.arange(k + 1) / k <= thr + 1e-12].sum())
        acc = a <= thr + THRESHOLD_TOL
        return ValidityOutcome(a, bool(acc), d, q, vp, float(acc), "exact")
    spec = RegisterSpec((n, q), 1)
    p = np.array([measure_distribution(dft_value_register(s), spec)[0] for s in members])
    rng = mode.rng()
    p = np.clip(p, 0.0, 1.0)
    x = rng.binomial(1, np.broadcast_to(p, (mode.trials, len(p)))).mean(axis=1)
    ok = x <= thr + 1e-12
    freq = float(ok.mean())
    return ValidityOutcome(float(x.mean()), bool(ok[0]) if mode.trials == 1 else freq > 0.5,
                           d, q, None, freq, "monte_carlo", ok)


# ------------------------------------------------------------- product test

def _check_partition(x: np.ndarray, partition: Sequence[int]) -> None:
    if int(np.prod(partition)) != x.size:
        raise ValueError(f"partition {list(partition)} does not match dimension {x.size}")


def _apply_subsystem_projector(t: np.ndarray, i: int, k: int) -> np.ndarray:
    return 0.5 * (t + np.swapaxes(t, i, k + i))


def product_test(psi, phi, partition: Sequence[int], mode: TestMode = EXACT) -> float:
    """Swap test on every subsystem of two copies; accept iff all accept.

    Exact mode applies the product of subsystem symmetric projectors to
    psi (x) phi and returns the squared norm of the result.
    """
    x = np.asarray(vec(psi), dtype=np.complex128)
    y = np.asarray(vec(phi), dtype=np.complex128)
    if x.shape != y.shape:
        raise ValueError("states differ in dimension")
    _check_partition(x, partition)
    k = len(partition)
    t = np.multiply.outer(x.reshape(partition), y.reshape(partition))
    if mode.is_exact:
        for i in range(k):
            t = _apply_subsystem_projector(t, i, k)
        return float(np.sum(np.abs(t) ** 2))
    rng = mode.rng()
    stage_p = []
    cur = t
    for i in range(k):
        nxt = _apply_subsystem_projector(cur, i, k)
        norm = float(np.sum(np.abs(cur) ** 2))
        p = float(np.sum(np.abs(nxt) ** 2)) / norm if norm > 0 else 0.0
        stage_p.append(min(max(p, 0.0), 1.0))
        cur = nxt
    # sequential projective measurements: stage i accepts with its conditional probability
    draws = rng.random((mode.trials, k)) < np.array(stage_p)
    return float(np.all(draws, axis=1).mean())


def product_test_reduced_oracle(psi, phi, partition: Sequence[int]) -> float:
    """2^-k sum over subsystem sets T of tr(rho_T sigma_T), from reduced density matrices."""
    x = np.asarray(vec(psi), dtype=np.complex128).reshape(partition)
    y = np.asarray(vec(phi), dtype=np.complex128).reshape(partition)
    k = len(partition)
    total = 0.0
    letters = "abcdefghijklm"
    for r in range(k + 1):
        for T in itertools.combinations(range(k), r):
            keep = [letters[i] for i in range(k)]
            keep2 = [letters[i] if i not in T else letters[i].upper() for i in range(k)]
            expr = "".join(keep) + "," + "".join(keep2) + "->" + \
                "".join(letters[i] for i in T) + "".join(letters[i].upper() for i in T)
            rho = np.einsum(expr, x, x.conj())
            sig = np.einsum(expr, y, y.conj())
            dT = int(np.prod([partition[i] for i in T])) if T else 1
            rho, sig = rho.reshape(dT, dT), sig.reshape(dT, dT)
            total += float(np.real(np.trace(rho @ sig)))
    return total / 2 ** k
