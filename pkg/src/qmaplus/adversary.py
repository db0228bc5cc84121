"""Worst-case prover search.

A functional exposes ``dims``, ``value(slots)`` and ``effective_matrix(i, slots)``
such that, with the other slots held fixed, ``value`` equals ``x^dagger M x``
for the unit vector ``x`` placed in slot ``i``. Alternating ascent then updates
one slot at a time; the grid oracle enumerates a discretized sphere per slot.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graphs import RegularGraph
from .qstate import make_rng, vec

NONNEGATIVE = "nonnegative"
GENERAL = "general"


@dataclass
class ProverAnsatz:
    dims: tuple
    constraint: str = NONNEGATIVE
    params: list | None = None

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.constraint not in (NONNEGATIVE, GENERAL):
            raise ValueError(f"unknown constraint {self.constraint!r}")
        if self.params is not None:
            self.check(self.params)

    def check(self, params) -> None:
        for x, d in zip(params, self.dims):
            x = np.asarray(x)
            if x.size != d or abs(np.linalg.norm(x) - 1) > 1e-9:
                raise ValueError("slot is not a unit vector of the declared dimension")
            if self.constraint == NONNEGATIVE and (np.iscomplexobj(x) and np.any(x.imag != 0)
                                                   or np.min(x.real) < -1e-12):
                raise ValueError("non-negative slot has negative or complex entries")

    def random(self, rng: np.random.Generator) -> list[np.ndarray]:
        out = []
        for d in self.dims:
            if self.constraint == NONNEGATIVE:
                x = np.abs(rng.normal(size=d))
            else:
                x = rng.normal(size=d) + 1j * rng.normal(size=d)
            out.append(x / np.linalg.norm(x))
        return out


@dataclass
class SearchReport:
    best_value: float
    argmax: list
    restarts: int
    oracle_value: float | None = None
    history: list = field(default_factory=list)
    monotone: bool = True

    @property
    def gap(self) -> float | None:
        if self.oracle_value is None:
            return None
        return self.oracle_value - self.best_value

    def to_dict(self) -> dict:
        return {"best_value": self.best_value, "restarts": self.restarts,
                "oracle_value": self.oracle_value, "gap": self.gap, "monotone": self.monotone,
                "argmax": [np.asarray(x).real.tolist() if not np.iscomplexobj(x) or
                           np.all(np.asarray(x).imag == 0) else
                           [[float(z.real), float(z.imag)] for z in np.asarray(x)]
                           for x in self.argmax]}


# ---------------------------------------------------------------- functionals

class QuadraticForm:
    """Single slot: x^dagger M x."""

    def __init__(self, M):
        self.M = np.asarray(M)
        self.dims = (self.M.shape[0],)

    def value(self, slots) -> float:
        x = np.asarray(slots[0])
        return float(np.real(np.vdot(x, self.M @ x)))

    def effective_matrix(self, i, slots) -> np.ndarray:
        return self.M


class SwapAgainst(QuadraticForm):
    """Swap test of the slot against a fixed state: 1/2 + |<a|x>|^2 / 2."""

    def __init__(self, target):
        a = np.asarray(vec(target), dtype=np.complex128)
        super().__init__(0.5 * np.eye(a.size) + 0.5 * np.outer(a, a.conj()))


class ProductQuadratic:
    """<x_1 (x) ... (x) x_k| M |x_1 (x) ... (x) x_k> with one slot per tensor factor."""

    def __init__(self, M, dims: Sequence[int]):
        self.M = np.asarray(M)
        self.dims = tuple(int(d) for d in dims)
        D = int(np.prod(self.dims))
        if self.M.shape != (D, D):
            raise ValueError("operator does not match the slot dimensions")

    def value(self, slots) -> float:
        v = slots[0]
        for x in slots[1:]:
            v = np.kron(v, x)
        return float(np.real(np.vdot(v, self.M @ v)))

    def effective_matrix(self, i, slots) -> np.ndarray:
        return _effective_product(self.M, self.dims, i, slots)


def _effective_product(M: np.ndarray, dims: tuple, i: int, slots) -> np.ndarray:
    k = len(dims)
    T = M.reshape(dims + dims)
    letters = "abcdefghij"
    bra = [letters[j] for j in range(k)]
    ket = [letters[j].upper() for j in range(k)]
    ops = [T]
    terms = ["".join(bra + ket)]
    for j in range(k):
        if j == i:
            continue
        ops += [np.conj(slots[j]), slots[j]]
        terms += [bra[j], ket[j]]
    expr = ",".join(terms) + "->" + bra[i] + ket[i]
    return np.einsum(expr, *ops)


class ExpansionFunctional:
    """Expansion test on two slots: E_r [1/2 + |<P_r x_1, x_2>|^2 / 2].

    ``support`` restricts both slots to a common vertex subset (slot coordinates
    are then indexed by that subset). With ``tied=True`` a single slot feeds both
    inputs and the value is quartic; the effective matrix is then the one obtained
    by freezing one copy.
    """

    def __init__(self, G: RegularGraph, support: Sequence[int] | None = None, tied: bool = False):
        self.G = G
        self.support = np.arange(G.n) if support is None else np.asarray(sorted(support))
        m = self.support.size
        self.tied = tied
        self.dims = (m,) if tied else (m, m)
        # Q[r] restricted: (P_r x)_j = x_{pi^-1(j)} so <P_r x, y> = sum_i x_i y_{pi_r(i)}
        pos = {int(v): t for t, v in enumerate(self.support)}
        Q = np.zeros((G.d, m, m))
        for r, p in enumerate(G.perms):
            for t, v in enumerate(self.support):
                w = int(p[v])
                if w in pos:
                    Q[r, t, pos[w]] = 1.0
        self.Q = Q

    def embed(self, x) -> np.ndarray:
        out = np.zeros(self.G.n, dtype=np.asarray(x).dtype)
        out[self.support] = x
        return out

    def _overlaps(self, x, y) -> np.ndarray:
        return np.einsum("i,rij,j->r", np.conj(x), self.Q, y)

    def value(self, slots) -> float:
        x = slots[0]
        y = slots[0] if self.tied else slots[1]
        return float(np.mean(0.5 + 0.5 * np.abs(np.einsum("i,rij,j->r", x, self.Q, np.conj(y))) ** 2))

    def effective_matrix(self, i, slots) -> np.ndarray:
        m = self.dims[0]
        R = self.Q.shape[0]
        if self.tied or i == 0:
            y = slots[0] if self.tied else slots[1]
            w = np.einsum("rij,j->ri", self.Q, np.conj(y))
            W = np.einsum("ri,rj->ij", np.conj(w), w) / R
        else:
            w = np.einsum("i,rij->rj", slots[0], self.Q)
            W = np.einsum("ri,rj->ij", w, np.conj(w)) / R
        return 0.5 * np.eye(m) + 0.5 * W


# ---------------------------------------------------------------- slot solvers

def top_eigvec(M: np.ndarray) -> np.ndarray:
    H = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(H)
    return V[:, -1]


def nonneg_quadratic_ascent(M: np.ndarray, x0: np.ndarray, tol: float = 1e-10,
                            max_iter: int = 2000) -> np.ndarray:
    """Projected power iteration for max x^T M x over the non-negative unit sphere.

    The matrix is shifted by |lambda_min| + 1 so the objective is convex; each step
    maximizes its linearization over the feasible set, which never decreases it.
    """
    H = np.real(0.5 * (M + M.conj().T))
    shift = abs(float(np.linalg.eigvalsh(H)[0])) + 1.0
    Q = H + shift * np.eye(H.shape[0])
    x = np.maximum(np.real(x0), 0.0)
    if np.linalg.norm(x) == 0:
        x = np.ones_like(x)
    x /= np.linalg.norm(x)
    for _ in range(max_iter):
        g = Q @ x
        y = np.maximum(g, 0.0)
        if np.linalg.norm(y) == 0:
            y = np.zeros_like(x)
            y[int(np.argmax(g))] = 1.0
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < tol:
            return y
        x = y
    return x


def maximize_acceptance(F, template: ProverAnsatz, restarts: int = 100, seed: int = 0, *,
                        tol: float = 1e-8, max_rounds: int = 1000,
                        warm_starts: Sequence[Sequence[np.ndarray]] = ()) -> SearchReport:
    """Alternating ascent over proof slots, best over restarts (ties go to the lower index).

    General slots move to the top eigenvector of their effective matrix,
    non-negative slots to the projected power-iteration maximizer. A step that
    would lower the value is rejected (possible only for tied, non-quadratic
    functionals), so every run's value sequence is non-decreasing.
    """
    if tuple(F.dims) != template.dims:
        raise ValueError("ansatz dimensions do not match the functional")
    rng = make_rng(seed)
    starts = [list(map(np.asarray, w)) for w in warm_starts]
    starts += [template.random(rng) for _ in range(restarts)]
    best_val, best_arg, best_hist = -math.inf, None, []
    monotone = True
    for slots in starts:
        slots = [np.array(x, dtype=np.complex128 if template.constraint == GENERAL else np.float64)
                 for x in slots]
        slots = [x / np.linalg.norm(x) for x in slots]
        val = F.value(slots)
        hist = [val]
        for _ in range(max_rounds):
            start_val = val
            for i in range(len(slots)):
                M = F.effective_matrix(i, slots)
                if template.constraint == GENERAL:
                    new = top_eigvec(M)
                else:
                    new = nonneg_quadratic_ascent(M, slots[i])
                trial = slots[:i] + [new] + slots[i + 1:]
                tv = F.value(trial)
                if tv >= val - 1e-12:
                    slots, val = trial, max(tv, val)
            hist.append(val)
            if val - start_val < tol:
                break
        if any(b < a - 1e-10 for a, b in zip(hist, hist[1:])):
            monotone = False
        if val > best_val + 1e-12:
            best_val, best_arg, best_hist = val, slots, hist
    if not monotone:
        raise AssertionError("ascent lost monotonicity")
    return SearchReport(float(best_val), best_arg, len(starts), None, best_hist, monotone)


# ---------------------------------------------------------------- grid oracle

def sphere_grid(d: int, step: float, nonneg: bool = True, phases: int = 16) -> np.ndarray:
    """Unit vectors from a hyperspherical angle grid on the non-negative orthant.

    With ``nonneg=False`` coordinates 2..d additionally range over a phase grid
    (the first coordinate is real up to a global phase).
    """
    if d == 1:
        return np.ones((1, 1))
    m = int(math.floor((math.pi / 2) / step + 1e-9)) + 1
    ang = np.linspace(0.0, math.pi / 2, m)
    grids = np.meshgrid(*([ang] * (d - 1)), indexing="ij")
    th = np.stack([g.reshape(-1) for g in grids], axis=1)
    pts = np.ones((th.shape[0], d))
    sin_prod = np.ones(th.shape[0])
    for j in range(d - 1):
        pts[:, j] = sin_prod * np.cos(th[:, j])
        sin_prod = sin_prod * np.sin(th[:, j])
    pts[:, d - 1] = sin_prod
    pts = np.unique(np.round(pts, 14), axis=0)
    if nonneg:
        return pts
    ph = np.exp(2j * np.pi * np.arange(phases) / phases)
    combos = np.array(list(itertools.product(ph, repeat=d - 1)))
    full = pts[:, None, :] * np.concatenate([np.ones((len(combos), 1)), combos], axis=1)[None]
    return full.reshape(-1, d)


def grid_bruteforce(F: Callable, dims: Sequence[int], step: float = 0.02, nonneg: bool = True,
                    phases: int = 16, budget: int = 10 ** 8) -> tuple[float, list]:
    """Exhaustive maximum of a batched functional over per-slot sphere grids.

    ``F(*slots)`` receives arrays broadcastable to ``(..., d_i)`` and returns values.
    """
    if any(d > 4 for d in dims):
        raise ValueError("grid oracle supports at most 4 dimensions per slot")
    grids = [sphere_grid(d, step, nonneg, phases) for d in dims]
    total = int(np.prod([len(g) for g in grids]))
    if total > budget:
        raise ValueError(f"grid of {total} points exceeds budget {budget}")
    if len(grids) == 1:
        vals = np.asarray(F(grids[0]))
        t = int(np.argmax(vals))
        return float(vals[t]), [grids[0][t]]
    best, arg = -math.inf, None
    head, last = grids[:-1], grids[-1]
    for idx in itertools.product(*[range(len(g)) for g in head[:-1]]):
        fixed = [g[i] for g, i in zip(head[:-1], idx)]
        g2 = head[-1]
        chunk = max(1, 2 ** 20 // max(1, len(last)))
        for c in range(0, len(g2), chunk):
            a = g2[c:c + chunk][:, None, :]
            vals = np.asarray(F(*[f[None, None, :] for f in fixed], a, last[None, :, :]))
            vals = np.broadcast_to(vals, (len(a), len(last)))
            t = np.unravel_index(int(np.argmax(vals)), vals.shape)
            if vals[t] > best:
                best, arg = float(vals[t]), fixed + [g2[c + t[0]], last[t[1]]]
    return best, arg


def batched_quadratic(M) -> Callable:
    M = np.asarray(M)
    return lambda X: np.real(np.einsum("...i,ij,...j->...", np.conj(X), M, X))


def batched_product_quadratic(M, dims: Sequence[int]) -> Callable:
    dims = tuple(dims)
    T = np.asarray(M).reshape(dims + dims)

    def f(*xs):
        k = len(dims)
        letters = "abcdefgh"
        bra = [letters[j] for j in range(k)]
        ket = [letters[j].upper() for j in range(k)]
        terms = ["".join(bra + ket)] + ["..." + b for b in bra] + ["..." + c for c in ket]
        expr = ",".join(terms) + "->..."
        return np.real(np.einsum(expr, T, *[np.conj(x) for x in xs], *xs))

    return f


def batched_expansion(Fn: ExpansionFunctional) -> Callable:
    Q = Fn.Q

    def f(X, Y=None):
        Y = X if Y is None else Y
        ov = np.einsum("...i,rij,...j->...r", X, Q, np.conj(Y))
        return np.mean(0.5 + 0.5 * np.abs(ov) ** 2, axis=-1)

    return f


# ---------------------------------------------------------------- omega and separability

def omega_bipartite(psi, dims: Sequence[int]) -> float:
    x = np.asarray(vec(psi), dtype=np.complex128).reshape(dims[0], -1)
    return float(np.linalg.svd(x, compute_uv=False)[0] ** 2)


@dataclass
class OmegaReport:
    value: float
    upper_bound: float
    factors: list


def omega_report(psi, partition: Sequence[int], restarts: int = 20, seed: int = 0,
                 max_rounds: int = 500) -> OmegaReport:
    """Max squared overlap with product states: exact SVD for two parties, alternating ascent otherwise.

    The upper bound is the smallest single-party-versus-rest singular value bound.
    """
    partition = tuple(int(p) for p in partition)
    x = np.asarray(vec(psi), dtype=np.complex128)
    if int(np.prod(partition)) != x.size:
        raise ValueError("partition does not match state dimension")
    k = len(partition)
    if k == 1:
        return OmegaReport(1.0, 1.0, [x])
    T = x.reshape(partition)
    bounds = []
    for i in range(k):
        mat = np.moveaxis(T, i, 0).reshape(partition[i], -1)
        bounds.append(float(np.linalg.svd(mat, compute_uv=False)[0] ** 2))
    ub = min(bounds)
    if k == 2:
        U, s, Vh = np.linalg.svd(T)
        return OmegaReport(float(s[0] ** 2), ub, [U[:, 0], Vh[0]])
    rng = make_rng(seed)
    letters = "abcdefgh"
    best, best_f = -1.0, None
    for _ in range(restarts):
        fs = []
        for d in partition:
            z = rng.normal(size=d) + 1j * rng.normal(size=d)
            fs.append(z / np.linalg.norm(z))
        val = 0.0
        for _ in range(max_rounds):
            for i in range(k):
                expr = letters[:k] + "," + ",".join(letters[j] for j in range(k) if j != i) + "->" + letters[i]
                g = np.einsum(expr, T, *[fs[j].conj() for j in range(k) if j != i])
                fs[i] = g / np.linalg.norm(g) if np.linalg.norm(g) > 0 else fs[i]
            ov = np.einsum(letters[:k] + "," + ",".join(letters[:k]) + "->", T,
                           *[f.conj() for f in fs])
            new = float(abs(ov) ** 2)
            if new - val < 1e-13:
                val = max(val, new)
                break
            val = new
        if val > best:
            best, best_f = val, list(fs)
    return OmegaReport(min(best, ub), ub, best_f)


def omega(psi, partition: Sequence[int]) -> float:
    return omega_report(psi, partition).value


def best_separable_value(M, dims: Sequence[int], restarts: int = 20, seed: int = 0) -> float:
    """max over product pure states of <a (x) b| M |a (x) b> for PSD M <= I."""
    M = np.asarray(M)
    H = 0.5 * (M + M.conj().T)
    ev = np.linalg.eigvalsh(H)
    if ev[0] < -1e-9:
        raise ValueError("operator is not positive semidefinite")
    if ev[-1] > 1 + 1e-9:
        raise ValueError("operator exceeds the identity")
    F = ProductQuadratic(H, dims)
    rep = maximize_acceptance(F, ProverAnsatz(tuple(dims), GENERAL), restarts=restarts, seed=seed)
    return min(rep.best_value, float(ev[-1]))
