"""Toy doubly explicit CSP: tabulated index maps, cloud regularization, the operators
A, M_k, B on (constraint, values, variable, value) registers, and the constraints test."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..graphs import ExpanderFamily
from ..pcp import is_prime
from ..proptest import (
    EXACT,
    TestMode,
    TiltedFamily,
    sparsity_test_II,
    symmetry_test,
    validity_test,
)
from ..qstate import LabeledState, as_labeled, make_rng, spawn_seeds
from .common import ProtocolOutcome, exact_outcome, monte_carlo_menu

CSP_MENU = ("primes", "symmetry", "sparsity", "validity", "constraints")


def _digits(values: np.ndarray, s: int, q: int) -> np.ndarray:
    """Base-s digits, most significant first: (..., ) -> (..., q)."""
    values = np.asarray(values, dtype=np.int64)
    powers = s ** np.arange(q - 1, -1, -1, dtype=np.int64)
    return (values[..., None] // powers) % s


def _all_assignments(N: int, s: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = s ** N if stop is None else stop
    return _digits(np.arange(start, stop, dtype=np.int64), s, N)


class CspToyInstance:
    """R constraints of arity q over N variables with alphabet [s].

    ``adjc[j]`` lists the distinct variables constraint j queries and
    ``predicates[j, v]`` is its truth table on the encoded local values
    v = sum_t x_{adjc[j, t]} s^(q-1-t). The four index maps are tabulated:
    AdjLocC(j, t) = adjc[j, t], AdjGloC(j, i) = t, AdjLocV(i, t) = t-th
    constraint (in increasing order) querying i, AdjGloV(i, j) = its position.
    """

    def __init__(self, N: int, adjc, predicates, s: int = 2):
        A = np.asarray(adjc, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] < 1:
            raise ValueError("adjc must be an (R, q) table")
        self.N, self.s = int(N), int(s)
        self.q = int(A.shape[1])
        if A.min() < 0 or A.max() >= self.N:
            raise ValueError("constraint queries a variable outside [N]")
        if any(len(set(row)) != self.q for row in A.tolist()):
            raise ValueError("a constraint queries the same variable twice")
        P = np.asarray(predicates).astype(bool)
        if P.shape != (A.shape[0], self.s ** self.q):
            raise ValueError(f"predicates must have shape {(A.shape[0], self.s ** self.q)}")
        A.setflags(write=False)
        P.setflags(write=False)
        self.adjc, self.predicates = A, P
        R = self.R
        self.adj_v = [[j for j in range(R) if i in A[j]] for i in range(self.N)]
        self.glo_c = np.full((R, self.N), -1, dtype=np.int64)
        for j in range(R):
            self.glo_c[j, A[j]] = np.arange(self.q)
        width = max(1, max(len(a) for a in self.adj_v))
        self.loc_v = np.full((self.N, width), -1, dtype=np.int64)
        self.glo_v = np.full((self.N, R), -1, dtype=np.int64)
        for i, js in enumerate(self.adj_v):
            self.loc_v[i, :len(js)] = js
            self.glo_v[i, js] = np.arange(len(js))
        degs = sorted({len(a) for a in self.adj_v})
        self.tau = np.array([degs.index(len(a)) for a in self.adj_v], dtype=np.int64)
        self.class_degrees = degs

    @property
    def R(self) -> int:
        return int(self.adjc.shape[0])

    @property
    def alphabet(self) -> int:
        """Size of the local value register, s^q."""
        return self.s ** self.q

    # index maps
    def adj_loc_c(self, j: int, t: int) -> int:
        return int(self.adjc[j, t])

    def adj_glo_c(self, j: int, i: int) -> int:
        t = int(self.glo_c[j, i])
        if t < 0:
            raise KeyError(f"constraint {j} does not query variable {i}")
        return t

    def adj_loc_v(self, i: int, t: int) -> int:
        if not 0 <= t < len(self.adj_v[i]):
            raise KeyError(f"variable {i} has no incidence {t}")
        return int(self.loc_v[i, t])

    def adj_glo_v(self, i: int, j: int) -> int:
        t = int(self.glo_v[i, j])
        if t < 0:
            raise KeyError(f"variable {i} is not queried by constraint {j}")
        return t

    def degree(self, i: int) -> int:
        return len(self.adj_v[i])

    def index_maps_consistent(self) -> bool:
        """Both round trips on every incidence, and class-uniform degrees."""
        for j in range(self.R):
            for t in range(self.q):
                i = self.adj_loc_c(j, t)
                if self.adj_glo_c(j, i) != t:
                    return False
                u = self.adj_glo_v(i, j)
                if self.adj_loc_v(i, u) != j:
                    return False
        for i in range(self.N):
            for t in range(self.degree(i)):
                j = self.adj_loc_v(i, t)
                if self.adj_glo_v(i, j) != t or self.adj_loc_c(j, self.adj_glo_c(j, i)) != i:
                    return False
            if self.class_degrees[self.tau[i]] != self.degree(i):
                return False
        return True

    # values
    def encode(self, local_values: Sequence[int]) -> int:
        x = np.asarray(local_values, dtype=np.int64)
        return int(np.sum(x * self.s ** np.arange(self.q - 1, -1, -1)))

    def digits(self, v) -> np.ndarray:
        return _digits(v, self.s, self.q)

    def local_values(self, assignment) -> np.ndarray:
        """Encoded v_j for each constraint, batched over leading axes of ``assignment``."""
        X = np.asarray(assignment, dtype=np.int64)
        loc = X[..., self.adjc]
        return np.sum(loc * self.s ** np.arange(self.q - 1, -1, -1), axis=-1)

    def satisfied_counts(self, X: np.ndarray) -> np.ndarray:
        V = self.local_values(X)
        return self.predicates[np.arange(self.R), V].sum(axis=-1)

    def value(self, assignment) -> float:
        return float(self.satisfied_counts(np.asarray(assignment)) / self.R)

    def exhaustive_value(self, budget: int = 1 << 22) -> tuple[float, tuple[int, ...]]:
        total = self.s ** self.N
        if total > budget:
            raise ValueError("too many assignments for exhaustive evaluation")
        best, arg = -1, None
        for start in range(0, total, 1 << 16):
            X = _all_assignments(self.N, self.s, start, min(total, start + (1 << 16)))
            c = self.satisfied_counts(X)
            t = int(np.argmax(c))
            if c[t] > best:
                best, arg = int(c[t]), tuple(int(x) for x in X[t])
        return best / self.R, arg

    def to_dict(self) -> dict:
        return {"N": self.N, "R": self.R, "q": self.q, "s": self.s,
                "AdjC": self.adjc.tolist(), "predicates": self.predicates.astype(int).tolist(),
                "AdjV": self.adj_v,
                "AdjGloC": [[int(self.glo_c[j, i]) for i in self.adjc[j]] for j in range(self.R)],
                "AdjGloV": [[int(self.glo_v[i, j]) for j in self.adj_v[i]] for i in range(self.N)],
                "tau": self.tau.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "CspToyInstance":
        inst = cls(int(doc["N"]), doc["AdjC"], doc["predicates"], int(doc.get("s", 2)))
        if "AdjV" in doc and [list(a) for a in doc["AdjV"]] != inst.adj_v:
            raise ValueError("AdjV table disagrees with AdjC")
        return inst

    @classmethod
    def from_json(cls, path) -> "CspToyInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self) -> str:
        return f"CspToyInstance(N={self.N}, R={self.R}, q={self.q}, s={self.s})"


def random_csp(N: int, R: int, q: int, seed=None, planted=None, s: int = 2,
               density: float = 0.5) -> CspToyInstance:
    """Random scopes and truth tables; with ``planted`` every predicate accepts it."""
    rng = make_rng(seed)
    adjc = np.array([rng.choice(N, size=q, replace=False) for _ in range(R)])
    P = rng.random((R, s ** q)) < density
    if planted is not None:
        x = np.asarray(planted)
        v = np.sum(x[adjc] * s ** np.arange(q - 1, -1, -1), axis=1)
        P[np.arange(R), v] = True
    return CspToyInstance(N, adjc, P, s)


def parity_csp(N: int, adjc, parities, s: int = 2) -> CspToyInstance:
    """Constraint j accepts local values whose digit sum is congruent to parities[j] mod s."""
    adjc = np.asarray(adjc)
    q = adjc.shape[1]
    sums = _digits(np.arange(s ** q), s, q).sum(axis=1) % s
    P = np.array([sums == (p % s) for p in parities])
    return CspToyInstance(N, adjc, P, s)


# ------------------------------------------------------------ regularization

@dataclass
class RegularizedCsp:
    """Cloud regularization: variable i becomes n_i = |AdjV(i)| copies, one per constraint
    querying it; the first n'_i carry a certified d-regular expander with equality
    constraints and the remaining copies get d self-loops."""

    base: CspToyInstance
    d: int
    sizes: np.ndarray
    covered: np.ndarray
    graphs: list
    certificates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)
        self._jmap = None

    @property
    def num_variables(self) -> int:
        return int(self.offsets[-1])

    @property
    def eta(self) -> float:
        rel = [(n - c) / n for n, c in zip(self.sizes, self.covered) if n > 0]
        return float(max(rel)) if rel else 0.0

    def matching(self, i: int, k: int) -> np.ndarray:
        """k-th matching on the local indices of variable i (identity off the expander)."""
        n, c = int(self.sizes[i]), int(self.covered[i])
        out = np.arange(n)
        if c > 0:
            out[:c] = self.graphs[i].perms[k]
        return out

    def variable_perms(self) -> np.ndarray:
        """(d, N') permutations of the new variables (i, t) -> offsets[i] + t."""
        P = np.tile(np.arange(self.num_variables), (self.d, 1))
        for i in range(self.base.N):
            for k in range(self.d):
                P[k, self.offsets[i]:self.offsets[i + 1]] = self.offsets[i] + self.matching(i, k)
        return P

    def incidence_degrees(self) -> np.ndarray:
        """Constraint incidences per new variable: d from the expander or loops, one original."""
        deg = np.full(self.num_variables, self.d, dtype=np.int64)
        for j in range(self.base.R):
            for i in self.base.adjc[j]:
                deg[self.offsets[i] + self.base.adj_glo_v(int(i), j)] += 1
        return deg

    def jmap(self) -> np.ndarray:
        """J[k, j, i] = constraint j' reached from (j, i) along matching k (j itself when i is
        not queried by j)."""
        if self._jmap is None:
            b = self.base
            J = np.tile(np.arange(b.R)[None, :, None], (self.d, 1, b.N))
            for k in range(self.d):
                for i in range(b.N):
                    m = self.matching(i, k)
                    for j in b.adj_v[i]:
                        J[k, j, i] = b.adj_loc_v(i, int(m[b.adj_glo_v(i, j)]))
            J.setflags(write=False)
            self._jmap = J
        return self._jmap

    # encodings <-> assignments of the new variables
    def assignment_from_encoding(self, V) -> np.ndarray:
        """Batch of encodings (..., R) -> values of the new variables (..., N')."""
        b = self.base
        V = np.asarray(V, dtype=np.int64)
        D = _digits(V, b.s, b.q)
        X = np.zeros(V.shape[:-1] + (self.num_variables,), dtype=np.int64)
        for j in range(b.R):
            for t, i in enumerate(b.adjc[j]):
                X[..., self.offsets[i] + b.adj_glo_v(int(i), j)] = D[..., j, t]
        return X

    def cloned_encoding(self, assignment) -> np.ndarray:
        return self.base.local_values(np.asarray(assignment))

    def unsat_counts(self, V) -> tuple[np.ndarray, np.ndarray]:
        """(unsatisfied predicates, unsatisfied equality edges) per encoding; each undirected
        equality edge counts once and loops never count."""
        b = self.base
        V = np.atleast_2d(np.asarray(V, dtype=np.int64))
        pred = b.R - b.predicates[np.arange(b.R), V].sum(axis=1)
        X = self.assignment_from_encoding(V)
        P = self.variable_perms()
        eq = sum((X != X[:, p]).sum(axis=1) for p in P) // 2
        return pred, eq

    def all_encodings(self, budget: int = 1 << 20) -> np.ndarray:
        b = self.base
        total = b.alphabet ** b.R
        if total > budget:
            raise ValueError("too many encodings for exhaustive enumeration")
        return _digits(np.arange(total), b.alphabet, b.R)

    def unsat_bound_check(self, budget: int = 1 << 20) -> dict:
        """min over all encodings of unsatisfied constraints versus (1 - delta - q eta) R."""
        delta, _ = self.base.exhaustive_value()
        V = self.all_encodings(budget)
        pred, eq = self.unsat_counts(V)
        total = pred + eq
        bound = (1 - delta - self.base.q * self.eta) * self.base.R
        return {"delta": delta, "eta": self.eta, "min_unsat": int(total.min()),
                "bound": bound, "holds": bool(total.min() >= bound - 1e-9),
                "satisfiable": bool(total.min() == 0)}


def csp_regularize(csp: CspToyInstance, d: int, family: ExpanderFamily | None = None,
                   seed: int = 0) -> RegularizedCsp:
    family = ExpanderFamily(d, seed=seed) if family is None else family
    if family.d != d:
        raise ValueError("expander family degree differs from d")
    sizes = np.array([csp.degree(i) for i in range(csp.N)], dtype=np.int64)
    covered = np.array([family.covered_size(int(n)) if n > 0 else 0 for n in sizes],
                       dtype=np.int64)
    graphs, certs = [], {}
    for c in covered:
        if c > 0:
            cert = family.certificate(int(c))
            certs[int(c)] = cert.cheeger
            graphs.append(cert.graph)
        else:
            graphs.append(None)
    return RegularizedCsp(csp, d, sizes, covered, graphs, certs)


# ------------------------------------------------------------ operators

def _psi_block(csp: CspToyInstance, psi) -> np.ndarray:
    return as_labeled(psi, csp.R, csp.alphabet).block


def apply_A(csp: CspToyInstance, psi) -> np.ndarray:
    """|j>|v>|0>|0> -> q^(-1/2) sum_t |j>|v>|AdjC(j)[t]>|digit_t(v)>, shape (R, s^q, N, s)."""
    b = _psi_block(csp, psi)
    out = np.zeros((csp.R, csp.alphabet, csp.N, csp.s), dtype=b.dtype)
    D = csp.digits(np.arange(csp.alphabet))
    vs = np.arange(csp.alphabet)
    for j in range(csp.R):
        for t in range(csp.q):
            out[j, vs, csp.adjc[j, t], D[:, t]] += b[j] / np.sqrt(csp.q)
    return out


def apply_M_k(reg: RegularizedCsp, state: np.ndarray, k: int) -> np.ndarray:
    """|j>|v>|i>|v'> -> |j'>|v>|i>|v'> with j' the neighbour of (i, j) in matching k."""
    b = reg.base
    if state.shape != (b.R, b.alphabet, b.N, b.s):
        raise ValueError("register shape mismatch")
    if not 0 <= k < reg.d:
        raise ValueError(f"matching index {k} outside [0, {reg.d})")
    J = reg.jmap()[k]
    out = np.zeros_like(state)
    for i in range(b.N):
        out[J[:, i], :, i, :] = state[:, :, i, :]
    return out


def apply_B(csp: CspToyInstance, psi) -> np.ndarray:
    """|j>|v>|0> -> |j>|v>|Pred_j(v)>, shape (R, s^q, 2)."""
    b = _psi_block(csp, psi)
    out = np.zeros((csp.R, csp.alphabet, 2), dtype=b.dtype)
    P = csp.predicates.astype(np.int64)
    out[np.arange(csp.R)[:, None], np.arange(csp.alphabet)[None, :], P] = b
    return out


def mu_vector(csp: CspToyInstance) -> np.ndarray:
    return np.full(csp.alphabet, csp.alphabet ** -0.5)


def _project_mu(csp: CspToyInstance, state: np.ndarray) -> np.ndarray:
    return np.einsum("jvix,v->jix", state, mu_vector(csp))


@dataclass
class ConstraintsPair:
    keep_consistency: np.ndarray
    accept_consistency: np.ndarray
    keep_inner: float
    accept_inner: float
    predicate_mass: float
    weights: tuple

    @property
    def keep(self) -> float:
        wc, wi = self.weights
        return float(wc * self.keep_consistency.mean() + wi * self.keep_inner)

    @property
    def accept(self) -> float:
        """P(pair kept and accepted)."""
        wc, wi = self.weights
        return float(wc * self.accept_consistency.mean() + wi * self.accept_inner)

    @property
    def kept_acceptance(self) -> float:
        return self.accept / self.keep if self.keep > 0 else 1.0


def constraints_pair(reg: RegularizedCsp, psi, phi, inner_keep: float | None = None) -> ConstraintsPair:
    """Branch probabilities for one pair: per matching k, P(both measurements give mu) and
    P(kept and swap accepts); inner branch keep and accept."""
    b = reg.base
    inner_keep = b.alphabet ** -2.0 if inner_keep is None else inner_keep
    Apsi = apply_A(b, psi)
    Aphi = apply_A(b, phi)
    x = _project_mu(b, Apsi)
    px = float(np.sum(np.abs(x) ** 2))
    keep, acc = np.zeros(reg.d), np.zeros(reg.d)
    for k in range(reg.d):
        y = _project_mu(b, apply_M_k(reg, Aphi, k))
        py = float(np.sum(np.abs(y) ** 2))
        keep[k] = px * py
        if keep[k] > 0:
            ov = np.sum(np.conj(x) * y)
            acc[k] = 0.5 * keep[k] + 0.5 * np.abs(ov) ** 2
    blk = _psi_block(b, psi)
    mass = float(np.sum(np.abs(blk) ** 2 * b.predicates))
    wc = 2 * reg.d / (2 * reg.d + 1)
    return ConstraintsPair(keep, acc, inner_keep, inner_keep * mass, mass, (wc, 1 - wc))


def valid_encoding_kept_acceptance(reg: RegularizedCsp, VA, VB=None, chunk: int = 256) -> np.ndarray:
    """Kept-pair acceptance for valid encodings with the default inner keep s^-2q.

    For valid encodings both mu outcomes occur with probability s^-q, so both
    branches keep with probability s^-2q and the kept acceptance is
    w_c E_k[1/2 + o_k^2/2] + w_i pred(psi), where o_k is the fraction of new
    variables x with psi's value at M_k(x) equal to phi's value at x. Returns a
    matrix over (VA, VB), or the diagonal (psi = phi) when VB is None.
    """
    b = reg.base
    VA = np.atleast_2d(np.asarray(VA, dtype=np.int64))
    XA = reg.assignment_from_encoding(VA)
    pred = b.predicates[np.arange(b.R), VA].mean(axis=1)
    P = reg.variable_perms()
    wc = 2 * reg.d / (2 * reg.d + 1)
    if VB is None:
        sw = np.mean([0.5 + 0.5 * np.mean(XA[:, p] == XA, axis=1) ** 2 for p in P], axis=0)
        return wc * sw + (1 - wc) * pred
    XB = reg.assignment_from_encoding(np.atleast_2d(np.asarray(VB, dtype=np.int64)))
    out = np.empty((len(XA), len(XB)))
    for s0 in range(0, len(XA), chunk):
        xa = XA[s0:s0 + chunk]
        sw = np.zeros((len(xa), len(XB)))
        for p in P:
            o = np.mean(xa[:, None, p] == XB[None, :, :], axis=2)
            sw += 0.5 + 0.5 * o ** 2
        out[s0:s0 + chunk] = wc * sw / len(P) + (1 - wc) * pred[s0:s0 + chunk, None]
    return out


def csp_theta(delta: float, d: int) -> float:
    return 1 - (1 - delta) / (4 * (2 * d + 1))


@dataclass
class ConstraintsOutcome:
    keep: np.ndarray
    accept: np.ndarray
    kept_acceptance: float
    keep_probability: float
    verdict: bool
    theta: float
    verdict_probability: float | None = None
    acceptance: float | None = None
    mode: str = "exact"
    draws: np.ndarray | None = None


def _kept_fraction_tail(keep: np.ndarray, acc: np.ndarray, theta: float) -> float:
    """P(no pair kept, or accepted/kept > theta) for independent pairs."""
    k = len(keep)
    dist = np.zeros((k + 1, k + 1))
    dist[0, 0] = 1.0
    for kp, ap in zip(keep, acc):
        new = dist * (1 - kp)
        new[1:, 1:] += dist[:-1, :-1] * ap
        new[1:, :] += dist[:-1, :] * (kp - ap)
        dist = new
    K, A = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    ok = (K == 0) | (A > theta * K + 1e-12)
    return float(dist[ok].sum())


def constraints_test(Psi0: TiltedFamily, Psi1: TiltedFamily, reg: RegularizedCsp, theta: float,
                     mode: TestMode = EXACT, inner_keep: float | None = None) -> ConstraintsOutcome:
    """Pair members; each pair takes the consistency check w.p. 2d/(2d+1), else the inner
    test; accept iff more than a theta fraction of kept pairs accept (vacuous if none)."""
    if Psi0.k != Psi1.k:
        raise ValueError("constraints test needs equally sized halves")
    pairs = [constraints_pair(reg, a, b, inner_keep) for a, b in zip(Psi0.states, Psi1.states)]
    keep = np.array([p.keep for p in pairs])
    acc = np.array([p.accept for p in pairs])
    kept_acc = float(acc.sum() / keep.sum()) if keep.sum() > 0 else 1.0
    if mode.is_exact:
        verdict = kept_acc > theta + 1e-12
        return ConstraintsOutcome(keep, acc, kept_acc, float(keep.mean()), verdict, theta,
                                  _kept_fraction_tail(keep, acc, theta), float(verdict), "exact")
    rng = mode.rng()
    t, k = mode.trials, len(pairs)
    d = reg.d
    wc = 2 * d / (2 * d + 1)
    consistency = rng.random((t, k)) < wc
    kk = rng.integers(d, size=(t, k))
    u1, u2, u3 = rng.random((3, t, k))
    kept = np.zeros((t, k), dtype=bool)
    passed = np.zeros((t, k), dtype=bool)
    for m, p in enumerate(pairs):
        c = consistency[:, m]
        # consistency branch: both mu outcomes (probability px * py), then the swap test
        pk = p.keep_consistency[kk[:, m]]
        swap = np.divide(p.accept_consistency[kk[:, m]], pk, out=np.zeros(t), where=pk > 0)
        kept_c = u1[:, m] < pk
        kept_i = u1[:, m] < p.keep_inner
        kept[:, m] = np.where(c, kept_c, kept_i)
        inner_acc = u2[:, m] < p.predicate_mass
        passed[:, m] = kept[:, m] & np.where(c, u3[:, m] < swap, inner_acc)
    nk = kept.sum(axis=1)
    na = passed.sum(axis=1)
    ok = (nk == 0) | (na > theta * nk + 1e-12)
    frac = float(na.sum() / nk.sum()) if nk.sum() else 1.0
    return ConstraintsOutcome(keep, acc, frac, float(kept.mean()), bool(ok.mean() > 0.5), theta,
                              None, float(ok.mean()), "monte_carlo", ok)


# ------------------------------------------------------------ protocol

@dataclass(frozen=True)
class CspProtocolConfig:
    delta: float
    eps: float = 1e-4
    k: int = 4
    theta: float | None = None
    nu: float | None = None
    validity_d: float | None = None
    inner_keep: float | None = None
    check_prime_sizes: bool = False

    def theta_for(self, d: int) -> float:
        return self.theta if self.theta is not None else csp_theta(self.delta, d)

    def nu_for(self, alphabet: int) -> float:
        return self.nu if self.nu is not None else self.eps ** (1 / 24) * alphabet ** (1 / 3)

    def d_for(self, alphabet: int) -> float:
        return self.validity_d if self.validity_d is not None else self.nu_for(alphabet)

    def to_dict(self, d: int | None = None, alphabet: int | None = None) -> dict:
        out = {"delta": self.delta, "eps": self.eps, "k": self.k,
               "inner_keep": self.inner_keep, "check_prime_sizes": self.check_prime_sizes}
        if d is not None:
            out["theta"] = self.theta_for(d)
        if alphabet is not None:
            out.update(nu=self.nu_for(alphabet), validity_d=self.d_for(alphabet))
        return out


def prime_size_window(n: int) -> tuple[int, int]:
    c = int(round(n ** (1 / 3)))
    while c ** 3 > n:
        c -= 1
    while (c + 1) ** 3 <= n:
        c += 1
    return c - 4 * int(math.floor(c ** (2 / 3) + 1e-12)), c


def prime_check(reg: RegularizedCsp, primes, sizes: bool = False) -> bool:
    """No primes means no Lubotzky path was taken; otherwise one prime per degree class,
    optionally inside the window [c - 4 c^(2/3), c] with c = floor(n_i^(1/3))."""
    if primes is None:
        return True
    primes = [int(p) for p in primes]
    if len(primes) != len(reg.base.class_degrees):
        return False
    if not all(is_prime(p) for p in primes):
        return False
    if sizes:
        for p, n in zip(primes, reg.base.class_degrees):
            lo, hi = prime_size_window(n)
            if not lo <= p <= hi:
                return False
    return True


def csp_honest_proofs(reg: RegularizedCsp, assignment, k: int = 4):
    """2k copies of (1/sqrt R) sum_j |j>|v_j> and 2k copies of the complement-value state."""
    b = reg.base
    V = reg.cloned_encoding(assignment)
    S = b.alphabet
    psi = np.zeros((b.R, S))
    psi[np.arange(b.R), V] = 1 / math.sqrt(b.R)
    phi = np.full((b.R, S), 1 / math.sqrt(b.R * (S - 1)))
    phi[np.arange(b.R), V] = 0.0
    return (TiltedFamily.copies(LabeledState(b.R, S, psi), 2 * k),
            TiltedFamily.copies(LabeledState(b.R, S, phi), 2 * k))


def encoding_state(csp: CspToyInstance, V) -> LabeledState:
    psi = np.zeros((csp.R, csp.alphabet))
    psi[np.arange(csp.R), np.asarray(V)] = 1 / math.sqrt(csp.R)
    return LabeledState(csp.R, csp.alphabet, psi)


def csp_protocol(reg: RegularizedCsp, Psi: TiltedFamily, Phi: TiltedFamily, primes=None,
                 config: CspProtocolConfig | None = None, mode: TestMode = EXACT) -> ProtocolOutcome:
    """Uniform menu over the prime check, symmetry (Psi and Phi), sparsity II with target
    s^-q, validity on Psi and the constraints test on the halves of Psi. A failed prime
    check rejects outright."""
    config = CspProtocolConfig(0.0) if config is None else config
    b = reg.base
    S = b.alphabet
    if Psi.k != Phi.k or Psi.k % 2 or Psi.dim != b.R * S or Phi.dim != Psi.dim:
        raise ValueError("proof families must be equal, even-sized and of dimension R s^q")
    theta = config.theta_for(reg.d)
    dval = config.d_for(S)
    P0, P1 = Psi.halves()
    primes_ok = prime_check(reg, primes, config.check_prime_sizes)
    info = {"config": config.to_dict(reg.d, S), "primes_ok": primes_ok}
    if mode.is_exact:
        sym = symmetry_test(Psi).acceptance * symmetry_test(Phi).acceptance
        sp = sparsity_test_II(Psi, Phi, S ** -1.0, config.eps)
        va = validity_test(Psi, b.R, S, dval)
        ct = constraints_test(P0, P1, reg, theta, inner_keep=config.inner_keep)
        info.update(sparsity=sp.to_dict(), validity_alpha=va.alpha,
                    kept_acceptance=ct.kept_acceptance, keep_probability=ct.keep_probability)
        g = 1.0 if primes_ok else 0.0
        return exact_outcome(
            "csp",
            {"primes": g, "symmetry": sym, "sparsity": float(sp.accept),
             "validity": float(va.accept), "constraints": float(ct.verdict)},
            {"primes": g, "symmetry": sym, "sparsity": sp.verdict_probability,
             "validity": va.verdict_probability, "constraints": ct.verdict_probability},
            info, gate=g)

    def sym_draws(m):
        s1, s2 = spawn_seeds(m.seed, 2)
        return (symmetry_test(Psi, TestMode.monte_carlo(s1, m.trials)).draws
                & symmetry_test(Phi, TestMode.monte_carlo(s2, m.trials)).draws)

    entries = {
        "primes": lambda m: np.full(m.trials, primes_ok),
        "symmetry": sym_draws,
        "sparsity": lambda m: sparsity_test_II(Psi, Phi, S ** -1.0, config.eps, m).draws,
        "validity": lambda m: validity_test(Psi, b.R, S, dval, m).draws,
        "constraints": lambda m: constraints_test(P0, P1, reg, theta, m,
                                                  config.inner_keep).draws,
    }
    return monte_carlo_menu("csp", entries, mode, info, gate=primes_ok)
