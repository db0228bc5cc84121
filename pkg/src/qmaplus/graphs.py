"""Regular multigraphs as sums of permutations, expansion analysis, SSE instances
and the sparse quadratic-form machinery (flat bounds, dyadic rounding).

Conventions: a self-loop adds 1 to its vertex's row sum, and the internal mass
of a set S is sum_{x,y in S} A_xy, so an internal edge between distinct vertices
is counted twice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .qstate import make_rng

EXHAUSTIVE_MAX_N = 20


class RegularGraph:
    """d-regular multigraph on [n] stored as d permutations; A = sum_r P_r with A[i, pi_r(i)] += 1."""

    def __init__(self, perms: Sequence[Sequence[int]], n: int | None = None):
        arr = np.array([list(p) for p in perms], dtype=np.int64)
        if arr.ndim != 2:
            if n is None or len(perms) != 0:
                raise ValueError("permutations must share one length")
            arr = np.zeros((0, n), dtype=np.int64)
        self.n = int(arr.shape[1] if n is None else n)
        if arr.shape[1] != self.n:
            raise ValueError("permutation length differs from n")
        for p in arr:
            if sorted(p.tolist()) != list(range(self.n)):
                raise ValueError("entry is not a permutation of range(n)")
        arr.setflags(write=False)
        self.perms = arr
        self._adj = None

    @property
    def d(self) -> int:
        return int(self.perms.shape[0])

    def adjacency(self) -> np.ndarray:
        if self._adj is None:
            A = np.zeros((self.n, self.n), dtype=np.int64)
            for p in self.perms:
                np.add.at(A, (np.arange(self.n), p), 1)
            A.setflags(write=False)
            self._adj = A
        return self._adj

    def permutation_matrix(self, r: int) -> np.ndarray:
        """Matrix sending basis vector e_i to e_{pi_r(i)} (the transpose of the summand of A)."""
        P = np.zeros((self.n, self.n))
        P[self.perms[r], np.arange(self.n)] = 1.0
        return P

    def is_undirected(self) -> bool:
        A = self.adjacency()
        return bool(np.array_equal(A, A.T))

    def closed_under_inverse(self) -> bool:
        inv = sorted(tuple(np.argsort(p)) for p in self.perms)
        return inv == sorted(tuple(p) for p in self.perms)

    def occurrence_pairing(self) -> np.ndarray:
        """For each directed occurrence (r, i) the paired reverse occurrence (r', pi_r(i)).

        Returns an array ``pair[r, i] = r'`` with ``pi_{r'}(pi_r(i)) = i``; the pairing is an
        involution on occurrences. Loop occurrences are paired with themselves.
        """
        if not self.is_undirected():
            raise ValueError("pairing needs a symmetric adjacency matrix")
        buckets: dict[tuple[int, int], list[int]] = {}
        for r, p in enumerate(self.perms):
            for i, j in enumerate(p):
                buckets.setdefault((i, int(j)), []).append(r)
        pair = np.full((self.d, self.n), -1, dtype=np.int64)
        for (i, j), rs in buckets.items():
            if i == j:
                for r in rs:
                    pair[r, i] = r
            elif i < j:
                back = buckets[(j, i)]
                for r, rb in zip(rs, back):
                    pair[r, i] = rb
                    pair[rb, j] = r
        return pair

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d}"]
        lines += [" ".join(str(int(v)) for v in p) for p in self.perms]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RegularGraph":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        n, d = int(rows[0][0]), int(rows[0][1])
        perms = [[int(v) for v in r] for r in rows[1:]]
        if len(perms) != d:
            raise ValueError(f"header says d={d} but found {len(perms)} permutations")
        return cls(perms, n=n)

    def __repr__(self) -> str:
        return f"RegularGraph(n={self.n}, d={self.d})"


def _as_set(S: Iterable[int], n: int) -> np.ndarray:
    idx = np.unique(np.asarray(list(S), dtype=np.int64))
    if idx.size == 0:
        raise ValueError("vertex set must be non-empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError("vertex out of range")
    return idx


def internal_mass(G: RegularGraph, S) -> int:
    idx = _as_set(S, G.n)
    return int(G.adjacency()[np.ix_(idx, idx)].sum())


def expansion(G: RegularGraph, S) -> float:
    """|E(S, V \\ S)| / (d |S|)."""
    idx = _as_set(S, G.n)
    A = G.adjacency()
    mask = np.zeros(G.n, dtype=bool)
    mask[idx] = True
    cut = A[np.ix_(mask, ~mask)].sum()
    return float(cut / (G.d * idx.size))


# ------------------------------------------------------ decomposition

def _perfect_matching(support: np.ndarray) -> list[int]:
    """Augmenting-path perfect matching of rows to columns, lowest index first."""
    n = support.shape[0]
    match_col = [-1] * n
    nbrs = [np.flatnonzero(support[i]).tolist() for i in range(n)]

    def augment(i: int, seen: list[bool]) -> bool:
        for j in nbrs[i]:
            if not seen[j]:
                seen[j] = True
                if match_col[j] == -1 or augment(match_col[j], seen):
                    match_col[j] = i
                    return True
        return False

    for i in range(n):
        if not augment(i, [False] * n):
            raise ValueError("no perfect matching; matrix is not a regular multigraph")
    row_to_col = [0] * n
    for j, i in enumerate(match_col):
        row_to_col[i] = j
    return row_to_col


def decompose_into_permutations(A) -> RegularGraph:
    """Split a non-negative integer matrix with all row and column sums d into d permutations."""
    M = np.array(A, dtype=np.int64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("adjacency must be square")
    if np.any(M < 0):
        raise ValueError("adjacency has negative entries")
    rows, cols = M.sum(axis=1), M.sum(axis=0)
    if len(set(rows.tolist()) | set(cols.tolist())) != 1:
        raise ValueError("adjacency is not regular")
    d = int(rows[0]) if M.size else 0
    perms = []
    for _ in range(d):
        p = _perfect_matching(M > 0)
        M[np.arange(M.shape[0]), p] -= 1
        perms.append(p)
    return RegularGraph(perms, n=M.shape[0])


def graph_from_networkx(g: nx.Graph) -> RegularGraph:
    A = nx.to_numpy_array(g, nodelist=sorted(g.nodes()), dtype=np.int64)
    return decompose_into_permutations(A)


def cycle_graph(n: int) -> RegularGraph:
    fwd = [(i + 1) % n for i in range(n)]
    bwd = [(i - 1) % n for i in range(n)]
    return RegularGraph([fwd, bwd])


def complete_graph(n: int) -> RegularGraph:
    return decompose_into_permutations(np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64))


def disjoint_union(*graphs: RegularGraph) -> RegularGraph:
    d = {g.d for g in graphs}
    if len(d) != 1:
        raise ValueError("union needs equal degrees")
    perms = []
    for r in range(graphs[0].d):
        row, off = [], 0
        for g in graphs:
            row += [int(v) + off for v in g.perms[r]]
            off += g.n
        perms.append(row)
    return RegularGraph(perms)


# ------------------------------------------------------ exhaustive scans

def subset_masks(n: int, sizes: Iterable[int]) -> Iterable[np.ndarray]:
    """Indicator rows of all subsets with the given sizes, yielded in chunks."""
    for s in sizes:
        if s < 1 or s > n:
            continue
        combos = itertools.combinations(range(n), s)
        while True:
            chunk = list(itertools.islice(combos, 65536))
            if not chunk:
                break
            X = np.zeros((len(chunk), n), dtype=np.float64)
            rows = np.repeat(np.arange(len(chunk)), s)
            X[rows, np.array(chunk).reshape(-1)] = 1.0
            yield X


def min_expansion(G: RegularGraph, max_size: int) -> tuple[float, tuple[int, ...] | None]:
    """Minimum of Phi_G(S) over 1 <= |S| <= max_size with a minimizer."""
    A = G.adjacency().astype(np.float64)
    best, arg = math.inf, None
    for X in subset_masks(G.n, range(1, min(max_size, G.n) + 1)):
        size = X.sum(axis=1)
        inner = np.einsum("bi,ij,bj->b", X, A, X)
        phi = 1.0 - inner / (G.d * size)
        t = int(np.argmin(phi))
        if phi[t] < best - 1e-15:
            best, arg = float(phi[t]), tuple(np.flatnonzero(X[t]).tolist())
    return best, arg


@dataclass
class ExpanderCertificate:
    graph: RegularGraph
    cheeger: float
    method: str
    argmin: tuple | None = None

    def to_dict(self) -> dict:
        c = self.cheeger
        return {"n": self.graph.n, "d": self.graph.d, "method": self.method,
                "cheeger": c if math.isfinite(c) else "inf",
                "argmin": list(self.argmin) if self.argmin else None}


def cheeger(G: RegularGraph, method: str = "exhaustive") -> ExpanderCertificate:
    """Cheeger constant min_{|S| <= n/2} |E(S, V \\ S)| / |S|.

    ``exhaustive`` is exact for n <= 20; ``spectral`` returns the lower bound
    (d - lambda_2) / 2 from the second largest adjacency eigenvalue. A single
    vertex has no admissible set and gets +inf.
    """
    n = G.n
    if method == "exhaustive":
        if n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive Cheeger needs n <= {EXHAUSTIVE_MAX_N}")
        if n < 2:
            return ExpanderCertificate(G, math.inf, "exhaustive")
        A = G.adjacency().astype(np.float64)
        deg = A.sum(axis=1)
        best, arg = math.inf, None
        for X in subset_masks(n, range(1, n // 2 + 1)):
            size = X.sum(axis=1)
            cut = X @ deg - np.einsum("bi,ij,bj->b", X, A, X)
            ratio = cut / size
            t = int(np.argmin(ratio))
            if ratio[t] < best:
                best, arg = float(ratio[t]), tuple(np.flatnonzero(X[t]).tolist())
        return ExpanderCertificate(G, best, "exhaustive", arg)
    if method == "spectral":
        if n < 2:
            return ExpanderCertificate(G, math.inf, "spectral")
        A = G.adjacency().astype(np.float64)
        if not np.array_equal(A, A.T):
            raise ValueError("spectral bound needs a symmetric adjacency")
        ev = np.sort(np.linalg.eigvalsh(A))[::-1]
        return ExpanderCertificate(G, float(max(0.0, (G.d - ev[1]) / 2)), "spectral")
    raise ValueError(f"unknown method {method!r}")


# ------------------------------------------------------ expander families

def certified_expander(n: int, d: int, seed: int = 0, min_cheeger: float = 2.0,
                       max_tries: int = 200) -> ExpanderCertificate:
    """A d-regular multigraph on n vertices whose Cheeger constant is certified >= min_cheeger.

    Small n use m copies of K_n padded with self-loops; larger n sample random
    d-regular simple graphs and certify them exhaustively (n <= 20) or spectrally.
    """
    if n == 1:
        G = RegularGraph([[0]] * d)
        return ExpanderCertificate(G, math.inf, "exhaustive")
    m = d // (n - 1)
    if m >= 1 and m * math.ceil(n / 2) >= min_cheeger:
        K = complete_graph(n)
        loops = d - m * (n - 1)
        perms = [p for _ in range(m) for p in K.perms.tolist()] + [list(range(n))] * loops
        G = RegularGraph(perms)
        cert = cheeger(G, "exhaustive" if n <= EXHAUSTIVE_MAX_N else "spectral")
        if cert.cheeger >= min_cheeger:
            return cert
    if (n * d) % 2 or d >= n:
        raise ValueError(f"no certified {d}-regular expander on {n} vertices")
    rng = make_rng(seed)
    method = "exhaustive" if n <= EXHAUSTIVE_MAX_N else "spectral"
    for _ in range(max_tries):
        g = nx.random_regular_graph(d, n, seed=int(rng.integers(2 ** 31)))
        cert = cheeger(graph_from_networkx(g), method)
        if cert.cheeger >= min_cheeger:
            return cert
    raise ValueError(f"failed to certify a {d}-regular expander on {n} vertices")


class ExpanderFamily:
    """Certified d-regular expanders indexed by size, optionally restricted to allowed sizes."""

    def __init__(self, d: int, allowed_sizes: Iterable[int] | None = None, seed: int = 0,
                 min_cheeger: float = 2.0):
        self.d = int(d)
        self.allowed = None if allowed_sizes is None else sorted(set(int(s) for s in allowed_sizes))
        self.seed = seed
        self.min_cheeger = min_cheeger
        self._cache: dict[int, ExpanderCertificate] = {}

    def covered_size(self, n: int) -> int:
        """Largest available expander size not exceeding n (0 if none)."""
        if self.allowed is None:
            return n
        fits = [s for s in self.allowed if s <= n]
        return fits[-1] if fits else 0

    def certificate(self, n: int) -> ExpanderCertificate:
        if n not in self._cache:
            if self.allowed is not None and n not in self.allowed:
                raise ValueError(f"size {n} not offered by this family")
            self._cache[n] = certified_expander(n, self.d, seed=self.seed + n,
                                                min_cheeger=self.min_cheeger)
        cert = self._cache[n]
        if cert.cheeger < self.min_cheeger:
            raise ValueError("uncertified expander")
        return cert

    def graph(self, n: int) -> RegularGraph:
        return self.certificate(n).graph


# ------------------------------------------------------ SSE instances

@dataclass
class SseInstance:
    graph: RegularGraph
    eta: float
    delta: float
    label: str
    witness: tuple | None = None
    min_small_expansion: float | None = None

    def to_dict(self) -> dict:
        return {"n": self.graph.n, "d": self.graph.d, "eta": self.eta, "delta": self.delta,
                "label": self.label, "witness": list(self.witness) if self.witness else None,
                "min_small_expansion": self.min_small_expansion}


def _random_regular_perms(n: int, d: int, rng: np.random.Generator) -> list[list[int]]:
    if d == 0:
        return []
    if d >= n or (n * d) % 2:
        raise ValueError(f"no simple {d}-regular graph on {n} vertices")
    g = nx.random_regular_graph(d, n, seed=int(rng.integers(2 ** 31)))
    return graph_from_networkx(g).perms.tolist()


def planted_sse_yes(n: int, d: int, delta: float, eta: float, seed: int = 0) -> SseInstance:
    """Two (d-1)-regular blocks on S (|S| = floor(delta n)) and its complement plus one
    perfect matching whose crossing pairs number c <= eta d |S|.

    Feasible when |S| > d - 1, n - |S| > d - 1, both block sizes times d - 1 are even
    and n is even (so the matching can be completed inside the blocks).
    """
    s = int(math.floor(delta * n + 1e-12))
    t = n - s
    if s < 1 or t < 1 or n % 2:
        raise ValueError("infeasible parameters: need 1 <= delta n < n and n even")
    rng = make_rng(seed)
    ps = _random_regular_perms(s, d - 1, rng)
    pt = _random_regular_perms(t, d - 1, rng)
    perms = [list(a) + [s + v for v in b] for a, b in zip(ps, pt)]
    c = min(s, t, int(math.floor(eta * d * s + 1e-12)))
    if (s - c) % 2:
        c -= 1
    if c < 0:
        raise ValueError("infeasible parameters")
    S_side = rng.permutation(s).tolist()
    T_side = (s + rng.permutation(t)).tolist()
    match = list(range(n))
    for a, b in zip(S_side[:c], T_side[:c]):
        match[a], match[b] = b, a
    for rest in (S_side[c:], T_side[c:]):
        for a, b in zip(rest[0::2], rest[1::2]):
            match[a], match[b] = b, a
    G = RegularGraph(perms + [match])
    S = tuple(range(s))
    phi = expansion(G, S)
    if phi > eta + 1e-12:
        raise AssertionError("planted witness expands too much")
    return SseInstance(G, eta, delta, "yes", S)


def planted_sse_no(n: int, d: int, delta: float, eta: float, seed: int = 0,
                   max_tries: int = 200, budget: int = 2_000_000) -> SseInstance:
    """Random d-regular simple graph verified to have Phi(S) >= 1 - eta for all |S| <= delta n."""
    s = int(math.floor(delta * n + 1e-12))
    count = sum(math.comb(n, r) for r in range(1, s + 1))
    if count > budget:
        raise ValueError("small-set check exceeds the exhaustive budget")
    rng = make_rng(seed)
    for _ in range(max_tries):
        G = RegularGraph(_random_regular_perms(n, d, rng))
        m, _ = min_expansion(G, s)
        if m >= 1 - eta - 1e-12:
            return SseInstance(G, eta, delta, "no", None, m)
    raise ValueError("infeasible parameters: no verified small-set expander found")


def classify_sse(G: RegularGraph, eta: float, delta: float) -> SseInstance:
    s = int(math.floor(delta * G.n + 1e-12))
    m, arg = min_expansion(G, s)
    if m <= eta + 1e-12:
        return SseInstance(G, eta, delta, "yes", arg, m)
    if m >= 1 - eta - 1e-12:
        return SseInstance(G, eta, delta, "no", None, m)
    return SseInstance(G, eta, delta, "unknown", None, m)


def sse_fact_holds(G: RegularGraph, eta: float, delta: float, c: float) -> bool:
    """Check that an (eta, delta) small-set expander is also ((c+1) eta, (1 + c eta) delta)."""
    s = int(math.floor((1 + c * eta) * delta * G.n + 1e-12))
    m, _ = min_expansion(G, s)
    return m >= 1 - (c + 1) * eta - 1e-12


# ------------------------------------------------------ analytic SSE

@dataclass
class AnalyticSseResult:
    value: float
    attained_by: str
    components: dict = field(default_factory=dict)


def dyadic_vectors(n: int, max_support: int, levels: int, min_support: int = 1):
    """Chunks of all vectors with entries in {0} U {+-2^-i : 1 <= i <= levels} and bounded support."""
    mags = np.array([2.0 ** -i for i in range(1, levels + 1)])
    vals = np.concatenate([mags, -mags])
    for s in range(max(1, min_support), min(max_support, n) + 1):
        patterns = np.array(list(itertools.product(vals, repeat=s)))
        for X in subset_masks(n, [s]):
            supp = np.nonzero(X)[1].reshape(len(X), s)
            for start in range(0, len(patterns), max(1, 65536 // max(1, len(X)))):
                pat = patterns[start:start + max(1, 65536 // max(1, len(X)))]
                out = np.zeros((len(X), len(pat), n))
                rows = np.arange(len(X))[:, None, None]
                cols = supp[:, None, :]
                mids = np.arange(len(pat))[None, :, None]
                out[rows, mids, cols] = pat[None, :, :]
                yield out.reshape(-1, n)


def dyadic_count(n: int, max_support: int, levels: int) -> int:
    return sum(math.comb(n, s) * (2 * levels) ** s for s in range(1, min(max_support, n) + 1))


def analytic_sse_max(G: RegularGraph, delta: float, oracle_budget: int = 2_000_000, *,
                     restarts: int = 200, iterations: int = 500, step: float = 0.1,
                     seed: int = 0, max_levels: int = 4) -> AnalyticSseResult:
    """Estimate max |<Av, v>| / d over unit v with |supp v| <= delta n.

    Three estimators run when their budget allows: exhaustive dyadic vectors
    (n <= 10), projected power-iteration ascent with support truncation, and an
    exact scan of principal submatrices (by interlacing it suffices to take
    supports of size exactly floor(delta n)). The largest value wins.
    """
    n, d = G.n, G.d
    s = min(n, int(math.floor(delta * n + 1e-12)))
    if s < 1:
        return AnalyticSseResult(0.0, "empty", {})
    B = G.adjacency().astype(np.float64) / d
    B = 0.5 * (B + B.T)
    comps: dict[str, float] = {}

    if n <= 10:
        levels = max_levels
        while levels > 1 and dyadic_count(n, s, levels) > oracle_budget:
            levels -= 1
        if dyadic_count(n, s, levels) <= oracle_budget:
            best = 0.0
            for V in dyadic_vectors(n, s, levels):
                q = np.abs(np.einsum("bi,ij,bj->b", V, B, V)) / np.sum(V * V, axis=1)
                best = max(best, float(q.max()))
            comps["dyadic"] = best

    rng = make_rng(seed)
    best = 0.0
    for sign in (1.0, -1.0):
        M = sign * B
        V = rng.normal(size=(restarts, n))
        for _ in range(iterations):
            V = V + step * (V @ M)
            if s < n:
                cut = np.argpartition(-np.abs(V), s - 1, axis=1)[:, s:]
                np.put_along_axis(V, cut, 0.0, axis=1)
            V /= np.linalg.norm(V, axis=1, keepdims=True)
            best = max(best, float(np.max(np.abs(np.einsum("bi,ij,bj->b", V, B, V)))))
    comps["ascent"] = best

    if math.comb(n, s) <= oracle_budget // max(1, s):
        best = 0.0
        combos = itertools.combinations(range(n), s)
        while True:
            chunk = np.array(list(itertools.islice(combos, 8192)))
            if chunk.size == 0:
                break
            sub = B[chunk[:, :, None], chunk[:, None, :]]
            ev = np.linalg.eigvalsh(sub)
            best = max(best, float(np.max(np.abs(ev))))
        comps["principal_exact"] = best

    key = max(comps, key=lambda k: (comps[k], k == "principal_exact"))
    return AnalyticSseResult(comps[key], key, comps)


# ------------------------------------------------------ flat bounds

def _row_degree(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=1)))


def flat_bound_check(A, S, T, alpha: float, d: float | None = None) -> bool:
    """<A 1_S, 1_T> <= alpha d sqrt(|S||T|) for disjoint S, T."""
    A = np.asarray(A)
    S, T = list(S), list(T)
    if set(S) & set(T):
        raise ValueError("S and T must be disjoint")
    if not S or not T:
        return True
    d = _row_degree(A) if d is None else d
    lhs = A[np.ix_(S, T)].sum()
    return bool(lhs <= alpha * d * math.sqrt(len(S) * len(T)) + 1e-12)


def flat_alpha(A, max_union: int, d: float | None = None) -> tuple[float, tuple | None]:
    """Smallest alpha for which every disjoint S, T with |S|+|T| <= max_union obeys the flat bound."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    d = _row_degree(A) if d is None else d
    best, arg = 0.0, None
    for size in range(2, min(max_union, n) + 1):
        for U in itertools.combinations(range(n), size):
            U = list(U)
            sub = A[np.ix_(U, U)]
            # every split of U into non-empty S (containing U[0] or not) and T
            for mask in range(1, 2 ** size - 1):
                sel = np.array([(mask >> b) & 1 for b in range(size)], dtype=bool)
                val = sub[np.ix_(sel, ~sel)].sum() / (d * math.sqrt(sel.sum() * (~sel).sum()))
                if val > best:
                    best = float(val)
                    arg = (tuple(np.array(U)[sel].tolist()), tuple(np.array(U)[~sel].tolist()))
    return best, arg


# ------------------------------------------------------ dyadic rounding

def dyadic_round(u, seed=None) -> np.ndarray:
    """Randomized rounding to signed powers of two with E[u'] = u.

    Each nonzero u_i = (1 - 2 eta_i) sgn(u_i) 2^ceil(log2 |u_i|) with eta_i in [0, 1/4];
    the magnitude is kept and the sign flipped with probability eta_i.
    """
    x = np.asarray(u, dtype=np.float64)
    if np.max(np.abs(x), initial=0.0) > 0.5 + 1e-15:
        raise ValueError("rounding needs ||u||_inf <= 1/2; rescale first")
    rng = make_rng(seed)
    out = np.zeros_like(x)
    nz = x != 0
    mag = 2.0 ** np.ceil(np.log2(np.abs(x[nz])))
    eta = 0.5 * (1.0 - np.abs(x[nz]) / mag)
    flip = rng.random(eta.size) < eta
    out[nz] = np.sign(x[nz]) * mag * np.where(flip, -1.0, 1.0)
    return out


# ------------------------------------------------------ quadratic form audit

@dataclass
class QuadraticAuditReport:
    alpha: float
    d: float
    max_ratio: float
    argmax: list | None
    same_set_holds: bool
    same_set_max_ratio: float
    vectors_checked: int
    constant: float = 12.0

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.constant + 1e-9 and self.same_set_holds

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "d": self.d, "max_ratio": self.max_ratio,
                "same_set_holds": self.same_set_holds,
                "same_set_max_ratio": self.same_set_max_ratio,
                "vectors_checked": self.vectors_checked, "passed": self.passed}


def quadratic_form_bound_audit(A, delta: float, alpha: float, levels: int = 3,
                               d: float | None = None) -> QuadraticAuditReport:
    """Exhaustive check of <Au, u> <= 12 alpha (log2(1/alpha) + 1) d ||u||^2 on sparse dyadic u,
    plus the same-set bound <A 1_R, 1_R> <= 2 alpha d |R| for |R| <= delta n.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if not np.allclose(A, A.T):
        raise ValueError("A must be symmetric")
    if np.any(A < 0):
        raise ValueError("A must be entrywise non-negative")
    if np.any(np.diag(A) != 0):
        raise ValueError("A must have zero diagonal")
    d = _row_degree(A) if d is None else d
    if _row_degree(A) > d + 1e-12:
        raise ValueError("row sums exceed d")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    s = min(n, int(math.floor(delta * n + 1e-12)))
    scale = alpha * (math.log2(1 / alpha) + 1) * d
    best, arg, count = 0.0, None, 0
    for V in dyadic_vectors(n, s, levels):
        q = np.einsum("bi,ij,bj->b", V, A, V) / (scale * np.sum(V * V, axis=1))
        count += len(V)
        t = int(np.argmax(q))
        if q[t] > best:
            best, arg = float(q[t]), V[t].tolist()
    same_max = 0.0
    for X in subset_masks(n, range(1, s + 1)):
        lhs = np.einsum("bi,ij,bj->b", X, A, X)
        same_max = max(same_max, float(np.max(lhs / (2 * alpha * d * X.sum(axis=1)))))
    return QuadraticAuditReport(alpha, d, best, arg, same_max <= 1 + 1e-12, same_max, count)
