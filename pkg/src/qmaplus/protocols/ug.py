"""Unique Games: instances, the labeling test, the protocol, and regularization by clouds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..graphs import ExpanderFamily, RegularGraph, complete_graph
from ..proptest import (
    EXACT,
    TestMode,
    TiltedFamily,
    sparsity_test_II,
    symmetry_test,
    validity_test,
)
from ..qstate import LabeledState, as_labeled, make_rng, spawn_seeds
from .common import ProtocolOutcome, bernoulli_fraction_tail, exact_outcome, monte_carlo_menu

UG_MENU = ("symmetry", "sparsity", "validity", "labeling")
LABELING_CHUNK = 1 << 16


def _all_labelings(n: int, q: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def _is_bijection(f) -> bool:
    return sorted(int(x) for x in f) == list(range(len(f)))


@dataclass
class UgInstance:
    """Unique game on a d-regular multigraph; ``constraints[r, i]`` maps the label of i to
    the label of pi_r(i)."""

    graph: RegularGraph
    q: int
    constraints: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.constraints, dtype=np.int64)
        G = self.graph
        if C.shape != (G.d, G.n, self.q):
            raise ValueError(f"constraints must have shape {(G.d, G.n, self.q)}")
        if not np.array_equal(np.sort(C, axis=2), np.broadcast_to(np.arange(self.q), C.shape)):
            raise ValueError("every constraint must be a bijection of the labels")
        pair = G.occurrence_pairing()
        inv = np.argsort(C, axis=2)
        back = C[pair, G.perms]
        if not np.array_equal(back, inv):
            raise ValueError("reverse orientation does not carry the inverse constraint")
        C.setflags(write=False)
        self.constraints = C

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d(self) -> int:
        return self.graph.d

    def satisfied(self, labels: Sequence[int]) -> np.ndarray:
        L = np.asarray(labels, dtype=np.int64)
        if L.shape != (self.n,) or L.min() < 0 or L.max() >= self.q:
            raise ValueError("labeling must assign a label in [q] to every vertex")
        f = self.constraints[:, np.arange(self.n), L]
        return f == L[self.graph.perms]

    def value(self, labels: Sequence[int]) -> float:
        """Fraction of satisfied directed edge occurrences."""
        return float(self.satisfied(labels).mean())

    def labeling_values(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.q ** self.n if stop is None else stop
        L = _all_labelings(self.n, self.q, start, stop)
        sat = np.zeros(len(L), dtype=np.int64)
        cols = np.arange(self.n)
        for r in range(self.d):
            sat += np.sum(self.constraints[r][cols, L] == L[:, self.graph.perms[r]], axis=1)
        return sat / (self.d * self.n)

    def exhaustive_value(self, budget: int = 1 << 24) -> tuple[float, tuple[int, ...]]:
        total = self.q ** self.n
        if total > budget:
            raise ValueError(f"{total} labelings exceed the exhaustive budget")
        best, arg = -1.0, 0
        for s in range(0, total, LABELING_CHUNK):
            v = self.labeling_values(s, min(total, s + LABELING_CHUNK))
            t = int(np.argmax(v))
            if v[t] > best + 1e-15:
                best, arg = float(v[t]), s + t
        return best, tuple(int(x) for x in _all_labelings(self.n, self.q, arg, arg + 1)[0])

    def to_dict(self) -> dict:
        rows = [[r, i, self.constraints[r, i].tolist()]
                for r in range(self.d) for i in range(self.n)]
        return {"n": self.n, "q": self.q, "graph": self.graph.perms.tolist(),
                "constraints": rows}

    @classmethod
    def from_dict(cls, doc: dict, base: Path | None = None) -> "UgInstance":
        g = doc["graph"]
        if isinstance(g, str):
            path = Path(g) if base is None else Path(base) / g
            G = RegularGraph.from_text(path.read_text())
        else:
            G = RegularGraph(g, n=doc.get("n"))
        q = int(doc["q"])
        C = np.full((G.d, G.n, q), -1, dtype=np.int64)
        for r, i, f in doc["constraints"]:
            C[r, i] = f
        if (C < 0).any():
            raise ValueError("constraint table has missing occurrences")
        return cls(G, q, C)

    @classmethod
    def from_json(cls, path) -> "UgInstance":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)


def ug_planted(G: RegularGraph, q: int, labels: Sequence[int], noise: float = 0.0,
               seed=None) -> UgInstance:
    """Random constraints consistent with ``labels`` except on a ``noise`` fraction of
    non-loop edges, whose constraints miss the planted labels."""
    rng = make_rng(seed)
    L = np.asarray(labels, dtype=np.int64)
    pair = G.occurrence_pairing()
    C = np.full((G.d, G.n, q), -1, dtype=np.int64)
    edges = [(r, i) for r in range(G.d) for i in range(G.n)
             if (r, i) <= (int(pair[r, i]), int(G.perms[r, i])) and G.perms[r, i] != i]
    bad = set()
    if noise > 0 and q > 1:
        m = int(round(noise * len(edges)))
        bad = {edges[t] for t in rng.choice(len(edges), size=m, replace=False)}
    for r in range(G.d):
        for i in range(G.n):
            j = int(G.perms[r, i])
            if j == i:
                C[r, i] = np.arange(q)
    for r, i in edges:
        j = int(G.perms[r, i])
        f = rng.permutation(q)
        want = (L[j] + (1 + rng.integers(q - 1) if (r, i) in bad else 0)) % q
        a = int(np.flatnonzero(f == want)[0])
        f[[L[i], a]] = f[[a, L[i]]]
        C[r, i] = f
        C[pair[r, i], j] = np.argsort(f)
    return UgInstance(G, q, C)


def apply_Pi_r(instance: UgInstance, r: int, psi) -> LabeledState:
    """|i>|v> -> |pi_r(i)>|f_{r,i}(v)>."""
    if not 0 <= r < instance.d:
        raise ValueError(f"edge index {r} outside [0, {instance.d})")
    b = as_labeled(psi, instance.n, instance.q).block
    out = np.zeros_like(b)
    out[instance.graph.perms[r][:, None], instance.constraints[r]] = b
    return LabeledState(instance.n, instance.q, out, check=False)


def Pi_matrix(instance: UgInstance, r: int) -> np.ndarray:
    dim = instance.n * instance.q
    M = np.zeros((dim, dim))
    src = np.arange(dim)
    i, v = np.divmod(src, instance.q)
    M[instance.graph.perms[r][i] * instance.q + instance.constraints[r][i, v], src] = 1.0
    return M


@dataclass(frozen=True)
class UgProtocolConfig:
    """Gap (delta, eta), sparsity precision eps, validity precision nu and threshold slack.

    ``nu`` defaults to eps^(1/24) q^(1/3); ``validity_d`` is the slack in the validity
    threshold 1/q + d and defaults to nu.
    """

    delta: float
    eta: float
    eps: float = 1e-4
    k: int = 4
    theta: float | None = None
    nu: float | None = None
    validity_d: float | None = None

    @property
    def theta_value(self) -> float:
        if self.theta is not None:
            return self.theta
        return 0.5 * ((1 + (1 - self.delta) ** 2) / 2 + (1 + self.eta) / 2)

    @property
    def lam(self) -> float:
        return (1 - self.delta) ** 2 / 2 - self.eta / 2

    def nu_for(self, q: int) -> float:
        return self.nu if self.nu is not None else self.eps ** (1 / 24) * q ** (1 / 3)

    def d_for(self, q: int) -> float:
        return self.validity_d if self.validity_d is not None else self.nu_for(q)

    def to_dict(self, q: int | None = None) -> dict:
        out = {"delta": self.delta, "eta": self.eta, "eps": self.eps, "k": self.k,
               "theta": self.theta_value, "lambda": self.lam}
        if q is not None:
            out.update(nu=self.nu_for(q), validity_d=self.d_for(q))
        return out


def ug_honest_proofs(instance: UgInstance, labels: Sequence[int], k: int = 4):
    """2k copies of the labeling state and 2k copies of its complement state."""
    n, q = instance.n, instance.q
    if len(labels) != n:
        raise ValueError("labeling must cover every vertex")
    if q < 2:
        raise ValueError("complement states need q >= 2")
    psi = LabeledState.from_labeling(labels, q)
    comp = np.ones((n, q))
    comp[np.arange(n), np.asarray(labels)] = 0.0
    gamma = LabeledState(n, q, comp.reshape(-1) / np.sqrt(n * (q - 1)))
    return TiltedFamily.copies(psi, 2 * k), TiltedFamily.copies(gamma, 2 * k)


def labeling_overlaps(instance: UgInstance, psi, phi) -> np.ndarray:
    """<Pi_r psi, phi> for every r."""
    a = as_labeled(psi, instance.n, instance.q).block
    b = as_labeled(phi, instance.n, instance.q).block
    G, C = instance.graph, instance.constraints
    return np.array([np.sum(np.conj(a) * b[G.perms[r][:, None], C[r]]) for r in range(G.d)])


def labeling_pair_matrix(instance: UgInstance, Psi0: TiltedFamily, Psi1: TiltedFamily) -> np.ndarray:
    """P[m, r] = acceptance of the m-th pair's swap test under edge index r."""
    if Psi0.k != Psi1.k:
        raise ValueError("labeling test needs equally sized halves")
    return np.array([0.5 + 0.5 * np.abs(labeling_overlaps(instance, a, b)) ** 2
                     for a, b in zip(Psi0.states, Psi1.states)])


@dataclass
class LabelingOutcome:
    per_pair: np.ndarray
    fraction: float
    accept: bool
    theta: float
    verdict_probability: float | None = None
    acceptance: float | None = None
    mode: str = "exact"
    draws: np.ndarray | None = None


def labeling_test(Psi0: TiltedFamily, Psi1: TiltedFamily, instance: UgInstance,
                  config: UgProtocolConfig, mode: TestMode = EXACT) -> LabelingOutcome:
    """Swap-test (Pi_r psi_m, phi_m) with fresh r per pair; accept iff more than theta pass."""
    P = labeling_pair_matrix(instance, Psi0, Psi1)
    theta = config.theta_value
    per = P.mean(axis=1)
    if mode.is_exact:
        frac = float(per.mean())
        acc = frac > theta + 1e-12
        return LabelingOutcome(per, frac, acc, theta, bernoulli_fraction_tail(per, theta),
                               float(acc), "exact")
    rng = mode.rng()
    k = len(per)
    r = rng.integers(instance.d, size=(mode.trials, k))
    passed = rng.random((mode.trials, k)) < P[np.arange(k)[None, :], r]
    fr = passed.mean(axis=1)
    ok = fr > theta + 1e-12
    return LabelingOutcome(per, float(fr.mean()), bool(ok.mean() > 0.5), theta, None,
                           float(ok.mean()), "monte_carlo", ok)


def _check_families(Psi: TiltedFamily, Gamma: TiltedFamily, instance: UgInstance) -> None:
    if Psi.k != Gamma.k or Psi.k % 2:
        raise ValueError("proof families must have equal even size 2k")
    if Psi.dim != instance.n * instance.q or Gamma.dim != Psi.dim:
        raise ValueError("proof dimension must be n * q")


def ug_protocol(instance: UgInstance, Psi: TiltedFamily, Gamma: TiltedFamily,
                config: UgProtocolConfig, mode: TestMode = EXACT) -> ProtocolOutcome:
    """Uniform menu: both symmetry tests, sparsity II (target 1/q), validity, labeling."""
    _check_families(Psi, Gamma, instance)
    n, q = instance.n, instance.q
    d = config.d_for(q)
    P0, P1 = Psi.halves()
    info = {"config": config.to_dict(q)}
    if mode.is_exact:
        sym = symmetry_test(Psi).acceptance * symmetry_test(Gamma).acceptance
        sp = sparsity_test_II(Psi, Gamma, 1 / q, config.eps)
        va = validity_test(Psi, n, q, d)
        lab = labeling_test(P0, P1, instance, config)
        info.update(sparsity=sp.to_dict(), validity_alpha=va.alpha,
                    labeling_per_pair=lab.per_pair.tolist(), labeling_fraction=lab.fraction)
        return exact_outcome(
            "ug",
            {"symmetry": sym, "sparsity": float(sp.accept), "validity": float(va.accept),
             "labeling": float(lab.accept)},
            {"symmetry": sym, "sparsity": sp.verdict_probability,
             "validity": va.verdict_probability, "labeling": lab.verdict_probability}, info)

    def sym_draws(m):
        s1, s2 = spawn_seeds(m.seed, 2)
        return (symmetry_test(Psi, TestMode.monte_carlo(s1, m.trials)).draws
                & symmetry_test(Gamma, TestMode.monte_carlo(s2, m.trials)).draws)

    entries = {
        "symmetry": sym_draws,
        "sparsity": lambda m: sparsity_test_II(Psi, Gamma, 1 / q, config.eps, m).draws,
        "validity": lambda m: validity_test(Psi, n, q, d, m).draws,
        "labeling": lambda m: labeling_test(P0, P1, instance, config, m).draws,
    }
    return monte_carlo_menu("ug", entries, mode, info)


def ug_labeling_sweep(instance: UgInstance, config: UgProtocolConfig,
                      budget: int = 1 << 12) -> dict:
    """Exact protocol acceptance on copies of every valid labeling state (and complements)."""
    total = instance.q ** instance.n
    if total > budget:
        raise ValueError("too many labelings for the sweep")
    best, arg = -1.0, None
    for L in _all_labelings(instance.n, instance.q, 0, total):
        Psi, Gam = ug_honest_proofs(instance, L.tolist(), config.k)
        out = ug_protocol(instance, Psi, Gam, config)
        if out.overall > best + 1e-15:
            best, arg = out.overall, L.tolist()
    return {"max_overall": best, "argmax": arg, "slack_over_7_8": best - 7 / 8}


# ------------------------------------------------------------ regularization

@dataclass
class GeneralUg:
    """Unique game on an arbitrary loopless multigraph given by an edge list (u, v, f),
    where f maps the label of u to the label of v."""

    n: int
    q: int
    edges: list

    def __post_init__(self):
        clean = []
        for u, v, f in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError("self-loops are not allowed in the input game")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError("edge endpoint out of range")
            f = tuple(int(x) for x in f)
            if len(f) != self.q or not _is_bijection(f):
                raise ValueError("edge constraint is not a bijection of [q]")
            clean.append((u, v, f))
        if not clean:
            raise ValueError("game needs at least one edge")
        self.edges = clean

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def labeling_values(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.q ** self.n if stop is None else stop
        L = _all_labelings(self.n, self.q, start, stop)
        sat = np.zeros(len(L), dtype=np.int64)
        for u, v, f in self.edges:
            sat += np.asarray(f)[L[:, u]] == L[:, v]
        return sat / len(self.edges)

    def value(self, labels: Sequence[int]) -> float:
        L = np.asarray(labels)
        return float(np.mean([f[L[u]] == L[v] for u, v, f in self.edges]))

    def exhaustive_value(self, budget: int = 1 << 24) -> tuple[float, tuple[int, ...]]:
        total = self.q ** self.n
        if total > budget:
            raise ValueError(f"{total} labelings exceed the exhaustive budget")
        best, arg = -1.0, 0
        for s in range(0, total, LABELING_CHUNK):
            v = self.labeling_values(s, min(total, s + LABELING_CHUNK))
            t = int(np.argmax(v))
            if v[t] > best + 1e-15:
                best, arg = float(v[t]), s + t
        return best, tuple(int(x) for x in _all_labelings(self.n, self.q, arg, arg + 1)[0])


def random_general_ug(n: int, m: int, q: int, seed=None, labels=None, noise: float = 0.0):
    """m random loopless edges; constraints agree with ``labels`` except on a noise fraction."""
    rng = make_rng(seed)
    edges = []
    for t in range(m):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        f = rng.permutation(q)
        if labels is not None:
            want = (labels[v] + (1 + rng.integers(q - 1) if rng.random() < noise and q > 1
                                 else 0)) % q
            a = int(np.flatnonzero(f == want)[0])
            f[[labels[u], a]] = f[[a, labels[u]]]
        edges.append((u, v, tuple(int(x) for x in f)))
    return GeneralUg(n, q, edges)


@dataclass
class RegularizedUg:
    instance: UgInstance
    source: GeneralUg
    d: int
    clouds: list
    certificates: dict = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        """Undirected edges counted as half the directed occurrences."""
        G = self.instance.graph
        return G.n * G.d // 2

    def clone_labeling(self, labels: Sequence[int]) -> list[int]:
        out = [0] * self.instance.n
        for v, cloud in enumerate(self.clouds):
            for x in cloud:
                out[x] = int(labels[v])
        return out


def regularize_ug(game: GeneralUg, d: int, family: ExpanderFamily | None = None,
                  seed: int = 0) -> RegularizedUg:
    """Replace vertex v by a cloud of deg(v) copies joined by a certified d-regular expander
    with equality constraints; every original edge keeps its constraint between the copies
    assigned to it. The result is (d+1)-regular with |E'| = |E| (d+1)."""
    family = ExpanderFamily(d, seed=seed) if family is None else family
    if family.d != d:
        raise ValueError("expander family degree differs from d")
    deg = game.degrees()
    off = np.concatenate([[0], np.cumsum(deg)])
    N = int(off[-1])
    clouds = [list(range(int(off[v]), int(off[v + 1]))) for v in range(game.n)]
    perms = np.tile(np.arange(N), (d + 1, 1))
    C = np.tile(np.arange(game.q), (d + 1, N, 1))
    certs = {}
    for v in range(game.n):
        if deg[v] == 0:
            continue
        cert = family.certificate(int(deg[v]))
        certs[int(deg[v])] = cert.cheeger
        for r in range(d):
            perms[r, off[v]:off[v + 1]] = off[v] + cert.graph.perms[r]
    used = off[:-1].copy()
    for u, v, f in game.edges:
        a, b = int(used[u]), int(used[v])
        used[u] += 1
        used[v] += 1
        perms[d, a], perms[d, b] = b, a
        C[d, a] = f
        C[d, b] = np.argsort(f)
    inst = UgInstance(RegularGraph(perms.tolist()), game.q, C)
    return RegularizedUg(inst, game, d, clouds, certs)


def regularization_report(reg: RegularizedUg, budget: int = 1 << 22) -> dict:
    """Exhaustive values before and after, |E'| versus |E| (d+1), and both implications.

    The soundness implication is checked with eta set to the source value itself.
    """
    val, arg = reg.source.exhaustive_value()
    val2, _ = reg.instance.exhaustive_value(budget)
    d = reg.d
    clone = reg.instance.value(reg.clone_labeling(arg))
    complete_ok = val < 0.5 or val2 >= 1 - 1 / (2 * (d + 1)) - 1e-12
    sound_ok = val2 <= 1 - (1 - val) / (d + 1) + 1e-12
    return {"value": val, "regularized_value": val2, "clone_value": clone,
            "predicted": 1 - (1 - val) / (d + 1), "edges": len(reg.source.edges),
            "regularized_edges": reg.edge_count, "edge_identity": reg.edge_count ==
            len(reg.source.edges) * (d + 1), "completeness_implication": bool(complete_ok),
            "soundness_implication": bool(sound_ok), "d": d,
            "min_cheeger": min(reg.certificates.values()) if reg.certificates else math.inf}


def unequal_edges(G: RegularGraph, labels: np.ndarray) -> np.ndarray:
    """Undirected edges with differing endpoint labels, for a batch of labelings."""
    L = np.atleast_2d(labels)
    diff = sum((L != L[:, p]).sum(axis=1) for p in G.perms)
    return diff // 2


def minority_count(labels: np.ndarray, q: int) -> np.ndarray:
    L = np.atleast_2d(labels)
    counts = np.stack([(L == a).sum(axis=1) for a in range(q)], axis=1)
    return L.shape[1] - counts.max(axis=1)


def minority_bound_check(G: RegularGraph | None = None, q: int = 3) -> dict:
    """uneq(G) >= #minority-labeled vertices over every labeling (default graph K_5)."""
    G = complete_graph(5) if G is None else G
    L = _all_labelings(G.n, q, 0, q ** G.n)
    slack = unequal_edges(G, L) - minority_count(L, q)
    return {"n": G.n, "q": q, "labelings": len(L), "min_slack": int(slack.min()),
            "holds": bool(slack.min() >= 0)}
