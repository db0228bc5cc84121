"""Acceptance suite: eleven numbered criteria shared by the test suite and the CLI.

Each ``criterion_N`` returns a :class:`CriterionResult` whose ``passed`` flag already
includes the wall-clock budget. ``line()`` renders the one-line PASS/FAIL summary.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import networkx as nx
import numpy as np

from . import complexity, pcp
from .graphs import (
    complete_graph,
    cycle_graph,
    flat_alpha,
    graph_from_networkx,
    planted_sse_no,
    planted_sse_yes,
    quadratic_form_bound_audit,
)
from .proptest import (
    EXACT,
    TestMode,
    TiltedFamily,
    subset_p_tilde,
    swap_circuit_probability,
    swap_density_oracle,
    swap_test,
)
from .protocols.common import ProtocolOutcome
from .protocols.csp import (
    CspProtocolConfig,
    constraints_pair,
    csp_honest_proofs,
    csp_protocol,
    csp_regularize,
    encoding_state,
    parity_csp,
    random_csp,
    valid_encoding_kept_acceptance,
)
from .protocols.sse import SseProtocolConfig, sse_honest_proofs, sse_protocol, sse_soundness_search
from .protocols.ug import (
    UgProtocolConfig,
    labeling_pair_matrix,
    minority_bound_check,
    random_general_ug,
    regularization_report,
    regularize_ug,
    ug_honest_proofs,
    ug_planted,
    ug_protocol,
)
from .qstate import (
    LabeledState,
    dft_matrix,
    haar_state,
    random_nonneg_state,
    spawn_seeds,
    vec,
)

ORACLE_TOL = 1e-12


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    elapsed: float
    budget: float
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} criterion {self.number:>2} {self.name}: {self.summary} "
                f"[{self.elapsed:.1f}s / {self.budget:.0f}s]")

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "elapsed": self.elapsed, "budget": self.budget, "summary": self.summary,
                "details": self.details}


def _timed(number: int, name: str, budget: float, body: Callable[[], tuple[bool, str, dict]]):
    t0 = time.perf_counter()
    ok, summary, details = body()
    el = time.perf_counter() - t0
    return CriterionResult(number, name, bool(ok and el < budget), el, budget, summary, details)


# ---------------------------------------------------------------- 1. swap test

def criterion_1(pairs: int = 1000, max_dim: int = 16, seed: int = 0) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = {"formula": 0.0, "density": 0.0, "circuit": 0.0}
        for s in spawn_seeds(seed, pairs):
            d = int(rng.integers(1, max_dim + 1))
            a, b = vec(haar_state(d, s)), vec(haar_state(d, s + 1))
            if rng.random() < 0.2:
                b = a.copy()    # equality edge case
            p = swap_test(a, b, EXACT)
            worst["formula"] = max(worst["formula"], abs(p - (0.5 + 0.5 * abs(np.vdot(a, b)) ** 2)))
            worst["density"] = max(worst["density"], abs(p - swap_density_oracle(a, b)))
            worst["circuit"] = max(worst["circuit"], abs(p - swap_circuit_probability(a, b)))
        ok = max(worst.values()) <= ORACLE_TOL
        return ok, f"{pairs} pairs, max deviations {_fmt(worst)}", worst
    return _timed(1, "swap_test_exactness", 10.0, body)


# ---------------------------------------------------------------- 2. validity formula

def _subset_masks(n: int, q: int) -> np.ndarray:
    m = n * q
    idx = np.arange(1, 2 ** m, dtype=np.int64)
    return ((idx[:, None] >> np.arange(m)) & 1).astype(bool).reshape(-1, n, q)


def criterion_2(max_n: int = 6, max_q: int = 3) -> CriterionResult:
    """p~ against the DFT-then-measure oracle on every subset state of [n] x [q]."""
    def body():
        worst, worst_full, states, full = 0.0, 0.0, 0, 0
        for n in range(1, max_n + 1):
            for q in range(2, max_q + 1):
                M = _subset_masks(n, q)
                size = M.sum(axis=(1, 2))
                X = M / np.sqrt(size)[:, None, None]
                # oracle: unitary DFT on each value register, then the marginal of value 0
                Y = X @ dft_matrix(q).T
                oracle = np.sum(np.abs(Y[:, :, 0]) ** 2, axis=1)
                counts = M.sum(axis=2)
                formula = np.array([subset_p_tilde(c, q) for c in counts])
                worst = max(worst, float(np.max(np.abs(formula - oracle))))
                sel = size == n
                if sel.any():
                    closed = np.sum(counts[sel] ** 2, axis=1) / (n * q)
                    worst_full = max(worst_full, float(np.max(np.abs(closed - oracle[sel]))))
                    full += int(sel.sum())
                states += len(M)
        # spot check the batched oracle against the register-level implementation
        from .qstate import RegisterSpec, dft_value_register, measure_distribution
        rng = np.random.default_rng(1)
        spot = 0.0
        for _ in range(200):
            n, q = int(rng.integers(1, max_n + 1)), int(rng.integers(2, max_q + 1))
            mask = rng.random((n, q)) < 0.5
            if not mask.any():
                mask[0, 0] = True
            psi = LabeledState.from_subset(n, q, zip(*np.nonzero(mask)))
            p0 = measure_distribution(dft_value_register(psi), RegisterSpec((n, q), 1))[0]
            spot = max(spot, abs(p0 - subset_p_tilde(mask.sum(axis=1), q)))
        ok = max(worst, worst_full, spot) <= ORACLE_TOL
        det = {"states": states, "max_dev": worst, "size_n_states": full,
               "size_n_max_dev": worst_full, "register_spot_dev": spot}
        return ok, (f"{states} subset states (n<={max_n}, q<={max_q}), max dev {worst:.2e}; "
                    f"|S|=n closed form dev {worst_full:.2e}"), det
    return _timed(2, "validity_formula", 30.0, body)


# ---------------------------------------------------------------- 3. SSE completeness

SSE_YES_GRID = [(16, 4), (32, 4), (32, 6), (64, 4), (64, 6)]


def criterion_3(delta: float = 0.25, etas=(0.05, 0.1), k: int = 4, seed: int = 1) -> CriterionResult:
    def body():
        rows, ok = [], True
        for (n, d), eta in itertools.product(SSE_YES_GRID, etas):
            inst = planted_sse_yes(n, d, delta, eta, seed=seed)
            cfg = SseProtocolConfig(delta, eta, k=k)
            Psi, Phi = sse_honest_proofs(inst, k=k)
            out = sse_protocol(inst, Psi, Phi, cfg)
            good = out.overall >= 1 - eta - 1e-12
            ok &= good
            rows.append({"n": n, "d": d, "eta": eta, "overall": out.overall,
                         "subtests": out.subtests, "ok": bool(good)})
        worst = min(r["overall"] - (1 - r["eta"]) for r in rows)
        return ok, f"{len(rows)} planted yes-instances, min(overall - (1-eta)) = {worst:.4f}", \
            {"rows": rows}
    return _timed(3, "sse_completeness", 60.0, body)


# ---------------------------------------------------------------- 4. SSE soundness

SSE_NO_CONFIGS = [
    # (n, d, delta, eta, seed): supports of size floor((1+6 eta) delta n) = 3 and 4
    (16, 10, 0.125, 0.1, 0),
    (16, 5, 0.125, 0.2, 0),
]


def criterion_4(configs=SSE_NO_CONFIGS, restarts: int = 100, scan_restarts: int = 2) -> CriterionResult:
    def body():
        rows, ok = [], True
        for n, d, delta, eta, seed in configs:
            inst = planted_sse_no(n, d, delta, eta, seed=seed)
            cfg = SseProtocolConfig(delta, eta)
            rep = sse_soundness_search(inst, cfg, restarts=restarts, scan_restarts=scan_restarts,
                                       seed=seed)
            ok &= rep.passed
            row = rep.to_dict()
            row.update(d=d, delta=delta, eta=eta, min_small_expansion=inst.min_small_expansion)
            rows.append(row)
        parts = [f"n={r['n']} d={r['d']}: expansion {r['expansion_max']:.4f} <= "
                 f"{r['expansion_bound']:.4f}, overall {r['overall_max']:.4f} "
                 f"(margin over 5/6 {r['margin']:+.4f})" for r in rows]
        return ok, "; ".join(parts), {"rows": rows}
    return _timed(4, "sse_soundness_search", 600.0, body)


# ---------------------------------------------------------------- 5. quadratic-form audit

def fixture_graphs() -> dict:
    """Small regular graphs (n <= 10) used by the quadratic-form audit."""
    out = {f"C{n}": cycle_graph(n) for n in range(4, 11)}
    out["K4"] = complete_graph(4)
    out["K5"] = complete_graph(5)
    out["K33"] = graph_from_networkx(nx.complete_bipartite_graph(3, 3))
    out["petersen"] = graph_from_networkx(nx.petersen_graph())
    out["cube"] = graph_from_networkx(nx.hypercube_graph(3))
    for n, s in [(8, 1), (10, 2), (10, 3)]:
        out[f"rr3_{n}_{s}"] = graph_from_networkx(nx.random_regular_graph(3, n, seed=s))
    out["rr4_10"] = graph_from_networkx(nx.random_regular_graph(4, 10, seed=4))
    out["planted_8"] = planted_sse_yes(8, 3, 0.5, 0.4, seed=0).graph
    return out


def criterion_5(deltas=(0.3, 0.5)) -> CriterionResult:
    def body():
        rows, ok = [], True
        for name, G in fixture_graphs().items():
            A = G.adjacency()
            for delta in deltas:
                s = int(math.floor(delta * G.n + 1e-12))
                if s < 2:
                    continue
                alpha, _ = flat_alpha(A, s)
                alpha = min(max(alpha, 1e-6), 1 - 1e-9)
                rep = quadratic_form_bound_audit(A, delta, alpha)
                ok &= rep.passed
                rows.append({"graph": name, "n": G.n, "delta": delta, **rep.to_dict()})
        worst = max(r["max_ratio"] for r in rows)
        same = max(r["same_set_max_ratio"] for r in rows)
        return ok, (f"{len(rows)} graph/delta audits, max constant {12 * worst:.3f} <= 12, "
                    f"max same-set ratio {same:.3f} <= 1"), {"rows": rows}
    return _timed(5, "quadratic_form_audit", 300.0, body)


# ---------------------------------------------------------------- 6. UG completeness

def ug_fixtures() -> list:
    """(name, instance, labels) satisfiable toys with n <= 12 and q <= 3."""
    rr8 = graph_from_networkx(nx.random_regular_graph(3, 8, seed=1))
    rr12 = graph_from_networkx(nx.random_regular_graph(3, 12, seed=2))
    out = []
    for name, G, q, seed in [("rr3_8_q3", rr8, 3, 0), ("rr3_8_q2", rr8, 2, 1),
                             ("C12_q2", cycle_graph(12), 2, 2), ("C9_q3", cycle_graph(9), 3, 3),
                             ("K5_q3", complete_graph(5), 3, 4), ("rr3_12_q3", rr12, 3, 5)]:
        labels = np.random.default_rng(seed).integers(q, size=G.n).tolist()
        out.append((name, ug_planted(G, q, labels, 0.0, seed=seed), labels))
    return out


def criterion_6(delta: float = 0.05, eta: float = 0.1, k: int = 4) -> CriterionResult:
    def body():
        cfg = UgProtocolConfig(delta, eta, k=k)
        rows, ok = [], True
        for name, inst, labels in ug_fixtures():
            Psi, Gam = ug_honest_proofs(inst, labels, k)
            out = ug_protocol(inst, Psi, Gam, cfg)
            good = min(out.subtests.values()) >= 0.99 and inst.value(labels) == 1.0
            ok &= good
            rows.append({"fixture": name, "subtests": out.subtests, "ok": bool(good)})
        # per-pair labeling acceptance >= value of the labeling, over every labeling
        worst, checked = math.inf, 0
        for name, G, q, noise, seed in [("rr3_8_q2", nx.random_regular_graph(3, 8, seed=1), 2, 0.3, 7),
                                        ("C6_q3", nx.cycle_graph(6), 3, 0.4, 8),
                                        ("K4_q3", nx.complete_graph(4), 3, 0.5, 9)]:
            G = graph_from_networkx(G)
            planted = np.random.default_rng(seed).integers(q, size=G.n).tolist()
            inst = ug_planted(G, q, planted, noise, seed=seed)
            vals = inst.labeling_values()
            for idx, L in enumerate(itertools.product(range(q), repeat=G.n)):
                fam = TiltedFamily([LabeledState.from_labeling(L, q)])
                per = float(labeling_pair_matrix(inst, fam, fam).mean())
                worst = min(worst, per - float(vals[idx]))
                checked += 1
        ok &= worst >= -1e-12
        sub_min = min(min(r["subtests"].values()) for r in rows)
        return ok, (f"{len(rows)} satisfiable toys, min subtest {sub_min:.4f}; "
                    f"{checked} labelings, min(per-pair - value) {worst:+.2e}"), \
            {"rows": rows, "labelings_checked": checked, "min_per_pair_slack": worst}
    return _timed(6, "ug_completeness", 60.0, body)


# ---------------------------------------------------------------- 7. UG regularization

def regularization_fixtures() -> list:
    """General unique games small enough for exhaustive labeling after regularization."""
    out = []
    for n, m, q, seed, planted, noise in [(4, 5, 2, 0, None, 0.0), (5, 6, 2, 1, None, 0.0),
                                          (6, 7, 2, 3, None, 0.0), (5, 7, 2, 10, None, 0.0),
                                          (6, 8, 2, 5, [0, 1, 1, 0, 1, 0], 0.0),
                                          (5, 6, 2, 6, [1, 0, 0, 1, 1], 0.3),
                                          (4, 4, 3, 7, None, 0.0), (4, 5, 3, 8, [0, 2, 1, 1], 0.0)]:
        out.append(random_general_ug(n, m, q, seed=seed, labels=planted, noise=noise))
    return out


def criterion_7(d: int = 3) -> CriterionResult:
    def body():
        rows, ok = [], True
        for g in regularization_fixtures():
            rep = regularization_report(regularize_ug(g, d))
            good = (rep["edge_identity"] and rep["completeness_implication"]
                    and rep["soundness_implication"]
                    and abs(rep["regularized_value"] - rep["predicted"]) <= 1e-12)
            ok &= good
            rep = {k: v for k, v in rep.items() if k != "min_cheeger"}
            rows.append({"n": g.n, "q": g.q, **rep, "ok": bool(good)})
        minority = [minority_bound_check(q=q) for q in (2, 3)]
        ok &= all(m["holds"] for m in minority)
        return ok, (f"{len(rows)} fixtures: |E'|=|E|(d+1) and both implications hold, "
                    f"val' = 1-(1-val)/(d+1) exactly; minority bound on K5 for q=2,3 "
                    f"({sum(m['labelings'] for m in minority)} labelings)"), \
            {"rows": rows, "minority": minority}
    return _timed(7, "ug_regularization", 300.0, body)


# ---------------------------------------------------------------- 8. CSP constraints test

def csp_unsat_fixtures() -> list:
    """(name, instance, d) with exhaustively certified value 1/2."""
    return [("parity_N2", parity_csp(2, [[0, 1]] * 4, [0, 1, 0, 1]), 3),
            ("parity_N3", parity_csp(3, [[0, 1, 2]] * 4, [0, 1, 0, 1]), 3)]


def csp_triangle_probe() -> dict:
    """XOR triangle with d = 2: clouds of size two carry a doubled edge, so both
    matchings coincide and a swapped valid encoding can fool the consistency check."""
    csp = parity_csp(3, [[0, 1], [1, 2], [0, 2]], [0, 0, 1])
    reg = csp_regularize(csp, 2)
    delta, _ = csp.exhaustive_value()
    V = reg.all_encodings()
    M = valid_encoding_kept_acceptance(reg, V, V)
    D = valid_encoding_kept_acceptance(reg, V)
    return {"delta": delta, "d": 2, "bound": (1 - delta) / (4 * 2 + 2),
            "all_pairs_min_rejection": float(1 - M.max()),
            "equal_pairs_min_rejection": float(1 - D.max())}


def criterion_8(k: int = 4, samples: int = 50) -> CriterionResult:
    def body():
        ok = True
        # completeness on a planted satisfiable toy
        x = [0, 1, 1, 0, 1, 0]
        sat = random_csp(6, 8, 2, seed=1, planted=x)
        d = max(2, max(sat.degree(i) for i in range(sat.N)) - 1)
        reg = csp_regularize(sat, d)
        Psi, Phi = csp_honest_proofs(reg, x, k)
        out = csp_protocol(reg, Psi, Phi, None, CspProtocolConfig(0.5, k=k))
        honest = out.details["kept_acceptance"]
        ok &= abs(honest - 1.0) <= ORACLE_TOL
        rows = []
        rng = np.random.default_rng(0)
        for name, csp, d in csp_unsat_fixtures():
            reg = csp_regularize(csp, d)
            unsat = reg.unsat_bound_check()
            delta = unsat["delta"]
            V = reg.all_encodings()
            M = valid_encoding_kept_acceptance(reg, V, V)
            # closed form against the operator-level pair acceptance
            dev = 0.0
            for a, b in rng.integers(len(V), size=(samples, 2)):
                p = constraints_pair(reg, encoding_state(csp, V[a]), encoding_state(csp, V[b]))
                dev = max(dev, abs(p.kept_acceptance - M[a, b]))
            rej = float(1 - M.max())
            bound = (1 - delta) / (4 * d + 2)
            good = rej >= bound - 1e-6 and dev <= ORACLE_TOL and delta <= 0.5
            ok &= good
            rows.append({"fixture": name, "delta": delta, "d": d, "pairs": int(M.size),
                         "min_rejection": rej, "bound": bound, "closed_form_dev": dev,
                         "unsat_bound": unsat, "ok": bool(good)})
        tri = csp_triangle_probe()
        parts = [f"{r['fixture']}: min rejection {r['min_rejection']:.4f} >= {r['bound']:.4f} "
                 f"over {r['pairs']} pairs" for r in rows]
        summary = (f"honest kept acceptance {honest:.12f}; " + "; ".join(parts)
                   + f"; note: XOR triangle at d=2 has all-pairs min rejection "
                     f"{tri['all_pairs_min_rejection']:.4f} (equal pairs "
                     f"{tri['equal_pairs_min_rejection']:.4f} >= {tri['bound']:.4f})")
        return ok, summary, {"honest_kept_acceptance": honest, "rows": rows, "triangle": tri}
    return _timed(8, "csp_constraints_test", 120.0, body)


# ---------------------------------------------------------------- 9. gap and product numerics

def criterion_9(samples: int = 1000) -> CriterionResult:
    def body():
        gap = complexity.verify_gap_max()
        four = complexity.four_s_audit(samples, 6)
        worst_p00, worst_fid = 0.0, 0.0
        for s in range(50):
            dim = 1 + s % 6
            p00, fid = complexity.decode_fidelity(haar_state(dim, s))
            worst_p00 = max(worst_p00, abs(p00 - 0.25))
            worst_fid = max(worst_fid, abs(fid - 1.0))
        prod = complexity.product_test_bound_audit((2, 2), samples=samples)
        prod23 = complexity.product_test_bound_audit((2, 3), samples=samples, seed=1)
        ok = (gap.passed and four["passed"] and worst_p00 <= ORACLE_TOL
              and worst_fid <= ORACLE_TOL and prod.passed and prod23.passed)
        summary = (f"max f(2/3,.) = {gap.grid_max:.12f}, critical points "
                   f"{[round(c, 9) for c in gap.critical_points]}; 4S audit {four['count']} "
                   f"operators, {four['failures']} failures; P00 dev {worst_p00:.1e}, fidelity "
                   f"dev {worst_fid:.1e}; product audit violations "
                   f"{prod.violations_any + prod23.violations_any}, EPR PT {prod.epr_pt:.12f}")
        return ok, summary, {"gap": gap.to_dict(), "four_s": four, "p00_dev": worst_p00,
                             "fidelity_dev": worst_fid, "product_2x2": prod.to_dict(),
                             "product_2x3": prod23.to_dict()}
    return _timed(9, "gap_and_product_numerics", 300.0, body)


# ---------------------------------------------------------------- 10. PCP explicitness

def _line_maps(sizes=((1, 3), (2, 2), (2, 3), (2, 5), (3, 2), (3, 3))) -> tuple[bool, int]:
    ok, checked = True, 0
    for n, p in sizes:
        for pt in itertools.product(range(p), repeat=n):
            bf = pcp.lines_through_bruteforce(pt, p)
            ok &= len(bf) == pcp.lines_through_count(n, p)
            for idx, (a, b) in enumerate(bf):
                ok &= pcp.line_index(a, b, pt, p) == idx
                ok &= tuple(map(tuple, pcp.line_from_index(idx, pt, p))) == (tuple(a), tuple(b))
                checked += 1
    return bool(ok), checked


def _hadamard_maps() -> tuple[bool, int]:
    Qs = pcp.QuadSystem(np.array([[1, 0, 0, 1], [0, 1, 0, 0]]), np.array([1, 0]), 2)
    L = pcp.HadamardLayout(Qs)
    bf = pcp.adjacency_bruteforce(L)
    ok, checked = True, 0
    for var, mask in bf.items():
        adj = pcp.HadamardAdjacency(L, var)
        hits = np.nonzero(mask)[0]
        ok &= adj.count == hits.size
        ok &= bool(np.array_equal(adj.index(hits), np.arange(hits.size)))
        ok &= bool(np.array_equal(adj.from_index(np.arange(hits.size)), hits))
        checked += int(hits.size)
        for iota in (0, hits.size // 2, hits.size - 1):
            r = pcp.hadamard_adj_from_index(Qs, var, int(iota))
            ok &= pcp.hadamard_adj_index(Qs, var, r) == iota
    return bool(ok), checked


def _csp_maps() -> tuple[bool, int]:
    ok, checked = True, 0
    csps = [random_csp(6, 8, 2, seed=1), random_csp(5, 7, 3, seed=2)]
    csps += [c for _, c, _ in csp_unsat_fixtures()]
    for c in csps:
        ok &= c.index_maps_consistent()
        ok &= sum(c.degree(i) for i in range(c.N)) == c.R * c.q
        for i in range(c.N):
            for t in range(c.degree(i)):
                j = c.adj_loc_v(i, t)
                ok &= c.adj_glo_v(i, j) == t
                ok &= c.adj_loc_c(j, c.adj_glo_c(j, i)) == i
                checked += 1
    return bool(ok), checked


def criterion_10(circuits: int = 50) -> CriterionResult:
    def body():
        lines_ok, nl = _line_maps()
        had_ok, nh = _hadamard_maps()
        csp_ok, nc = _csp_maps()
        # honest Hadamard proof on a one-gate circuit
        c = pcp.Circuit(1, 1, [pcp.Gate("AND", (0, 1))])
        Q = pcp.circuit_to_quadsystem(c)
        xp = next(Q.solutions_extending([1]))
        honest = pcp.hadamard_accept_prob(pcp.hadamard_prover(Q, xp), Q, [1]).accept
        rank_ok = True
        for s in range(circuits):
            rng = np.random.default_rng(s)
            f = pcp.random_formula(int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                                   int(rng.integers(1, 6)), seed=s)
            Qf = pcp.circuit_to_quadsystem(f)
            rank_ok &= Qf.rank() == Qf.rows
            for x in itertools.product((0, 1), repeat=f.num_inputs):
                rank_ok &= f.satisfiable_with(x) == any(True for _ in Qf.solutions_extending(x))
        prime = pcp.prime_in_interval(100)
        ok = lines_ok and had_ok and csp_ok and abs(honest - 1) <= ORACLE_TOL and rank_ok \
            and prime == 97
        summary = (f"line maps {nl} checked ({lines_ok}), Hadamard adjacency {nh} ({had_ok}), "
                   f"CSP maps {nc} ({csp_ok}); honest Hadamard acceptance {honest}; rank "
                   f"invariant on {circuits} circuits {rank_ok}; prime_in_interval(100) = {prime}")
        return ok, summary, {"lines": nl, "hadamard": nh, "csp": nc, "honest": honest,
                             "rank_ok": bool(rank_ok), "prime": prime}
    return _timed(10, "pcp_explicitness", 300.0, body)


# ---------------------------------------------------------------- 11. Monte Carlo consistency

def _random_family(dim: int, size: int, seed: int, sparsity=None) -> TiltedFamily:
    return TiltedFamily([random_nonneg_state(dim, s, sparsity) for s in spawn_seeds(seed, size)])


def _noisy_copies(state, size: int, weight: float, seed: int) -> TiltedFamily:
    x = np.real(np.asarray(vec(state)))
    out = []
    for s in spawn_seeds(seed, size):
        y = x + weight * vec(random_nonneg_state(x.size, s))
        out.append(y / np.linalg.norm(y))
    return TiltedFamily(out)


def mc_configs() -> list[tuple[str, Callable[[TestMode], ProtocolOutcome]]]:
    """Twenty fixed protocol runs mixing honest, perturbed and random proofs."""
    out = []

    # SSE
    y16 = planted_sse_yes(16, 4, 0.25, 0.1, seed=1)
    y32 = planted_sse_yes(32, 4, 0.25, 0.05, seed=1)
    n16 = planted_sse_no(16, 4, 0.125, 0.3, seed=0)
    c16, c32 = SseProtocolConfig(0.25, 0.1), SseProtocolConfig(0.25, 0.05)
    h16, h32 = sse_honest_proofs(y16), sse_honest_proofs(y32)
    sse_runs = [
        ("sse_honest_16", y16, h16, c16),
        ("sse_honest_32", y32, h32, c32),
        ("sse_random_16", y16, (_random_family(16, 8, 1), _random_family(16, 8, 2)), c16),
        ("sse_sparse_random_16", y16, (_random_family(16, 8, 3, 0.3),
                                       _random_family(16, 8, 4, 0.7)), c16),
        ("sse_noisy_16", y16, (_noisy_copies(h16[0].states[0], 8, 0.4, 5), h16[1]), c16),
        ("sse_no_instance", n16, (_random_family(16, 8, 6, 0.2), _random_family(16, 8, 7)),
         SseProtocolConfig(0.125, 0.3)),
        ("sse_small_family", y16, (_random_family(16, 4, 8), _random_family(16, 4, 9)), c16),
    ]
    for name, inst, (P, F), cfg in sse_runs:
        out.append((name, lambda m, inst=inst, P=P, F=F, cfg=cfg: sse_protocol(inst, P, F, cfg, m)))

    # UG
    fx = {name: (inst, labels) for name, inst, labels in ug_fixtures()}
    inst8, lab8 = fx["rr3_8_q3"]
    inst12, lab12 = fx["C12_q2"]
    G8 = inst8.graph
    noisy = ug_planted(G8, 3, lab8, 0.3, seed=11)
    cfg = UgProtocolConfig(0.05, 0.1)
    ug_runs = [
        ("ug_honest_rr8", inst8, ug_honest_proofs(inst8, lab8), cfg),
        ("ug_honest_C12", inst12, ug_honest_proofs(inst12, lab12), cfg),
        ("ug_noisy_labels", noisy, ug_honest_proofs(noisy, lab8), UgProtocolConfig(0.3, 0.1)),
        ("ug_random", inst8, (_random_family(24, 8, 12), _random_family(24, 8, 13)), cfg),
        ("ug_perturbed", inst8, (_noisy_copies(ug_honest_proofs(inst8, lab8)[0].states[0], 8,
                                               0.3, 14), ug_honest_proofs(inst8, lab8)[1]), cfg),
        ("ug_wrong_labels", inst8, ug_honest_proofs(inst8, [(v + 1) % 3 if i % 2 else v
                                                            for i, v in enumerate(lab8)]), cfg),
        ("ug_tight_validity", inst12, ug_honest_proofs(inst12, lab12),
         UgProtocolConfig(0.05, 0.1, validity_d=0.0)),
    ]
    for name, inst, (P, F), c in ug_runs:
        out.append((name, lambda m, inst=inst, P=P, F=F, c=c: ug_protocol(inst, P, F, c, m)))

    # CSP
    x = [0, 1, 1, 0, 1, 0]
    sat = random_csp(6, 8, 2, seed=1, planted=x)
    rsat = csp_regularize(sat, max(2, max(sat.degree(i) for i in range(sat.N)) - 1))
    _, u2, d2 = csp_unsat_fixtures()[0]
    r2 = csp_regularize(u2, d2)
    V2 = r2.all_encodings()
    enc = [encoding_state(u2, V2[i]) for i in (3, 5)]
    dim = sat.R * sat.alphabet
    ccfg = CspProtocolConfig(0.5)
    hp = csp_honest_proofs(rsat, x)
    csp_runs = [
        ("csp_honest", rsat, hp, None, ccfg),
        ("csp_bad_primes", rsat, hp, [2, 4], ccfg),
        ("csp_random", rsat, (_random_family(dim, 8, 15), _random_family(dim, 8, 16)), None, ccfg),
        ("csp_perturbed", rsat, (_noisy_copies(hp[0].states[0], 8, 0.3, 17), hp[1]), None, ccfg),
        ("csp_unsat_encodings", r2, (TiltedFamily([enc[0]] * 4 + [enc[1]] * 4),
                                     TiltedFamily([enc[1]] * 8)), None, ccfg),
        ("csp_unsat_swapped", r2, (TiltedFamily([enc[0], enc[1]] * 4),
                                   TiltedFamily([enc[0]] * 8)), None, CspProtocolConfig(0.5, k=4)),
    ]
    for name, reg, (P, F), primes, c in csp_runs:
        out.append((name, lambda m, reg=reg, P=P, F=F, primes=primes, c=c:
                    csp_protocol(reg, P, F, primes, c, m)))
    return out


def criterion_11(trials: int = 10_000, seed: int = 2024) -> CriterionResult:
    def body():
        rows, ok = [], True
        for (name, run), s in zip(mc_configs(), spawn_seeds(seed, 20)):
            ex = run(EXACT)
            mc = run(TestMode.monte_carlo(s, trials))
            p = min(max(ex.overall_verdict_probability, 0.0), 1.0)
            sigma = math.sqrt(p * (1 - p) / trials)
            z = abs(mc.overall - p)
            good = z <= 4 * sigma + 1e-9
            ok &= good
            rows.append({"config": name, "protocol": ex.protocol, "exact": p, "mc": mc.overall,
                         "sigma": sigma, "deviation": z,
                         "in_sigmas": z / sigma if sigma > 0 else 0.0, "ok": bool(good)})
        worst = max(r["in_sigmas"] for r in rows)
        return ok, (f"{len(rows)} configs at {trials} trials, worst deviation "
                    f"{worst:.2f} sigma (limit 4)"), {"rows": rows}
    return _timed(11, "monte_carlo_consistency", 600.0, body)


# ---------------------------------------------------------------- driver

CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_all(numbers=None, echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    results = []
    for i in (numbers or sorted(CRITERIA)):
        r = CRITERIA[i]()
        if echo:
            echo(r.line())
        results.append(r)
    return results


def _fmt(d: dict) -> str:
    return ", ".join(f"{k} {v:.1e}" for k, v in d.items())
