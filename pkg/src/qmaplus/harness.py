"""Command line harness: configuration, dispatch, result records and sweeps.

Precedence for every setting: built-in defaults, then the JSON config file
(``--config``), then command line flags (``--seed``, ``--mode``, the parameter
shortcuts and any number of ``--set key.path=value``). Records are written to
``$QMAPLUS_RESULTS/<id>/<timestamp>.json`` (default root ``results``) with a
tidy CSV next to them, and validated against the bundled JSON schema first.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import networkx as nx
import numpy as np

from . import acceptance, complexity, pcp
from .graphs import (
    RegularGraph,
    classify_sse,
    complete_graph,
    cycle_graph,
    graph_from_networkx,
    planted_sse_no,
    planted_sse_yes,
)
from .proptest import EXACT, TestMode, TiltedFamily
from .protocols.csp import (
    CSP_MENU,
    CspProtocolConfig,
    CspToyInstance,
    csp_honest_proofs,
    csp_protocol,
    csp_regularize,
    parity_csp,
    random_csp,
    valid_encoding_kept_acceptance,
)
from .protocols.sse import SSE_MENU, SseProtocolConfig, sse_honest_proofs, sse_protocol, \
    sse_soundness_search
from .protocols.ug import (
    UG_MENU,
    UgInstance,
    UgProtocolConfig,
    ug_honest_proofs,
    ug_labeling_sweep,
    ug_planted,
    ug_protocol,
)
from .qstate import StateVector, spawn_seeds

SCHEMA_VERSION = 1
MAX_SWEEP_CELLS = 10_000
RESULTS_ENV = "QMAPLUS_RESULTS"

PROTOCOL_VERBS = ("run-sse", "run-ug", "run-csp")
VERBS = PROTOCOL_VERBS + ("search-adversary", "verify-bounds", "verify-gap-max",
                          "audit-product-test", "pcp-index", "pcp-verify", "pcp-audit",
                          "run-all-acceptance", "sweep")
MENUS = {"run-sse": SSE_MENU, "run-ug": UG_MENU, "run-csp": CSP_MENU}

DEFAULT_INSTANCES = {
    "run-sse": {"kind": "planted_yes", "n": 16, "d": 4, "seed": 1},
    "search-adversary": {"kind": "planted_no", "n": 16, "d": 10, "seed": 0},
    "run-ug": {"kind": "planted", "graph": "random_regular", "n": 8, "d": 3, "q": 3,
               "noise": 0.0, "seed": 1},
    "run-csp": {"kind": "planted", "N": 6, "R": 8, "arity": 2, "seed": 1, "d": None},
}
DEFAULT_PARAMS = {
    "run-sse": {"delta": 0.25, "eta": 0.1, "eps": 1e-4, "k": 4},
    "search-adversary": {"delta": 0.125, "eta": 0.1, "eps": 1e-4, "k": 4},
    "run-ug": {"delta": 0.05, "eta": 0.1, "eps": 1e-4, "k": 4},
    "run-csp": {"delta": 0.5, "eps": 1e-4, "k": 4},
    "verify-bounds": {"graph": "petersen", "delta": 0.5, "four_s_count": 200, "max_dim": 6},
    "verify-gap-max": {"p": 2 / 3, "step": 1e-6},
    "audit-product-test": {"partition": [2, 2], "samples": 1000},
    "pcp-index": {"n": 2, "p": 3},
    "pcp-verify": {"inputs": 1, "witness": 1, "gates": 1, "x": None, "flips": []},
    "pcp-audit": {},
    "run-all-acceptance": {"only": None},
}


class HarnessError(Exception):
    """Bad configuration or unknown experiment; reported without a traceback."""


# ---------------------------------------------------------------- configuration

@dataclass
class ExperimentConfig:
    id: str
    verb: str
    instance: dict = field(default_factory=dict)
    prover: object = "honest"
    mode: str = "exact"
    seed: int = 0
    trials: int = 10_000
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    jobs: int = 1

    def test_mode(self, seed: int | None = None) -> TestMode:
        if self.mode == "exact":
            return EXACT
        if self.mode == "monte_carlo":
            return TestMode.monte_carlo(self.seed if seed is None else seed, self.trials)
        raise HarnessError(f"unknown mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {"id": self.id, "verb": self.verb, "instance": self.instance,
                "prover": self.prover, "mode": self.mode, "seed": self.seed,
                "trials": self.trials, "params": self.params, "grid": self.grid,
                "jobs": self.jobs}

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise HarnessError(f"unknown config keys: {sorted(unknown)}")
        if doc.get("verb") not in VERBS:
            raise HarnessError(f"unknown experiment {doc.get('verb')!r}; choose from {VERBS}")
        return cls(**doc)


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        doc = doc.setdefault(k, {})
    doc[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(verb: str, file_doc: dict | None = None, overrides: dict | None = None,
                   sets: list[str] | None = None) -> ExperimentConfig:
    """Defaults < config file < explicit overrides < --set assignments."""
    target = None
    if verb == "sweep" and file_doc:
        target = file_doc.get("template_verb") or file_doc.get("params", {}).get("verb")
    base_verb = target or verb
    doc = {"id": verb, "verb": verb,
           "instance": copy.deepcopy(DEFAULT_INSTANCES.get(base_verb, {})),
           "params": copy.deepcopy(DEFAULT_PARAMS.get(base_verb, {}))}
    if file_doc:
        file_doc = {k: v for k, v in file_doc.items() if k != "template_verb"}
        for k, v in file_doc.items():
            if k in ("instance", "params") and isinstance(v, dict):
                doc[k].update(v)
            else:
                doc[k] = v
        doc["verb"] = verb
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k.startswith("params."):
            doc["params"][k[7:]] = v
        else:
            doc[k] = v
    for item in sets or []:
        if "=" not in item:
            raise HarnessError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        key = key.strip()
        if key.split(".")[0] not in ExperimentConfig.__dataclass_fields__:
            key = "params." + key    # bare names are protocol/audit parameters
        _set_path(doc, key, _parse_value(val))
    if target:
        doc["params"]["verb"] = target
    return ExperimentConfig.from_dict(doc)


# ---------------------------------------------------------------- instances and provers

def _load_family(items) -> TiltedFamily:
    states = []
    for s in items:
        if isinstance(s, dict):
            states.append(StateVector.from_dict(s))
        else:
            states.append(StateVector.normalized(np.asarray(s, dtype=float)))
    return TiltedFamily(states)


def _fixture_proofs(prover) -> tuple[TiltedFamily, TiltedFamily] | None:
    if isinstance(prover, dict) and "fixture" in prover:
        doc = json.loads(Path(prover["fixture"]).read_text())
        return _load_family(doc["psi"]), _load_family(doc["phi"])
    return None


def _budget(prover, default: int) -> int | None:
    if isinstance(prover, dict) and "adversarial" in prover:
        return int(prover["adversarial"] or default)
    return None


def _regular_graph(spec: dict) -> RegularGraph:
    kind = spec.get("graph", "random_regular")
    n = int(spec.get("n", 8))
    if kind == "random_regular":
        return graph_from_networkx(nx.random_regular_graph(int(spec.get("d", 3)), n,
                                                           seed=int(spec.get("seed", 0))))
    if kind == "cycle":
        return cycle_graph(n)
    if kind == "complete":
        return complete_graph(n)
    if kind == "petersen":
        return graph_from_networkx(nx.petersen_graph())
    if kind.endswith(".txt") or os.path.exists(kind):
        return RegularGraph.from_text(Path(kind).read_text())
    raise HarnessError(f"unknown graph kind {kind!r}")


def build_sse(cfg: ExperimentConfig):
    spec, p = cfg.instance, cfg.params
    kind = spec.get("kind", "planted_yes")
    if kind == "planted_yes":
        inst = planted_sse_yes(int(spec["n"]), int(spec["d"]), p["delta"], p["eta"],
                               seed=int(spec.get("seed", 0)))
    elif kind == "planted_no":
        inst = planted_sse_no(int(spec["n"]), int(spec["d"]), p["delta"], p["eta"],
                              seed=int(spec.get("seed", 0)))
    elif kind == "file":
        G = RegularGraph.from_text(Path(spec["path"]).read_text())
        inst = classify_sse(G, p["eta"], p["delta"])
    else:
        raise HarnessError(f"unknown SSE instance kind {kind!r}")
    return inst, SseProtocolConfig(p["delta"], p["eta"], p.get("eps", 1e-4), int(p.get("k", 4)))


def build_ug(cfg: ExperimentConfig):
    spec, p = cfg.instance, cfg.params
    kind = spec.get("kind", "planted")
    if kind == "planted":
        G = _regular_graph(spec)
        q = int(spec.get("q", 3))
        labels = np.random.default_rng(int(spec.get("seed", 0))).integers(q, size=G.n).tolist()
        inst = ug_planted(G, q, labels, float(spec.get("noise", 0.0)), seed=int(spec.get("seed", 0)))
    elif kind == "file":
        inst = UgInstance.from_json(spec["path"])
        labels = list(inst.exhaustive_value()[1])
    else:
        raise HarnessError(f"unknown UG instance kind {kind!r}")
    config = UgProtocolConfig(p["delta"], p["eta"], p.get("eps", 1e-4), int(p.get("k", 4)),
                              p.get("theta"), p.get("nu"), p.get("validity_d"))
    return inst, labels, config


def build_csp(cfg: ExperimentConfig):
    spec, p = cfg.instance, cfg.params
    kind = spec.get("kind", "planted")
    if kind == "planted":
        N = int(spec.get("N", 6))
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        x = rng.integers(2, size=N).tolist()
        csp = random_csp(N, int(spec.get("R", 8)), int(spec.get("arity", 2)),
                         seed=int(spec.get("seed", 0)), planted=x)
    elif kind == "parity":
        csp = parity_csp(int(spec["N"]), spec["adjc"], spec["parities"])
        x = list(csp.exhaustive_value()[1])
    elif kind == "file":
        csp = CspToyInstance.from_json(spec["path"])
        x = list(csp.exhaustive_value()[1])
    else:
        raise HarnessError(f"unknown CSP instance kind {kind!r}")
    d = spec.get("d")
    if d is None:
        d = max(2, max(csp.degree(i) for i in range(csp.N)) - 1)
    reg = csp_regularize(csp, int(d), seed=int(spec.get("seed", 0)))
    config = CspProtocolConfig(p["delta"], p.get("eps", 1e-4), int(p.get("k", 4)),
                               p.get("theta"), p.get("nu"), p.get("validity_d"),
                               p.get("inner_keep"))
    return csp, reg, x, config


# ---------------------------------------------------------------- verbs

def _outcome_parts(out, cfg: ExperimentConfig, exact_out=None) -> dict:
    parts = {"subtests": out.subtests, "verdicts": out.verdict_probabilities,
             "results": out.to_dict(), "oracles": {}, "invariants": {}}
    if exact_out is not None:
        p = min(max(exact_out.overall_verdict_probability, 0.0), 1.0)
        sigma = math.sqrt(p * (1 - p) / cfg.trials)
        parts["oracles"] = {"exact_verdict_probability": p, "sigma": sigma,
                            "deviation": abs(out.overall - p)}
        parts["invariants"]["mc_within_4_sigma"] = abs(out.overall - p) <= 4 * sigma + 1e-9
    return parts


def _run_protocol(cfg: ExperimentConfig, run, honest_check) -> dict:
    if cfg.mode == "exact":
        out = run(EXACT)
        parts = _outcome_parts(out, cfg)
        if honest_check is not None:
            parts["invariants"].update(honest_check(out))
        return parts
    out = run(cfg.test_mode())
    return _outcome_parts(out, cfg, run(EXACT))


def verb_run_sse(cfg: ExperimentConfig) -> dict:
    inst, config = build_sse(cfg)
    budget = _budget(cfg.prover, 100)
    if budget is not None:
        return verb_search_adversary(cfg)
    proofs = _fixture_proofs(cfg.prover) or sse_honest_proofs(inst, k=config.k)
    honest = not isinstance(cfg.prover, dict) and inst.label == "yes"
    check = (lambda o: {"completeness": o.overall >= 1 - config.eta - 1e-12}) if honest else None
    parts = _run_protocol(cfg, lambda m: sse_protocol(inst, *proofs, config, m), check)
    parts["results"]["instance"] = inst.to_dict()
    return parts


def verb_run_ug(cfg: ExperimentConfig) -> dict:
    inst, labels, config = build_ug(cfg)
    budget = _budget(cfg.prover, 1 << 12)
    if budget is not None:
        sweep = ug_labeling_sweep(inst, config, budget)
        return {"results": sweep, "subtests": {}, "verdicts": {}, "oracles": {},
                "invariants": {}}
    fixture = _fixture_proofs(cfg.prover)
    proofs = fixture or ug_honest_proofs(inst, labels, config.k)
    check = None
    if fixture is None and inst.value(labels) == 1.0:
        check = lambda o: {"completeness": min(o.subtests.values()) >= 0.99}
    parts = _run_protocol(cfg, lambda m: ug_protocol(inst, *proofs, config, m), check)
    parts["results"].update(labels=labels, value=inst.value(labels))
    return parts


def verb_run_csp(cfg: ExperimentConfig) -> dict:
    csp, reg, x, config = build_csp(cfg)
    primes = cfg.params.get("primes")
    budget = _budget(cfg.prover, 1 << 20)
    if budget is not None:
        V = reg.all_encodings(budget)
        M = valid_encoding_kept_acceptance(reg, V, V)
        a, b = np.unravel_index(int(np.argmax(M)), M.shape)
        delta = csp.exhaustive_value()[0]
        rej = float(1 - M.max())
        bound = (1 - delta) / (4 * reg.d + 2)
        return {"results": {"max_kept_acceptance": float(M.max()), "min_rejection": rej,
                            "bound": bound, "value": delta,
                            "argmax": [V[a].tolist(), V[b].tolist()]},
                "subtests": {}, "verdicts": {}, "oracles": {},
                "invariants": {} if delta == 1.0 else {"rejection_bound": rej >= bound - 1e-6}}
    fixture = _fixture_proofs(cfg.prover)
    proofs = fixture or csp_honest_proofs(reg, x, config.k)
    check = None
    if fixture is None and csp.value(x) == 1.0:
        check = lambda o: {"honest_kept_acceptance": abs(o.details["kept_acceptance"] - 1) <= 1e-12}
    parts = _run_protocol(cfg, lambda m: csp_protocol(reg, *proofs, primes, config, m), check)
    parts["results"].update(instance=csp.to_dict(), d=reg.d, assignment=x)
    return parts


def verb_search_adversary(cfg: ExperimentConfig) -> dict:
    spec = dict(cfg.instance)
    if spec.get("kind") == "planted_yes":
        raise HarnessError("the soundness search needs a no-instance")
    inst, config = build_sse(cfg)
    if inst.label != "no":
        raise HarnessError(f"instance classified {inst.label!r}, not a verified no-instance")
    restarts = _budget(cfg.prover, 100) or int(cfg.params.get("restarts", 100))
    rep = sse_soundness_search(inst, config, restarts=restarts,
                               scan_restarts=int(cfg.params.get("scan_restarts", 2)),
                               seed=cfg.seed)
    return {"results": rep.to_dict(),
            "subtests": {"expansion": rep.expansion_max},
            "verdicts": {}, "oracles": {"analytic_sse_max": rep.analytic},
            "invariants": {"expansion_bound": rep.passed}}


def verb_verify_bounds(cfg: ExperimentConfig) -> dict:
    from .graphs import flat_alpha, quadratic_form_bound_audit
    from .protocols.ug import minority_bound_check
    p = cfg.params
    graphs = acceptance.fixture_graphs()
    if p["graph"] not in graphs:
        raise HarnessError(f"unknown fixture graph {p['graph']!r}; choose from {sorted(graphs)}")
    G = graphs[p["graph"]]
    A = G.adjacency()
    s = int(math.floor(p["delta"] * G.n + 1e-12))
    alpha = min(max(flat_alpha(A, s)[0], 1e-6), 1 - 1e-9)
    quad = quadratic_form_bound_audit(A, p["delta"], alpha)
    four = complexity.four_s_audit(int(p["four_s_count"]), int(p["max_dim"]), seed=cfg.seed)
    minority = minority_bound_check(q=3)
    return {"results": {"quadratic": quad.to_dict(), "four_s": four, "minority": minority},
            "subtests": {}, "verdicts": {}, "oracles": {},
            "invariants": {"quadratic": quad.passed, "four_s": four["passed"],
                           "minority": minority["holds"]}}


def verb_verify_gap_max(cfg: ExperimentConfig) -> dict:
    rep = complexity.verify_gap_max(float(cfg.params["p"]), float(cfg.params["step"]))
    inv = {"gap_max": rep.passed} if abs(rep.p - 2 / 3) < 1e-15 else {}
    return {"results": rep.to_dict(), "subtests": {}, "verdicts": {},
            "oracles": {"expected": 7 / 9}, "invariants": inv}


def verb_audit_product_test(cfg: ExperimentConfig) -> dict:
    rep = complexity.product_test_bound_audit(tuple(cfg.params["partition"]),
                                              int(cfg.params["samples"]), seed=cfg.seed)
    return {"results": rep.to_dict(), "subtests": {"epr_product_test": rep.epr_pt},
            "verdicts": {}, "oracles": {"epr_expected": 0.75},
            "invariants": {"product_bounds": rep.passed}}


def verb_pcp_index(cfg: ExperimentConfig) -> dict:
    n, p = int(cfg.params["n"]), int(cfg.params["p"])
    if not pcp.is_prime(p):
        raise HarnessError("p must be prime")
    res = {"n": n, "p": p, "lines_per_point": pcp.lines_through_count(n, p)}
    pt = cfg.params.get("point")
    if pt is not None and cfg.params.get("a") is not None:
        res["index"] = pcp.line_index(cfg.params["a"], cfg.params["b"], pt, p)
    if pt is not None and cfg.params.get("index") is not None:
        res["line"] = [list(v) for v in pcp.line_from_index(int(cfg.params["index"]), pt, p)]
    ok, checked = acceptance._line_maps(((n, p),))
    res["round_trips_checked"] = checked
    return {"results": res, "subtests": {}, "verdicts": {}, "oracles": {},
            "invariants": {"line_maps": ok}}


def verb_pcp_verify(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    c = pcp.random_formula(int(p["inputs"]), int(p["witness"]), int(p["gates"]), seed=cfg.seed)
    Q = pcp.circuit_to_quadsystem(c)
    xs = [p["x"]] if p.get("x") is not None else list(itertools.product((0, 1), repeat=c.num_inputs))
    for x in xs:
        sol = next(Q.solutions_extending(list(x)), None)
        if sol is not None:
            break
    else:
        return {"results": {"satisfiable": False, "rows": Q.rows, "n": Q.n},
                "subtests": {}, "verdicts": {}, "oracles": {}, "invariants": {}}
    proof = pcp.hadamard_prover(Q, sol)
    honest = pcp.hadamard_accept_prob(proof, Q, list(x))
    res = {"satisfiable": True, "x": list(x), "n": Q.n, "rows": Q.rows,
           "honest": honest.to_dict()}
    corrupted = proof
    sizes = {"Y": 2 ** Q.n, "Z": 2 ** (Q.n * Q.n)}
    for item in p.get("flips") or []:
        if not (isinstance(item, (list, tuple)) and len(item) == 2 and item[0] in sizes
                and isinstance(item[1], int) and 0 <= item[1] < sizes[item[0]]):
            raise HarnessError(f"flips entries are [\"Y\"|\"Z\", index] within the table, got {item!r}")
        corrupted = corrupted.flipped(item[0], item[1])
    if p.get("flips"):
        res["corrupted"] = pcp.hadamard_accept_prob(corrupted, Q, list(x)).to_dict()
    return {"results": res, "subtests": {"honest_accept": honest.accept}, "verdicts": {},
            "oracles": {}, "invariants": {"honest_accepts": abs(honest.accept - 1) <= 1e-12}}


def verb_pcp_audit(cfg: ExperimentConfig) -> dict:
    ok, checked = acceptance._hadamard_maps()
    c = pcp.Circuit(1, 1, [pcp.Gate("AND", (0, 1))])
    uni = pcp.uniformity_audit(pcp.circuit_to_quadsystem(c))
    return {"results": {"adjacency_checked": checked, "uniformity": uni.to_dict()},
            "subtests": {}, "verdicts": {}, "oracles": {},
            "invariants": {"adjacency_maps": ok}}


def verb_run_all_acceptance(cfg: ExperimentConfig) -> dict:
    only = cfg.params.get("only")
    if isinstance(only, int):
        only = [only]
    echo = (lambda s: print(s, flush=True)) if cfg.params.get("echo", True) else None
    results = acceptance.run_all(only, echo=echo)
    return {"results": {"criteria": [r.to_dict() for r in results]},
            "subtests": {f"criterion_{r.number}": float(r.passed) for r in results},
            "verdicts": {}, "oracles": {},
            "invariants": {f"criterion_{r.number}": r.passed for r in results}}


DISPATCH = {
    "run-sse": verb_run_sse,
    "run-ug": verb_run_ug,
    "run-csp": verb_run_csp,
    "search-adversary": verb_search_adversary,
    "verify-bounds": verb_verify_bounds,
    "verify-gap-max": verb_verify_gap_max,
    "audit-product-test": verb_audit_product_test,
    "pcp-index": verb_pcp_index,
    "pcp-verify": verb_pcp_verify,
    "pcp-audit": verb_pcp_audit,
    "run-all-acceptance": verb_run_all_acceptance,
}


# ---------------------------------------------------------------- records

def load_schema() -> dict:
    text = resources.files("qmaplus").joinpath("schema/result_record.schema.json").read_text()
    return json.loads(text)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def make_record(cfg: ExperimentConfig, parts: dict, wall: float) -> dict:
    inv = {k: bool(v) for k, v in parts.get("invariants", {}).items()}
    rec = {"schema_version": SCHEMA_VERSION, "experiment": cfg.id, "verb": cfg.verb,
           "config": cfg.to_dict(), "subtests": parts.get("subtests", {}),
           "verdicts": parts.get("verdicts", {}), "oracles": parts.get("oracles", {}),
           "invariants": inv, "ok": all(inv.values()),
           "results": parts.get("results", {}), "wall_time": wall}
    rec = _clean(rec)
    jsonschema.validate(rec, load_schema())
    return rec


def record_json(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, indent=2) + "\n"


def _csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return buf.getvalue()


def record_rows(rec: dict) -> tuple[list[str], list[dict]]:
    """One tidy row per subtest plus an overall row."""
    columns = ["experiment", "verb", "mode", "seed", "quantity", "value"]
    base = {"experiment": rec["experiment"], "verb": rec["verb"],
            "mode": rec["config"]["mode"], "seed": rec["config"]["seed"]}
    rows = [dict(base, quantity=f"subtest:{k}", value=v) for k, v in sorted(rec["subtests"].items())]
    rows += [dict(base, quantity=f"verdict:{k}", value=v) for k, v in sorted(rec["verdicts"].items())]
    rows += [dict(base, quantity=f"invariant:{k}", value=v)
             for k, v in sorted(rec["invariants"].items())]
    rows.append(dict(base, quantity="ok", value=rec["ok"]))
    return columns, rows


def results_root() -> Path:
    return Path(os.environ.get(RESULTS_ENV, "results"))


def write_outputs(rec: dict, csv_text: str, root: Path | None = None) -> Path:
    root = results_root() if root is None else Path(root)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    out = root / rec["experiment"]
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stamp}.json"
    path.write_text(record_json(rec))
    path.with_suffix(".csv").write_text(csv_text)
    return path


def run(cfg: ExperimentConfig) -> dict:
    if cfg.verb == "sweep":
        return sweep(cfg)[0]
    fn = DISPATCH.get(cfg.verb)
    if fn is None:
        raise HarnessError(f"unknown experiment {cfg.verb!r}")
    t0 = time.perf_counter()
    parts = fn(cfg)
    return make_record(cfg, parts, time.perf_counter() - t0)


# ---------------------------------------------------------------- sweeps

def grid_cells(grid: dict) -> list[dict]:
    """Cartesian product of the grid; an empty grid (or any empty axis) has no cells."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        return []
    keys = sorted(grid)
    count = math.prod(len(grid[k]) for k in keys)
    if count > MAX_SWEEP_CELLS:
        raise HarnessError(f"grid has {count} cells, above the budget of {MAX_SWEEP_CELLS}")
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _cell_config(cfg: ExperimentConfig, cell: dict, seed: int) -> ExperimentConfig:
    doc = copy.deepcopy(cfg.to_dict())
    target = doc["params"].pop("verb", None)
    if target not in PROTOCOL_VERBS + ("search-adversary", "verify-gap-max", "audit-product-test"):
        raise HarnessError("sweep needs params.verb naming a protocol or audit verb")
    doc.update(verb=target, id=f"{cfg.id}", grid={}, jobs=1, seed=seed)
    for k, v in cell.items():
        if k in ("mode", "trials", "seed"):
            doc[k] = v
        elif k.startswith("instance."):
            doc["instance"][k[9:]] = v
        else:
            doc["params"][k.removeprefix("params.")] = v
    return ExperimentConfig.from_dict(doc)


def _run_cell(args) -> dict:
    cfg_doc, cell, seed, index = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    ccfg = _cell_config(cfg, cell, seed)
    rec = run(ccfg)
    row = {"cell": index, "seed": seed, **{f"grid:{k}": v for k, v in cell.items()},
           "verb": ccfg.verb, "mode": ccfg.mode, "ok": rec["ok"]}
    res = rec["results"]
    for key in ("overall", "overall_verdict_probability"):
        if key in res:
            row[key] = res[key]
    for k, v in rec["subtests"].items():
        row[f"subtest:{k}"] = v
    return row


def sweep_columns(grid: dict, target: str | None) -> list[str]:
    cols = ["cell", "seed"] + [f"grid:{k}" for k in sorted(grid)]
    cols += ["verb", "mode", "ok", "overall", "overall_verdict_probability"]
    cols += [f"subtest:{m}" for m in MENUS.get(target, ())]
    if target == "search-adversary":
        cols.append("subtest:expansion")
    return cols


def sweep(cfg: ExperimentConfig) -> tuple[dict, str]:
    """Run every grid cell with its own seed spawn_seeds(seed, cells)[i]; serial and
    parallel execution give identical rows."""
    t0 = time.perf_counter()
    cells = grid_cells(cfg.grid)
    seeds = spawn_seeds(cfg.seed, len(cells)) if cells else []
    args = [(cfg.to_dict(), c, s, i) for i, (c, s) in enumerate(zip(cells, seeds))]
    if cfg.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            rows = list(ex.map(_run_cell, args))
    else:
        rows = [_run_cell(a) for a in args]
    target = cfg.params.get("verb")
    columns = sweep_columns(cfg.grid, target)
    inv = {"all_cells_ok": all(r["ok"] for r in rows)}
    parts = {"results": {"cells": len(rows), "columns": columns, "rows": rows},
             "subtests": {}, "verdicts": {}, "oracles": {}, "invariants": inv}
    rec = make_record(cfg, parts, time.perf_counter() - t0)
    return rec, _csv_text(columns, rows)


# ---------------------------------------------------------------- command line

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmaplus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--id", help="experiment id (results subdirectory)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=("exact", "monte_carlo"))
        sp.add_argument("--trials", type=int)
        sp.add_argument("--prover", help="'honest', 'adversarial[:budget]' or 'fixture:FILE'")
        sp.add_argument("--instance", help="JSON object or path to a JSON file")
        sp.add_argument("--jobs", type=int, help="parallel sweep workers")
        for name in ("eps", "delta", "eta", "theta", "nu"):
            sp.add_argument(f"--{name}", type=float)
        for name in ("k", "q"):
            sp.add_argument(f"--{name}", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config entry by dotted path (value parsed as JSON)")
        sp.add_argument("--results", help=f"results root (default ${RESULTS_ENV} or ./results)")
        sp.add_argument("--no-write", action="store_true", help="print the record only")
        sp.add_argument("--quiet", action="store_true")
        if verb == "sweep":
            sp.add_argument("--verb-template", dest="template", help="verb run in each cell")
            sp.add_argument("--grid", help="JSON object mapping parameter to a list of values")
        if verb == "run-all-acceptance":
            sp.add_argument("--only", help="comma separated criterion numbers")
    return ap


def _prover(text: str | None):
    if text is None:
        return None
    if text == "honest":
        return "honest"
    if text.startswith("adversarial"):
        _, _, b = text.partition(":")
        return {"adversarial": int(b) if b else None}
    if text.startswith("fixture:"):
        return {"fixture": text.split(":", 1)[1]}
    raise HarnessError(f"bad --prover {text!r}")


def _json_arg(text: str | None):
    if text is None:
        return None
    p = Path(text)
    return json.loads(p.read_text()) if p.exists() else json.loads(text)


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    file_doc = json.loads(Path(ns.config).read_text()) if ns.config else {}
    if ns.verb == "sweep" and getattr(ns, "template", None):
        file_doc["template_verb"] = ns.template
    over = {"id": ns.id, "seed": ns.seed, "mode": ns.mode, "trials": ns.trials,
            "prover": _prover(ns.prover), "jobs": ns.jobs}
    for name in ("eps", "delta", "eta", "theta", "nu", "k", "q"):
        over[f"params.{name}"] = getattr(ns, name)
    if ns.instance:
        inst = _json_arg(ns.instance)
        base = dict(DEFAULT_INSTANCES.get(ns.verb, {}))
        base.update(file_doc.get("instance", {}))
        base.update(inst)
        file_doc["instance"] = base
    if ns.verb == "sweep" and getattr(ns, "grid", None):
        file_doc["grid"] = _json_arg(ns.grid)
    if ns.verb == "run-all-acceptance" and getattr(ns, "only", None):
        over["params.only"] = [int(x) for x in ns.only.split(",")]
    return resolve_config(ns.verb, file_doc, over, ns.set)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if cfg.verb == "sweep":
            rec, text = sweep(cfg)
        else:
            rec = run(cfg)
            text = _csv_text(*record_rows(rec))
    except (HarnessError, ValueError, KeyError, FileNotFoundError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2
    if ns.no_write:
        sys.stdout.write(record_json(rec))
    else:
        path = write_outputs(rec, text, ns.results)
        if not ns.quiet:
            print(f"wrote {path}")
            failed = [k for k, v in rec["invariants"].items() if not v]
            print("invariants: " + ("all held" if not failed else "FAILED " + ", ".join(failed)))
    return 0 if rec["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
