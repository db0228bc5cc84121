"""Outcome record and menu mixing shared by the three protocols."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..proptest import TestMode, poisson_binomial_pmf
from ..qstate import spawn_seeds


@dataclass
class ProtocolOutcome:
    """Per-entry acceptance, their uniform mixture, and the Monte Carlo transcript.

    ``subtests`` holds expectation-based acceptances in exact mode (threshold tests
    give 0/1 verdicts on expected fractions) and acceptance frequencies in Monte
    Carlo mode. ``verdict_probabilities`` holds the exact probability that the
    literal randomized entry accepts; Monte Carlo frequencies estimate these.
    """

    protocol: str
    subtests: dict[str, float | None]
    verdict_probabilities: dict[str, float | None]
    weights: dict[str, float]
    overall: float
    overall_verdict_probability: float
    mode: str
    transcript: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "subtests": dict(self.subtests),
            "verdict_probabilities": dict(self.verdict_probabilities),
            "weights": dict(self.weights),
            "overall": self.overall,
            "overall_verdict_probability": self.overall_verdict_probability,
            "mode": self.mode,
            "transcript": _jsonable(self.transcript),
            "details": _jsonable(self.details),
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def uniform_weights(names) -> dict[str, float]:
    names = list(names)
    return {n: 1.0 / len(names) for n in names}


def exact_outcome(protocol: str, expectations: Mapping[str, float],
                  verdicts: Mapping[str, float], details: dict | None = None,
                  gate: float = 1.0) -> ProtocolOutcome:
    """Uniform mixture over the menu; ``gate`` multiplies everything (a failed precheck)."""
    w = uniform_weights(expectations)
    overall = gate * sum(w[k] * expectations[k] for k in w)
    overall_vp = gate * sum(w[k] * verdicts[k] for k in w)
    return ProtocolOutcome(protocol, dict(expectations), dict(verdicts), w, float(overall),
                           float(overall_vp), "exact", {}, details or {})


def monte_carlo_menu(protocol: str, entries: Mapping[str, Callable[[TestMode], np.ndarray]],
                     mode: TestMode, details: dict | None = None,
                     gate: bool = True) -> ProtocolOutcome:
    """Draw a menu entry per trial, then run each entry's literal test for its share of trials.

    Each entry callable receives a Monte Carlo mode with its trial count and returns
    one boolean verdict per trial.
    """
    names = list(entries)
    w = uniform_weights(names)
    rng = mode.rng()
    choice = rng.integers(len(names), size=mode.trials)
    counts = np.bincount(choice, minlength=len(names))
    seeds = spawn_seeds(mode.seed, len(names))
    freqs, accepted = {}, 0
    for e, name in enumerate(names):
        t = int(counts[e])
        if t == 0:
            freqs[name] = None
            continue
        draws = np.asarray(entries[name](TestMode.monte_carlo(seeds[e], t)), dtype=bool)
        if draws.shape != (t,):
            raise AssertionError(f"entry {name} returned {draws.shape} draws for {t} trials")
        if not gate:
            draws = np.zeros(t, dtype=bool)
        freqs[name] = float(draws.mean())
        accepted += int(draws.sum())
    overall = accepted / mode.trials
    transcript = {"seed": mode.seed, "trials": mode.trials,
                  "menu_counts": {n: int(c) for n, c in zip(names, counts)}}
    return ProtocolOutcome(protocol, freqs, dict(freqs), w, float(overall), float(overall),
                           "monte_carlo", transcript, details or {})


def bernoulli_fraction_tail(p: np.ndarray, theta: float, strict: bool = True) -> float:
    """P(#successes / len(p) > theta) for independent Bernoulli(p_i)."""
    p = np.asarray(p, dtype=float)
    k = len(p)
    pmf = poisson_binomial_pmf(p)
    frac = np.arange(k + 1) / k
    sel = frac > theta + 1e-12 if strict else frac >= theta - 1e-12
    return float(pmf[sel].sum())
