"""Checks relating non-negative and general proofs, and gap amplification numerics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import adversary
from .proptest import (product_test, product_test_reduced_oracle, swap_density_oracle,
                       swap_probability, symmetric_projector)
from .qstate import ORACLE_ATOL, haar_state, make_rng, vec

PHASES = (1.0, 1j, -1.0, -1j)


# ---------------------------------------------------------------- four-part split

@dataclass
class FourDecomposition:
    weights: np.ndarray          # alpha_1..alpha_4
    parts: list                  # non-negative real unit vectors (zeros when weight is 0)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.parts[0].size, dtype=np.complex128)
        for a, ph, x in zip(self.weights, PHASES, self.parts):
            out += math.sqrt(a) * ph * x
        return out

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "parts": [x.tolist() for x in self.parts]}


def decompose_four(psi) -> FourDecomposition:
    """Split amplitudes by the sign of their real and imaginary parts.

    Part 1 collects positive real parts, part 2 positive imaginary parts, part 3
    negative real parts and part 4 negative imaginary parts, so parts 1 and 3 (and
    2 and 4) have disjoint supports.
    """
    x = np.asarray(vec(psi), dtype=np.complex128)
    re, im = x.real, x.imag
    raw = [np.maximum(re, 0), np.maximum(im, 0), np.maximum(-re, 0), np.maximum(-im, 0)]
    norm2 = float(np.sum(np.abs(x) ** 2))
    weights, parts = [], []
    for r in raw:
        n = float(np.linalg.norm(r))
        weights.append(n * n / norm2)
        parts.append(r / n if n > 0 else np.zeros_like(r))
    return FourDecomposition(np.array(weights), parts)


# ---------------------------------------------------------------- 4s bound

def random_psd(dim: int, rng: np.random.Generator, rank: int | None = None,
               real: bool = False) -> np.ndarray:
    """Random PSD operator with largest eigenvalue 1."""
    rank = dim if rank is None else rank
    X = rng.normal(size=(dim, rank))
    if not real:
        X = X + 1j * rng.normal(size=(dim, rank))
    M = X @ X.conj().T
    return M / np.linalg.eigvalsh(M)[-1]


@dataclass
class FourSReport:
    lam_max: float
    s_plus: float
    ratio: float
    oracle: float | None = None

    @property
    def passed(self) -> bool:
        return self.lam_max <= 4 * self.s_plus + 1e-6

    def to_dict(self) -> dict:
        return {"lam_max": self.lam_max, "s_plus": self.s_plus, "ratio": self.ratio,
                "oracle": self.oracle, "passed": self.passed}


def four_s_bound_check(M, restarts: int = 20, seed: int = 0, oracle: bool = False,
                       step: float = 0.02) -> FourSReport:
    """Compare lambda_max(M) with the non-negative maximum s+ of <x, M x>.

    The non-negative search is warm-started from the four parts of the top
    eigenvector, which is exactly the set of states the bound argument uses.
    """
    M = np.asarray(M)
    H = 0.5 * (M + M.conj().T)
    ev, V = np.linalg.eigh(H)
    if ev[0] < -1e-9:
        raise ValueError("operator is not positive semidefinite")
    if ev[-1] > 1 + 1e-9:
        raise ValueError("operator exceeds the identity")
    F = adversary.QuadraticForm(np.real(H))
    # for a real vector x, x^dagger H x = x^T Re(H) x
    top = decompose_four(V[:, -1])
    warm = [[p] for a, p in zip(top.weights, top.parts) if a > 0]
    rep = adversary.maximize_acceptance(F, adversary.ProverAnsatz((H.shape[0],)),
                                        restarts=restarts, seed=seed, warm_starts=warm)
    s_plus = rep.best_value
    orc = None
    if oracle and H.shape[0] <= 4:
        orc, _ = adversary.grid_bruteforce(adversary.batched_quadratic(np.real(H)),
                                           (H.shape[0],), step=step)
        s_plus = max(s_plus, orc)
    lam = float(ev[-1])
    return FourSReport(lam, float(s_plus), lam / s_plus if s_plus > 0 else math.inf, orc)


def four_s_audit(count: int = 1000, max_dim: int = 6, seed: int = 0) -> dict:
    rng = make_rng(seed)
    worst, failures = 0.0, 0
    for _ in range(count):
        d = int(rng.integers(1, max_dim + 1))
        M = random_psd(d, rng, rank=int(rng.integers(1, d + 1)))
        r = four_s_bound_check(M, restarts=4, seed=int(rng.integers(2 ** 31)))
        worst = max(worst, r.ratio)
        failures += not r.passed
    return {"count": count, "max_dim": max_dim, "worst_ratio": worst, "failures": failures,
            "passed": failures == 0}


# ---------------------------------------------------------------- re-encoding

SIGN_MAP = np.array([[1, -1], [1, 1]]) / math.sqrt(2)        # columns: images of |+>, |->
FIELD_MAP = np.array([[1, 1j], [1j, -1]]) / math.sqrt(2)     # columns: images of |R>, |C>


@dataclass
class ReencodedProof:
    base: np.ndarray
    encoded: np.ndarray          # shape (dim, 2 signs, 2 fields), non-negative

    @property
    def state(self) -> np.ndarray:
        return self.encoded.reshape(-1)


def reencode_plus(psi) -> ReencodedProof:
    """Move phases into sign and field registers so all amplitudes are non-negative.

    Sign index 0 is '+', 1 is '-'; field index 0 is the real part, 1 the imaginary part.
    Zero parts are given the '+' sign.
    """
    x = np.asarray(vec(psi), dtype=np.complex128)
    enc = np.zeros((x.size, 2, 2))
    for f, part in enumerate((x.real, x.imag)):
        neg = part < 0
        enc[~neg, 0, f] = part[~neg]
        enc[neg, 1, f] = -part[neg]
    return ReencodedProof(x, enc)


@dataclass
class DecodeResult:
    outcome: tuple
    probabilities: np.ndarray    # 2x2 over (sign outcome, field outcome)
    collapsed: np.ndarray | None

    @property
    def p00(self) -> float:
        return float(self.probabilities[0, 0])


def arthur_decode(phi, seed=None, outcome: tuple | None = None) -> DecodeResult:
    """Apply the sign and field transforms, then measure both registers.

    ``phi`` is a ReencodedProof or an array of shape (dim, 2, 2). With ``outcome``
    given the measurement is post-selected on it, otherwise sampled from ``seed``.
    """
    t = phi.encoded if isinstance(phi, ReencodedProof) else np.asarray(phi).reshape(-1, 2, 2)
    out = np.einsum("as,bf,rsf->rab", SIGN_MAP, FIELD_MAP, t.astype(np.complex128))
    probs = np.sum(np.abs(out) ** 2, axis=0)
    if outcome is None:
        rng = make_rng(seed)
        flat = int(rng.choice(4, p=probs.reshape(-1) / probs.sum()))
        outcome = divmod(flat, 2)
    a, b = outcome
    col = out[:, a, b]
    nrm = np.linalg.norm(col)
    return DecodeResult(tuple(int(v) for v in outcome), probs, col / nrm if nrm > 0 else None)


def decode_fidelity(psi, seed=None) -> tuple[float, float]:
    """(P[00], |<collapse|psi>|^2) for the honest encoding of psi."""
    x = np.asarray(vec(psi), dtype=np.complex128)
    d = arthur_decode(reencode_plus(x), outcome=(0, 0))
    return d.p00, float(abs(np.vdot(d.collapsed, x)) ** 2)


# ---------------------------------------------------------------- gap amplification numerics

def gap_f(p: float, x: float) -> float:
    if not (0 <= p <= 1 and 0 <= x <= 1):
        raise ValueError("p and x must lie in [0, 1]")
    return p * (x * x + 2) / 3 + (1 - p) * math.sqrt(1 - x)


def _gap_fprime(p: float, x: float) -> float:
    return 2 * p * x / 3 - (1 - p) / (2 * math.sqrt(1 - x))


@dataclass
class GapReport:
    p: float
    grid_max: float
    argmax: float
    boundary_value: float
    critical_points: list
    expected_critical: list = field(default_factory=list)
    grid_step: float = 1e-6

    @property
    def passed(self) -> bool:
        ok = abs(self.grid_max - 7 / 9) <= 1e-9 and abs(self.boundary_value - 7 / 9) <= 1e-12
        ok &= len(self.critical_points) == len(self.expected_critical)
        ok &= all(abs(a - b) <= 1e-9 for a, b in zip(self.critical_points, self.expected_critical))
        return bool(ok)

    def to_dict(self) -> dict:
        return {"p": self.p, "grid_max": self.grid_max, "argmax": self.argmax,
                "boundary_value": self.boundary_value, "critical_points": self.critical_points,
                "expected_critical": self.expected_critical, "grid_step": self.grid_step,
                "passed": self.passed}


def verify_gap_max(p: float = 2 / 3, step: float = 1e-6) -> GapReport:
    """Grid sweep of f(p, .) on [0, 1] plus root finding on sign changes of its derivative."""
    xs = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    vals = p * (xs ** 2 + 2) / 3 + (1 - p) * np.sqrt(1 - xs)
    t = int(np.argmax(vals))
    inner = xs[1:-1]
    der = 2 * p * inner / 3 - (1 - p) / (2 * np.sqrt(1 - inner))
    crit = []
    for j in np.nonzero(np.sign(der[:-1]) != np.sign(der[1:]))[0]:
        crit.append(brentq(lambda x: _gap_fprime(p, x), inner[j], inner[j + 1], xtol=1e-15))
    expected = sorted([(1 + math.sqrt(13)) / 8, 3 / 4])
    return GapReport(p, float(vals[t]), float(xs[t]), gap_f(p, 0.0), sorted(crit), expected, step)


# ---------------------------------------------------------------- product test bounds

@dataclass
class ProductAuditReport:
    samples: int
    violations_high: int
    violations_any: int
    max_excess: float
    oracle_error: float
    epr_pt: float
    epr_omega: float

    @property
    def passed(self) -> bool:
        return (self.violations_high == 0 and self.violations_any == 0
                and self.oracle_error <= ORACLE_ATOL and abs(self.epr_pt - 0.75) <= ORACLE_ATOL
                and abs(self.epr_omega - 0.5) <= ORACLE_ATOL)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _sample_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    # mix Haar states with near-product states so the omega >= 1/2 branch is exercised
    x = vec(haar_state(dim, rng))
    return np.asarray(x)


def product_test_bound_audit(partition=(2, 2), samples: int = 1000, seed: int = 0,
                             tol: float = 1e-9) -> ProductAuditReport:
    partition = tuple(partition)
    dim = int(np.prod(partition))
    rng = make_rng(seed)
    hi = anyv = 0
    excess = -math.inf
    oerr = 0.0
    for s in range(samples):
        if s % 2:
            x = _sample_state(dim, rng)
        else:
            # perturbed product state
            prod = np.ones(1, dtype=np.complex128)
            for d in partition:
                prod = np.kron(prod, vec(haar_state(d, rng)))
            x = prod + 0.3 * rng.random() * _sample_state(dim, rng)
            x = x / np.linalg.norm(x)
        pt = product_test(x, x, partition)
        oerr = max(oerr, abs(pt - product_test_reduced_oracle(x, x, partition)))
        w = adversary.omega(x, partition)
        b_any = w * w / 3 + 2 / 3
        excess = max(excess, pt - b_any)
        anyv += pt > b_any + tol
        if w >= 0.5:
            b_hi = 1 - w + w * w
            excess = max(excess, pt - b_hi)
            hi += pt > b_hi + tol
    epr = np.zeros(4)
    epr[0] = epr[3] = 1 / math.sqrt(2)
    return ProductAuditReport(samples, int(hi), int(anyv), float(excess), float(oerr),
                              product_test(epr, epr, (2, 2)), adversary.omega(epr, (2, 2)))


# ---------------------------------------------------------------- symmetric subspace

@dataclass
class SymProjectorReport:
    d: int
    samples: int
    deviation: float
    eigenvalues_ok: bool
    swap_identity_error: float
    rate_ratio: float | None = None


def symmetric_projector_identity_check(d: int, samples: int = 100_000, seed: int = 0,
                                       swap_pairs: int = 100) -> SymProjectorReport:
    """Haar average of |theta theta><theta theta| versus Pi_sym / tr(Pi_sym)."""
    if d > 6:
        raise ValueError("d must be at most 6")
    rng = make_rng(seed)
    P = symmetric_projector(d)
    target = P / (d * (d + 1) / 2)
    acc = np.zeros((d * d, d * d), dtype=np.complex128)
    chunk = 10_000
    done = 0
    half_dev = None
    while done < samples:
        m = min(chunk, samples - done)
        th = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
        th /= np.linalg.norm(th, axis=1, keepdims=True)
        tt = np.einsum("mi,mj->mij", th, th).reshape(m, -1)
        acc += tt.T @ tt.conj()
        done += m
        if half_dev is None and done >= samples // 4 and samples >= 4 * chunk:
            half_dev = float(np.linalg.norm(acc / done - target, 2))
    dev = float(np.linalg.norm(acc / samples - target, 2))
    ev = np.linalg.eigvalsh(P)
    ev_ok = bool(np.all(np.minimum(np.abs(ev), np.abs(ev - 1)) < 1e-12))
    err = 0.0
    for _ in range(swap_pairs):
        a, b = vec(haar_state(d, rng)), vec(haar_state(d, rng))
        err = max(err, abs(swap_probability(a, b) - swap_density_oracle(a, b)))
    return SymProjectorReport(d, samples, dev, ev_ok, float(err),
                              None if half_dev is None else dev / half_dev)


# ---------------------------------------------------------------- sequential repetition

def sequential_swap_acceptance(a, b, reps: int) -> tuple[float, float]:
    """(acceptance of `reps` independent swap tests on a^reps, b^reps, single-shot^reps).

    The first value projects the joint 2*reps register state onto the tensor power
    of the symmetric projector; the second is the product formula.
    """
    a = np.asarray(vec(a), dtype=np.complex128)
    b = np.asarray(vec(b), dtype=np.complex128)
    A, B = a, b
    for _ in range(reps - 1):
        A, B = np.kron(A, a), np.kron(B, b)
    joint = product_test(A, B, (a.size,) * reps)
    return joint, swap_probability(a, b) ** reps
