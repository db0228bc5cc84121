"""Finite-field lines, primes, circuit-to-quadratic reduction and the Hadamard PCP.

Bit vectors are stored as Python/numpy integers, most significant bit first: bit
position 0 of an n-bit vector is the 2^(n-1) place. A tensor w (x) w' over F_2^n
occupies bit position j*n + k for the product w_j w'_k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .qstate import make_rng


# ---------------------------------------------------------------- bit helpers

def bits_of(x: int, width: int) -> list[int]:
    return [(x >> (width - 1 - j)) & 1 for j in range(width)]


def int_of(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | (int(b) & 1)
    return out


def unit(i: int, width: int) -> int:
    return 1 << (width - 1 - i)


def parity(x) -> np.ndarray | int:
    if isinstance(x, (int, np.integer)):
        return bin(int(x)).count("1") & 1
    x = np.asarray(x, dtype=np.uint64)
    out = np.zeros(x.shape, dtype=np.uint64)
    while np.any(x):
        out ^= x & np.uint64(1)
        x = x >> np.uint64(1)
    return out.astype(np.int64)


def tensor_bits(w: int, w2: int, n: int) -> int:
    """Integer of the n^2-bit vector w (x) w'."""
    out = 0
    for j in range(n):
        if (w >> (n - 1 - j)) & 1:
            out |= w2 << (n * (n - 1 - j))
    return out


def tensor_bits_array(w: np.ndarray, w2: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    w2 = np.asarray(w2, dtype=np.int64)
    out = np.zeros(np.broadcast(w, w2).shape, dtype=np.int64)
    for j in range(n):
        out |= ((w >> (n - 1 - j)) & 1) * (w2 << (n * (n - 1 - j)))
    return out


def rank_one_factors(a: int, n: int) -> tuple[int, int] | None:
    """(w, w') with w (x) w' = a for nonzero a, or None."""
    if a == 0:
        return None
    mask = (1 << n) - 1
    rows = [(a >> (n * (n - 1 - j))) & mask for j in range(n)]
    w2 = next(r for r in rows if r)
    if any(r not in (0, w2) for r in rows):
        return None
    w = int_of([1 if r else 0 for r in rows])
    return w, w2


# ---------------------------------------------------------------- fields and lines

def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_in_interval(n: int) -> int:
    """Largest prime in [n - 4 n^(2/3), n]."""
    if n < 2:
        raise ValueError("n must be at least 2")
    lo = math.ceil(n - 4 * n ** (2 / 3))
    for c in range(n, max(lo, 2) - 1, -1):
        if is_prime(c):
            return c
    raise ValueError(f"no prime in [{lo}, {n}]")


@dataclass(frozen=True)
class FieldSpec:
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("zero has no inverse")
        return pow(int(a), self.p - 2, self.p)

    def vec_int(self, v: Sequence[int]) -> int:
        out = 0
        for x in v:
            out = out * self.p + int(x) % self.p
        return out

    def int_vec(self, x: int, n: int) -> tuple[int, ...]:
        out = []
        for _ in range(n):
            out.append(x % self.p)
            x //= self.p
        return tuple(reversed(out))


def _line_bs(F: FieldSpec, a: Sequence[int], point: Sequence[int]) -> list[tuple[int, ...]]:
    bs = {tuple((pt - ai * t) % F.p for ai, pt in zip(a, point)) for t in range(F.p)}
    return sorted(bs)


def lines_through_count(n: int, p: int, point: Sequence[int] | None = None) -> int:
    FieldSpec(p)
    return 1 + (p ** n - 1) * p


def passes_through(F: FieldSpec, a, b, point) -> bool:
    return any(all((ai * t + bi - pt) % F.p == 0 for ai, bi, pt in zip(a, b, point))
               for t in range(F.p))


def line_index(a: Sequence[int], b: Sequence[int], point: Sequence[int], p: int) -> int:
    """0-based index of (a, b) among pairs through ``point``, ordered lexicographically by (a, b)."""
    F = FieldSpec(p)
    a = tuple(int(x) % p for x in a)
    b = tuple(int(x) % p for x in b)
    point = tuple(int(x) % p for x in point)
    if not (len(a) == len(b) == len(point)):
        raise ValueError("dimension mismatch")
    if not passes_through(F, a, b, point):
        raise ValueError("line does not pass the point")
    ai = F.vec_int(a)
    if ai == 0:
        return 0
    return 1 + (ai - 1) * p + _line_bs(F, a, point).index(b)


def line_from_index(idx: int, point: Sequence[int], p: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    F = FieldSpec(p)
    point = tuple(int(x) % p for x in point)
    n = len(point)
    if not 0 <= idx < lines_through_count(n, p):
        raise IndexError("line index out of range")
    if idx == 0:
        return (0,) * n, point
    ai, rank = divmod(idx - 1, p)
    a = F.int_vec(ai + 1, n)
    return a, _line_bs(F, a, point)[rank]


def lines_through_bruteforce(point: Sequence[int], p: int) -> list[tuple]:
    F = FieldSpec(p)
    n = len(point)
    out = []
    for a in itertools.product(range(p), repeat=n):
        for b in itertools.product(range(p), repeat=n):
            if passes_through(F, a, b, point):
                out.append((a, b))
    return sorted(out)


# ---------------------------------------------------------------- circuits

@dataclass(frozen=True)
class Gate:
    op: str                          # "AND" or "OR"
    inputs: tuple[int, int]          # variable indices of x'
    negated: tuple[bool, bool] = (False, False)


@dataclass
class Circuit:
    """Fan-in-2 formula over variables x' = (input bits | witness bits | gate outputs).

    Gate k writes variable ``num_leaves + k``; gates are listed in topological
    order and the last one is the output.
    """

    num_inputs: int
    num_witness: int
    gates: list[Gate]

    @property
    def num_leaves(self) -> int:
        return self.num_inputs + self.num_witness

    @property
    def num_vars(self) -> int:
        return self.num_leaves + len(self.gates)

    def validate(self) -> None:
        for k, g in enumerate(self.gates):
            if g.op not in ("AND", "OR"):
                raise ValueError(f"unsupported gate {g.op!r}")
            if len(g.inputs) != 2:
                raise ValueError("fan-in must be 2")
            if g.inputs[0] == g.inputs[1]:
                raise ValueError("gate inputs must be distinct")
            if any(not 0 <= i < self.num_leaves + k for i in g.inputs):
                raise ValueError("circuit is not acyclic in the listed order")

    def assignment(self, leaves: Sequence[int]) -> list[int]:
        vals = [int(v) & 1 for v in leaves]
        if len(vals) != self.num_leaves:
            raise ValueError("wrong number of leaf values")
        for g in self.gates:
            a, b = (vals[i] ^ int(ng) for i, ng in zip(g.inputs, g.negated))
            vals.append(a & b if g.op == "AND" else a | b)
        return vals

    def evaluate(self, leaves: Sequence[int]) -> int:
        return self.assignment(leaves)[-1]

    def satisfiable_with(self, x: Sequence[int]) -> bool:
        return any(self.evaluate(list(x) + list(w))
                   for w in itertools.product((0, 1), repeat=self.num_witness))


def random_formula(num_inputs: int, num_witness: int, num_gates: int, seed=None) -> Circuit:
    """Random tree-shaped formula: every gate output feeds exactly one later gate."""
    rng = make_rng(seed)
    L = num_inputs + num_witness
    if L < 2 or num_gates < 1:
        raise ValueError("need at least two leaves and one gate")
    gates: list[Gate] = []

    def build(g: int) -> int:
        # returns the variable computed by a subtree with g gates (a leaf when g == 0)
        if g == 0:
            return -1
        left = int(rng.integers(0, g))
        a, b = build(left), build(g - 1 - left)
        if a < 0 and b < 0:
            a, b = (int(v) for v in rng.choice(L, size=2, replace=False))
        elif a < 0:
            a = int(rng.integers(L))
        elif b < 0:
            b = int(rng.integers(L))
        gates.append(Gate("AND" if rng.random() < 0.5 else "OR", (a, b),
                          (bool(rng.random() < 0.3), bool(rng.random() < 0.3))))
        return L + len(gates) - 1

    build(num_gates)
    c = Circuit(num_inputs, num_witness, gates)
    c.validate()
    return c


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1 in p:
        for m2 in q:
            m = tuple(sorted(set(m1) | set(m2)))
            out[m] = out.get(m, 0) ^ 1
    return {m: 1 for m, c in out.items() if c}


def _poly_add(*ps: dict) -> dict:
    out: dict = {}
    for p in ps:
        for m in p:
            out[m] = out.get(m, 0) ^ 1
    return {m: 1 for m, c in out.items() if c}


@dataclass
class QuadSystem:
    """A (x' (x) x') = b over F_2; A has shape (rows, n*n)."""

    A: np.ndarray
    b: np.ndarray
    m: int

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.uint8) & 1
        self.b = np.asarray(self.b, dtype=np.uint8) & 1
        n2 = self.A.shape[1]
        n = math.isqrt(n2)
        if n * n != n2:
            raise ValueError("A must have n^2 columns")
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b disagree on the number of rows")

    @property
    def n(self) -> int:
        return math.isqrt(self.A.shape[1])

    @property
    def rows(self) -> int:
        return self.A.shape[0]

    def row_ints(self) -> list[int]:
        return [int_of(r) for r in self.A]

    def rank(self) -> int:
        return f2_rank(self.row_ints())

    def satisfied_by(self, xp: Sequence[int]) -> bool:
        x = np.asarray(xp, dtype=np.uint8)
        t = np.outer(x, x).reshape(-1)
        return bool(np.all((self.A.astype(np.int64) @ t) % 2 == self.b))

    def solutions_extending(self, x: Sequence[int]) -> Iterator[tuple[int, ...]]:
        for rest in itertools.product((0, 1), repeat=self.n - len(x)):
            xp = tuple(x) + rest
            if self.satisfied_by(xp):
                yield xp

    def solve_transpose(self, a: int) -> int | None:
        """u (as an integer, row 0 most significant) with A^T u = a, or None."""
        return f2_solve_combination(self.row_ints(), a)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "rows": self.rows,
                "A": [pack_bits(r) for r in self.A], "b": pack_bits(self.b)}

    @classmethod
    def from_dict(cls, doc: dict) -> "QuadSystem":
        n2 = doc["n"] ** 2
        A = np.array([unpack_bits(h, n2) for h in doc["A"]], dtype=np.uint8).reshape(-1, n2)
        return cls(A, unpack_bits(doc["b"], doc["rows"]), doc["m"])


def f2_rank(rows: Sequence[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            h = r.bit_length() - 1
            if h not in basis:
                basis[h] = r
                break
            r ^= basis[h]
    return len(basis)


def f2_solve_combination(rows: Sequence[int], target: int) -> int | None:
    """Bitmask u over rows (row 0 is the most significant bit) with XOR of chosen rows = target."""
    L = len(rows)
    basis: dict[int, tuple[int, int]] = {}
    for t, r in enumerate(rows):
        comb = 1 << (L - 1 - t)
        while r:
            h = r.bit_length() - 1
            if h not in basis:
                basis[h] = (r, comb)
                break
            r ^= basis[h][0]
            comb ^= basis[h][1]
    r, comb = target, 0
    while r:
        h = r.bit_length() - 1
        if h not in basis:
            return None
        r ^= basis[h][0]
        comb ^= basis[h][1]
    return comb


def pack_bits(bits) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def unpack_bits(h: str, length: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(h), dtype=np.uint8))[:length]


def circuit_to_quadsystem(c: Circuit, fixed: dict[int, int] | None = None) -> QuadSystem:
    """One equation per gate, the output equation z = 1, and one equation per fixed variable.

    Linear terms sit on the diagonal (x_i x_i = x_i over F_2), cross terms at (min, max).
    The circuit inputs occupy the first ``num_inputs`` coordinates of x'.
    """
    c.validate()
    n = c.num_vars
    rows, rhs = [], []

    def add_eq(poly: dict):
        row = np.zeros((n, n), dtype=np.uint8)
        const = 0
        for mono in poly:
            if len(mono) == 0:
                const ^= 1
            elif len(mono) == 1:
                row[mono[0], mono[0]] ^= 1
            else:
                i, j = mono
                row[i, j] ^= 1
        rows.append(row.reshape(-1))
        rhs.append(const)           # poly = 0  <=>  nonconstant part = const

    for k, g in enumerate(c.gates):
        z = c.num_leaves + k
        lits = []
        for i, ng in zip(g.inputs, g.negated):
            lit = {(i,): 1}
            lits.append(_poly_add(lit, {(): 1}) if ng else lit)
        xy = _poly_mul(lits[0], lits[1])
        if g.op == "AND":
            add_eq(_poly_add(xy, {(z,): 1}))
        else:
            add_eq(_poly_add({(z,): 1}, lits[0], lits[1], xy))
    add_eq({(n - 1,): 1, (): 1})
    for v, bit in sorted((fixed or {}).items()):
        add_eq({(v,): 1, (): 1} if bit else {(v,): 1})
    return QuadSystem(np.array(rows), np.array(rhs), c.num_inputs)


# ---------------------------------------------------------------- Hadamard PCP

@dataclass
class HadamardProof:
    Y: np.ndarray       # length 2^n
    Z: np.ndarray       # length 2^(n^2)
    n: int

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.uint8)
        self.Z = np.asarray(self.Z, dtype=np.uint8)
        if self.Y.size != 2 ** self.n or self.Z.size != 2 ** (self.n * self.n):
            raise ValueError("table sizes do not match n")

    def flipped(self, table: str, index: int) -> "HadamardProof":
        Y, Z = self.Y.copy(), self.Z.copy()
        (Y if table == "Y" else Z)[index] ^= 1
        return HadamardProof(Y, Z, self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "Y": pack_bits(self.Y), "Z": pack_bits(self.Z)}

    @classmethod
    def from_dict(cls, doc: dict) -> "HadamardProof":
        n = doc["n"]
        return cls(unpack_bits(doc["Y"], 2 ** n), unpack_bits(doc["Z"], 2 ** (n * n)), n)


def hadamard_prover(Q: QuadSystem, witness: Sequence[int]) -> HadamardProof:
    n = Q.n
    if n > 4:
        raise ValueError("Hadamard tables are limited to n <= 4")
    xp = int_of(witness)
    y = np.arange(2 ** n, dtype=np.int64)
    Y = parity(y & xp).astype(np.uint8)
    t = tensor_bits(xp, xp, n)
    z = np.arange(2 ** (n * n), dtype=np.int64)
    Z = parity(z & t).astype(np.uint8)
    return HadamardProof(Y, Z, n)


RANDOMNESS_FIELDS = ("y", "y2", "z", "z2", "w", "w2", "u", "i", "v")


@dataclass(frozen=True)
class HadamardRandomness:
    y: int
    y2: int
    z: int
    z2: int
    w: int
    w2: int
    u: int
    i: int
    v: int

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in RANDOMNESS_FIELDS}


class HadamardLayout:
    """Randomness space and variable naming for a fixed (n, rows, m).

    Components (y, y', z, z', w, w', u, i, v) are laid out most significant first;
    the canonical integer of r is its position in the lexicographic order.
    Variables are ("Y", a) with a < 2^n and ("Z", a) with a < 2^(n^2).
    """

    def __init__(self, Q: QuadSystem):
        self.Q = Q
        self.n = Q.n
        self.l = Q.rows
        self.m = Q.m
        if self.m < 1:
            raise ValueError("the proximity test needs at least one input bit")
        n, l, m = self.n, self.l, self.m
        self.radices = (2 ** n, 2 ** n, 2 ** (n * n), 2 ** (n * n), 2 ** n, 2 ** n, 2 ** l, m, 2 ** n)
        self.size = int(np.prod([int(r) for r in self.radices], dtype=object))
        # groups of consecutive components: (y,y'), (z,z'), (w,w'), u, (i,v)
        self.group_radices = (2 ** (2 * n), 2 ** (2 * n * n), 2 ** (2 * n), 2 ** l, m * 2 ** n)
        self._rows = Q.row_ints()

    # -- canonical encoding
    def encode(self, r: HadamardRandomness) -> int:
        out = 0
        for f, rad in zip(RANDOMNESS_FIELDS, self.radices):
            x = getattr(r, f)
            if not 0 <= x < rad:
                raise ValueError(f"component {f} out of range")
            out = out * rad + x
        return out

    def decode(self, idx: int) -> HadamardRandomness:
        if not 0 <= idx < self.size:
            raise IndexError("randomness index out of range")
        vals = []
        for rad in reversed(self.radices):
            idx, x = divmod(idx, rad)
            vals.append(int(x))
        return HadamardRandomness(*reversed(vals))

    def decode_array(self, idx: np.ndarray) -> dict:
        idx = np.asarray(idx, dtype=np.int64)
        out = {}
        for f, rad in zip(reversed(RANDOMNESS_FIELDS), reversed(self.radices)):
            out[f] = idx % rad
            idx = idx // rad
        return out

    def variables(self) -> list[tuple[str, int]]:
        return [("Y", a) for a in range(2 ** self.n)] + [("Z", a) for a in range(2 ** (self.n ** 2))]

    # -- which variables a randomness string reads
    def queries(self, r: HadamardRandomness) -> set[tuple[str, int]]:
        n = self.n
        ei = unit(r.i, n)
        at = 0
        for t, row in enumerate(self._rows):
            if (r.u >> (self.l - 1 - t)) & 1:
                at ^= row
        out = {("Y", r.y), ("Y", r.y2), ("Y", r.y ^ r.y2),
               ("Z", r.z), ("Z", r.z2), ("Z", r.z ^ r.z2),
               ("Y", r.w), ("Y", r.w2), ("Z", tensor_bits(r.w, r.w2, n)),
               ("Y", r.v ^ ei), ("Y", r.v), ("Y", ei)}
        if self.l > 0:
            # with no equations the equation check reads nothing
            out.add(("Z", at))
        return out

    def atu_table(self) -> np.ndarray:
        out = np.zeros(2 ** self.l, dtype=np.int64)
        for u in range(2 ** self.l):
            at = 0
            for t, row in enumerate(self._rows):
                if (u >> (self.l - 1 - t)) & 1:
                    at ^= row
            out[u] = at
        return out


def hadamard_verifier(proof: HadamardProof, Q: QuadSystem, x: Sequence[int],
                      r: HadamardRandomness) -> bool:
    """Run all five checks on randomness r; accept only if every check passes.

    The proximity check reads Y(v + e_i), Y(v) and Y(e_i) and requires
    Y(v + e_i) + Y(v) = Y(e_i) = x_i.
    """
    n = Q.n
    Y, Z = proof.Y, proof.Z
    if not 0 <= r.i < Q.m or len(x) != Q.m:
        raise ValueError("malformed randomness or input")
    ok = (Y[r.y] ^ Y[r.y2]) == Y[r.y ^ r.y2]
    ok &= (Z[r.z] ^ Z[r.z2]) == Z[r.z ^ r.z2]
    ok &= (Y[r.w] & Y[r.w2]) == Z[tensor_bits(r.w, r.w2, n)]
    at, ub = 0, 0
    for t, row in enumerate(Q.row_ints()):
        if (r.u >> (Q.rows - 1 - t)) & 1:
            at ^= row
            ub ^= int(Q.b[t])
    if Q.rows > 0:
        ok &= Z[at] == ub
    ei = unit(r.i, n)
    ok &= (Y[r.v ^ ei] ^ Y[r.v]) == Y[ei] == (int(x[r.i]) & 1)
    return bool(ok)


@dataclass
class HadamardAcceptance:
    linearity_y: float
    linearity_z: float
    consistency: float
    equation: float
    proximity: float

    @property
    def accept(self) -> float:
        return self.linearity_y * self.linearity_z * self.consistency * self.equation * self.proximity

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["accept"] = self.accept
        return d


def hadamard_accept_prob(proof: HadamardProof, Q: QuadSystem, x: Sequence[int]) -> HadamardAcceptance:
    """Exact acceptance probability. Each check reads its own randomness components,
    so the pass probability of the conjunction is the product of per-check fractions,
    each enumerated over its full component space."""
    n = Q.n
    if n > 3:
        raise ValueError("exact enumeration is limited to n <= 3")
    Y, Z = proof.Y.astype(np.int64), proof.Z.astype(np.int64)
    N = 2 ** n
    y = np.arange(N)
    ly = float(np.mean((Y[:, None] ^ Y[None, :]) == Y[y[:, None] ^ y[None, :]]))
    z = np.arange(2 ** (n * n))
    lz = float(np.mean((Z[:, None] ^ Z[None, :]) == Z[z[:, None] ^ z[None, :]]))
    tw = tensor_bits_array(y[:, None], y[None, :], n)
    cons = float(np.mean((Y[:, None] & Y[None, :]) == Z[tw]))
    layout = HadamardLayout(Q)
    at = layout.atu_table()
    u = np.arange(2 ** Q.rows)
    ub = np.zeros_like(u)
    for t in range(Q.rows):
        ub ^= ((u >> (Q.rows - 1 - t)) & 1) * int(Q.b[t])
    eq = float(np.mean(Z[at] == ub)) if Q.rows > 0 else 1.0
    prox = []
    for i in range(Q.m):
        ei = unit(i, n)
        xi = int(x[i]) & 1
        prox.append(np.mean(((Y[y ^ ei] ^ Y[y]) == Y[ei]) & (Y[ei] == xi)))
    return HadamardAcceptance(ly, lz, cons, eq, float(np.mean(prox)))


def hadamard_accept_prob_bruteforce(proof: HadamardProof, Q: QuadSystem, x: Sequence[int],
                                    budget: int = 4_000_000) -> float:
    """Acceptance frequency over every randomness string (vectorized)."""
    layout = HadamardLayout(Q)
    if layout.size > budget:
        raise ValueError("randomness space exceeds the budget")
    r = layout.decode_array(np.arange(layout.size))
    n = Q.n
    Y, Z = proof.Y.astype(np.int64), proof.Z.astype(np.int64)
    at = layout.atu_table()[r["u"]]
    ub = np.zeros_like(r["u"])
    for t in range(Q.rows):
        ub ^= ((r["u"] >> (Q.rows - 1 - t)) & 1) * int(Q.b[t])
    ei = np.left_shift(1, n - 1 - r["i"])
    xi = np.asarray(x, dtype=np.int64)[r["i"]]
    ok = (Y[r["y"]] ^ Y[r["y2"]]) == Y[r["y"] ^ r["y2"]]
    ok &= (Z[r["z"]] ^ Z[r["z2"]]) == Z[r["z"] ^ r["z2"]]
    ok &= (Y[r["w"]] & Y[r["w2"]]) == Z[tensor_bits_array(r["w"], r["w2"], n)]
    if Q.rows > 0:
        ok &= Z[at] == ub
    ok &= ((Y[r["v"] ^ ei] ^ Y[r["v"]]) == Y[ei]) & (Y[ei] == xi)
    return float(np.mean(ok))


# ---------------------------------------------------------------- adjacency index maps

class _PairGroup:
    """Group value c = hi * 2^lo_bits + lo with hit events that are affine in (hi, lo).

    Event kinds: ("first", a) hi = a; ("second", a) lo = a; ("sum", a) hi ^ lo = a;
    ("shift", a) lo = a ^ e_hi (e_hi the hi-th unit vector of width lo_bits);
    ("point", c0) c = c0.
    """

    def __init__(self, hi_size: int, lo_bits: int, events: list[tuple[str, int]]):
        self.hi_size = hi_size
        self.lo_bits = lo_bits
        self.lo_size = 1 << lo_bits
        self.size = hi_size * self.lo_size
        self.events = events
        self._terms = []
        for k in range(1, len(events) + 1):
            for sub in itertools.combinations(events, k):
                sign = 1 if k % 2 else -1
                if k == 1:
                    self._terms.append((sign, sub[0], None))
                else:
                    self._terms.append((sign, None, self._intersection(sub)))
        self.hits = int(self.count_below(self.size))

    def _unit(self, hi):
        hi = np.asarray(hi, dtype=np.int64)
        sh = np.clip(self.lo_bits - 1 - hi, 0, None)
        return np.where(hi < min(self.hi_size, self.lo_bits), np.left_shift(1, sh), -1)

    def contains(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.int64)
        hi, lo = c >> self.lo_bits, c & (self.lo_size - 1)
        out = np.zeros(c.shape, dtype=bool)
        for kind, a in self.events:
            out |= self._contains_one(kind, a, c, hi, lo)
        return out

    def _contains_one(self, kind, a, c, hi, lo):
        if kind == "first":
            return hi == a
        if kind == "second":
            return lo == a
        if kind == "sum":
            return (hi ^ lo) == a
        if kind == "shift":
            return lo == (a ^ self._unit(hi))
        return c == a

    def _intersection(self, sub) -> list[int]:
        kinds = dict((k, a) for k, a in sub)
        cands = []
        if "point" in kinds:
            cands = [kinds["point"]]
        elif "first" in kinds:
            hi = kinds["first"]
            for k, a in sub:
                if k == "second":
                    cands = [hi * self.lo_size + a]
                elif k == "sum":
                    cands = [hi * self.lo_size + (hi ^ a)]
                elif k == "shift":
                    e = int(self._unit(hi))
                    cands = [hi * self.lo_size + (a ^ e)] if e >= 0 else []
        elif "second" in kinds:
            lo = kinds["second"]
            for k, a in sub:
                if k == "sum":
                    cands = [(lo ^ a) * self.lo_size + lo]
                elif k == "shift":
                    d = lo ^ a
                    cands = [h * self.lo_size + lo for h in range(self.hi_size)
                             if int(self._unit(h)) == d]
        else:
            raise NotImplementedError(f"no closed form for intersection {sub}")
        out = []
        for c in cands:
            if 0 <= c < self.size and all(self._contains_one(k, a, np.int64(c), np.int64(c) >> self.lo_bits,
                                                              np.int64(c) & (self.lo_size - 1))
                                          for k, a in sub):
                out.append(int(c))
        return sorted(set(out))

    def _below_one(self, kind, a, c, hi, lo):
        if kind == "first":
            return np.where(a < hi, self.lo_size, np.where(hi == a, lo, 0))
        if kind == "second":
            return hi + (a < lo)
        if kind == "sum":
            return hi + ((hi ^ a) < lo)
        if kind == "shift":
            e = self._unit(hi)
            return np.minimum(hi, self.hi_size) + ((e >= 0) & ((a ^ e) < lo))
        return (a < c).astype(np.int64)

    def count_below(self, c) -> np.ndarray:
        """Number of hits strictly below group value c (c may equal the group size)."""
        c = np.asarray(c, dtype=np.int64)
        hi, lo = c >> self.lo_bits, c & (self.lo_size - 1)
        out = np.zeros(c.shape, dtype=np.int64)
        for sign, ev, pts in self._terms:
            if ev is not None:
                out += sign * self._below_one(ev[0], ev[1], c, hi, lo)
            else:
                for p in pts:
                    out += sign * (p < c)
        return out


class HadamardAdjacency:
    """Index maps between randomness strings reading a variable and positions in AdjV."""

    def __init__(self, layout: HadamardLayout, var: tuple[str, int]):
        self.layout = layout
        self.var = var
        n, l, m = layout.n, layout.l, layout.m
        kind, a = var
        if layout.size >= 2 ** 62:
            raise ValueError("randomness space too large for 64-bit indexing")
        if kind == "Y":
            if not 0 <= a < 2 ** n:
                raise ValueError("Y index out of range")
            inputs = [("first", i) for i in range(m) if a == unit(i, n)]
            self.groups = [
                _PairGroup(2 ** n, n, [("first", a), ("second", a), ("sum", a)]),
                _PairGroup(2 ** (n * n), n * n, []),
                _PairGroup(2 ** n, n, [("first", a), ("second", a)]),
                _PairGroup(2 ** l, 0, []),
                _PairGroup(m, n, inputs + [("second", a), ("shift", a)]),
            ]
        elif kind == "Z":
            if not 0 <= a < 2 ** (n * n):
                raise ValueError("Z index out of range")
            if a == 0:
                tens = [("first", 0), ("second", 0)]
            else:
                f = rank_one_factors(a, n)
                tens = [] if f is None else [("point", f[0] * 2 ** n + f[1])]
            u = layout.Q.solve_transpose(a) if l > 0 else None
            self.groups = [
                _PairGroup(2 ** n, n, []),
                _PairGroup(2 ** (n * n), n * n, [("first", a), ("second", a), ("sum", a)]),
                _PairGroup(2 ** n, n, tens),
                _PairGroup(2 ** l, 0, [] if u is None else [("point", u)]),
                _PairGroup(m, n, []),
            ]
        else:
            raise ValueError("variable must be ('Y', a) or ('Z', a)")
        self._sizes = [g.size for g in self.groups]
        self._misses = [g.size - g.hits for g in self.groups]
        tail = [1] * len(self.groups)
        for j in range(len(self.groups) - 2, -1, -1):
            tail[j] = tail[j + 1] * self._misses[j + 1]
        self._tail = tail
        self.count = layout.size - int(np.prod(self._misses, dtype=object))

    def _split(self, r: np.ndarray) -> list[np.ndarray]:
        parts = []
        for s in reversed(self._sizes):
            parts.append(r % s)
            r = r // s
        return list(reversed(parts))

    def count_below(self, r) -> np.ndarray:
        """|{r' < r : r' reads the variable}|, for r in [0, size]."""
        r = np.asarray(r, dtype=np.int64)
        full = r >= self.layout.size
        rr = np.where(full, 0, r)
        parts = self._split(rr)
        miss = np.zeros(r.shape, dtype=np.int64)
        alive = np.ones(r.shape, dtype=bool)
        for j, (g, c) in enumerate(zip(self.groups, parts)):
            below_miss = c - g.count_below(c)
            miss += np.where(alive, below_miss * self._tail[j], 0)
            alive &= ~g.contains(c)
        total_miss = int(np.prod(self._misses, dtype=object))
        miss = np.where(full, total_miss, miss)
        return np.where(full, self.layout.size, r) - miss

    def queries(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.int64)
        parts = self._split(r)
        out = np.zeros(r.shape, dtype=bool)
        for g, c in zip(self.groups, parts):
            out |= g.contains(c)
        return out

    def index(self, r) -> np.ndarray | int:
        """0-based position of r in AdjV; raises if r does not read the variable."""
        scalar = np.ndim(r) == 0
        r = np.asarray(r, dtype=np.int64)
        if np.any((r < 0) | (r >= self.layout.size)):
            raise IndexError("randomness index out of range")
        if not np.all(self.queries(r)):
            raise ValueError("randomness does not read this variable")
        out = self.count_below(r)
        return int(out) if scalar else out

    def from_index(self, iota) -> np.ndarray | int:
        """Randomness string at 0-based position iota in AdjV (binary search over r)."""
        scalar = np.ndim(iota) == 0
        iota = np.asarray(iota, dtype=np.int64)
        if np.any((iota < 0) | (iota >= self.count)):
            raise IndexError("adjacency index out of range")
        lo = np.zeros(iota.shape, dtype=np.int64)
        hi = np.full(iota.shape, self.layout.size - 1, dtype=np.int64)
        # smallest r with count_below(r + 1) > iota
        while np.any(lo < hi):
            mid = (lo + hi) // 2
            go_right = self.count_below(mid + 1) <= iota
            lo = np.where(go_right, mid + 1, lo)
            hi = np.where(go_right, hi, mid)
        return int(lo) if scalar else lo


def hadamard_adj_index(Q: QuadSystem, var: tuple[str, int], r: HadamardRandomness | int) -> int:
    layout = HadamardLayout(Q)
    ri = layout.encode(r) if isinstance(r, HadamardRandomness) else int(r)
    return HadamardAdjacency(layout, var).index(ri)


def hadamard_adj_from_index(Q: QuadSystem, var: tuple[str, int], iota: int) -> HadamardRandomness:
    layout = HadamardLayout(Q)
    return layout.decode(HadamardAdjacency(layout, var).from_index(iota))


def adjacency_bruteforce(layout: HadamardLayout, budget: int = 4_000_000) -> dict:
    """Boolean membership of every randomness string for every variable (full enumeration)."""
    if layout.size > budget:
        raise ValueError("randomness space exceeds the budget")
    n = layout.n
    r = layout.decode_array(np.arange(layout.size))
    ei = np.left_shift(1, n - 1 - r["i"])
    at = layout.atu_table()[r["u"]] if layout.l > 0 else np.zeros(layout.size, dtype=np.int64)
    ys = [r["y"], r["y2"], r["y"] ^ r["y2"], r["w"], r["w2"], r["v"] ^ ei, r["v"], ei]
    zs = [r["z"], r["z2"], r["z"] ^ r["z2"], tensor_bits_array(r["w"], r["w2"], n)]
    if layout.l > 0:
        zs.append(at)
    out = {}
    for a in range(2 ** n):
        out[("Y", a)] = np.logical_or.reduce([y == a for y in ys])
    for a in range(2 ** (n * n)):
        out[("Z", a)] = np.logical_or.reduce([z == a for z in zs])
    return out


# ---------------------------------------------------------------- uniformity

def variable_type(Q: QuadSystem, var: tuple[str, int]) -> str:
    n = Q.n
    kind, a = var
    if kind == "Y":
        return "Y-input" if any(a == unit(i, n) for i in range(Q.m)) else "Y-other"
    tens = a == 0 or rank_one_factors(a, n) is not None
    span = (Q.solve_transpose(a) is not None) if Q.rows > 0 else a == 0
    return f"Z-{'tensor' if tens else 'nontensor'}-{'span' if span else 'nonspan'}"


@dataclass
class UniformityReport:
    types: dict                      # type -> sorted distinct |AdjV| values
    members: dict                    # type -> number of variables
    refined: dict                    # "type|count" -> variable list (as strings)
    uniform_types: list
    nonuniform_types: list
    exhaustive: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def adjacency_count_bruteforce(layout: HadamardLayout, var: tuple[str, int]) -> int:
    """|AdjV(var)| by scanning each randomness group's full value range.

    A string reads the variable iff some group does, so the count is the total
    minus the product of per-group miss counts; each miss count is a full scan.
    """
    n, l, m = layout.n, layout.l, layout.m
    kind, a = var
    N = 2 ** n
    y = np.arange(N)
    misses = []
    if kind == "Y":
        yy = (y[:, None] == a) | (y[None, :] == a) | ((y[:, None] ^ y[None, :]) == a)
        misses.append(yy.size - int(yy.sum()))
        misses.append(2 ** (2 * n * n))
        ww = (y[:, None] == a) | (y[None, :] == a)
        misses.append(ww.size - int(ww.sum()))
        misses.append(2 ** l)
        iv = np.array([[(v == a) or (v ^ unit(i, n)) == a or unit(i, n) == a for v in range(N)]
                       for i in range(m)])
        misses.append(iv.size - int(iv.sum()))
    else:
        misses.append(2 ** (2 * n))
        z = np.arange(2 ** (n * n))
        hit = 0
        for z1 in z:
            hit += int(np.sum((z1 == a) | (z == a) | ((z1 ^ z) == a)))
        misses.append(2 ** (2 * n * n) - hit)
        tw = tensor_bits_array(y[:, None], y[None, :], n)
        misses.append(tw.size - int(np.sum(tw == a)))
        if l > 0:
            at = layout.atu_table()
            misses.append(2 ** l - int(np.sum(at == a)))
        else:
            misses.append(1)
        misses.append(m * N)
    return layout.size - int(np.prod(misses, dtype=object))


def uniformity_audit(Q: QuadSystem) -> UniformityReport:
    if Q.n > 3:
        raise ValueError("uniformity audit is limited to n <= 3")
    layout = HadamardLayout(Q)
    by_type: dict[str, dict[int, list]] = {}
    for var in layout.variables():
        t = variable_type(Q, var)
        c = adjacency_count_bruteforce(layout, var)
        by_type.setdefault(t, {}).setdefault(c, []).append(f"{var[0]}({var[1]})")
    types = {t: sorted(d) for t, d in by_type.items()}
    members = {t: sum(len(v) for v in d.values()) for t, d in by_type.items()}
    refined = {f"{t}|{c}": v for t, d in by_type.items() for c, v in sorted(d.items())}
    uni = sorted(t for t, cs in types.items() if len(cs) == 1)
    non = sorted(t for t, cs in types.items() if len(cs) > 1)
    total = sum(members.values())
    return UniformityReport(types, members, refined, uni, non,
                            total == len(layout.variables()))
