"""Explicit block-matrix optimizers and their exact background weights.

Each builder plants all-ones blocks and solves the border/background values
r, q from the exact row-sum or total-weight equations in rational arithmetic,
so ensemble membership validates with zero deviation.  Values live on a small
k x k grid of block pairs; materialization is only needed for modest n.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConstructionError, DomainError, ResourceError
from .graphs import Graph
from .rates import entropy_ip

MATERIALIZE_CAP = 20_000


@dataclass(frozen=True)
class BlockSpec:
    """Block-constant symmetric matrix: sizes per block, value per block pair.

    Values are exact rationals; within-block diagonals are zero (an all-ones
    block of size s contributes s-1 to its rows).
    """

    sizes: tuple          # positive ints
    values: tuple         # tuple of tuples of Fraction, symmetric, in [0,1]

    def __post_init__(self):
        k = len(self.sizes)
        if any(s <= 0 for s in self.sizes):
            raise DomainError("block sizes must be positive")
        if len(self.values) != k or any(len(row) != k for row in self.values):
            raise DomainError("values must be k x k for k blocks")
        for a in range(k):
            for b in range(k):
                val = self.values[a][b]
                if val != self.values[b][a]:
                    raise DomainError("block values must be symmetric")
                if not (0 <= val <= 1):
                    raise DomainError(f"block value {float(val)} outside [0,1]")

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def num_blocks(self):
        return len(self.sizes)

    def value_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.values])

    def materialize(self) -> np.ndarray:
        if self.n > MATERIALIZE_CAP:
            raise ResourceError(
                f"refusing to materialize n={self.n} > {MATERIALIZE_CAP}"
            )
        labels = np.repeat(np.arange(self.num_blocks), self.sizes)
        x = self.value_matrix()[labels[:, None], labels[None, :]]
        np.fill_diagonal(x, 0.0)
        return x

    def row_sums_exact(self):
        """Row sum per block, as Fractions (one value per block by symmetry)."""
        out = []
        for a in range(self.num_blocks):
            total = sum(
                Fraction(self.sizes[b]) * self.values[a][b]
                for b in range(self.num_blocks)
            ) - self.values[a][a]
            out.append(total)
        return out

    def total_weight_exact(self) -> Fraction:
        """Sum over unordered pairs i < j."""
        ordered = sum(
            Fraction(self.sizes[a]) * self.sizes[b] * self.values[a][b]
            for a in range(self.num_blocks)
            for b in range(self.num_blocks)
        ) - sum(Fraction(self.sizes[a]) * self.values[a][a] for a in range(self.num_blocks))
        return ordered / 2

    def entropy(self, p: float) -> float:
        """I_p over ordered pairs, computed blockwise (any n)."""
        total = 0.0
        for a in range(self.num_blocks):
            for b in range(self.num_blocks):
                pairs = self.sizes[a] * self.sizes[b] - (self.sizes[a] if a == b else 0)
                total += pairs * entropy_ip(float(self.values[a][b]), p)
        return total

    def hom_density(self, h: Graph) -> float:
        """Exact t(h, .) on the block matrix: partitions of V(h) into
        independent groups (coincident images), falling factorials per block."""
        return _block_hom_density(h, self.sizes, self.value_matrix())

    def hom_normalized(self, h: Graph, p: float) -> float:
        if not (0 < p < 1):
            raise DomainError(f"p must be in (0,1), got {p}")
        return self.hom_density(h) / p ** h.edge_count

    def to_json(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "values": [[float(v) for v in row] for row in self.values],
        }

    @staticmethod
    def from_json(obj) -> "BlockSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        values = tuple(
            tuple(Fraction(v).limit_denominator(10 ** 15) for v in row)
            for row in obj["values"]
        )
        return BlockSpec(tuple(int(s) for s in obj["sizes"]), values)


def _independent_group_partitions(h: Graph):
    """Set partitions of V(h) whose groups are independent sets in h."""
    adj = h.neighbors()

    def rec(v, groups):
        if v == h.vertex_count:
            yield [tuple(g) for g in groups]
            return
        for g in groups:
            if all(u not in adj[v] for u in g):
                g.append(v)
                yield from rec(v + 1, groups)
                g.pop()
        groups.append([v])
        yield from rec(v + 1, groups)
        groups.pop()

    yield from rec(0, [])


def _block_hom_density(h: Graph, sizes, values: np.ndarray) -> float:
    v = h.vertex_count
    n = sum(sizes)
    k = len(sizes)
    total = 0.0
    for groups in _independent_group_partitions(h):
        gindex = {}
        for gi, g in enumerate(groups):
            for u in g:
                gindex[u] = gi
        qedges = [(gindex[a], gindex[b]) for a, b in h.edges]
        for assign in itertools.product(range(k), repeat=len(groups)):
            # falling factorial: each group consumes one distinct block vertex
            w = 1.0
            used = [0] * k
            for r in assign:
                w *= sizes[r] - used[r]
                used[r] += 1
                if w == 0.0:
                    break
            if w == 0.0:
                continue
            for (ga, gb) in qedges:
                w *= values[assign[ga], assign[gb]]
                if w == 0.0:
                    break
            if w != 0.0:
                total += w
    return total / float(n) ** v


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _require_unit(name, value: Fraction):
    if not (0 <= value <= 1):
        raise ConstructionError(
            f"{name} = {float(value):.6g} outside [0,1]; parameters out of regime"
        )
    return value


def build_cycle_blocks(n: int, d: int, delta: float, l: int) -> BlockSpec:
    """Degree-exact optimizer for cycle patterns: floor(delta) maximal
    (d+1)-cliques, one fractional clique of size ~ frac(delta)^{1/l} d,
    border r and background q solving the row-sum equations exactly."""
    if l < 3:
        raise DomainError("cycle length must be >= 3")
    if delta <= 0:
        raise DomainError("delta must be > 0")
    if d < 2 or d >= n:
        raise DomainError("need 2 <= d < n")
    whole = math.floor(delta)
    frac = delta - whole
    s1 = round(frac ** (1.0 / l) * d) if frac > 0 else 0
    if frac > 0 and s1 < 2:
        raise ConstructionError(
            f"fractional clique size rounds to {s1}; d too small for delta={delta}"
        )
    s = whole * (d + 1) + s1
    if s > n // 2:
        raise ConstructionError(f"planted blocks of total size {s} exceed n/2")

    sizes = [d + 1] * whole
    values_dim = whole
    if s1 > 0:
        sizes.append(s1)
        values_dim += 1
    sizes.append(n - s)
    k = len(sizes)
    vals = [[Fraction(0)] * k for _ in range(k)]
    for a in range(values_dim):
        vals[a][a] = Fraction(1)
    # background block: index k-1
    if s1 > 0:
        r = Fraction(d - s1 + 1, n - s)
        _require_unit("r", r)
        q = (Fraction(d) - s1 * r) / (n - s - 1)
        _require_unit("q", q)
        vals[values_dim - 1][k - 1] = r
        vals[k - 1][values_dim - 1] = r
    else:
        q = Fraction(d, n - s - 1)
        _require_unit("q", q)
    vals[k - 1][k - 1] = q
    return BlockSpec(tuple(sizes), tuple(tuple(row) for row in vals))


def build_clique_block(n: int, d: int, delta: float, h: Graph) -> BlockSpec:
    """Single planted clique of size ~ delta^{1/v} n p^{Delta/2} for a
    Delta-regular pattern with Delta >= 3, row sums exactly d."""
    if not (h.is_regular() and h.max_degree() >= 3):
        raise DomainError("pattern must be Delta-regular with Delta >= 3")
    if delta <= 0:
        raise DomainError("delta must be > 0")
    p = d / n
    s1 = round(delta ** (1.0 / h.vertex_count) * n * p ** (h.max_degree() / 2.0))
    if not (2 <= s1 <= d // 2):
        raise ConstructionError(
            f"clique size s1={s1} outside [2, d/2]; parameters out of regime"
        )
    r = Fraction(d - s1 + 1, n - s1)
    _require_unit("r", r)
    q = (Fraction(d) - s1 * r) / (n - s1 - 1)
    _require_unit("q", q)
    return BlockSpec(
        (s1, n - s1),
        ((Fraction(1), r), (r, q)),
    )


def build_clique_hub(n: int, m: int, x: float, y: float, delta: int) -> BlockSpec:
    """Hub of size ~ x p^Delta n fully joined to everything, clique block of
    size ~ y p^{Delta/2} n, background q absorbing the total-weight residual
    so that the unordered weight sum is exactly m."""
    if x < 0 or y < 0 or (x == 0 and y == 0):
        raise DomainError("need x, y >= 0, not both zero")
    if delta < 2:
        raise DomainError("Delta must be >= 2")
    n_e = n * (n - 1) // 2
    if not (0 < m < n_e):
        raise DomainError("need 0 < m < n(n-1)/2")
    p = m / n_e
    s1 = round(x * p ** delta * n)
    s = round(y * p ** (delta / 2.0) * n) + s1
    if x > 0 and s1 < 1:
        raise ConstructionError("hub size rounds to 0; x too small at this scale")
    if y > 0 and s - s1 < 2:
        raise ConstructionError("clique size rounds below 2; y too small at this scale")
    if s >= n:
        raise ConstructionError(f"planted size s={s} >= n")

    ones_pairs = s * (s - 1) // 2 + s1 * (n - s)
    q = Fraction(m - ones_pairs, n_e - ones_pairs)
    _require_unit("q", q)

    sizes = []
    kinds = []  # "hub", "clique", "bg"
    if s1 > 0:
        sizes.append(s1)
        kinds.append("hub")
    if s - s1 > 0:
        sizes.append(s - s1)
        kinds.append("clique")
    sizes.append(n - s)
    kinds.append("bg")
    k = len(sizes)
    one, vals = Fraction(1), [[Fraction(0)] * k for _ in range(k)]
    for a in range(k):
        for b in range(k):
            pair = {kinds[a], kinds[b]}
            if pair <= {"hub", "clique"} or pair == {"hub", "bg"}:
                vals[a][b] = one
            elif kinds[a] == kinds[b] == "bg" or pair == {"clique", "bg"}:
                vals[a][b] = q
    return BlockSpec(tuple(sizes), tuple(tuple(row) for row in vals))


def build_irregular_dreg(n: int, d: int, h: Graph, x: float) -> BlockSpec:
    """Upper-bound construction for irregular patterns in the constant-degree
    ensemble: hub s1 ~ x n p^{f-1} joined to a block of size d+1-s1, with r
    and q solved from the exact row-sum equations."""
    from .graphs import f_exponent

    if h.min_degree() < 2:
        raise DomainError("pattern must have min degree >= 2 (apply two_core)")
    if h.is_regular() or h.max_degree() < 3:
        raise DomainError("pattern must be irregular with Delta >= 3 (use build_clique_block otherwise)")
    if x <= 0:
        raise DomainError("x must be > 0")
    p = d / n
    f = float(f_exponent(h))
    s1 = round(x * n * p ** (f - 1.0))
    if not (1 <= s1 < d):
        raise ConstructionError(f"hub size s1={s1} outside [1, d)")
    # sizes (s1, d+1-s1, n-d-1): rows in the first block then sum to exactly d
    s2 = d + 1 - s1
    s3 = n - d - 1
    if s3 <= 2:
        raise ConstructionError("background block too small")
    r = Fraction(d - s1, n - s1 - 1)
    _require_unit("r", r)
    q = (Fraction(d) - r * s2) / (s3 - 1)
    _require_unit("q", q)
    one, zero = Fraction(1), Fraction(0)
    vals = (
        (one, one, zero),
        (one, r, r),
        (zero, r, q),
    )
    return BlockSpec((s1, s2, s3), vals)


# ---------------------------------------------------------------------------
# membership validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipReport:
    kind: str
    deviation: float
    passes: bool
    detail: str = ""

    def to_json(self):
        return {
            "kind": self.kind,
            "deviation": self.deviation,
            "passes": self.passes,
            "detail": self.detail,
        }


def validate_membership(x, ensemble) -> MembershipReport:
    """Check a matrix or BlockSpec against an ensemble's defining constraints.

    Regular(d): max row-sum deviation.  Uniform(m): total-weight deviation
    (sum over i<j compared to m).  ER/BlockModel: entry-range check only.
    BlockSpec inputs use exact rational arithmetic and report deviation 0
    when the constraints hold identically.
    """
    kind = ensemble.kind
    if kind == "regular":
        d = ensemble.d
        if isinstance(x, BlockSpec):
            dev = max(abs(rs - d) for rs in x.row_sums_exact())
            deviation = float(dev)
        else:
            xm = np.asarray(x, dtype=float)
            deviation = float(np.abs(xm.sum(axis=1) - d).max())
        return MembershipReport("regular", deviation, deviation <= 1e-9,
                                f"target row sum {d}")
    if kind == "uniform":
        m = ensemble.m
        if isinstance(x, BlockSpec):
            deviation = float(abs(x.total_weight_exact() - m))
        else:
            xm = np.asarray(x, dtype=float)
            deviation = abs(float(np.triu(xm, 1).sum()) - m)
        return MembershipReport("uniform", deviation, deviation <= 1e-9,
                                f"target total weight {m} over unordered pairs")
    if kind in ("er", "block", "planted"):
        xm = x.materialize() if isinstance(x, BlockSpec) else np.asarray(x, dtype=float)
        low, high = float(xm.min()), float(xm.max())
        deviation = max(0.0, -low) + max(0.0, high - 1.0)
        return MembershipReport(kind, deviation, deviation <= 1e-9,
                                "entry-range check only")
    raise DomainError(f"unknown ensemble kind {kind!r}")
