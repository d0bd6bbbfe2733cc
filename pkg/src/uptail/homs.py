"""Exact and weighted homomorphism counting.

Two engines: a flat full-grid reference (broadcast product over all n^v maps)
and an elimination-order dynamic program (greedy min-width, einsum per step).
Both count labeled homomorphisms; the zero diagonal of weight matrices kills
maps that repeat adjacent vertices.
"""

from __future__ import annotations

import itertools
import string

import numpy as np

from .errors import DomainError, NumericError, ResourceError
from .graphs import Graph

WIDTH_CAP = 5          # elimination width (treewidth) limit for the DP
BRUTE_CELL_CAP = 30_000_000   # n^v entries for the flat-grid engine
DP_CELL_CAP = 140_000_000     # entries of any single DP intermediate


def check_weight_matrix(x, tol=1e-9):
    """Validate a symmetric [0,1] matrix with zero diagonal."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DomainError("weight matrix must be square")
    if np.abs(np.diag(x)).max(initial=0.0) > tol:
        raise DomainError("weight matrix must have zero diagonal")
    if not np.allclose(x, x.T, atol=tol, rtol=0):
        raise DomainError("weight matrix must be symmetric")
    if x.min(initial=0.0) < -tol or x.max(initial=0.0) > 1 + tol:
        raise DomainError("weight matrix entries must lie in [0,1]")
    return x


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------

def _brute_sum(h: Graph, w: np.ndarray):
    """Sum over all maps [v]->[n] of the edge-weight product, by full-grid
    broadcasting.  Reference oracle; no elimination cleverness."""
    v, n = h.vertex_count, w.shape[0]
    if v > 10:
        raise ResourceError(f"brute-force engine capped at 10 pattern vertices, got {v}")
    if n ** v > BRUTE_CELL_CAP:
        raise ResourceError(f"brute-force grid n^v = {n}^{v} exceeds cell cap")
    if v == 0:
        return w.dtype.type(1)
    total = np.ones((n,) * v, dtype=w.dtype)
    idx = np.arange(n)
    for a, b in h.edges:
        sa = [None] * v
        sa[a] = slice(None)
        sb = [None] * v
        sb[b] = slice(None)
        total = total * w[idx[tuple(sa)], idx[tuple(sb)]]
    return total.sum()


def _elimination_order(h: Graph):
    """Greedy min-degree order on the pattern; returns (order, width)."""
    adj = {v: set(ns) for v, ns in enumerate(h.neighbors())}
    order = []
    width = 0
    while adj:
        v = min(adj, key=lambda u: (len(adj[u]), u))
        order.append(v)
        nbrs = adj.pop(v)
        width = max(width, len(nbrs))
        for u in nbrs:
            adj[u].discard(v)
            adj[u].update(nbrs - {u})
    return order, width


def _build_plan(h: Graph, pinned):
    """Symbolic contraction plan for the elimination DP (n-independent).

    Steps reference factor slots; slot 'W' is the weight matrix, 'ONES' a
    length-n ones vector.  Cached per (pattern, pinned) so repeated solver
    evaluations skip all the plan-building overhead.
    """
    order, width = _elimination_order(h)
    if width > WIDTH_CAP:
        raise ResourceError(
            f"pattern elimination width {width} exceeds DP width cap {WIDTH_CAP}"
        )
    letters = string.ascii_letters
    deg = h.degrees()
    factors = []  # (vars tuple, slot) where slot is 'W', 'ONES', or step index
    for a, b in h.edges:
        factors.append(((a, b), "W"))
    for v in range(h.vertex_count):
        if deg[v] == 0 and v not in pinned:
            factors.append(((v,), "ONES"))
    steps = []  # (subscript, slots, out_vars, scalar_flag)

    for v in order:
        if v in pinned:
            continue
        touching = [f for f in factors if v in f[0]]
        rest = [f for f in factors if v not in f[0]]
        if not touching:
            continue
        all_vars = sorted(set(itertools.chain.from_iterable(f[0] for f in touching)))
        out_vars = tuple(u for u in all_vars if u != v)
        sym = {u: letters[i] for i, u in enumerate(all_vars)}
        sub = ",".join("".join(sym[u] for u in f[0]) for f in touching)
        out = "".join(sym[u] for u in out_vars)
        steps.append((f"{sub}->{out}", tuple(f[1] for f in touching), len(out_vars)))
        if out_vars:
            rest.append((out_vars, len(steps) - 1))
        factors = rest

    pins = tuple(sorted(pinned))
    final = None
    if pins:
        sym = {u: letters[i] for i, u in enumerate(pins)}
        if factors:
            sub = ",".join("".join(sym[u] for u in f[0]) for f in factors)
            out = "".join(sym[u] for u in pins)
            final = (f"{sub}->{out}", tuple(f[1] for f in factors))
        else:
            final = None
    else:
        # leftovers are scalar-free factors already reduced; none expected
        final = None
    return steps, factors, pins, final


_PLAN_CACHE = {}


def _get_plan(h: Graph, pinned):
    key = (h.vertex_count, h.edges, tuple(sorted(pinned)))
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = _build_plan(h, pinned)
        _PLAN_CACHE[key] = plan
    return plan


def _dp_sum(h: Graph, w: np.ndarray, pinned=()):
    """Elimination-order DP.  Returns a scalar, or an ndarray over the pinned
    pattern vertices (axes in sorted pin order) when `pinned` is nonempty."""
    n = w.shape[0]
    steps, leftovers, pins, final = _get_plan(h, pinned)
    ones = None
    results = []

    def fetch(slot):
        nonlocal ones
        if slot == "W":
            return w
        if slot == "ONES":
            if ones is None:
                ones = np.ones(n, dtype=w.dtype)
            return ones
        return results[slot]

    scalar = w.dtype.type(1)
    for sub, slots, out_arity in steps:
        if n ** out_arity > DP_CELL_CAP:
            raise ResourceError(
                f"DP intermediate of n^{out_arity} entries exceeds memory cap"
            )
        opt = True if (len(slots) > 2 or n >= 128) else False
        merged = np.einsum(sub, *[fetch(s) for s in slots], optimize=opt)
        results.append(merged)
        if out_arity == 0:
            scalar = scalar * merged

    if not pins:
        return scalar

    if final is not None:
        sub, slots = final
        opt = True if (len(slots) > 2 or n >= 128) else False
        result = np.einsum(sub, *[fetch(s) for s in slots], optimize=opt)
    else:
        result = np.ones((n,) * len(pins), dtype=w.dtype)
    return scalar * result


def _hom_sum(h: Graph, w: np.ndarray, engine="auto"):
    if engine == "brute":
        return _brute_sum(h, w)
    if engine == "dp":
        return _dp_sum(h, w)
    try:
        return _dp_sum(h, w)
    except ResourceError:
        return _brute_sum(h, w)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def hom_count(h: Graph, g: Graph, engine="auto") -> int:
    """Number of adjacency-preserving maps V(h) -> V(g) (not nec. injective)."""
    w = g.adjacency()  # int64: counts stay exact
    return int(_hom_sum(h, w, engine=engine))


def hom_density_t(h: Graph, x, engine="auto") -> float:
    """t(h, X) = n^{-v} sum over maps of the edge-weight product."""
    x = check_weight_matrix(x)
    n = x.shape[0]
    if n == 0:
        raise DomainError("empty weight matrix")
    return float(_hom_sum(h, x, engine=engine)) / float(n) ** h.vertex_count


def hom_normalized(h: Graph, x, p: float, engine="auto") -> float:
    """hom(h, X) = t(h, X) / p^e, computed on X/p to dodge underflow."""
    if not (0 < p < 1):
        raise DomainError(f"p must be in (0,1), got {p}")
    x = check_weight_matrix(x)
    n = x.shape[0]
    return float(_hom_sum(h, x / p, engine=engine)) / float(n) ** h.vertex_count


def cycle_hom_spectral(l: int, x, p: float) -> float:
    """hom(C_l, X) via eigenvalues: (np)^{-l} sum_i lambda_i^l."""
    if l < 3:
        raise DomainError("cycle length must be >= 3")
    x = check_weight_matrix(x)
    n = x.shape[0]
    try:
        lam = np.linalg.eigvalsh(x)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}")
    return float(np.sum((lam / (n * p)) ** l))


def hom_gradient(h: Graph, x, engine="auto") -> np.ndarray:
    """d t(h, X) / d x_uv, treating x_uv = x_vu as one variable.

    For each pattern edge (a,b), sums the density of maps pinning
    {phi(a), phi(b)} = {u, v}; symmetric with zero diagonal.
    """
    x = check_weight_matrix(x)
    n = x.shape[0]
    v = h.vertex_count
    grad = np.zeros((n, n))
    for a, b in h.edges:
        rest = Graph(v, tuple(e for e in h.edges if e != (a, b)))
        q = _dp_sum(rest, x, pinned=(a, b))
        grad += q + q.T
    np.fill_diagonal(grad, 0.0)
    return grad / float(n) ** v


def batched_hom_normalized(h: Graph, a_stack: np.ndarray, p: float) -> np.ndarray:
    """hom(h, .) for a batch of 0/1 adjacency matrices, shape (B, n, n)."""
    if not (0 < p < 1):
        raise DomainError(f"p must be in (0,1), got {p}")
    b, n, _ = a_stack.shape
    v, e = h.vertex_count, h.edge_count
    letters = string.ascii_lowercase
    sym = {u: letters[u] for u in range(v)}
    subs = ",".join("z" + sym[i] + sym[j] for i, j in h.edges)
    free = [u for u in range(v) if all(u not in edge for edge in h.edges)]
    counts = np.einsum(f"{subs}->z", *[a_stack.astype(float)] * e, optimize=True)
    scale = float(n) ** len(free)
    return counts * scale / (float(n) ** v * p ** e)
