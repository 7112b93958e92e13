"""Flow networks derived from templates, maximum flow and minimum cuts.

A template becomes a flow network as follows. Every open ingoing edge turns into
an arc from the source ``s``, every open outgoing edge into an arc to the sink
``t``, and empty vertices disappear. Each internal edge becomes a pair of
antiparallel arcs. An arc from an edge of dimension ``d`` has capacity
``log2(d)`` bits. The minimum cut bounds the number of qubits needed to store
any state of the family exactly.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError
from .network import (
    DEFAULT_MAX_SVD_EXTENT,
    DEFAULT_MAX_TOTAL_DIM,
    TemplateSpec,
    evaluate_operator,
    operator_rank,
    random_network,
    require_valid,
)

SOURCE = "s"
SINK = "t"


@dataclass(frozen=True)
class Arc:
    """Capacitated arc. ``dim`` and ``edge`` record the originating edge."""

    tail: str
    head: str
    capacity: float
    dim: int | None = None
    edge: str | None = None


@dataclass(frozen=True)
class FlowGraph:
    """Directed graph with distinguished source and sink."""

    vertices: tuple[str, ...]
    arcs: tuple[Arc, ...]
    source: str = SOURCE
    sink: str = SINK

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        known = set(self.vertices)
        if len(known) != len(self.vertices):
            raise ValueError("duplicate vertices in flow graph")
        if self.source not in known or self.sink not in known or self.source == self.sink:
            raise ValueError("flow graph needs distinct source and sink vertices")
        for a in self.arcs:
            if a.tail not in known or a.head not in known:
                raise ValueError(f"arc {a} refers to an unknown vertex")
            if a.head == self.source or a.tail == self.sink:
                raise ValueError(f"arc {a.tail}->{a.head} enters the source or leaves the sink")
            if not (a.capacity >= 0 and math.isfinite(a.capacity)):
                raise ValueError(f"arc {a.tail}->{a.head} has invalid capacity {a.capacity}")

    @property
    def internal(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if v not in (self.source, self.sink))


@dataclass(frozen=True)
class Cut:
    """A source/sink partition and the arcs crossing it.

    Attributes:
        source_side: Vertices on the source side, including the source.
        capacity_bits: Total capacity of the crossing arcs.
        cut_edges: Arcs from the source side to the sink side.
        cut_dimension: Exact product of the originating edge dimensions, or
            None when some crossing arc has no dimension attached.
    """

    source_side: frozenset[str]
    capacity_bits: float
    cut_edges: tuple[Arc, ...]
    cut_dimension: int | None


def build_flow_network(t: TemplateSpec) -> FlowGraph:
    """Apply the template-to-flow-network construction.

    Arcs are emitted in the template's edge order; an internal edge yields its
    forward arc followed by the reversed one.
    """
    require_valid(t)
    filled = t.filled
    if SOURCE in filled or SINK in filled:
        raise ValueError(f"vertex ids {SOURCE!r} and {SINK!r} are reserved")
    arcs: list[Arc] = []
    for e in t.edges:
        cap = math.log2(e.dim)
        tail_filled, head_filled = t.is_filled(e.tail), t.is_filled(e.head)
        if not tail_filled:
            arcs.append(Arc(SOURCE, e.head, cap, e.dim, e.id))
        elif not head_filled:
            arcs.append(Arc(e.tail, SINK, cap, e.dim, e.id))
        else:
            arcs.append(Arc(e.tail, e.head, cap, e.dim, e.id))
            arcs.append(Arc(e.head, e.tail, cap, e.dim, e.id))
    return FlowGraph((SOURCE, *filled, SINK), tuple(arcs))


@dataclass
class _Residual:
    graph: FlowGraph
    flow: np.ndarray
    eps: float

    def residual(self, k: int, forward: bool) -> float:
        if forward:
            return self.graph.arcs[k].capacity - self.flow[k]
        return self.flow[k]


def _relabel_to_front(g: FlowGraph) -> _Residual:
    """Relabel-to-front preflow push with a small residual threshold.

    Residuals at or below ``eps`` count as saturated. Discharging stops once
    excess drops to ``excess_eps``, chosen so that a vertex still holding
    excess always has an incoming arc with flow above ``eps``; this keeps every
    relabel well defined despite rounding.
    """
    index = {v: i for i, v in enumerate(g.vertices)}
    n = len(g.vertices)
    caps = np.array([a.capacity for a in g.arcs], dtype=float)
    scale = max(1.0, float(caps.sum()))
    eps = 1e-13 * scale
    adjacency: list[list[tuple[int, bool, int]]] = [[] for _ in range(n)]
    degree = [0] * n
    for k, a in enumerate(g.arcs):
        u, v = index[a.tail], index[a.head]
        adjacency[u].append((k, True, v))
        adjacency[v].append((k, False, u))
        degree[u] += 1
        degree[v] += 1
    excess_eps = eps * (max(degree, default=0) + 1)

    flow = np.zeros(len(g.arcs))
    excess = np.zeros(n)
    height = [0] * n
    s, t = index[g.source], index[g.sink]
    height[s] = n
    for k, fwd, v in adjacency[s]:
        if fwd and caps[k] > 0:
            flow[k] = caps[k]
            excess[v] += caps[k]
            excess[s] -= caps[k]

    def residual(k: int, fwd: bool) -> float:
        return caps[k] - flow[k] if fwd else flow[k]

    order = [i for i in range(n) if i not in (s, t)]
    current = [0] * n
    max_height = 2 * n + 1
    pos = 0
    while pos < len(order):
        u = order[pos]
        old_height = height[u]
        while excess[u] > excess_eps:
            if current[u] == len(adjacency[u]):
                candidates = [
                    height[v] for k, fwd, v in adjacency[u] if residual(k, fwd) > eps
                ]
                if not candidates:
                    # Only rounding noise remains at u.
                    excess[u] = 0.0
                    break
                height[u] = min(candidates) + 1
                if height[u] > max_height:
                    raise RuntimeError("max-flow heights diverged; inconsistent capacities")
                current[u] = 0
                continue
            k, fwd, v = adjacency[u][current[u]]
            r = residual(k, fwd)
            if r > eps and height[u] == height[v] + 1:
                delta = min(excess[u], r)
                flow[k] += delta if fwd else -delta
                excess[u] -= delta
                excess[v] += delta
            else:
                current[u] += 1
        if height[u] > old_height:
            order.insert(0, order.pop(pos))
            pos = 1
        else:
            pos += 1
    return _Residual(g, flow, eps)


def _flow_value(res: _Residual) -> float:
    g = res.graph
    into = sum(res.flow[k] for k, a in enumerate(g.arcs) if a.head == g.sink)
    return float(into)


def max_flow(g: FlowGraph) -> float:
    """Maximum flow value from source to sink, in bits."""
    return _flow_value(_relabel_to_front(g))


def _cut_from_side(g: FlowGraph, side: frozenset[str]) -> Cut:
    crossing = tuple(a for a in g.arcs if a.tail in side and a.head not in side)
    capacity = float(sum(a.capacity for a in crossing))
    if all(a.dim is not None for a in crossing):
        dimension: int | None = math.prod(int(a.dim) for a in crossing)
    else:
        dimension = None
    return Cut(side, capacity, crossing, dimension)


def min_cut(g: FlowGraph) -> Cut:
    """Minimum cut whose source side is everything reachable in the residual graph."""
    res = _relabel_to_front(g)
    out: dict[str, list[tuple[int, bool, str]]] = {v: [] for v in g.vertices}
    for k, a in enumerate(g.arcs):
        out[a.tail].append((k, True, a.head))
        out[a.head].append((k, False, a.tail))
    seen = {g.source}
    queue = deque([g.source])
    while queue:
        u = queue.popleft()
        for k, fwd, v in out[u]:
            if v not in seen and res.residual(k, fwd) > res.eps:
                seen.add(v)
                queue.append(v)
    if g.sink in seen:
        raise RuntimeError("sink reachable in the residual graph after max-flow")
    return _cut_from_side(g, frozenset(seen))


def memory_qubits(c: Cut) -> int:
    """Qubits needed for a cut: ceil(log2 of the exact cut dimension).

    Cuts of graphs built from raw capacities carry no dimension; for those the
    float capacity is rounded up with a 1e-9 guard.
    """
    if c.cut_dimension is None:
        return max(0, math.ceil(c.capacity_bits - 1e-9))
    return (c.cut_dimension - 1).bit_length()


def enumerate_cuts(g: FlowGraph, max_internal_vertices: int = 20) -> Cut:
    """Exhaustive minimum cut over every partition of the internal vertices.

    Ties within 1e-9 are broken by the smaller exact dimension, then by the
    smaller source side, so the result is deterministic.
    """
    internal = g.internal
    k = len(internal)
    if k > max_internal_vertices:
        raise SizeLimitError(
            f"{k} internal vertices, above the enumeration limit of {max_internal_vertices}"
        )
    pos = {v: i for i, v in enumerate(internal)}
    caps = np.array([a.capacity for a in g.arcs], dtype=float)

    def side_bits(masks: np.ndarray, vertex: str) -> np.ndarray:
        if vertex == g.source:
            return np.ones(masks.shape, dtype=bool)
        if vertex == g.sink:
            return np.zeros(masks.shape, dtype=bool)
        return ((masks >> pos[vertex]) & 1).astype(bool)

    best_val = math.inf
    chunk = 1 << 16
    values = np.empty(1 << k)
    for start in range(0, 1 << k, chunk):
        masks = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
        total = np.zeros(masks.shape)
        for a, cap in zip(g.arcs, caps):
            crosses = side_bits(masks, a.tail) & ~side_bits(masks, a.head)
            total += np.where(crosses, cap, 0.0)
        values[start : start + masks.size] = total
    best_val = float(values.min())
    ties = np.flatnonzero(values <= best_val + 1e-9 * (1.0 + best_val))
    cuts = []
    for mask in ties:
        side = frozenset([g.source] + [v for v in internal if (int(mask) >> pos[v]) & 1])
        cuts.append(_cut_from_side(g, side))

    def rank_key(c: Cut) -> tuple:
        dim = c.cut_dimension if c.cut_dimension is not None else math.inf
        return (dim, len(c.source_side), sorted(c.source_side))

    return min(cuts, key=rank_key)


@dataclass(frozen=True)
class Log3Report:
    """Comparison of the min-cut with ranks of random network instances.

    Attributes:
        min_cut_bits: Min-cut capacity of the template.
        rank_bits: log2 of the operator rank for each seed.
        max_rank_bits: Largest entry of ``rank_bits``.
        ratio: ``min_cut_bits / max_rank_bits``; 1.0 when both vanish.
        rank_below_cut: Every seed satisfied rank bits <= min-cut + 1e-9.
        common_base: An integer b >= 2 such that every dimension is a power of
            b, or None when no such b exists.
        ceil_equality: Whether some seed reached ceil(rank bits) equal to
            ceil(min-cut). None when ``common_base`` is None.
        within_log3: min-cut <= log2(3) * max rank bits + 1e-9.
    """

    min_cut_bits: float
    rank_bits: tuple[float, ...]
    max_rank_bits: float
    ratio: float
    rank_below_cut: bool
    common_base: int | None
    ceil_equality: bool | None
    within_log3: bool


def _primitive_root(d: int) -> int:
    """Smallest b with b**k == d for some k >= 1."""
    for k in range(d.bit_length(), 1, -1):
        b = round(d ** (1.0 / k))
        for cand in (b - 1, b, b + 1):
            if cand >= 2 and cand**k == d:
                return cand
    return d


def common_power_base(dims: Sequence[int]) -> int | None:
    """Base b such that every dimension is a power of b (2 if all are 1)."""
    roots = {_primitive_root(int(d)) for d in dims if d > 1}
    if not roots:
        return 2
    return roots.pop() if len(roots) == 1 else None


def log3_bound_check(
    t: TemplateSpec,
    seeds: int | Sequence[int] = 5,
    rel_tol: float = 1e-10,
    max_total_dim: int = DEFAULT_MAX_TOTAL_DIM,
    max_svd_extent: int = DEFAULT_MAX_SVD_EXTENT,
) -> Log3Report:
    """Compare min-cut bits with log-ranks of random instances of ``t``.

    Args:
        t: Template small enough for explicit evaluation.
        seeds: Number of seeds (0..seeds-1) or an explicit seed list. Each seed
            drives ``numpy.random.default_rng``.
    """
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    if not seed_list:
        raise ValueError("at least one seed is required")
    cut_bits = min_cut(build_flow_network(t)).capacity_bits
    rank_bits = []
    for seed in seed_list:
        net = random_network(t, np.random.default_rng(seed))
        op = evaluate_operator(net, max_total_dim=max_total_dim)
        rank = operator_rank(op, rel_tol, max_svd_extent)
        rank_bits.append(math.log2(rank) if rank > 0 else -math.inf)
    best = max(rank_bits)
    if cut_bits <= 1e-12 and best <= 1e-12:
        ratio = 1.0
    elif best <= 0:
        ratio = math.inf
    else:
        ratio = cut_bits / best
    base = common_power_base([e.dim for e in t.edges])
    equality = None
    if base is not None:
        target = math.ceil(cut_bits - 1e-9)
        equality = any(math.ceil(b - 1e-9) == target for b in rank_bits if b > -math.inf)
    return Log3Report(
        min_cut_bits=cut_bits,
        rank_bits=tuple(rank_bits),
        max_rank_bits=best,
        ratio=ratio,
        rank_below_cut=all(b <= cut_bits + 1e-9 for b in rank_bits),
        common_base=base,
        ceil_equality=equality,
        within_log3=cut_bits <= math.log2(3) * max(best, 0.0) + 1e-9,
    )
