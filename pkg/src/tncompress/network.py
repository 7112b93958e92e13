"""Tensor network templates, networks and their network operators.

A template is an oriented graph with a positive dimension on every edge. Empty
vertices are degree-one pendants that mark open edges. An edge leaving an empty
vertex is an input, an edge entering one is an output. Contracting the tensors
of a network gives its operator, a matrix from the tensor product of input
spaces to that of the output spaces.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidNetworkError, SizeLimitError
from .tensor import DEFAULT_REL_TOL, Tensor, svd_support, tensor_from_dict, tensor_to_dict

DEFAULT_MAX_TOTAL_DIM = 2**22
DEFAULT_MAX_SVD_EXTENT = 4096


@dataclass(frozen=True)
class Edge:
    """Directed edge ``tail -> head`` carrying a space of dimension ``dim``."""

    id: str
    tail: str
    head: str
    dim: int


@dataclass(frozen=True)
class TemplateSpec:
    """Oriented graph with edge dimensions and filled/empty vertices.

    Construction does not validate; use :func:`validate_template`.
    """

    vertices: tuple[tuple[str, bool], ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "vertices", tuple((str(v), bool(f)) for v, f in self.vertices)
        )
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def filled(self) -> tuple[str, ...]:
        return tuple(sorted(v for v, f in self.vertices if f))

    @property
    def empty(self) -> tuple[str, ...]:
        return tuple(sorted(v for v, f in self.vertices if not f))

    def is_filled(self, vertex: str) -> bool:
        return dict(self.vertices).get(vertex, False)

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(f"unknown edge {edge_id!r}")

    def incident(self, vertex: str) -> list[Edge]:
        return [e for e in self.edges if vertex in (e.tail, e.head)]

    def in_edges(self) -> tuple[Edge, ...]:
        """Open ingoing edges in canonical (filled vertex, edge id) order."""
        edges = [e for e in self.edges if not self.is_filled(e.tail)]
        return tuple(sorted(edges, key=lambda e: (e.head, e.id)))

    def out_edges(self) -> tuple[Edge, ...]:
        """Open outgoing edges in canonical (filled vertex, edge id) order."""
        edges = [e for e in self.edges if not self.is_filled(e.head)]
        return tuple(sorted(edges, key=lambda e: (e.tail, e.id)))

    def internal_edges(self) -> tuple[Edge, ...]:
        return tuple(
            e for e in self.edges if self.is_filled(e.tail) and self.is_filled(e.head)
        )


def validate_template(t: TemplateSpec) -> list[str]:
    """List every structural violation of a template. Empty means valid."""
    problems: list[str] = []
    ids = [v for v, _ in t.vertices]
    for v, count in Counter(ids).items():
        if count > 1:
            problems.append(f"vertex {v!r} declared {count} times")
    known = set(ids)
    for e, count in Counter(e.id for e in t.edges).items():
        if count > 1:
            problems.append(f"edge id {e!r} used {count} times")
    pairs: Counter[tuple[str, str]] = Counter()
    for e in t.edges:
        if not isinstance(e.dim, (int, np.integer)) or isinstance(e.dim, bool) or e.dim < 1:
            problems.append(f"edge {e.id!r} has invalid dimension {e.dim!r}")
        for end in (e.tail, e.head):
            if end not in known:
                problems.append(f"edge {e.id!r} refers to unknown vertex {end!r}")
        if e.tail == e.head:
            problems.append(f"edge {e.id!r} is a self-loop at {e.tail!r}")
        pairs[(e.tail, e.head)] += 1
    for (u, v), count in sorted(pairs.items()):
        if count > 1:
            problems.append(f"edges {u!r}->{v!r} appear {count} times")
        if u < v and (v, u) in pairs:
            problems.append(f"edges {u!r}->{v!r} and {v!r}->{u!r} break orientation")
    degree: Counter[str] = Counter()
    neighbours: defaultdict[str, set[str]] = defaultdict(set)
    for e in t.edges:
        degree[e.tail] += 1
        degree[e.head] += 1
        neighbours[e.tail].add(e.head)
        neighbours[e.head].add(e.tail)
    for v, filled in t.vertices:
        if filled:
            continue
        if degree[v] != 1:
            problems.append(f"empty vertex {v!r} has degree {degree[v]}, expected 1")
        elif not all(t.is_filled(u) for u in neighbours[v]):
            problems.append(f"empty vertex {v!r} is not attached to a filled vertex")
    return problems


def require_valid(t: TemplateSpec) -> None:
    problems = validate_template(t)
    if problems:
        raise InvalidNetworkError("; ".join(problems))


def restrict_power_of_two(t: TemplateSpec) -> TemplateSpec:
    """Replace every dimension by the largest power of two not above it."""
    edges = tuple(
        Edge(e.id, e.tail, e.head, 1 << (int(e.dim).bit_length() - 1)) for e in t.edges
    )
    return TemplateSpec(t.vertices, edges)


def reverse_edges(t: TemplateSpec, edge_ids: Iterable[str]) -> TemplateSpec:
    """Flip the orientation of the given edges."""
    flip = set(edge_ids)
    unknown = flip - {e.id for e in t.edges}
    if unknown:
        raise KeyError(f"unknown edges {sorted(unknown)}")
    edges = tuple(
        Edge(e.id, e.head, e.tail, e.dim) if e.id in flip else e for e in t.edges
    )
    return TemplateSpec(t.vertices, edges)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """A template together with one tensor per filled vertex.

    Attributes:
        template: The underlying template.
        tensors: Tensor for each filled vertex.
        edge_order: For each filled vertex, the incident edge ids matched to
            the tensor legs in order.
    """

    template: TemplateSpec
    tensors: Mapping[str, Tensor]
    edge_order: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tensors", dict(self.tensors))
        object.__setattr__(
            self, "edge_order", {v: tuple(order) for v, order in self.edge_order.items()}
        )


def validate_network(n: NetworkSpec) -> list[str]:
    """List template violations plus tensor assignment mismatches."""
    problems = validate_template(n.template)
    filled = set(n.template.filled)
    for v in sorted(set(n.tensors) - filled):
        problems.append(f"tensor given for {v!r}, which is not a filled vertex")
    dims = {e.id: e.dim for e in n.template.edges}
    for v in sorted(filled):
        if v not in n.tensors:
            problems.append(f"filled vertex {v!r} has no tensor")
            continue
        incident = sorted(e.id for e in n.template.incident(v))
        order = n.edge_order.get(v)
        if order is None:
            problems.append(f"filled vertex {v!r} has no edge order")
            continue
        if sorted(order) != incident:
            problems.append(
                f"edge order {list(order)} of {v!r} does not match incident edges {incident}"
            )
            continue
        shape = n.tensors[v].shape
        expected = tuple(dims[e] for e in order)
        if shape != expected:
            problems.append(f"tensor at {v!r} has shape {shape}, edges need {expected}")
    return problems


@dataclass(frozen=True, eq=False)
class NetworkOperator:
    """The network operator as an explicit matrix.

    Attributes:
        matrix: Tensor of shape (prod out dims, prod in dims).
        in_edges: Ingoing open edges in tensor-product order.
        out_edges: Outgoing open edges in tensor-product order.
    """

    matrix: Tensor
    in_edges: tuple[Edge, ...]
    out_edges: tuple[Edge, ...]

    @property
    def in_dims(self) -> tuple[int, ...]:
        return tuple(e.dim for e in self.in_edges)

    @property
    def out_dims(self) -> tuple[int, ...]:
        return tuple(e.dim for e in self.out_edges)

    def as_tensor(self) -> np.ndarray:
        """Entries reshaped with one axis per open edge, outputs first."""
        return self.matrix.data.reshape(self.out_dims + self.in_dims)


@dataclass
class _Node:
    ids: tuple[str, ...]
    data: np.ndarray
    legs: list[str]


def _merge(a: _Node, b: _Node) -> _Node:
    shared = [e for e in a.legs if e in b.legs]
    axes = ([a.legs.index(e) for e in shared], [b.legs.index(e) for e in shared])
    data = np.tensordot(a.data, b.data, axes=axes)
    legs = [e for e in a.legs if e not in shared] + [e for e in b.legs if e not in shared]
    return _Node(tuple(sorted(a.ids + b.ids)), data, legs)


def evaluate_operator(
    n: NetworkSpec,
    max_total_dim: int = DEFAULT_MAX_TOTAL_DIM,
    order: Sequence[str] | None = None,
) -> NetworkOperator:
    """Contract a network into its operator matrix.

    Args:
        n: A valid network.
        max_total_dim: Limit on the entry count of the result and of every
            intermediate tensor.
        order: Optional explicit absorption order of filled vertices. By
            default a greedy rule contracts the pair with the smallest
            intermediate, breaking ties by vertex id.

    Raises:
        InvalidNetworkError: If validation fails.
        SizeLimitError: If a limit is exceeded.
    """
    problems = validate_network(n)
    if problems:
        raise InvalidNetworkError("; ".join(problems))
    t = n.template
    ins, outs = t.in_edges(), t.out_edges()
    total = math.prod(e.dim for e in ins) * math.prod(e.dim for e in outs)
    if total > max_total_dim:
        raise SizeLimitError(
            f"operator has {total} entries, above the limit of {max_total_dim}"
        )
    dims = {e.id: e.dim for e in t.edges}
    nodes = {
        v: _Node((v,), n.tensors[v].data, list(n.edge_order[v])) for v in t.filled
    }

    def size(legs: Iterable[str]) -> int:
        return math.prod(dims[e] for e in legs)

    def checked(node: _Node) -> _Node:
        if node.data.size > max_total_dim:
            raise SizeLimitError(
                f"intermediate tensor has {node.data.size} entries, above {max_total_dim}"
            )
        return node

    if order is not None:
        if sorted(order) != sorted(nodes):
            raise ValueError("order must list every filled vertex exactly once")
        result = nodes[order[0]] if order else None
        for v in order[1:]:
            result = checked(_merge(result, nodes[v]))
    else:
        pool = list(nodes.values())
        while len(pool) > 1:
            best = None
            for i in range(len(pool)):
                for j in range(i + 1, len(pool)):
                    a, b = sorted((pool[i], pool[j]), key=lambda node: node.ids)
                    free = set(a.legs) ^ set(b.legs)
                    key = (size(free), a.ids, b.ids)
                    if best is None or key < best[0]:
                        best = (key, i, j)
            _, i, j = best
            a, b = sorted((pool[i], pool[j]), key=lambda node: node.ids)
            merged = checked(_merge(a, b))
            pool = [p for k, p in enumerate(pool) if k not in (i, j)] + [merged]
        result = pool[0] if pool else None
    if result is None:
        data, legs = np.ones((), dtype=np.complex128), []
    else:
        data, legs = result.data, result.legs
    target = [e.id for e in outs] + [e.id for e in ins]
    data = np.transpose(data, [legs.index(e) for e in target])
    matrix = data.reshape(math.prod(e.dim for e in outs), math.prod(e.dim for e in ins))
    return NetworkOperator(Tensor(matrix), ins, outs)


def operator_rank(
    op: NetworkOperator,
    rel_tol: float = DEFAULT_REL_TOL,
    max_svd_extent: int = DEFAULT_MAX_SVD_EXTENT,
) -> int:
    """Numerical rank of the operator matrix."""
    if max(op.matrix.shape) > max_svd_extent:
        raise SizeLimitError(
            f"matrix extent {op.matrix.shape} above the SVD limit of {max_svd_extent}"
        )
    return svd_support(op.matrix, rel_tol).numerical_rank


def random_network(t: TemplateSpec, rng: np.random.Generator) -> NetworkSpec:
    """Assign i.i.d. complex normal tensors to every filled vertex.

    Vertices are visited in sorted order; each tensor's legs follow the sorted
    incident edge ids. Real parts are drawn before imaginary parts.
    """
    dims = {e.id: e.dim for e in t.edges}
    tensors, orders = {}, {}
    for v in t.filled:
        order = tuple(sorted(e.id for e in t.incident(v)))
        shape = tuple(dims[e] for e in order)
        tensors[v] = Tensor(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        orders[v] = order
    return NetworkSpec(t, tensors, orders)


_VERTEX_FIELDS = {"id", "filled", "tensor", "edge_order"}
_EDGE_FIELDS = {"id", "from", "to", "dim"}


def template_to_dict(t: TemplateSpec) -> dict[str, Any]:
    return {
        "vertices": [{"id": v, "filled": f} for v, f in t.vertices],
        "edges": [
            {"id": e.id, "from": e.tail, "to": e.head, "dim": int(e.dim)} for e in t.edges
        ],
    }


def network_to_dict(n: NetworkSpec) -> dict[str, Any]:
    record = template_to_dict(n.template)
    for entry in record["vertices"]:
        v = entry["id"]
        if v in n.tensors:
            entry["edge_order"] = list(n.edge_order[v])
            entry["tensor"] = tensor_to_dict(n.tensors[v])
    return record


def network_from_dict(record: Mapping[str, Any]) -> TemplateSpec | NetworkSpec:
    """Parse a template or network record.

    A network is returned when every filled vertex carries a tensor and an
    edge order, a bare template when none do. Anything in between is rejected.
    """
    if not isinstance(record, Mapping):
        raise ValueError("network record must be an object")
    unknown = set(record) - {"vertices", "edges"}
    if unknown:
        raise ValueError(f"unknown network fields {sorted(unknown)}")
    for key in ("vertices", "edges"):
        if not isinstance(record.get(key, []), list):
            raise ValueError(f"'{key}' must be a list")
    vertices, tensors, orders = [], {}, {}
    for entry in record.get("vertices", []):
        if not isinstance(entry, Mapping) or set(entry) - _VERTEX_FIELDS:
            raise ValueError(f"malformed vertex record {entry!r}")
        if not isinstance(entry.get("id"), str) or not isinstance(entry.get("filled"), bool):
            raise ValueError(f"vertex needs string 'id' and boolean 'filled': {entry!r}")
        vertices.append((entry["id"], entry["filled"]))
        has_tensor = "tensor" in entry
        if has_tensor != ("edge_order" in entry):
            raise ValueError(f"vertex {entry['id']!r} needs both 'tensor' and 'edge_order'")
        if has_tensor:
            if not entry["filled"]:
                raise ValueError(f"empty vertex {entry['id']!r} cannot hold a tensor")
            order = entry["edge_order"]
            if not isinstance(order, list) or not all(isinstance(e, str) for e in order):
                raise ValueError(f"vertex {entry['id']!r} edge_order must be a list of edge ids")
            tensors[entry["id"]] = tensor_from_dict(entry["tensor"])
            orders[entry["id"]] = tuple(order)
    edges = []
    for entry in record.get("edges", []):
        if not isinstance(entry, Mapping) or set(entry) != _EDGE_FIELDS:
            raise ValueError(f"edge record needs exactly {sorted(_EDGE_FIELDS)}: {entry!r}")
        dim = entry["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise ValueError(f"edge {entry['id']!r} dimension must be an integer")
        edges.append(Edge(str(entry["id"]), str(entry["from"]), str(entry["to"]), dim))
    template = TemplateSpec(tuple(vertices), tuple(edges))
    if not tensors:
        return template
    missing = set(template.filled) - set(tensors)
    if missing:
        raise ValueError(f"filled vertices without tensors: {sorted(missing)}")
    return NetworkSpec(template, tensors, orders)


def load_network(path: str | Path) -> TemplateSpec | NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


def save_network(obj: TemplateSpec | NetworkSpec, path: str | Path) -> None:
    record = network_to_dict(obj) if isinstance(obj, NetworkSpec) else template_to_dict(obj)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=1)
