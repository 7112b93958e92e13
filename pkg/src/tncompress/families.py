"""Template builders for the standard families and random test templates."""

from __future__ import annotations

import math

import numpy as np

from .network import Edge, TemplateSpec


def site_id(k: int) -> str:
    """Vertex id of MPS site ``k`` (1-based), zero padded so it sorts naturally."""
    return f"A{k:03d}"


def three_vertex_template() -> TemplateSpec:
    """Three filled vertices with open-edge dimensions 4, 2 and 7.

    Vertices 1 and 2 take inputs of dimension 4 and 2 and feed vertex 3, which
    emits a dimension 7 output. Internal edges are 1->3 (2), 2->3 (3) and
    2->1 (2). Its minimum cut separates {1, 2} from {3} with dimension 6.
    """
    vertices = (("1", True), ("2", True), ("3", True), ("x", False), ("y", False), ("out", False))
    edges = (
        Edge("i", "x", "1", 4),
        Edge("j", "y", "2", 2),
        Edge("l", "2", "1", 2),
        Edge("m", "1", "3", 2),
        Edge("n", "2", "3", 3),
        Edge("k", "3", "out", 7),
    )
    return TemplateSpec(vertices, edges)


def three_vertex_edge_order() -> dict[str, tuple[str, ...]]:
    """Leg order for tensors T1[i,l,m], T2[j,l,n], T3[m,n,k] on that template."""
    return {"1": ("i", "l", "m"), "2": ("j", "l", "n"), "3": ("m", "n", "k")}


def mps_template(n: int, d_p: int, d_c: int, boundary: str = "variable") -> TemplateSpec:
    """Chain template of an ``n``-site MPS.

    Bond ``b{k}`` points from site k+1 to site k, the left boundary edge ``L``
    enters site 1 and ``R`` enters site n. Physical edges ``p{k}`` leave each
    site. With ``boundary="variable"`` the boundary edges are open inputs; with
    ``"open"`` they become dimension one edges, so only the physical outputs
    remain.
    """
    if n < 1 or d_p < 1 or d_c < 1:
        raise ValueError("n, d_p and d_c must be positive")
    if boundary not in ("variable", "open"):
        raise ValueError(f"unsupported boundary {boundary!r}")
    bdim = d_c if boundary == "variable" else 1
    vertices: list[tuple[str, bool]] = [(site_id(k), True) for k in range(1, n + 1)]
    vertices += [("inL", False), ("inR", False)]
    vertices += [(f"o{k:03d}", False) for k in range(1, n + 1)]
    edges = [Edge("L", "inL", site_id(1), bdim)]
    edges += [Edge(f"b{k:03d}", site_id(k + 1), site_id(k), d_c) for k in range(1, n)]
    edges.append(Edge("R", "inR", site_id(n), bdim))
    edges += [Edge(f"p{k:03d}", site_id(k), f"o{k:03d}", d_p) for k in range(1, n + 1)]
    return TemplateSpec(tuple(vertices), tuple(edges))


def peps_template(n: int, m: int, d_p: int, d_c: int) -> TemplateSpec:
    """``n`` by ``m`` PEPS whose boundary bonds are all open inputs.

    Each of the 2n + 2m boundary bonds enters its site from its own empty
    vertex. Horizontal bonds point left, vertical bonds point up, and every
    site emits one physical edge.
    """
    if min(n, m, d_p, d_c) < 1:
        raise ValueError("sizes and dimensions must be positive")

    def site(i: int, j: int) -> str:
        return f"P{i:02d}_{j:02d}"

    vertices: list[tuple[str, bool]] = []
    edges: list[Edge] = []
    for i in range(n):
        for j in range(m):
            vertices.append((site(i, j), True))
            vertices.append((f"o{i:02d}_{j:02d}", False))
            edges.append(Edge(f"p{i:02d}_{j:02d}", site(i, j), f"o{i:02d}_{j:02d}", d_p))
            if j + 1 < m:
                edges.append(Edge(f"h{i:02d}_{j:02d}", site(i, j + 1), site(i, j), d_c))
            if i + 1 < n:
                edges.append(Edge(f"v{i:02d}_{j:02d}", site(i + 1, j), site(i, j), d_c))
    for j in range(m):
        for tag, i in (("top", 0), ("bot", n - 1)):
            name = f"{tag}{j:02d}"
            vertices.append((f"in_{name}", False))
            edges.append(Edge(name, f"in_{name}", site(i, j), d_c))
    for i in range(n):
        for tag, j in (("lft", 0), ("rgt", m - 1)):
            name = f"{tag}{i:02d}"
            vertices.append((f"in_{name}", False))
            edges.append(Edge(name, f"in_{name}", site(i, j), d_c))
    return TemplateSpec(tuple(vertices), tuple(edges))


def random_template(
    rng: np.random.Generator,
    n_filled: int,
    dims: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7),
    edge_prob: float = 0.5,
    max_open: int = 2,
    max_in_dim: int | None = None,
    max_out_dim: int | None = None,
    max_open_dim: int | None = None,
) -> TemplateSpec:
    """Random valid template with ``n_filled`` filled vertices.

    Each unordered vertex pair gets an internal edge with probability
    ``edge_prob`` and random orientation. Each filled vertex receives up to
    ``max_open`` open inputs and up to ``max_open`` open outputs. Caps on the
    input product, the output product and their joint product are enforced by
    resampling.
    """
    for _ in range(1000):
        names = [f"v{k}" for k in range(n_filled)]
        vertices: list[tuple[str, bool]] = [(v, True) for v in names]
        edges: list[Edge] = []
        for a in range(n_filled):
            for b in range(a + 1, n_filled):
                if rng.random() < edge_prob:
                    u, v = (names[a], names[b]) if rng.random() < 0.5 else (names[b], names[a])
                    edges.append(Edge(f"e{len(edges)}", u, v, int(rng.choice(dims))))
        for v in names:
            for kind in ("in", "out"):
                for _ in range(int(rng.integers(0, max_open + 1))):
                    pendant = f"{kind}{len(vertices)}"
                    vertices.append((pendant, False))
                    tail, head = (pendant, v) if kind == "in" else (v, pendant)
                    edges.append(Edge(f"e{len(edges)}", tail, head, int(rng.choice(dims))))
        t = TemplateSpec(tuple(vertices), tuple(edges))
        in_dim = math.prod(e.dim for e in t.in_edges())
        out_dim = math.prod(e.dim for e in t.out_edges())
        if (
            (max_in_dim is None or in_dim <= max_in_dim)
            and (max_out_dim is None or out_dim <= max_out_dim)
            and (max_open_dim is None or in_dim * out_dim <= max_open_dim)
        ):
            return t
    raise RuntimeError("could not sample a template within the dimension caps")
