"""Exact compression protocols built from partial isometries.

The pairwise protocol compresses a variable-boundary MPS family one pair of
adjacent blocks at a time. For each pair it contracts the two site tensors and
keeps the column space of the resulting (physical pair) x (outer bonds)
matrix. After ``ceil(log2 n)`` layers every state ``|psi_{L,R}>`` sits in a
memory of dimension at most ``d_c**2``.

Local compression does the same for a subsystem of a general network whose
remaining outputs form an untouched environment.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .flow import build_flow_network, memory_qubits, min_cut
from .mps import Mps
from .network import (
    DEFAULT_MAX_TOTAL_DIM,
    NetworkSpec,
    TemplateSpec,
    evaluate_operator,
    reverse_edges,
)
from .tensor import (
    DEFAULT_REL_TOL,
    Tensor,
    matricize,
    svd_support,
    tensor_from_dict,
    tensor_to_dict,
)


@dataclass(frozen=True, eq=False)
class PartialIsometry:
    """Matrix ``V`` with orthonormal rows, mapping a product space to a memory.

    Attributes:
        matrix: Array of shape (out_dim, prod in_dims).
        in_dims: Extents of the input legs, in order.
    """

    matrix: np.ndarray
    in_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=np.complex128, copy=True)
        if mat.ndim != 2 or mat.shape[1] != math.prod(self.in_dims):
            raise ValueError("matrix columns must match the product of input dims")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def support_rank(self) -> int:
        return self.matrix.shape[0]

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    def projector(self) -> np.ndarray:
        """``V^dagger V``, the projector onto the support."""
        return self.matrix.conj().T @ self.matrix

    def isometry_defect(self) -> float:
        """Frobenius norm of ``V V^dagger - I``."""
        return float(np.linalg.norm(self.matrix @ self.matrix.conj().T - np.eye(self.out_dim)))


def _pair_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Contract two sites and group as (phys_a phys_b) x (left right)."""
    pair = np.tensordot(a, b, axes=([2], [1]))  # (pa, l, pb, r)
    pair = np.transpose(pair, (0, 2, 1, 3))
    pa, pb, left, right = pair.shape
    return pair.reshape(pa * pb, left * right)


def pair_isometry(m: Mps, i: int, rel_tol: float = DEFAULT_REL_TOL) -> PartialIsometry:
    """Isometry onto the support of sites ``i`` and ``i+1`` (0-based).

    Every state of the family factorises as a sum over the outer bonds of the
    pair, so ``V^dagger V (x) I`` fixes all of them.
    """
    if not 0 <= i < m.n - 1:
        raise IndexError(f"pair ({i}, {i + 1}) out of range for {m.n} sites")
    a, b = m.sites[i], m.sites[i + 1]
    svd = svd_support(Tensor(_pair_matrix(a, b)), rel_tol)
    return PartialIsometry(svd.u.conj().T, (a.shape[0], b.shape[0]))


@dataclass(frozen=True, eq=False)
class Gate:
    """Isometry acting on the block of original sites ``start:stop``.

    ``split`` is the original site index where the two merged blocks meet.
    """

    start: int
    split: int
    stop: int
    isometry: PartialIsometry


@dataclass(frozen=True, eq=False)
class EncodingCircuit:
    """Layers of pairwise isometries forming a binary tree over the sites.

    Attributes:
        input_dims: Physical dimension of every original site.
        layers: Gates of each layer. Blocks not touched by any gate in a layer
            pass through unchanged.
    """

    input_dims: tuple[int, ...]
    layers: tuple[tuple[Gate, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def memory_dim(self) -> int:
        if not self.layers:
            return math.prod(self.input_dims)
        return self.layers[-1][-1].isometry.out_dim

    @property
    def memory_qubits(self) -> int:
        return (self.memory_dim - 1).bit_length()

    def max_gate_input(self) -> int:
        return max((g.isometry.in_dim for layer in self.layers for g in layer), default=0)


def build_encoding_circuit(m: Mps, rel_tol: float = DEFAULT_REL_TOL) -> EncodingCircuit:
    """Build the pairwise encoding tree for a variable-boundary family.

    Each layer pairs blocks (0,1), (2,3), ... of the current MPS. A trailing
    unpaired block passes through and is paired in a later layer. Merged blocks
    are stored as site tensors ``V . M`` with the outer bonds kept, so every
    isometry is computed from an MPS, never from a statevector.
    """
    sites = [np.asarray(a) for a in m.sites]
    blocks = [(k, k + 1) for k in range(m.n)]
    layers: list[tuple[Gate, ...]] = []
    while len(sites) > 1:
        new_sites, new_blocks, gates = [], [], []
        for j in range(0, len(sites), 2):
            if j + 1 == len(sites):
                new_sites.append(sites[j])
                new_blocks.append(blocks[j])
                continue
            a, b = sites[j], sites[j + 1]
            pair = _pair_matrix(a, b)
            svd = svd_support(Tensor(pair), rel_tol)
            v = PartialIsometry(svd.u.conj().T, (a.shape[0], b.shape[0]))
            merged = (v.matrix @ pair).reshape(v.out_dim, a.shape[1], b.shape[2])
            new_sites.append(merged)
            new_blocks.append((blocks[j][0], blocks[j + 1][1]))
            gates.append(Gate(blocks[j][0], blocks[j][1], blocks[j + 1][1], v))
        sites, blocks = new_sites, new_blocks
        layers.append(tuple(gates))
    return EncodingCircuit(m.physical_dims, tuple(layers))


def _apply_layer(state: np.ndarray, blocks: list[tuple[int, int]], layer: Sequence[Gate], adjoint: bool):
    """Apply one layer to a state with one axis per current block."""
    new_blocks = list(blocks)
    # Right to left so earlier axis positions stay valid.
    for gate in sorted(layer, key=lambda g: g.start, reverse=True):
        v = gate.isometry
        if not adjoint:
            j = blocks.index((gate.start, gate.split))
            if blocks[j + 1] != (gate.split, gate.stop):
                raise ValueError("gate does not act on adjacent blocks")
            op = v.matrix.reshape(v.out_dim, *v.in_dims)
            state = np.tensordot(op, state, axes=([1, 2], [j, j + 1]))
            state = np.moveaxis(state, 0, j)
            new_blocks[j : j + 2] = [(gate.start, gate.stop)]
        else:
            j = new_blocks.index((gate.start, gate.stop))
            op = v.matrix.conj().T.reshape(*v.in_dims, v.out_dim)
            state = np.tensordot(op, state, axes=([2], [j]))
            state = np.moveaxis(state, (0, 1), (j, j + 1))
            new_blocks[j : j + 1] = [(gate.start, gate.split), (gate.split, gate.stop)]
    return state, new_blocks


def _block_history(circuit: EncodingCircuit) -> list[list[tuple[int, int]]]:
    blocks = [(k, k + 1) for k in range(len(circuit.input_dims))]
    history = [blocks]
    for layer in circuit.layers:
        nxt = list(blocks)
        for gate in sorted(layer, key=lambda g: g.start, reverse=True):
            j = nxt.index((gate.start, gate.split))
            nxt[j : j + 2] = [(gate.start, gate.stop)]
        blocks = nxt
        history.append(blocks)
    return history


def encode(state: np.ndarray, circuit: EncodingCircuit) -> np.ndarray:
    """Apply the layers in order; returns a vector of length ``memory_dim``."""
    state = np.asarray(state, dtype=np.complex128)
    if state.size != math.prod(circuit.input_dims):
        raise ValueError(
            f"state has {state.size} amplitudes, circuit expects {math.prod(circuit.input_dims)}"
        )
    state = state.reshape(circuit.input_dims)
    blocks = [(k, k + 1) for k in range(len(circuit.input_dims))]
    for layer in circuit.layers:
        state, blocks = _apply_layer(state, blocks, layer, adjoint=False)
    return state.reshape(-1)


def decode(mem: np.ndarray, circuit: EncodingCircuit) -> np.ndarray:
    """Apply adjoint layers in reverse; returns an array of shape ``input_dims``."""
    mem = np.asarray(mem, dtype=np.complex128)
    final = _block_history(circuit)[-1]
    if mem.size != circuit.memory_dim:
        raise ValueError(f"memory has {mem.size} amplitudes, circuit expects {circuit.memory_dim}")
    state = mem.reshape(mem.size)
    blocks = final
    for layer in reversed(circuit.layers):
        state, blocks = _apply_layer(state, blocks, layer, adjoint=True)
    return state.reshape(circuit.input_dims)


def local_support_isometry(
    n: NetworkSpec,
    physical_edges: Sequence[str],
    rel_tol: float = DEFAULT_REL_TOL,
    max_total_dim: int = DEFAULT_MAX_TOTAL_DIM,
) -> PartialIsometry:
    """Isometry onto the support of the marginal on ``physical_edges``.

    The operator is regrouped with the chosen output edges as rows and all
    inputs together with the remaining (environment) outputs as columns. The
    column space of that matrix contains the local part of every state
    ``N|x>``, so ``(V^dagger V (x) I_env) N|x> = N|x>`` for every ``x``.
    """
    op = evaluate_operator(n, max_total_dim=max_total_dim)
    out_ids = [e.id for e in op.out_edges]
    phys = list(physical_edges)
    if len(set(phys)) != len(phys) or not set(phys) <= set(out_ids):
        raise ValueError("physical edges must be distinct outgoing open edges")
    env = [e for e in out_ids if e not in phys]
    data = op.as_tensor()
    n_out = len(out_ids)
    rows = [out_ids.index(e) for e in phys]
    cols = [out_ids.index(e) for e in env] + list(range(n_out, data.ndim))
    mat = matricize(Tensor(data), rows, cols)
    svd = svd_support(mat, rel_tol)
    dims = {e.id: e.dim for e in op.out_edges}
    return PartialIsometry(svd.u.conj().T, tuple(dims[e] for e in phys))


def apply_local_projector(
    v: PartialIsometry, state: np.ndarray, positions: Sequence[int]
) -> np.ndarray:
    """Apply ``V^dagger V`` to the given axes of a state with one axis per leg."""
    positions = list(positions)
    k = len(v.in_dims)
    if len(positions) != k:
        raise ValueError(f"expected {k} axis positions, got {len(positions)}")
    mat = v.projector().reshape(*v.in_dims, *v.in_dims)
    out = np.tensordot(mat, state, axes=(list(range(k, 2 * k)), positions))
    return np.moveaxis(out, list(range(k)), positions)


def marginal_template(t: TemplateSpec, environment_edges: Sequence[str]) -> TemplateSpec:
    """Template with the environment outputs turned into inputs."""
    return reverse_edges(t, environment_edges)


def local_memory_bound(t: TemplateSpec, environment_edges: Sequence[str]) -> int:
    """Qubits sufficient for the subsystem, from the min-cut of the marginal template."""
    return memory_qubits(min_cut(build_flow_network(marginal_template(t, environment_edges))))


def circuit_to_dict(c: EncodingCircuit) -> dict[str, Any]:
    return {
        "input_dims": list(c.input_dims),
        "layers": [
            [
                {
                    "sites": [g.start, g.split, g.stop],
                    "in_dims": list(g.isometry.in_dims),
                    "isometry": tensor_to_dict(Tensor(g.isometry.matrix)),
                }
                for g in layer
            ]
            for layer in c.layers
        ],
    }


def circuit_from_dict(record: Any) -> EncodingCircuit:
    if not isinstance(record, dict) or set(record) != {"input_dims", "layers"}:
        raise ValueError("circuit record needs exactly 'input_dims' and 'layers'")
    layers = []
    for layer in record["layers"]:
        gates = []
        for g in layer:
            if set(g) != {"sites", "in_dims", "isometry"} or len(g["sites"]) != 3:
                raise ValueError(f"malformed gate record {sorted(g)}")
            v = PartialIsometry(tensor_from_dict(g["isometry"]).data, tuple(g["in_dims"]))
            gates.append(Gate(*(int(x) for x in g["sites"]), v))
        layers.append(tuple(gates))
    circuit = EncodingCircuit(tuple(int(d) for d in record["input_dims"]), tuple(layers))
    _block_history(circuit)  # raises if the gates do not compose
    return circuit


def save_circuit(c: EncodingCircuit, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(circuit_to_dict(c), fh)


def load_circuit(path: str | Path) -> EncodingCircuit:
    with open(path, encoding="utf-8") as fh:
        return circuit_from_dict(json.load(fh))
