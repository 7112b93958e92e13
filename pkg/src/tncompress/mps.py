"""Matrix product states with open, periodic or variable boundaries.

Site tensors have legs (physical, left bond, right bond). For an open boundary
the amplitude of ``(i1, ..., in)`` is ``L^T A1[i1] ... An[in] R``, with no
complex conjugation of ``L``. A periodic MPS uses the trace of the matrix
product. A variable boundary MPS keeps ``L`` and ``R`` as free parameters,
supplied at evaluation time. States are never normalised here.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SizeLimitError
from .families import mps_template, site_id
from .network import DEFAULT_MAX_TOTAL_DIM, NetworkSpec
from .tensor import Tensor, tensor_from_dict, tensor_to_dict

BOUNDARIES = ("open", "periodic", "variable")


def _frozen(a: np.ndarray) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mps:
    """Immutable MPS.

    Attributes:
        sites: Order-3 arrays of shape (d_p, left bond, right bond).
        boundary: One of ``"open"``, ``"periodic"`` or ``"variable"``.
        left: Left boundary vector for open boundaries.
        right: Right boundary vector for open boundaries.
    """

    sites: tuple[np.ndarray, ...]
    boundary: str = "variable"
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self) -> None:
        sites = tuple(_frozen(a) for a in self.sites)
        if not sites:
            raise ValueError("an MPS needs at least one site")
        for k, a in enumerate(sites):
            if a.ndim != 3:
                raise ValueError(f"site {k} has order {a.ndim}, expected 3")
        for k in range(len(sites) - 1):
            if sites[k].shape[2] != sites[k + 1].shape[1]:
                raise ValueError(
                    f"bond mismatch between sites {k} and {k + 1}: "
                    f"{sites[k].shape[2]} vs {sites[k + 1].shape[1]}"
                )
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        object.__setattr__(self, "sites", sites)
        if self.boundary == "open":
            if self.left is None or self.right is None:
                raise ValueError("open boundary needs left and right vectors")
            left, right = _frozen(self.left), _frozen(self.right)
            if left.shape != (sites[0].shape[1],) or right.shape != (sites[-1].shape[2],):
                raise ValueError("boundary vectors do not match the end bonds")
            object.__setattr__(self, "left", left)
            object.__setattr__(self, "right", right)
        else:
            if self.left is not None or self.right is not None:
                raise ValueError(f"{self.boundary} boundary takes no boundary vectors")
            if self.boundary == "periodic" and sites[0].shape[1] != sites[-1].shape[2]:
                raise ValueError("periodic boundary needs equal end bonds")

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def physical_dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.sites)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Left bond of every site followed by the right bond of the last."""
        return tuple(a.shape[1] for a in self.sites) + (self.sites[-1].shape[2],)

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)


def _check_size(shape: Sequence[int], limit: int) -> None:
    total = math.prod(shape)
    if total > limit:
        raise SizeLimitError(f"state has {total} entries, above the limit of {limit}")


def _chain(m: Mps, start: np.ndarray) -> np.ndarray:
    psi = start
    for a in m.sites:
        psi = np.tensordot(psi, a, axes=([-1], [1]))
    return psi


def eval_statevector(
    m: Mps,
    left: np.ndarray | None = None,
    right: np.ndarray | None = None,
    max_dim: int = DEFAULT_MAX_TOTAL_DIM,
) -> np.ndarray:
    """Amplitudes of the MPS as an array of shape ``m.physical_dims``.

    Args:
        m: The MPS.
        left, right: Boundary vectors, required exactly when the boundary is
            variable.
        max_dim: Limit on the number of amplitudes.
    """
    _check_size(m.physical_dims, max_dim)
    if m.boundary == "variable":
        if left is None or right is None:
            raise ValueError("variable boundary needs explicit left and right vectors")
    elif left is not None or right is not None:
        raise ValueError(f"{m.boundary} boundary takes no boundary arguments")
    if m.boundary == "periodic":
        d0 = m.sites[0].shape[1]
        psi = _chain(m, np.eye(d0, dtype=np.complex128))
        return np.trace(psi, axis1=0, axis2=psi.ndim - 1)
    if m.boundary == "open":
        left, right = m.left, m.right
    left = np.asarray(left, dtype=np.complex128)
    right = np.asarray(right, dtype=np.complex128)
    if left.shape != (m.sites[0].shape[1],) or right.shape != (m.sites[-1].shape[2],):
        raise ValueError("boundary vectors do not match the end bonds")
    return np.tensordot(_chain(m, left), right, axes=([-1], [0]))


def boundary_operator(m: Mps, max_dim: int = DEFAULT_MAX_TOTAL_DIM) -> np.ndarray:
    """Matrix sending ``L (x) R`` to the state, shape (prod d_p, D_left * D_right)."""
    d_left, d_right = m.sites[0].shape[1], m.sites[-1].shape[2]
    _check_size((math.prod(m.physical_dims), d_left, d_right), max_dim)
    psi = _chain(m, np.eye(d_left, dtype=np.complex128))
    psi = np.moveaxis(psi, 0, -2)
    return psi.reshape(math.prod(m.physical_dims), d_left * d_right)


def build_simps(
    a: np.ndarray,
    n: int,
    boundary: str = "variable",
    left: np.ndarray | None = None,
    right: np.ndarray | None = None,
) -> Mps:
    """Site-independent MPS: ``n`` copies of the site tensor ``a``."""
    a = np.asarray(a)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError(f"site tensor must have shape (d_p, d_c, d_c), got {a.shape}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return Mps(tuple(a for _ in range(n)), boundary, left, right)


def _as_periodic_sites(m: Mps, coeff: complex) -> list[np.ndarray]:
    """Site tensors whose trace reproduces ``coeff`` times the state of ``m``."""
    sites = [np.array(a) for a in m.sites]
    if m.boundary == "open":
        # L^T X R = Tr(R L^T X) for any matrix X.
        boundary = np.outer(m.right, m.left)
        sites[0] = np.einsum("ab,pbc->pac", boundary, sites[0])
    sites[0] = coeff * sites[0]
    return sites


def linear_combination(terms: Sequence[tuple[complex, Mps]]) -> Mps:
    """MPS of ``sum_k c_k |psi_k>`` by block-diagonal stacking.

    Each new site tensor holds the ``t`` site tensors as diagonal blocks, so
    the block index plays the role of the shared ``k`` label that selects one
    term across the whole chain. The bond extent is the sum of the term bonds,
    at most ``t * d_c``. Open boundaries stack into one open MPS with the
    coefficients folded into the left vector. If any term is periodic, open
    terms are first rewritten in trace form and the result is periodic.

    Raises:
        ValueError: On mismatched site counts or physical dimensions, or when a
            term has a variable boundary.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("need at least one term")
    n = terms[0][1].n
    phys = terms[0][1].physical_dims
    for _, m in terms:
        if m.n != n or m.physical_dims != phys:
            raise ValueError("all terms need the same site count and physical dimensions")
        if m.boundary == "variable":
            raise ValueError("variable boundary terms need explicit boundary vectors")
    periodic = any(m.boundary == "periodic" for _, m in terms)
    if periodic:
        blocks = [_as_periodic_sites(m, c) for c, m in terms]
    else:
        blocks = [[np.asarray(a) for a in m.sites] for _, m in terms]
    sites = []
    for k in range(n):
        parts = [b[k] for b in blocks]
        rows = sum(p.shape[1] for p in parts)
        cols = sum(p.shape[2] for p in parts)
        site = np.zeros((phys[k], rows, cols), dtype=np.complex128)
        r0 = c0 = 0
        for p in parts:
            site[:, r0 : r0 + p.shape[1], c0 : c0 + p.shape[2]] = p
            r0 += p.shape[1]
            c0 += p.shape[2]
        sites.append(site)
    if periodic:
        return Mps(tuple(sites), "periodic")
    left = np.concatenate([c * m.left for c, m in terms])
    right = np.concatenate([m.right for _, m in terms])
    return Mps(tuple(sites), "open", left, right)


def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return real + 1j * imag


def random_mps(
    n: int,
    d_p: int,
    d_c: int,
    seed: int,
    boundary: str = "variable",
) -> Mps:
    """Random MPS with i.i.d. complex normal entries.

    The generator is ``numpy.random.default_rng(seed)`` (PCG64). Sites are drawn
    in order, each as a ``standard_normal`` block of real parts followed by one
    of imaginary parts, so every entry has ``E|z|^2 = 2``. Open boundaries then
    draw ``L`` and ``R`` the same way.
    """
    if min(n, d_p, d_c) < 1:
        raise ValueError("n, d_p and d_c must be positive")
    rng = np.random.default_rng(seed)
    sites = tuple(_complex_normal(rng, (d_p, d_c, d_c)) for _ in range(n))
    if boundary == "open":
        left = _complex_normal(rng, (d_c,))
        right = _complex_normal(rng, (d_c,))
        return Mps(sites, "open", left, right)
    return Mps(sites, boundary)


def random_boundary(
    m: Mps, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Random complex normal (L, R) matching the end bonds of ``m``."""
    left = _complex_normal(rng, (m.sites[0].shape[1],))
    right = _complex_normal(rng, (m.sites[-1].shape[2],))
    return left, right


def _transfer(env: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # env[(a-bond), (b-bond)] absorbs one site of conj(a) and b.
    return np.einsum("xy,pxa,pyb->ab", env, a.conj(), b, optimize=True)


def mps_inner(a: Mps, b: Mps) -> complex:
    """Inner product <a|b>, conjugate-linear in ``a``, without the statevector."""
    if a.n != b.n or a.physical_dims != b.physical_dims:
        raise ValueError("MPS must share site count and physical dimensions")
    if "variable" in (a.boundary, b.boundary):
        raise ValueError("variable boundary MPS have no fixed state")
    if a.boundary == "open" and b.boundary == "open":
        env = np.outer(a.left.conj(), b.left)
        for sa, sb in zip(a.sites, b.sites):
            env = _transfer(env, sa, sb)
        return complex(a.right.conj() @ env @ b.right)
    # Trace form: <a|b> = Tr(E_1 ... E_n) with E_k = sum_p conj(A_k[p]) (x) B_k[p].
    product = None
    for sa, sb in zip(_as_periodic_sites(a, 1.0), _as_periodic_sites(b, 1.0)):
        e = np.einsum("pxa,pyb->xyab", sa.conj(), sb)
        e = e.reshape(sa.shape[1] * sb.shape[1], sa.shape[2] * sb.shape[2])
        product = e if product is None else product @ e
    return complex(np.trace(product))


def mps_network(m: Mps) -> NetworkSpec:
    """Network of a variable-boundary MPS on :func:`mps_template`.

    Leg order at site k is (physical, left bond, right bond); the first site's
    left bond is edge ``L`` and the last site's right bond is edge ``R``.
    """
    if m.boundary != "variable":
        raise ValueError("only variable-boundary MPS map onto the chain template")
    if len(set(m.physical_dims)) != 1 or len(set(m.bond_dims)) != 1:
        raise ValueError("chain template needs uniform physical and bond dimensions")
    n, d_p, d_c = m.n, m.physical_dims[0], m.bond_dims[0]
    t = mps_template(n, d_p, d_c, "variable")
    tensors, order = {}, {}
    for k in range(1, n + 1):
        left = "L" if k == 1 else f"b{k - 1:03d}"
        right = "R" if k == n else f"b{k:03d}"
        tensors[site_id(k)] = Tensor(m.sites[k - 1])
        order[site_id(k)] = (f"p{k:03d}", left, right)
    return NetworkSpec(t, tensors, order)


def _vector_to_list(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]


def _vector_from_list(entries: Any) -> np.ndarray:
    if not isinstance(entries, list):
        raise ValueError("boundary vector must be a list of [re, im] pairs")
    return tensor_from_dict({"shape": [len(entries)], "entries": entries}).data


def mps_to_dict(m: Mps) -> dict[str, Any]:
    boundary: dict[str, Any] = {"kind": m.boundary}
    if m.boundary == "open":
        boundary["left"] = _vector_to_list(m.left)
        boundary["right"] = _vector_to_list(m.right)
    return {
        "n": m.n,
        "boundary": boundary,
        "sites": [tensor_to_dict(Tensor(a)) for a in m.sites],
    }


def mps_from_dict(record: Any) -> Mps:
    if not isinstance(record, dict) or set(record) != {"n", "boundary", "sites"}:
        raise ValueError("MPS record needs exactly 'n', 'boundary' and 'sites'")
    boundary = record["boundary"]
    if not isinstance(boundary, dict) or "kind" not in boundary:
        raise ValueError("boundary record needs a 'kind'")
    if set(boundary) - {"kind", "left", "right"}:
        raise ValueError("unknown boundary fields")
    sites = tuple(tensor_from_dict(s).data for s in record["sites"])
    if len(sites) != record["n"]:
        raise ValueError(f"n={record['n']} but {len(sites)} sites given")
    left = right = None
    if "left" in boundary or "right" in boundary:
        left = _vector_from_list(boundary.get("left"))
        right = _vector_from_list(boundary.get("right"))
    return Mps(sites, boundary["kind"], left, right)


def load_mps(path: str | Path) -> Mps:
    with open(path, encoding="utf-8") as fh:
        return mps_from_dict(json.load(fh))


def save_mps(m: Mps, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mps_to_dict(m), fh, indent=1)
