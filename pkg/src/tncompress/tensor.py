"""Dense complex tensors with labelled legs.

Entries are stored row-major over legs in their declared order. Each leg also
carries a direction flag (ingoing or outgoing). Reversing a leg only flips that
flag; entries are never conjugated or permuted.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from .errors import SvdConvergenceError

LegKey = Union[int, str]

DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Tensor:
    """Immutable dense complex tensor.

    Attributes:
        data: Complex128 array, read-only. Its shape is the tensor shape.
        labels: Optional distinct label per leg.
        ingoing: Positions of legs currently marked as ingoing.
    """

    data: np.ndarray
    labels: tuple[str, ...] | None = None
    ingoing: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.complex128, copy=True)
        if any(extent < 1 for extent in arr.shape):
            raise ValueError(f"all extents must be >= 1, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != arr.ndim:
                raise ValueError(
                    f"{len(labels)} labels given for a tensor with {arr.ndim} legs"
                )
            if len(set(labels)) != len(labels):
                raise ValueError(f"leg labels must be distinct, got {labels}")
            object.__setattr__(self, "labels", labels)
        ingoing = frozenset(int(i) for i in self.ingoing)
        if any(i < 0 or i >= arr.ndim for i in ingoing):
            raise ValueError(f"ingoing legs {sorted(ingoing)} out of range")
        object.__setattr__(self, "ingoing", ingoing)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def leg(self, key: LegKey) -> int:
        """Resolve a leg given by position or label to its position."""
        if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
            pos = int(key)
            if not 0 <= pos < self.ndim:
                raise KeyError(f"leg position {pos} out of range for order {self.ndim}")
            return pos
        if self.labels is None or key not in self.labels:
            raise KeyError(f"unknown leg {key!r}")
        return self.labels.index(key)

    def relabel(self, labels: Sequence[str] | None) -> Tensor:
        """Return the same entries with new leg labels."""
        return Tensor(self.data, None if labels is None else tuple(labels), self.ingoing)


def contract_pair(
    a: Tensor, b: Tensor, pairs: Iterable[tuple[LegKey, LegKey]]
) -> Tensor:
    """Sum over paired legs of two tensors.

    Args:
        a: First tensor.
        b: Second tensor.
        pairs: (leg of a, leg of b) pairs to sum over, by position or label.

    Returns:
        Tensor whose legs are the unpaired legs of ``a`` followed by the
        unpaired legs of ``b``, each group in its original order. Labels are
        kept when both inputs are labelled and the result labels stay distinct.

    Raises:
        ValueError: On an extent mismatch or a leg paired twice.
    """
    pairs = list(pairs)
    a_legs = [a.leg(p[0]) for p in pairs]
    b_legs = [b.leg(p[1]) for p in pairs]
    if len(set(a_legs)) != len(a_legs) or len(set(b_legs)) != len(b_legs):
        raise ValueError("a leg appears in more than one pair")
    for i, j in zip(a_legs, b_legs):
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"extent mismatch: leg {i} of a has {a.shape[i]}, leg {j} of b has {b.shape[j]}"
            )
    data = np.tensordot(a.data, b.data, axes=(a_legs, b_legs))
    a_free = [i for i in range(a.ndim) if i not in a_legs]
    b_free = [j for j in range(b.ndim) if j not in b_legs]
    labels = None
    if a.labels is not None and b.labels is not None:
        candidate = tuple(a.labels[i] for i in a_free) + tuple(b.labels[j] for j in b_free)
        if len(set(candidate)) == len(candidate):
            labels = candidate
    ingoing = {k for k, i in enumerate(a_free) if i in a.ingoing}
    ingoing |= {len(a_free) + k for k, j in enumerate(b_free) if j in b.ingoing}
    return Tensor(data, labels, frozenset(ingoing))


def vectorize(t: Tensor, legs_to_reverse: Iterable[LegKey]) -> Tensor:
    """Flip the direction of the named legs, leaving the entries untouched.

    Turning a column index into a row index this way is the same as multiplying
    by the unnormalised maximally entangled state, so ``B`` becomes
    ``sum_ij B_ij |i>|j>``.
    """
    flip = {t.leg(k) for k in legs_to_reverse}
    result = Tensor.__new__(Tensor)
    # Share the read-only buffer so the entries stay bit-identical.
    object.__setattr__(result, "data", t.data)
    object.__setattr__(result, "labels", t.labels)
    object.__setattr__(result, "ingoing", frozenset(t.ingoing ^ flip))
    return result


def _leg_groups(
    t: Tensor, row_legs: Sequence[LegKey], col_legs: Sequence[LegKey]
) -> tuple[list[int], list[int]]:
    rows = [t.leg(k) for k in row_legs]
    cols = [t.leg(k) for k in col_legs]
    together = rows + cols
    if len(set(together)) != len(together):
        raise ValueError("a leg is listed twice")
    if sorted(together) != list(range(t.ndim)):
        missing = sorted(set(range(t.ndim)) - set(together))
        raise ValueError(f"legs {missing} are neither rows nor columns")
    return rows, cols


def matricize(t: Tensor, row_legs: Sequence[LegKey], col_legs: Sequence[LegKey]) -> Tensor:
    """Group legs into a matrix of shape (prod row extents, prod col extents)."""
    rows, cols = _leg_groups(t, row_legs, col_legs)
    n_rows = math.prod(t.shape[i] for i in rows)
    n_cols = math.prod(t.shape[i] for i in cols)
    data = np.transpose(t.data, rows + cols).reshape(n_rows, n_cols)
    return Tensor(data)


def dematricize(
    m: Tensor,
    shape: Sequence[int],
    row_legs: Sequence[int],
    col_legs: Sequence[int],
    labels: Sequence[str] | None = None,
) -> Tensor:
    """Invert :func:`matricize` for a tensor of the given shape and grouping."""
    shape = tuple(int(s) for s in shape)
    rows = list(row_legs)
    cols = list(col_legs)
    if sorted(rows + cols) != list(range(len(shape))):
        raise ValueError("row and column legs must partition the target legs")
    if m.ndim != 2:
        raise ValueError("dematricize expects a matrix")
    grouped = tuple(shape[i] for i in rows + cols)
    if math.prod(grouped) != m.size or m.shape[0] != math.prod(shape[i] for i in rows):
        raise ValueError(f"matrix of shape {m.shape} does not fit target shape {shape}")
    data = m.data.reshape(grouped)
    data = np.transpose(data, np.argsort(rows + cols))
    return Tensor(data, None if labels is None else tuple(labels))


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Thin SVD truncated to the numerical rank.

    Attributes:
        u: Array whose ``numerical_rank`` columns are orthonormal. Plain
            arrays rather than tensors, since a zero matrix has no columns.
        singular_values: All singular values, non-increasing.
        v_dagger: Array whose ``numerical_rank`` rows are orthonormal.
        numerical_rank: Count of singular values above the tolerance.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v_dagger: np.ndarray
    numerical_rank: int

    def reconstruct(self) -> np.ndarray:
        r = self.numerical_rank
        return (self.u * self.singular_values[:r]) @ self.v_dagger


def svd_support(m: Tensor, rel_tol: float = DEFAULT_REL_TOL) -> SvdResult:
    """Compute the column-space isometry of a matrix.

    Args:
        m: Tensor with exactly two legs.
        rel_tol: Singular values at or below ``rel_tol`` times the largest
            are treated as zero.

    Returns:
        SvdResult with ``u`` restricted to the first ``numerical_rank`` columns.

    Raises:
        ValueError: If ``m`` is not a matrix or ``rel_tol`` is outside (0, 1).
        SvdConvergenceError: If LAPACK fails to converge.
    """
    if m.ndim != 2:
        raise ValueError(f"svd_support expects a matrix, got order {m.ndim}")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    try:
        u, s, vh = np.linalg.svd(m.data, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc
    rank = int(np.count_nonzero(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    u, vh = u[:, :rank].copy(), vh[:rank, :].copy()
    for arr in (u, s, vh):
        arr.setflags(write=False)
    return SvdResult(u, s, vh, rank)


def tensor_to_dict(t: Tensor) -> dict[str, Any]:
    """Serialise a tensor to plain JSON-compatible data."""
    flat = t.data.reshape(-1)
    record: dict[str, Any] = {
        "shape": list(t.shape),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }
    if t.labels is not None:
        record["labels"] = list(t.labels)
    if t.ingoing:
        record["ingoing"] = sorted(t.ingoing)
    return record


def tensor_from_dict(record: Mapping[str, Any]) -> Tensor:
    """Parse a tensor record, rejecting malformed input."""
    if not isinstance(record, Mapping):
        raise ValueError("tensor record must be an object")
    unknown = set(record) - {"shape", "entries", "labels", "ingoing"}
    if unknown:
        raise ValueError(f"unknown tensor fields {sorted(unknown)}")
    if "shape" not in record or "entries" not in record:
        raise ValueError("tensor record needs 'shape' and 'entries'")
    shape = record["shape"]
    if not isinstance(shape, list) or not all(
        isinstance(s, int) and not isinstance(s, bool) and s >= 1 for s in shape
    ):
        raise ValueError(f"shape must be a list of positive integers, got {shape!r}")
    entries = record["entries"]
    if not isinstance(entries, list) or len(entries) != math.prod(shape):
        raise ValueError(
            f"expected {math.prod(shape)} entries for shape {shape}, "
            f"got {len(entries) if isinstance(entries, list) else 'none'}"
        )
    values = np.empty(len(entries), dtype=np.complex128)
    for k, pair in enumerate(entries):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise ValueError(f"entry {k} must be a [re, im] pair of numbers")
        values[k] = complex(pair[0], pair[1])
    labels = record.get("labels")
    if labels is not None and not (
        isinstance(labels, list) and all(isinstance(x, str) for x in labels)
    ):
        raise ValueError("labels must be a list of strings")
    return Tensor(values.reshape(shape), labels, frozenset(record.get("ingoing", ())))
