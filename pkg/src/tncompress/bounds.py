"""Closed-form memory bounds for standard tensor-network state families.

Each bound has the form ``sum_i c_i * log2(a_i) + extra`` with rational
coefficients ``c_i`` and positive integer arguments ``a_i``. Qubit counts are
the ceiling of that sum. When ``extra`` is zero the ceiling is decided exactly
with big integers: ``sum_i c_i log2 a_i <= k`` iff
``prod_i a_i**(c_i q) <= 2**(k q)`` with ``q`` the common denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

# Above this many bits the exact product is not formed and a float guard is used.
_EXACT_BIT_LIMIT = 1 << 22


class BoundCase(str, Enum):
    """Rows of the memory-bound table."""

    MPS_BOUNDARY = "mps_boundary"
    SIMPS = "simps"
    PEPS_BOUNDARY = "peps_boundary"
    SIMPS_PEPS = "simps_peps"
    UG_FIXED_STATE = "ug_fixed_state"
    UG_TNS = "ug_tns"
    UG_MPS_BOUNDARY = "ug_mps_boundary"
    UG_PEPS_BOUNDARY = "ug_peps_boundary"


@dataclass(frozen=True)
class BoundQuery:
    """Parameters of one bound evaluation.

    Attributes:
        case: Which family.
        n: Number of sites (rows for PEPS).
        m: Number of columns for PEPS cases.
        d_p: Physical dimension.
        d_c: Bond dimension.
        extra: Pre-computed min-cut bits of the fixed subnetwork (ug_tns only).
    """

    case: BoundCase
    n: int = 1
    m: int = 1
    d_p: int = 2
    d_c: int = 2
    extra: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "case", BoundCase(self.case))
        if min(self.n, self.m) < 1:
            raise ValueError("site counts must be >= 1")
        if min(self.d_p, self.d_c) < 1:
            raise ValueError("dimensions must be >= 1")
        if self.extra < 0 or not math.isfinite(self.extra):
            raise ValueError("extra must be a finite non-negative number of bits")


Terms = list[tuple[Fraction, int]]


def _schur_terms(n: int, d: int, r: int) -> Terms:
    return [(Fraction(2 * d * r - r * r + r - 2, 2), n + d - 1)]


def bound_terms(q: BoundQuery) -> tuple[Terms, float]:
    """Exact logarithmic terms and the float remainder for a query."""
    n, m, dp, dc = q.n, q.m, q.d_p, q.d_c
    boundary_line = [(Fraction(2), dc)]
    boundary_plane = [(Fraction(2 * n + 2 * m), dc)]
    if q.case is BoundCase.MPS_BOUNDARY:
        return boundary_line, 0.0
    if q.case is BoundCase.SIMPS:
        big_d = dc * dc * dp
        return [(Fraction(big_d - 1), n + big_d - 1)] + boundary_line, 0.0
    if q.case is BoundCase.PEPS_BOUNDARY:
        return boundary_plane, 0.0
    if q.case is BoundCase.SIMPS_PEPS:
        big_d = dc**4 * dp
        return [(Fraction(big_d - 1), n * m + big_d - 1)] + boundary_plane, 0.0
    if q.case is BoundCase.UG_FIXED_STATE:
        return _schur_terms(n, dp, dp), 0.0
    if q.case is BoundCase.UG_TNS:
        return _schur_terms(n, dp, dp), float(q.extra)
    if q.case is BoundCase.UG_MPS_BOUNDARY:
        return _schur_terms(n, dp, dp) + boundary_line, 0.0
    if q.case is BoundCase.UG_PEPS_BOUNDARY:
        return _schur_terms(n * m, dp, dp) + boundary_plane, 0.0
    raise ValueError(f"unknown case {q.case!r}")


def terms_bits(terms: Terms) -> float:
    return float(sum(float(c) * math.log2(a) for c, a in terms if c and a > 1))


def ceil_log2_terms(terms: Terms) -> int:
    """Exact ceiling of ``sum_i c_i log2(a_i)`` for non-negative coefficients."""
    terms = [(c, a) for c, a in terms if c != 0 and a > 1]
    if any(c < 0 for c, _ in terms):
        raise ValueError("coefficients must be non-negative")
    if not terms:
        return 0
    q = math.lcm(*(c.denominator for c, _ in terms))
    if terms_bits(terms) * q > _EXACT_BIT_LIMIT:
        return math.ceil(terms_bits(terms) - 1e-9)
    product = math.prod(a ** int(c * q) for c, a in terms)
    bits_needed = (product - 1).bit_length()
    return -(-bits_needed // q)


def table1_bound(q: BoundQuery) -> tuple[float, int]:
    """Evaluate one row of the memory-bound table.

    Returns:
        (bits, qubits) with ``qubits = ceil(bits)``.
    """
    terms, extra = bound_terms(q)
    bits = terms_bits(terms) + extra
    if extra == 0.0:
        return bits, ceil_log2_terms(terms)
    return bits, max(0, math.ceil(bits - 1e-9))


def symmetric_subspace_dim(n: int, big_d: int) -> int:
    """Dimension of the symmetric subspace of ``n`` copies of a ``big_d``-dim space."""
    if n < 0 or big_d < 1:
        raise ValueError("need n >= 0 and D >= 1")
    return math.comb(n + big_d - 1, big_d - 1)


def schur_dim_bound(n: int, d: int, r: int) -> float:
    """Bits of the bound ``(n+d-1)**((2dr - r^2 + r - 2)/2)``.

    This bounds the total dimension of the irreducible representations of the
    unitary group occurring in states of Schmidt rank at most ``r``.
    """
    if not 1 <= r <= d:
        raise ValueError("need 1 <= r <= d")
    if n < 1:
        raise ValueError("need n >= 1")
    return terms_bits(_schur_terms(n, d, r))


def simps_exact_qubits(n: int, d_p: int, d_c: int) -> int:
    """Qubits of the site-independent MPS cut before bounding the binomial.

    The cut dimension is ``d_c**2`` times the symmetric subspace dimension of
    ``n`` copies of a ``d_c**2 d_p`` dimensional space.
    """
    dim = d_c * d_c * symmetric_subspace_dim(n, d_c * d_c * d_p)
    return (dim - 1).bit_length()
