"""Independent reference implementations shared by the test modules."""

from __future__ import annotations

import math
from fractions import Fraction


def reference_bits(case, n, m, d_p, d_c, extra=0.0):
    """Second implementation, written straight from the row formulas."""
    lg = math.log2
    schur = (d_p * d_p + d_p - 2) / 2
    if case == "mps_boundary":
        return 2 * lg(d_c)
    if case == "simps":
        return (d_c**2 * d_p - 1) * lg(n + d_c**2 * d_p - 1) + 2 * lg(d_c)
    if case == "peps_boundary":
        return (2 * n + 2 * m) * lg(d_c)
    if case == "simps_peps":
        return (d_c**4 * d_p - 1) * lg(n * m + d_c**4 * d_p - 1) + (2 * n + 2 * m) * lg(d_c)
    if case == "ug_fixed_state":
        return schur * lg(n + d_p - 1)
    if case == "ug_tns":
        return schur * lg(n + d_p - 1) + extra
    if case == "ug_mps_boundary":
        return schur * lg(n + d_p - 1) + 2 * lg(d_c)
    if case == "ug_peps_boundary":
        return schur * lg(n * m + d_p - 1) + (2 * n + 2 * m) * lg(d_c)
    raise AssertionError(case)


def reference_qubits(case, n, m, d_p, d_c):
    """Smallest k with 2**k >= the bound, found by exact search over integers."""
    schur = Fraction(d_p * d_p + d_p - 2, 2)
    factors = {
        "mps_boundary": [(2, d_c)],
        "simps": [(d_c**2 * d_p - 1, n + d_c**2 * d_p - 1), (2, d_c)],
        "peps_boundary": [(2 * n + 2 * m, d_c)],
        "simps_peps": [(d_c**4 * d_p - 1, n * m + d_c**4 * d_p - 1), (2 * n + 2 * m, d_c)],
        "ug_fixed_state": [(schur, n + d_p - 1)],
        "ug_mps_boundary": [(schur, n + d_p - 1), (2, d_c)],
        "ug_peps_boundary": [(schur, n * m + d_p - 1), (2 * n + 2 * m, d_c)],
    }[case]
    # Doubling every exponent clears the half-integer Schur coefficient.
    squared = math.prod(a ** int(2 * Fraction(c)) for c, a in factors)
    k = 0
    while 4**k < squared:
        k += 1
    return k
