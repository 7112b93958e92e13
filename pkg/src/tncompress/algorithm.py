"""Classical preprocessing for compressing a family from fiducial states.

The inputs are fiducial states ``Phi_1 .. Phi_m``. Their Gram matrix ``G`` has
rank ``r`` equal to the dimension of their span. Any ``r x m`` factor ``W``
with ``W^dagger W = G`` defines an encoding isometry ``V Phi_j = W e_j`` into an
``r`` dimensional memory.

The module also covers the reflection channel built from fiducial states, its
spectral gap, the emulator sample-count scaling, and frame expansions in an
overcomplete spanning set.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError
from .mps import Mps, eval_statevector, linear_combination, mps_inner
from .protocols import PartialIsometry

DEFAULT_EIGEN_TOL = 1e-10
DEFAULT_MAX_SUPEROPERATOR = 4096


@dataclass(frozen=True, eq=False)
class FiducialSet:
    """Unit vectors in a common space.

    Attributes:
        states: Array of shape (m, dim), one state per row.
        basis: Orthonormal basis (r, dim) the states were built from, if known.
    """

    states: np.ndarray
    basis: np.ndarray | None = None

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=np.complex128, copy=True)
        if states.ndim != 2 or states.shape[0] == 0:
            raise ValueError("fiducial states must form a nonempty (m, dim) array")
        norms = np.linalg.norm(states, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-10)
        if bad.size:
            raise ValueError(f"fiducial states {bad.tolist()} are not unit vectors")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        if self.basis is not None:
            basis = np.array(self.basis, dtype=np.complex128, copy=True)
            if basis.ndim != 2 or basis.shape[1] != states.shape[1]:
                raise ValueError("basis vectors must live in the same space as the states")
            basis.setflags(write=False)
            object.__setattr__(self, "basis", basis)

    @classmethod
    def from_states(cls, states: Sequence[np.ndarray | Mps]) -> FiducialSet:
        """Collect explicit vectors or fixed-boundary MPS into a set.

        Raises:
            ValueError: When dimensions differ or a state is not unit norm.
        """
        vectors = []
        for s in states:
            v = eval_statevector(s) if isinstance(s, Mps) else np.asarray(s)
            vectors.append(np.asarray(v, dtype=np.complex128).reshape(-1))
        dims = {v.size for v in vectors}
        if len(dims) != 1:
            raise ValueError(f"fiducial states have differing dimensions {sorted(dims)}")
        return cls(np.stack(vectors))

    @property
    def m(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class GramFactorization:
    """Gram matrix with its eigen-decomposition and optional factor.

    Attributes:
        gram: Hermitian m x m matrix of overlaps.
        rank: Number of eigenvalues above ``eigen_tol`` times the largest.
        eigenvalues: Non-increasing eigenvalues.
        eigenvectors: Matching unit eigenvectors as columns.
        eigen_tol: Relative rank tolerance.
        w: The r x m factor, once computed.
    """

    gram: np.ndarray
    rank: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    eigen_tol: float = DEFAULT_EIGEN_TOL
    w: np.ndarray | None = None


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the first largest-magnitude entry of each column real positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        j = int(np.argmax(np.abs(col) > np.abs(col).max() * (1 - 1e-12)))
        if abs(col[j]) > 0:
            out[:, k] = col * (abs(col[j]) / col[j])
    return out


def gram_matrix(f: FiducialSet, eigen_tol: float = DEFAULT_EIGEN_TOL) -> GramFactorization:
    """Gram matrix ``G_jk = <Phi_j|Phi_k>`` with its numerical rank."""
    g = f.states.conj() @ f.states.T
    g = (g + g.conj().T) / 2
    return _factorize(g, eigen_tol)


def _factorize(g: np.ndarray, eigen_tol: float) -> GramFactorization:
    values, vectors = np.linalg.eigh(g)
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], _fix_phases(vectors[:, order])
    top = values[0] if values.size else 0.0
    rank = int(np.count_nonzero(values > eigen_tol * top)) if top > 0 else 0
    return GramFactorization(g, rank, values, vectors, eigen_tol)


def w_factor(g: GramFactorization) -> GramFactorization:
    """Fill in ``W = sqrt(Lambda) X^dagger`` with the zero rows removed."""
    r = g.rank
    w = np.sqrt(g.eigenvalues[:r])[:, None] * g.eigenvectors[:, :r].conj().T
    return GramFactorization(g.gram, r, g.eigenvalues, g.eigenvectors, g.eigen_tol, w)


def encoding_isometry(f: FiducialSet, g: GramFactorization) -> PartialIsometry:
    """Linear map ``V`` on the ambient space with ``V Phi_j = W e_j``.

    With ``S`` the matrix of fiducial columns, ``V = W S^+``. Using the Gram
    eigenbasis this is ``Lambda_r^{-1/2} X_r^dagger S^dagger``, which has
    orthonormal rows and vanishes off the span.

    Raises:
        ValueError: If ``W`` is missing or does not factor ``G``.
    """
    if g.w is None:
        raise ValueError("W has not been computed; call w_factor first")
    if g.gram.shape != (f.m, f.m) or g.w.shape != (g.rank, f.m):
        raise ValueError("factorization does not match the fiducial set")
    scale = max(1.0, float(np.linalg.norm(g.gram)))
    if np.linalg.norm(g.w.conj().T @ g.w - g.gram) > 1e-8 * scale:
        raise ValueError("W^dagger W does not reproduce the Gram matrix")
    r = g.rank
    x = g.eigenvectors[:, :r]
    lam = g.eigenvalues[:r]
    s_dag = f.states.conj()  # rows are <Phi_j|
    v = (x.conj().T @ s_dag) / np.sqrt(lam)[:, None]
    # Align with the supplied W in case it differs from the eigen factor by a unitary.
    w_eig = np.sqrt(lam)[:, None] * x.conj().T
    u = g.w @ np.linalg.pinv(w_eig)
    return PartialIsometry(u @ v, (f.dim,))


def fiducial_family(basis: int | np.ndarray) -> FiducialSet:
    """The 6r fiducial states built from an orthonormal basis.

    For each ``l`` (with ``l+1`` taken mod r) the states are, in order,
    ``(|l> +- |l+1>)/sqrt 2``, ``(|l> +- i|l+1>)/sqrt 2`` and ``|l>``, ``|l+1>``.

    Args:
        basis: Either r, meaning the standard basis of C^r, or an (r, dim)
            array of orthonormal rows.
    """
    if isinstance(basis, (int, np.integer)):
        vecs = np.eye(int(basis), dtype=np.complex128)
    else:
        vecs = np.asarray(basis, dtype=np.complex128)
    if vecs.ndim != 2:
        raise ValueError("basis must be an (r, dim) array")
    r = vecs.shape[0]
    if r < 2:
        raise ValueError("the fiducial family needs r >= 2")
    if np.linalg.norm(vecs.conj() @ vecs.T - np.eye(r)) > 1e-10:
        raise ValueError("basis vectors must be orthonormal")
    h = 1 / math.sqrt(2)
    states = []
    for l in range(r):
        a, b = vecs[l], vecs[(l + 1) % r]
        states += [h * (a + b), h * (a - b), h * (a + 1j * b), h * (a - 1j * b), a, b]
    return FiducialSet(np.stack(states), vecs)


@dataclass(frozen=True, eq=False)
class GramSchmidtBasis:
    """Orthonormal basis expressed through the input states.

    Attributes:
        coefficients: (size, t) array; basis vector l is
            ``sum_k coefficients[l, k] |state_k>``.
        kept: Input indices that contributed a new direction.
    """

    coefficients: np.ndarray
    kept: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]


def _overlap(a: np.ndarray | Mps, b: np.ndarray | Mps) -> complex:
    if isinstance(a, Mps) and isinstance(b, Mps):
        return mps_inner(a, b)
    va = eval_statevector(a) if isinstance(a, Mps) else np.asarray(a)
    vb = eval_statevector(b) if isinstance(b, Mps) else np.asarray(b)
    return complex(np.vdot(va.reshape(-1), vb.reshape(-1)))


def overlap_matrix(states: Sequence[np.ndarray | Mps]) -> np.ndarray:
    t = len(states)
    g = np.empty((t, t), dtype=np.complex128)
    for j in range(t):
        for k in range(j, t):
            g[j, k] = _overlap(states[j], states[k])
            g[k, j] = np.conj(g[j, k])
    return g


def gram_schmidt_span(
    states: Sequence[np.ndarray | Mps], tol: float = 1e-10
) -> GramSchmidtBasis:
    """Gram-Schmidt over the inputs using only their overlaps.

    A candidate whose residual norm is at most ``tol`` times its own norm, or
    below the rounding floor of the overlap arithmetic, is a dependent vector
    and is skipped. Each residual is orthogonalised twice for
    stability.
    """
    if not states:
        raise ValueError("need at least one state")
    g = overlap_matrix(states)
    t = len(states)
    g_norm = float(np.linalg.norm(g, 2))
    coeffs: list[np.ndarray] = []
    kept: list[int] = []
    for k in range(t):
        v = np.zeros(t, dtype=np.complex128)
        v[k] = 1.0
        for _ in range(2):
            for c in coeffs:
                v = v - (c.conj() @ g @ v) * c
        norm2 = float(np.real(v.conj() @ g @ v))
        own = float(np.real(g[k, k]))
        # v^dagger G v carries an absolute rounding error of order eps |v|^2 |G|.
        floor = 64 * np.finfo(float).eps * float(np.vdot(v, v).real) * g_norm
        if own <= 0 or norm2 <= max(tol**2 * own, floor):
            continue
        coeffs.append(v / math.sqrt(norm2))
        kept.append(k)
    matrix = np.array(coeffs) if coeffs else np.zeros((0, t), dtype=np.complex128)
    return GramSchmidtBasis(matrix, tuple(kept))


def basis_as_mps(basis: GramSchmidtBasis, states: Sequence[Mps]) -> list[Mps]:
    """Realise each orthonormal basis vector as one MPS by linear combination."""
    return [
        linear_combination([(complex(c), states[k]) for k, c in enumerate(row) if c != 0])
        for row in basis.coefficients
    ]


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    """Spectrum of the averaged reflection channel on the span.

    Attributes:
        superoperator: r^2 x r^2 matrix acting on row-major ``vec(rho)``.
        eigenvalues: All eigenvalues, sorted by decreasing modulus.
        eigenvalue_moduli: Their moduli.
        gap: ``1 - |lambda_2|``; 0 when there is no second eigenvalue.
        block_gap: Difference of the two largest eigenvalues of the block
            acting on diagonal operators, when that block is invariant.
        degenerate: True when r = 1 and the gap is zero by convention.
    """

    superoperator: np.ndarray
    eigenvalues: np.ndarray
    eigenvalue_moduli: np.ndarray
    gap: float
    block_gap: float | None
    degenerate: bool

    def apply(self, rho: np.ndarray) -> np.ndarray:
        r = rho.shape[0]
        return (self.superoperator @ rho.reshape(-1)).reshape(r, r)


def _span_coordinates(f: FiducialSet) -> np.ndarray:
    """Coordinates of the states in an orthonormal basis of their span."""
    if f.basis is not None:
        return f.states @ f.basis.conj().T
    u, s, vh = np.linalg.svd(f.states, full_matrices=False)
    r = int(np.count_nonzero(s > DEFAULT_EIGEN_TOL * s[0]))
    return f.states @ vh[:r].conj().T


def reflection_superoperator(coords: np.ndarray) -> np.ndarray:
    """``(1/m) sum_j U_j (x) conj(U_j)`` with ``U_j = I - 2|psi_j><psi_j|``."""
    m, r = coords.shape
    total = np.zeros((r * r, r * r), dtype=np.complex128)
    for psi in coords:
        u = np.eye(r) - 2 * np.outer(psi, psi.conj())
        total += np.kron(u, u.conj())
    return total / m


def channel_spectrum(
    f: FiducialSet, max_superoperator: int = DEFAULT_MAX_SUPEROPERATOR
) -> ChannelSpectrum:
    """Assemble the reflection channel on the span and diagonalise it.

    The basis of the span is the one the set was built from when known,
    otherwise one from an SVD of the states.
    """
    coords = _span_coordinates(f)
    r = coords.shape[1]
    if r * r > max_superoperator:
        raise SizeLimitError(f"superoperator of size {r * r} above the limit {max_superoperator}")
    sup = reflection_superoperator(coords)
    values = np.linalg.eigvals(sup)
    order = np.lexsort((-values.real, -np.abs(values)))
    values = values[order]
    moduli = np.abs(values)
    degenerate = r * r < 2
    gap = 0.0 if degenerate else float(1.0 - moduli[1])
    return ChannelSpectrum(sup, values, moduli, gap, _diagonal_block_gap(sup, r), degenerate)


def _diagonal_block_gap(sup: np.ndarray, r: int) -> float | None:
    if r < 2:
        return None
    diag = np.arange(r) * (r + 1)
    others = np.setdiff1d(np.arange(r * r), diag)
    leak = np.abs(sup[np.ix_(others, diag)]).max() if others.size else 0.0
    if leak > 1e-12:
        return None
    block = sup[np.ix_(diag, diag)]
    values = np.sort(np.linalg.eigvals(block).real)[::-1]
    return float(values[0] - values[1])


def gap_closed_form(r: int) -> float:
    """Closed-form gap ``8 sin^2(pi/r) / (3 r)`` for the 6r-state family."""
    if r < 2:
        raise ValueError("the gap formula needs r >= 2")
    return 8 * math.sin(math.pi / r) ** 2 / (3 * r)


@dataclass(frozen=True)
class GapReport:
    """Closed form against both numerical readings of the gap."""

    r: int
    closed_form: float
    block_gap: float
    literal_gap: float

    @property
    def block_difference(self) -> float:
        return abs(self.closed_form - self.block_gap)

    @property
    def literal_difference(self) -> float:
        return abs(self.closed_form - self.literal_gap)

    @property
    def literal_mismatch(self) -> bool:
        return self.literal_difference > 1e-9


def gap_report(r: int) -> GapReport:
    spectrum = channel_spectrum(fiducial_family(r))
    if spectrum.block_gap is None:
        raise RuntimeError("diagonal block is not invariant for the fiducial family")
    return GapReport(r, gap_closed_form(r), spectrum.block_gap, spectrum.gap)


def emulator_sample_estimate(r: int, eps: float, gap: float) -> float:
    """Sample-count scaling ``r^2 eps^-1 gap^-2 log2^2(r/eps)``, constant set to 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < gap <= 1.0:
        raise ValueError("gap must lie in (0, 1]")
    return r * r / eps / gap**2 * math.log2(r / eps) ** 2


@dataclass(frozen=True, eq=False)
class FrameDecomposition:
    """Expansion ``psi = sum_k c_k Sigma_k`` through the frame operator.

    Attributes:
        coefficients: ``c_k = <Sigma_k|F^+|psi>``.
        success_probability: ``||psi||^2 / (s sum_k |c_k|^2)``.
        lambda_min: Smallest non-zero eigenvalue of ``F``.
        residual: ``||sum_k c_k Sigma_k - psi||``.
        stated_bound: ``1 / (s lambda_min)``.
        guaranteed_bound: ``lambda_min / s``, implied by
            ``sum |c_k|^2 = <psi|F^+|psi> <= ||psi||^2 / lambda_min``.
    """

    coefficients: np.ndarray
    success_probability: float
    lambda_min: float
    residual: float
    stated_bound: float
    guaranteed_bound: float

    @property
    def stated_bound_holds(self) -> bool:
        return self.success_probability >= self.stated_bound * (1 - 1e-12)

    @property
    def guaranteed_bound_holds(self) -> bool:
        return self.success_probability >= self.guaranteed_bound * (1 - 1e-12)


def frame_decompose(
    spanning: np.ndarray | Sequence[np.ndarray],
    psi: np.ndarray,
    span_tol: float = 1e-8,
    eigen_tol: float = DEFAULT_EIGEN_TOL,
) -> FrameDecomposition:
    """Expand ``psi`` in an overcomplete spanning set.

    Args:
        spanning: States ``Sigma_k`` as rows (or a list of vectors).
        psi: Vector inside their span.
        span_tol: Relative residual allowed after projecting onto the span.

    Raises:
        ValueError: If ``psi`` lies outside the span.
    """
    sig = np.asarray(np.stack([np.asarray(v).reshape(-1) for v in spanning]), dtype=np.complex128)
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    s = sig.shape[0]
    if psi.size != sig.shape[1]:
        raise ValueError("psi and the spanning states differ in dimension")
    frame = sig.T @ sig.conj()  # sum_k |Sigma_k><Sigma_k|
    values, vectors = np.linalg.eigh((frame + frame.conj().T) / 2)
    keep = values > eigen_tol * values.max()
    vk, lk = vectors[:, keep], values[keep]
    proj = vk @ (vk.conj().T @ psi)
    norm = float(np.linalg.norm(psi))
    if np.linalg.norm(proj - psi) > span_tol * max(norm, 1e-300):
        raise ValueError("psi lies outside the span of the spanning states")
    pinv_psi = vk @ ((vk.conj().T @ psi) / lk)
    coeffs = sig.conj() @ pinv_psi
    residual = float(np.linalg.norm(sig.T @ coeffs - psi))
    weight = float(np.sum(np.abs(coeffs) ** 2))
    prob = norm**2 / (s * weight) if weight > 0 else 0.0
    lam_min = float(lk.min())
    return FrameDecomposition(coeffs, prob, lam_min, residual, 1.0 / (s * lam_min), lam_min / s)
