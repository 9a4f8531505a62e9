"""Dense complex linear-algebra kernels used by the solver and the oracles.

Matrices and vectors are plain numpy arrays (float64 or complex128); real
input is the imaginary-part-zero special case throughout.  The kernels here
are deliberately small: Hermitian eigendecomposition, an SVD routed through
the smaller Gram matrix, minimum-norm pseudoinverse application and a
power-iteration norm estimate for diagnostics.
"""

import numpy as np

from ._validation import as_matrix, as_vector
from .errors import DimensionMismatch, NoConvergence, NonHermitianInput

# Relative tolerances for the dense kernels.  Singular values below
# SIGMA_ZERO_RTOL * sigma_max are reported as exact zeros.  A Gram
# eigenvalue at roundoff level can clear that cutoff on a rank-deficient
# input; a genuine singular pair reproduces a unit-norm partner column
# while noise does not, so pairs outside FACTOR_COHERENCE_TOL are zeroed.
HERMITIAN_RTOL = 1e-10
SIGMA_ZERO_RTOL = 1e-10
FACTOR_COHERENCE_TOL = 1e-6


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Args:
        h: square Hermitian array (n x n).  Hermiticity is enforced up to
            ``HERMITIAN_RTOL`` times the Frobenius norm.

    Returns:
        ``(eigenvalues, eigenvectors)`` with real eigenvalues sorted in
        descending order and orthonormal eigenvector columns, so that
        ``h @ v[:, i] == eigenvalues[i] * v[:, i]`` up to rounding.

    Raises:
        NonHermitianInput: the asymmetry exceeds tolerance.
        NoConvergence: the underlying iteration failed to converge.
    """
    h = as_matrix(h, "hermitian matrix")
    n, m = h.shape
    if n != m:
        raise DimensionMismatch(f"expected a square matrix, got {h.shape}")
    hnorm = np.linalg.norm(h)
    if hnorm > 0.0:
        asym = np.linalg.norm(h - h.conj().T)
        if asym > HERMITIAN_RTOL * hnorm:
            raise NonHermitianInput(
                f"asymmetry {asym:.3e} exceeds {HERMITIAN_RTOL:.1e} * ||H||_F")
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - backend dependent
        raise NoConvergence(f"hermitian eigensolver failed: {exc}") from exc
    # eigh returns ascending order; flip to descending.
    return evals[::-1].copy(), evecs[:, ::-1].copy()


def _complete_orthonormal(q: np.ndarray, count: int) -> np.ndarray:
    """Extend the orthonormal columns of ``q`` by ``count`` more columns.

    QR of ``[q | I]`` produces a complete orthonormal basis whose leading
    columns span ``col(q)``; the following ``count`` columns span the
    complement, deterministically.
    """
    dim, rank = q.shape
    if count == 0:
        return np.zeros((dim, 0), dtype=q.dtype)
    stacked = np.concatenate([q, np.eye(dim, dtype=q.dtype)], axis=1)
    basis, _ = np.linalg.qr(stacked)
    if basis.shape[1] < rank + count:  # pragma: no cover - count <= dim - rank
        raise NoConvergence("failed to complete an orthonormal basis")
    return basis[:, rank:rank + count]


def exact_svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD computed via the smaller Gram matrix.

    The Gram matrix (``A^dagger A`` or ``A A^dagger``, whichever is smaller)
    is eigendecomposed and the other factor is recovered by applying ``a``.
    Singular values below ``SIGMA_ZERO_RTOL * sigma_max`` are reported as
    exact zeros, as are values whose recovered partner column fails the
    unit-norm coherence check (roundoff-level Gram eigenvalues); the
    matching factor columns are completed to an orthonormal set
    deterministically.

    Args:
        a: (m x n) array.

    Returns:
        ``(u, sigma, v)`` with ``u`` (m x p), ``sigma`` (p,) descending and
        ``v`` (n x p) for ``p = min(m, n)``, satisfying
        ``a == u @ diag(sigma) @ v.conj().T`` up to rounding.
    """
    a = as_matrix(a, "matrix")
    m, n = a.shape
    p = min(m, n)
    if n <= m:
        evals, v = hermitian_eig(a.conj().T @ a)
        u, sigma = _recover_factor(a, evals, v, m, p, transpose=False)
        return u, sigma, v
    evals, u = hermitian_eig(a @ a.conj().T)
    v, sigma = _recover_factor(a, evals, u, n, p, transpose=True)
    return u, sigma, v


def _recover_factor(a, evals, small_factor, dim, p, transpose):
    """Recover the missing SVD factor from the Gram eigendecomposition."""
    sigma = np.sqrt(np.clip(evals, 0.0, None))
    cutoff = SIGMA_ZERO_RTOL * (sigma[0] if sigma.size else 0.0)
    sigma = np.where(sigma > cutoff, sigma, 0.0)
    pos = sigma > 0.0
    if transpose:
        recovered = (a.conj().T @ small_factor[:, pos]) / sigma[pos]
    else:
        recovered = (a @ small_factor[:, pos]) / sigma[pos]
    norms = np.linalg.norm(recovered, axis=0)
    coherent = np.abs(norms - 1.0) <= FACTOR_COHERENCE_TOL
    if not np.all(coherent):
        sigma[np.flatnonzero(pos)[~coherent]] = 0.0
        pos = sigma > 0.0
        recovered = recovered[:, coherent]
        norms = norms[coherent]
    if recovered.size:
        recovered = recovered / norms
    other = np.zeros((dim, p), dtype=small_factor.dtype)
    other[:, pos] = recovered
    missing = int(np.count_nonzero(~pos))
    if missing:
        other[:, ~pos] = _complete_orthonormal(recovered, missing)
    return other, sigma


def pseudoinverse_apply(a, b, sigma_cutoff: float = 0.0) -> np.ndarray:
    """Minimum-norm least-squares solution ``A^+ b``.

    Args:
        a: (m x n) array.
        b: length-m vector.
        sigma_cutoff: singular values <= this value are treated as zero
            (values below the internal zero threshold already are).

    Returns:
        The length-n vector ``sum_j v_j <u_j, b> / sigma_j`` over retained
        singular triples.
    """
    a = as_matrix(a, "matrix")
    b = as_vector(b, "right-hand side")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"matrix has {a.shape[0]} rows but right-hand side has {b.shape[0]}")
    if sigma_cutoff < 0:
        raise ValueError("sigma_cutoff must be nonnegative")
    u, sigma, v = exact_svd(a)
    keep = sigma > sigma_cutoff
    if not np.any(keep):
        dtype = np.complex128 if (np.iscomplexobj(a) or np.iscomplexobj(b)) else np.float64
        return np.zeros(a.shape[1], dtype=dtype)
    coeff = (u[:, keep].conj().T @ b) / sigma[keep]
    return v[:, keep] @ coeff


def operator_norm(a) -> float:
    """Largest singular value, computed exactly via :func:`exact_svd`."""
    a = as_matrix(a, "matrix")
    _, sigma, _ = exact_svd(a)
    return float(sigma[0]) if sigma.size else 0.0


def hermitian_norm(h) -> float:
    """Spectral norm of a Hermitian matrix (largest |eigenvalue|)."""
    evals, _ = hermitian_eig(h)
    if evals.size == 0:
        return 0.0
    return float(max(abs(evals[0]), abs(evals[-1])))


def power_iteration_norm(a, iterations: int = 50, rtol: float = 1e-6,
                         seed: int = 0) -> float:
    """Power-iteration estimate of the operator norm, for diagnostics.

    Runs at most ``iterations`` rounds of ``v <- A^dagger A v`` from a
    seeded random start and stops early once successive estimates agree to
    ``rtol`` relatively.  Intended for matrices too large for
    :func:`operator_norm`; the estimate is a lower bound up to the gap
    structure of the spectrum.
    """
    from .rng import stream

    a = as_matrix(a, "matrix")
    gen = stream(seed, "power-iteration")
    v = gen.standard_normal(a.shape[1])
    if np.iscomplexobj(a):
        v = v + 1j * gen.standard_normal(a.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:  # pragma: no cover - probability zero
        v[0] = 1.0
        nv = 1.0
    v = v / nv
    estimate = 0.0
    for _ in range(iterations):
        av = a @ v
        new_estimate = float(np.linalg.norm(av))
        if new_estimate == 0.0:
            return 0.0
        w = a.conj().T @ av
        v = w / np.linalg.norm(w)
        if estimate > 0.0 and abs(new_estimate - estimate) <= rtol * new_estimate:
            return new_estimate
        estimate = new_estimate
    return estimate
