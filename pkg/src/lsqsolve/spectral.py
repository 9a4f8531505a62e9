"""Approximate spectrum of the sketch and implicit right singular vectors.

The column sketch ``C`` is small enough to decompose exactly: we
eigendecompose ``C C^dagger`` (r x r, Hermitian PSD) and keep singular
values above a floor.  Each retained left vector ``w`` of ``C`` induces an
implicit approximate right singular vector of the source matrix,

    v~ = R^dagger w / sigma~,

whose entries are O(r)-cost contractions against the implicit row sketch.
The conversion diagnostics materialize everything densely to measure how
far these vectors are from exact orthonormality and from spanning the row
space; they are strictly oracle-mode tools and never run on the fast path.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_positive
from .errors import DimensionMismatch, RankZero, SpanViolation
from .linalg import exact_svd, hermitian_eig, hermitian_norm, operator_norm
from .sketch import ColumnSketch, RowSketch

# sigma~_min^2 >= 4 / (5 kappa^2) on instances satisfying the accuracy
# hypotheses; the default detection floor sits at 80% of that scale.
_FLOOR_SAFETY = 0.8
_FLOOR_SCALE = math.sqrt(4.0 / 5.0)
_FLOOR_RTOL = 1e-10


def default_sigma_floor(sigma_max: float, kappa: float | None) -> float:
    """Detection floor below which sketch singular values are discarded."""
    floor = _FLOOR_RTOL * sigma_max
    if kappa is not None:
        floor = max(floor, _FLOOR_SAFETY * _FLOOR_SCALE / kappa)
    return floor


@dataclass
class ApproxSpectrum:
    """Retained singular values and left vectors of the column sketch.

    Attributes:
        sigmas: descending singular values of ``C`` above the floor.
        left_vectors: r x k_hat orthonormal columns (eigenvectors of CC^dagger).
        detected_rank: k_hat, the number of retained values.
        sigma_floor: the floor actually applied.
    """

    sigmas: np.ndarray
    left_vectors: np.ndarray
    detected_rank: int
    sigma_floor: float


def svd_of_sketch(csk: ColumnSketch, sigma_floor: float | None = None,
                  kappa: float | None = None) -> ApproxSpectrum:
    """Decompose the column sketch.

    Args:
        csk: materialized column sketch.
        sigma_floor: detection floor; when None, the default floor from
            ``kappa`` (or the pure relative floor) is used.
        kappa: condition bound used by the default floor.

    Returns:
        The retained part of the spectrum, descending.

    Raises:
        RankZero: no singular value survived the floor.
    """
    c = as_matrix(csk.c_matrix, "column sketch")
    gram = c @ c.conj().T
    evals, vecs = hermitian_eig(gram)
    sigmas = np.sqrt(np.clip(evals, 0.0, None))
    if sigma_floor is None:
        sigma_floor = default_sigma_floor(float(sigmas[0]), kappa)
    sigma_floor = float(sigma_floor)
    k_hat = int(np.count_nonzero(sigmas > sigma_floor))
    if k_hat == 0:
        raise RankZero(
            f"no singular value above the floor {sigma_floor:.3e} "
            f"(largest is {sigmas[0]:.3e})")
    return ApproxSpectrum(sigmas=sigmas[:k_hat].copy(),
                          left_vectors=vecs[:, :k_hat].copy(),
                          detected_rank=k_hat, sigma_floor=sigma_floor)


@dataclass
class ImplicitRightVector:
    """An approximate right singular vector ``v~ = R^dagger w / sigma~``.

    Stored implicitly: entry ``j`` is
    ``sum_s conj(R[s, j]) w_s / sigma~`` and costs one O(r) contraction
    against the sketched rows.  Duplicated sketch rows are pre-grouped so a
    gather touches each distinct source row once.
    """

    sketch: RowSketch
    coefficients: np.ndarray
    sigma: float
    _group_weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients)
        check_positive(self.sigma, "sigma")
        # conj(R[s,j]) w_s summed over duplicates of a source row collapses
        # to conj(A[i,j]) * g_i with g_i = sum_{s: i_s = i} scale_s * w_s
        g = []
        for _, positions in self.sketch.distinct_rows():
            g.append(np.sum(self.sketch.scale_factors[positions]
                            * self.coefficients[positions]))
        self._group_weights = np.asarray(g)

    def entries(self, cols) -> np.ndarray:
        """Entries ``v~[cols]`` via grouped contraction, vectorized in cols."""
        cols = np.asarray(cols, dtype=np.int64)
        source = self.sketch.source
        out = np.zeros(cols.shape[0], dtype=np.complex128)
        for (i, _), g in zip(self.sketch.distinct_rows(), self._group_weights):
            out += np.conj(source.row_values(i)[cols]) * g
        out /= self.sigma
        if not np.iscomplexobj(source.row_values(0)) and not np.iscomplexobj(self.coefficients):
            return out.real.copy()
        return out

    def entry(self, j: int):
        return self.entries(np.asarray([j]))[0]

    def materialize(self) -> np.ndarray:
        """The full length-n vector (oracle-mode; O(r n))."""
        return self.entries(np.arange(self.sketch.source.n))


def right_vectors(sketch: RowSketch, spectrum: ApproxSpectrum) -> list[ImplicitRightVector]:
    """The implicit right vectors for every retained singular value."""
    return [ImplicitRightVector(sketch=sketch,
                                coefficients=spectrum.left_vectors[:, ell],
                                sigma=float(spectrum.sigmas[ell]))
            for ell in range(spectrum.detected_rank)]


@dataclass
class ConversionDiagnostics:
    """Dense measurements of sketch-to-spectrum conversion quality.

    alpha: max entrywise deviation of V~^dagger V~ from the identity.
    beta: max entrywise deviation of V~^dagger R^dagger R V~ from diag(sigma~^2).
    gamma: ||R R^dagger - C C^dagger||.
    theta: ||A^dagger A - R^dagger R||.
    projector_error: ||P_rows(A) - sum_l (v~_l v~_l^dagger / sigma~_l^2) A^dagger A||.

    The remaining fields record the certified ceilings these measurements
    are compared against, and whether their preconditions held.
    """

    alpha: float
    beta: float
    gamma: float
    theta: float
    projector_error: float
    sigma_min: float
    norm_r: float
    k_hat: int
    alpha_bound: float
    beta_bound: float
    projector_bound: float
    alpha_precondition_ok: bool
    sigma_precondition_ok: bool | None
    pairwise_overlap_ok: bool
    pairwise_rayleigh_ok: bool


# tolerance absorbing rounding in the dense diagnostic inequalities
_DIAG_TOL = 1e-7


def conversion_diagnostics(a_dense, sketch: RowSketch, csk: ColumnSketch,
                           spectrum: ApproxSpectrum,
                           kappa: float | None = None) -> ConversionDiagnostics:
    """Measure conversion quality densely (oracle mode only).

    Args:
        a_dense: the source matrix as a dense array.
        sketch: the row sketch used.
        csk: the column sketch used.
        spectrum: output of :func:`svd_of_sketch`.
        kappa: condition bound; enables the kappa-dependent checks.

    Returns:
        :class:`ConversionDiagnostics` with measured quantities, the
        certified ceilings, and precondition flags.
    """
    a = as_matrix(a_dense, "matrix")
    r_dense = sketch.dense()
    if r_dense.shape[1] != a.shape[1]:
        raise DimensionMismatch("sketch and matrix disagree on column count")
    sig = spectrum.sigmas
    k_hat = spectrum.detected_rank
    v = (r_dense.conj().T @ spectrum.left_vectors) / sig[None, :]

    gram_v = v.conj().T @ v
    alpha = float(np.max(np.abs(gram_v - np.eye(k_hat))))
    rtr = r_dense.conj().T @ r_dense
    rayleigh = v.conj().T @ rtr @ v
    beta = float(np.max(np.abs(rayleigh - np.diag(sig ** 2))))
    gamma = hermitian_norm(r_dense @ r_dense.conj().T
                           - csk.c_matrix @ csk.c_matrix.conj().T)
    theta = hermitian_norm(a.conj().T @ a - rtr)
    norm_r = operator_norm(r_dense)

    _, a_sig, a_v = exact_svd(a)
    row_basis = a_v[:, a_sig > 0.0]
    pi_rows = row_basis @ row_basis.conj().T
    approx_proj = v @ ((1.0 / sig ** 2)[:, None] * (v.conj().T @ (a.conj().T @ a)))
    projector_error = operator_norm(pi_rows - approx_proj)

    sigma_min = float(sig[-1])
    # per-pair ceilings from the overlap analysis, evaluated at sigma_min
    alpha_bound = gamma / sigma_min ** 2
    beta_bound = gamma * (2.0 * norm_r ** 2 + gamma) / sigma_min ** 2
    outer = np.outer(sig, sig)
    pairwise_overlap_ok = bool(
        np.all(np.abs(gram_v - np.eye(k_hat)) <= gamma / outer + _DIAG_TOL))
    pairwise_rayleigh_ok = bool(
        np.all(np.abs(rayleigh - np.diag(sig ** 2))
               <= gamma * (2.0 * norm_r ** 2 + gamma) / outer + _DIAG_TOL))

    alpha_precondition_ok = alpha <= 1.0 / (4.0 * k_hat)
    if kappa is not None:
        sigma_precondition_ok = sigma_min ** 2 >= 4.0 / (5.0 * kappa ** 2)
        projector_bound = (8.0 * k_hat / 3.0) * (beta * kappa ** 2
                                                 + theta * kappa ** 2 + alpha)
    else:
        sigma_precondition_ok = None
        projector_bound = float("inf")

    return ConversionDiagnostics(
        alpha=alpha, beta=beta, gamma=gamma, theta=theta,
        projector_error=projector_error, sigma_min=sigma_min, norm_r=norm_r,
        k_hat=k_hat, alpha_bound=alpha_bound, beta_bound=beta_bound,
        projector_bound=projector_bound,
        alpha_precondition_ok=alpha_precondition_ok,
        sigma_precondition_ok=sigma_precondition_ok,
        pairwise_overlap_ok=pairwise_overlap_ok,
        pairwise_rayleigh_ok=pairwise_rayleigh_ok)


def rank_restricted_norm_bound(b, v) -> tuple[float, float]:
    """Check ``||B|| <= ||(V^dagger V)^-1|| * ||V^dagger B V||``.

    Valid whenever the columns of ``v`` span both the row and column spaces
    of ``b``; that premise is verified by projecting ``b`` onto span(v) and
    requiring the residual to be at most 1e-8 (relative to ``||B||_F``,
    with an absolute floor of 1).

    Returns:
        ``(lhs, rhs)`` of the inequality, both as operator norms.

    Raises:
        SpanViolation: the span premise fails or V is rank deficient.
    """
    b = as_matrix(b, "matrix")
    v = as_matrix(v, "test vectors")
    if v.shape[0] != b.shape[0] or b.shape[0] != b.shape[1]:
        raise DimensionMismatch("need square B and matching V row count")
    gram = v.conj().T @ v
    evals, _ = hermitian_eig(gram)
    if evals[-1] <= 1e-12 * max(evals[0], 1.0):
        raise SpanViolation("test vectors are numerically rank deficient")
    gram_inv = np.linalg.inv(gram)
    proj = v @ gram_inv @ v.conj().T
    residual = np.linalg.norm(b - proj @ b @ proj)
    if residual > 1e-8 * max(1.0, np.linalg.norm(b)):
        raise SpanViolation(
            f"projection residual {residual:.3e} exceeds tolerance; "
            "vectors do not span the operand")
    lhs = operator_norm(b)
    rhs = hermitian_norm(gram_inv) * operator_norm(v.conj().T @ b @ v)
    return lhs, rhs
