"""Brute-force oracles for verifying every randomized component exactly.

Everything here enumerates: exact length-square distributions, exact
expectations of the sketch stages, the exact output law of the rejection
sampler, and dense residual reports against the true minimum-norm
solution.  These routines are RNG-free, quadratic-or-worse on purpose, and
refuse inputs past a hard size gate so they can never leak onto a fast
path.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._validation import as_matrix, as_vector
from .errors import (DimensionMismatch, SizeGateExceeded, ZeroMatrix,
                     ZeroSolution, ZeroVector)
from .lsaccess import squared_magnitudes
from .linalg import exact_svd, pseudoinverse_apply
from .solver import SolutionHandle
from .spectral import right_vectors

# hard gate: enumeration oracles refuse anything larger
MAX_ORACLE_DIM = 4096
MAX_ORACLE_SKETCH_ROWS = 2048

# empirical frequency comparisons run chi-squared at this significance
CHI2_SIGNIFICANCE = 0.001

# sum of |lambda_l|^2 / sigma~_l^2 stays below c1 (k_hat + epsilon)
LAMBDA_RATIO_FACTOR = 4.0


def _gate(**dims):
    for name, (value, limit) in dims.items():
        if value > limit:
            raise SizeGateExceeded(
                f"oracle refuses {name}={value} (gate {limit}); "
                "enumeration oracles are desk-scale only")


@dataclass(frozen=True)
class ProbabilityVector:
    """A validated finite probability distribution over indices."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise DimensionMismatch("probabilities must form a nonempty 1-d array")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return int(self.probs.shape[0])


def exact_ls_distribution(v) -> ProbabilityVector:
    """The length-square distribution ``|v_i|^2 / ||v||^2`` of a vector."""
    v = as_vector(v, "vector")
    _gate(n=(v.shape[0], MAX_ORACLE_DIM))
    w = squared_magnitudes(v)
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroVector("zero vector has no length-square distribution")
    return ProbabilityVector(w / total)


def tv_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Total variation distance ``0.5 * sum_i |p_i - q_i|``."""
    if p.n != q.n:
        raise DimensionMismatch("distributions live on different index sets")
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def tv_euclid_check(v, w) -> tuple[float, float]:
    """TV distance of two length-square laws and its Euclidean ceiling.

    Returns ``(tv, bound)`` with ``bound = 2 ||v - w|| / max(||v||, ||w||)``;
    the first never exceeds the second.
    """
    v = as_vector(v, "first vector")
    w = as_vector(w, "second vector")
    if v.shape != w.shape:
        raise DimensionMismatch("vectors must have equal length")
    nv, nw = float(np.linalg.norm(v)), float(np.linalg.norm(w))
    if nv <= 0.0 or nw <= 0.0:
        raise ZeroVector("both vectors need nonzero norm")
    tv = tv_distance(exact_ls_distribution(v), exact_ls_distribution(w))
    bound = 2.0 * float(np.linalg.norm(v - w)) / max(nv, nw)
    return tv, bound


def enumerate_sketch_expectation(a_dense) -> np.ndarray:
    """Exact ``E[R^dagger R]`` of the row sketch by enumeration.

    Sums ``p_i Y_i^dagger Y_i`` over rows with ``Y_i = A_i / sqrt(p_i)``
    and ``p_i = ||A_i||^2 / ||A||_F^2`` (zero rows are excluded from the
    law); equals ``A^dagger A`` identically.
    """
    a = as_matrix(a_dense, "matrix")
    _gate(m=(a.shape[0], 64))
    row_sq = squared_magnitudes(a).sum(axis=1)
    total = float(row_sq.sum())
    if total <= 0.0:
        raise ZeroMatrix("zero matrix has no row-sampling law")
    out = np.zeros((a.shape[1], a.shape[1]),
                   dtype=np.complex128 if np.iscomplexobj(a) else np.float64)
    for i in range(a.shape[0]):
        p = row_sq[i] / total
        if p == 0.0:
            continue
        y = a[i] / math.sqrt(p)
        out += p * np.outer(np.conj(y), y)
    return out


def enumerate_column_expectation(r_dense) -> np.ndarray:
    """Exact ``E[C C^dagger]`` of the column stage by enumeration.

    Enumerates the two-stage column law ``p_j = (1/r) sum_s |R_sj|^2 /
    ||R_s||^2`` and the per-column rescaling.  Equals ``R R^dagger`` when
    the sketch rows share a common norm, which length-square row sketches
    guarantee by construction.
    """
    r = as_matrix(r_dense, "row sketch")
    _gate(r=(r.shape[0], MAX_ORACLE_SKETCH_ROWS), n=(r.shape[1], MAX_ORACLE_DIM))
    row_sq = squared_magnitudes(r).sum(axis=1)
    if np.any(row_sq <= 0.0):
        raise ZeroVector("sketch rows must have nonzero norm")
    frob_sq = float(row_sq.sum())
    col_law = (squared_magnitudes(r) / row_sq[:, None]).mean(axis=0)
    col_sq = squared_magnitudes(r).sum(axis=0)
    out = np.zeros((r.shape[0], r.shape[0]),
                   dtype=np.complex128 if np.iscomplexobj(r) else np.float64)
    for j in range(r.shape[1]):
        if col_law[j] == 0.0:
            continue
        col = r[:, j]
        out += col_law[j] * frob_sq * np.outer(col, np.conj(col)) / col_sq[j]
    return out


def enumerate_rejection_distribution(handle: SolutionHandle) -> ProbabilityVector:
    """Exact output law of the rejection sampler, by enumeration.

    For every column ``j``: proposal mass ``(1/r) sum_s |A[i_s, j]|^2 /
    ||A[i_s]||^2`` times acceptance ``|x~_j|^2 / (||w||^2 ||R[:, j]||^2)``,
    normalized.  Matches the length-square law of ``x~`` identically (up
    to rounding), independent of the sketch.
    """
    source = handle.source
    _gate(n=(source.n, MAX_ORACLE_DIM),
          r=(handle.sketch.r, MAX_ORACLE_SKETCH_ROWS))
    w_sq = float(np.vdot(handle.w, handle.w).real)
    if w_sq <= 0.0:
        raise ZeroSolution("zero solution has no sampling law")
    r_dense = handle.sketch.dense()
    x = handle.query_entries(np.arange(source.n))
    proposal = np.zeros(source.n)
    for i, positions in handle.sketch.distinct_rows():
        row = source.row_values(i)
        row_sq = float(squared_magnitudes(row).sum())
        proposal += len(positions) * squared_magnitudes(row) / row_sq
    proposal /= handle.sketch.r
    col_sq = squared_magnitudes(r_dense).sum(axis=0)
    accept = np.zeros(source.n)
    nz = col_sq > 0.0
    accept[nz] = squared_magnitudes(x)[nz] / (w_sq * col_sq[nz])
    unnorm = proposal * accept
    total = float(unnorm.sum())
    if total <= 0.0:
        raise ZeroSolution("rejection law has no mass")
    return ProbabilityVector(unnorm / total)


def frequency_check(counts, probs: ProbabilityVector,
                    significance: float = CHI2_SIGNIFICANCE
                    ) -> tuple[float, float, bool]:
    """Chi-squared comparison of empirical counts against an exact law.

    Cells with zero probability must have zero counts (else the check
    fails outright).  Returns ``(statistic, threshold, ok)`` where
    ``threshold`` is the (1 - significance) quantile at ``support - 1``
    degrees of freedom.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != probs.probs.shape:
        raise DimensionMismatch("counts and probabilities must align")
    n_samples = float(counts.sum())
    support = probs.probs > 0.0
    if np.any(counts[~support] > 0.0):
        return float("inf"), 0.0, False
    expected = probs.probs[support] * n_samples
    stat = float(((counts[support] - expected) ** 2 / expected).sum())
    dof = int(np.count_nonzero(support)) - 1
    if dof == 0:
        # point mass: any counts on the single support cell are exact
        return stat, 0.0, stat <= 0.0
    threshold = float(stats.chi2.ppf(1.0 - significance, dof))
    return stat, threshold, stat <= threshold


@dataclass
class ResidualReport:
    """Dense comparison of the implicit solution against ground truth.

    ``x`` is the exact minimum-norm solution, ``x'`` the ideal output of
    the spectrum actually retained (exact overlaps), and ``x~`` the
    solution the handle describes.  The chain fields evaluate
    ``||x~ - x'|| <= sqrt(||V~^dagger V~||) ||z||`` with
    ``z_l = (lambda~_l - lambda_l) / sigma~_l^2`` both with the measured
    Gram norm and with the nominal ceiling 4/3.
    """

    rel_residual: float
    projection_fraction: float
    x_norm: float
    x_tilde_norm: float
    x_prime_minus_x: float
    lambda_perturbation: float
    chain_rhs_measured: float
    chain_rhs_nominal: float
    gram_norm: float
    lambda_errors: np.ndarray
    lambda_targets: np.ndarray
    lambda_ratio_sum: float
    lambda_ratio_bound: float
    w_norm: float
    hypothesis_ok: bool


def residual_report(a_dense, b, handle: SolutionHandle,
                    epsilon: float | None = None) -> ResidualReport:
    """Measure the handle's solution against the dense ground truth.

    Args:
        a_dense: dense copy of the solved matrix.
        b: the right-hand side used.
        handle: solver output.
        epsilon: accuracy parameter for the lambda-ratio ceiling (falls
            back to 0 when unknown).
    """
    a = as_matrix(a_dense, "matrix")
    b = as_vector(b, "right-hand side")
    _gate(m=(a.shape[0], MAX_ORACLE_DIM), n=(a.shape[1], MAX_ORACLE_DIM),
          r=(handle.sketch.r, MAX_ORACLE_SKETCH_ROWS))
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch("matrix and right-hand side disagree")

    x = pseudoinverse_apply(a, b, 0.0)
    x_norm = float(np.linalg.norm(x))
    x_tilde = handle.materialize()

    u, sig, _ = exact_svd(a)
    col_basis = u[:, sig > 0.0]
    b_norm = float(np.linalg.norm(b))
    proj_fraction = float(np.linalg.norm(col_basis.conj().T @ b) / b_norm) \
        if b_norm > 0.0 else 0.0

    vecs = right_vectors(handle.sketch, handle.spectrum)
    v_mat = np.column_stack([vec.materialize() for vec in vecs])
    sigmas = handle.spectrum.sigmas
    lambda_exact = np.array([np.vdot(a @ v_mat[:, ell], b)
                             for ell in range(len(vecs))])
    x_prime = v_mat @ (lambda_exact / sigmas.astype(np.complex128) ** 2)

    gram = v_mat.conj().T @ v_mat
    gram_norm = float(np.linalg.eigvalsh(gram)[-1])
    z = (handle.lambdas - lambda_exact) / sigmas ** 2
    lambda_perturbation = float(np.linalg.norm(x_tilde - x_prime))
    chain_rhs_measured = math.sqrt(max(gram_norm, 0.0)) * float(np.linalg.norm(z))
    chain_rhs_nominal = math.sqrt(4.0 / 3.0) * float(np.linalg.norm(z))

    eps = 0.0 if epsilon is None else float(epsilon)
    ratio_sum = float(np.sum(squared_magnitudes(lambda_exact) / sigmas ** 2))
    ratio_bound = LAMBDA_RATIO_FACTOR * (len(vecs) + eps)

    hypothesis_ok = x_norm > 0.0 and proj_fraction > 0.0
    rel_residual = float(np.linalg.norm(x_tilde - x) / x_norm) \
        if x_norm > 0.0 else float("inf")

    return ResidualReport(
        rel_residual=rel_residual,
        projection_fraction=proj_fraction,
        x_norm=x_norm,
        x_tilde_norm=float(np.linalg.norm(x_tilde)),
        x_prime_minus_x=float(np.linalg.norm(x_prime - x)),
        lambda_perturbation=lambda_perturbation,
        chain_rhs_measured=chain_rhs_measured,
        chain_rhs_nominal=chain_rhs_nominal,
        gram_norm=gram_norm,
        lambda_errors=np.abs(handle.lambdas - lambda_exact),
        lambda_targets=np.asarray(
            handle.lambda_info.target_precisions if handle.lambda_info is not None
            else np.full(len(vecs), np.nan)),
        lambda_ratio_sum=ratio_sum,
        lambda_ratio_bound=ratio_bound,
        w_norm=handle.w_norm,
        hypothesis_ok=hypothesis_ok)
