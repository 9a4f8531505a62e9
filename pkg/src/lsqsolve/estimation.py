"""Stochastic trace inner-product estimation and lambda recovery.

For matrices ``A`` (length-square sampleable) and ``B`` (entry oracle), the
single-sample estimator draws an entry ``(i, j)`` of ``A`` by length-square
and evaluates ``X = (||A||_F^2 / A_ij) * B_ij``, which is unbiased for
``tr(A^dagger B)`` with second moment ``||A||_F^2 ||B||_F^2``.  Additive
accuracy ``xi ||A||_F ||B||_F / sqrt(2)`` per part is then obtained by a
mean of ``ceil(9 / xi^2)`` copies and a median of ``ceil(6 ln(2 / eta))``
such means, taken on real and imaginary parts separately.

The overlap coefficients of the solver,
``lambda_l = <v~_l| A^dagger |b>``, are instances of this with
``B = |b><v~_l|``; an exact dense backend is provided for tests and for
runs where sampling precision would be wasteful.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, check_open_unit
from .errors import DimensionMismatch, EmptyInput, InvalidParameter, ZeroMatrix
from .lsaccess import LsMatrix
from .spectral import ImplicitRightVector

_MEAN_CONSTANT = 9.0
_MEDIAN_CONSTANT = 6.0
# per-coefficient additive target: epsilon * sigma~^2 ||b|| / (4 sqrt(k_hat))
_LAMBDA_TARGET_CONSTANT = 0.25


@dataclass
class EstimatorConfig:
    """Sampling sizes of the mean-of-batches / median-of-means estimator.

    ``batch_size`` and ``num_medians`` are derived from ``(xi, eta)`` when
    not given explicitly.
    """

    xi: float
    eta: float
    batch_size: int | None = None
    num_medians: int | None = None
    backend: str = "sampled"

    def __post_init__(self):
        self.xi = check_open_unit(self.xi, "xi")
        self.eta = check_open_unit(self.eta, "eta")
        if self.batch_size is None:
            self.batch_size = math.ceil(_MEAN_CONSTANT / self.xi ** 2)
        if self.num_medians is None:
            self.num_medians = math.ceil(_MEDIAN_CONSTANT * math.log(2.0 / self.eta))
        if self.batch_size < 1 or self.num_medians < 1:
            raise InvalidParameter("batch_size and num_medians must be positive")
        if self.backend not in ("sampled", "exact"):
            raise InvalidParameter(f"unknown estimator backend {self.backend!r}")


def estimate_trace_inner_product(a: LsMatrix, b_query, frob_b: float,
                                 config: EstimatorConfig,
                                 gen: np.random.Generator) -> complex:
    """Median-of-means estimate of ``tr(A^dagger B)``.

    Args:
        a: length-square access to ``A``.
        b_query: vectorized entry oracle; called as ``b_query(rows, cols)``
            with equal-length index arrays, returning the entries of ``B``.
        frob_b: (an upper bound on) ``||B||_F``; recorded for the accuracy
            contract, not used in the arithmetic.
        config: sampling sizes.
        gen: generator for the entry draws.

    Returns:
        Complex estimate accurate to ``xi * ||A||_F * frob_b / sqrt(2)``
        per real part with probability at least ``1 - eta``.
    """
    frob_a = a.frobenius_norm()
    if frob_a <= 0.0:
        raise ZeroMatrix("cannot sample entries of a zero matrix")
    total = config.batch_size * config.num_medians
    rows, cols = a.sample_entries(gen, total)
    a_vals = a.entries_at(rows, cols)
    b_vals = np.asarray(b_query(rows, cols))
    if b_vals.shape != rows.shape:
        raise DimensionMismatch("entry oracle returned a wrong-shaped batch")
    x = (frob_a ** 2 / a_vals) * b_vals
    means = x.reshape(config.num_medians, config.batch_size).mean(axis=1)
    # medians on real and imaginary parts separately
    return complex(np.median(means.real), np.median(means.imag))


@dataclass
class LambdaEstimates:
    """Overlap coefficients with their accuracy targets and realized cost."""

    values: np.ndarray
    target_precisions: np.ndarray
    backend: str
    samples_per_estimate: np.ndarray
    failure_budget_each: float


def lambda_targets(sigmas: np.ndarray, b_norm: float, epsilon: float,
                   k_hat: int) -> np.ndarray:
    """Per-coefficient additive precision targets."""
    return (_LAMBDA_TARGET_CONSTANT * epsilon * np.asarray(sigmas) ** 2
            * b_norm / math.sqrt(k_hat))


def estimate_lambdas(a: LsMatrix, b, vectors: list[ImplicitRightVector],
                     epsilon: float, eta: float,
                     gen: np.random.Generator | None = None,
                     backend: str = "sampled",
                     dense: np.ndarray | None = None) -> LambdaEstimates:
    """Estimate ``lambda_l = <v~_l| A^dagger |b>`` for every retained vector.

    The sampled backend estimates each coefficient to additive precision
    ``epsilon sigma~_l^2 ||b|| / (4 sqrt(k_hat))`` with failure budget
    ``eta / (2 k_hat)`` apiece, using ``||B_l||_F = ||v~_l|| ||b||`` bounded
    by ``(1 + epsilon) ||b||``.  The exact backend materializes each
    ``v~_l`` and evaluates the inner products densely; it is bitwise
    deterministic and needs no generator.

    Args:
        a: length-square access to ``A``.
        b: right-hand-side vector (length m).
        vectors: retained implicit right vectors.
        epsilon: accuracy parameter shaping the per-coefficient targets.
        eta: overall failure budget split across coefficients.
        gen: generator (required by the sampled backend).
        backend: ``"sampled"`` or ``"exact"``.
        dense: optional dense copy of ``a`` reused by the exact backend.
    """
    if not vectors:
        raise EmptyInput("no right vectors to take overlaps with")
    b = as_vector(b, "right-hand side")
    if b.shape[0] != a.m:
        raise DimensionMismatch(
            f"matrix has {a.m} rows but right-hand side has {b.shape[0]}")
    epsilon = check_open_unit(epsilon, "epsilon")
    eta = check_open_unit(eta, "eta")
    k_hat = len(vectors)
    sigmas = np.array([vec.sigma for vec in vectors])
    b_norm = float(np.linalg.norm(b))
    targets = lambda_targets(sigmas, b_norm, epsilon, k_hat)
    eta_each = eta / (2.0 * k_hat)

    if backend == "exact":
        if dense is None:
            dense = a.to_dense()
        values = np.empty(k_hat, dtype=np.complex128)
        for ell, vec in enumerate(vectors):
            av = dense @ vec.materialize()
            values[ell] = np.vdot(av, b)
        return LambdaEstimates(values=values, target_precisions=targets,
                               backend="exact",
                               samples_per_estimate=np.zeros(k_hat, dtype=np.int64),
                               failure_budget_each=eta_each)

    if backend != "sampled":
        raise InvalidParameter(f"unknown lambda backend {backend!r}")
    if gen is None:
        raise InvalidParameter("the sampled backend requires a generator")
    frob_a = a.frobenius_norm()
    frob_b_bound = (1.0 + epsilon) * b_norm
    values = np.empty(k_hat, dtype=np.complex128)
    counts = np.empty(k_hat, dtype=np.int64)
    streams = gen.spawn(k_hat)
    for ell, vec in enumerate(vectors):
        xi = targets[ell] / (frob_a * frob_b_bound)
        # a target coarser than the scale-free unit needs only the minimum batch
        xi = min(xi, 0.999)
        config = EstimatorConfig(xi=xi, eta=eta_each)

        def b_entry(rows, cols, _vec=vec):
            return b[rows] * np.conj(_vec.entries(cols))

        values[ell] = estimate_trace_inner_product(
            a, b_entry, frob_b_bound, config, streams[ell])
        counts[ell] = config.batch_size * config.num_medians
    return LambdaEstimates(values=values, target_precisions=targets,
                           backend="sampled", samples_per_estimate=counts,
                           failure_budget_each=eta_each)
