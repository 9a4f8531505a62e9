"""Trace inner-product estimator: exactness by enumeration, calibration."""

import numpy as np
import pytest
from conftest import random_matrix

from lsqsolve.errors import InvalidParameter, ZeroMatrix
from lsqsolve.estimation import (EstimatorConfig, estimate_lambdas,
                                 estimate_trace_inner_product, lambda_targets)
from lsqsolve.lsaccess import LsMatrix
from lsqsolve.rng import stream
from lsqsolve.sketch import column_sketch_from_indices, row_sketch_from_indices
from lsqsolve.spectral import right_vectors, svd_of_sketch


def enumerated_mean_and_second_moment(a, b):
    """E[X] and E[|X|^2] of the single-draw estimator, by full enumeration."""
    frob_sq = np.sum(np.abs(a) ** 2)
    mean = 0.0 + 0.0j
    second = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] == 0:
                continue
            p = abs(a[i, j]) ** 2 / frob_sq
            x = frob_sq / a[i, j] * b[i, j]
            mean += p * x
            second += p * abs(x) ** 2
    return mean, second


def test_config_sizes():
    config = EstimatorConfig(xi=0.1, eta=0.05)
    assert config.batch_size == 900
    assert config.num_medians == 23


def test_config_rejects_bad_backend():
    with pytest.raises(InvalidParameter):
        EstimatorConfig(xi=0.1, eta=0.05, backend="montecarlo")


@pytest.mark.parametrize("seed", range(5))
def test_enumerated_unbiasedness(seed):
    a = random_matrix(seed, 12, 9, complex_entries=True, tag="est-a")
    b = random_matrix(seed, 12, 9, complex_entries=True, tag="est-b")
    mean, second = enumerated_mean_and_second_moment(a, b)
    trace = np.trace(a.conj().T @ b)
    assert abs(mean - trace) <= 1e-12 * abs(trace)
    frob_product = np.sum(np.abs(a) ** 2) * np.sum(np.abs(b) ** 2)
    assert abs(second - frob_product) <= 1e-12 * frob_product


def test_single_entry_zero_variance():
    a = LsMatrix(np.array([[1.0]]))
    est = estimate_trace_inner_product(
        a, lambda r, c: np.ones(len(r)), 1.0,
        EstimatorConfig(xi=0.5, eta=0.5), stream(0, "single"))
    assert est == 1.0 + 0.0j


def test_zero_b_estimates_zero():
    a = LsMatrix(np.array([[1.0, 2.0], [0.5, -1.0]]))
    est = estimate_trace_inner_product(
        a, lambda r, c: np.zeros(len(r)), 0.0,
        EstimatorConfig(xi=0.3, eta=0.3), stream(1, "zerob"))
    assert est == 0.0 + 0.0j


def test_zero_matrix_rejected():
    a = LsMatrix(np.array([[1.0]]))
    a.set_entry(0, 0, 0.0)
    with pytest.raises(ZeroMatrix):
        estimate_trace_inner_product(a, lambda r, c: np.ones(len(r)), 1.0,
                                     EstimatorConfig(xi=0.5, eta=0.5),
                                     stream(2, "zm"))


def test_estimator_calibration():
    # failure rate of the xi band stays within the budget plus slack
    gen_mat = stream(3, "calib")
    dense = gen_mat.standard_normal((16, 16))
    bmat = gen_mat.standard_normal((16, 16))
    a = LsMatrix(dense)
    truth = float(np.trace(dense.T @ bmat))
    frob_b = float(np.linalg.norm(bmat))
    band = 0.2 * a.frobenius_norm() * frob_b
    config = EstimatorConfig(xi=0.2, eta=0.1)
    failures = 0
    runs = 100
    for rep in range(runs):
        est = estimate_trace_inner_product(
            a, lambda r, c: bmat[r, c], frob_b, config,
            stream(4, "calib-run", rep))
        if abs(est.real - truth) > band:
            failures += 1
    # eta * runs = 10 expected worst case; 3 binomial sigmas of slack
    assert failures <= 10 + 3 * np.sqrt(runs * 0.1 * 0.9)


def _exhaustive_vectors(dense, k, reps=4):
    a = LsMatrix(dense)
    m, n = dense.shape
    rows = row_sketch_from_indices(a, np.tile(np.arange(m), reps))
    csk = column_sketch_from_indices(rows, np.tile(np.arange(n), reps))
    spec = svd_of_sketch(csk, sigma_floor=1e-6)
    return a, spec, right_vectors(rows, spec)


def test_lambda_orthogonal_rhs_is_zero():
    dense = np.outer([1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 1.0, 1.0])
    a, spec, vecs = _exhaustive_vectors(dense, k=1)
    b = np.array([1.0, -1.0, 0.0, 0.0])
    lam = estimate_lambdas(a, b, vecs, epsilon=0.25, eta=0.1, backend="exact")
    np.testing.assert_array_equal(lam.values, 0.0)


def test_lambda_diagonal_exact_sketch():
    dense = np.diag([1.0, 0.5])
    a, spec, vecs = _exhaustive_vectors(dense, k=2)
    b = np.array([1.0, 0.0])
    lam = estimate_lambdas(a, b, vecs, epsilon=0.25, eta=0.1, backend="exact")
    # leading coefficient carries sigma_1; eigenvector sign is arbitrary
    assert abs(lam.values[0]) == pytest.approx(1.0, abs=1e-10)
    assert abs(lam.values[1]) == pytest.approx(0.0, abs=1e-10)


def test_lambda_targets_shape():
    targets = lambda_targets(np.array([1.0, 0.5]), b_norm=2.0, epsilon=0.4,
                             k_hat=2)
    np.testing.assert_allclose(
        targets, [0.25 * 0.4 * 1.0 * 2.0 / np.sqrt(2),
                  0.25 * 0.4 * 0.25 * 2.0 / np.sqrt(2)])


def test_lambda_sampled_meets_targets():
    gen = stream(5, "lam")
    u, _ = np.linalg.qr(gen.standard_normal((24, 2)))
    v, _ = np.linalg.qr(gen.standard_normal((18, 2)))
    dense = (u * [1.0, 0.9]) @ v.T
    a, spec, vecs = _exhaustive_vectors(dense, k=2)
    b = dense @ v[:, 0] + 0.1 * u[:, 1]
    exact = estimate_lambdas(a, b, vecs, epsilon=0.9, eta=0.2,
                             backend="exact", dense=dense)
    good = 0
    trials = 100
    for rep in range(trials):
        sampled = estimate_lambdas(a, b, vecs, epsilon=0.9, eta=0.2,
                                   gen=stream(6, "lam-trial", rep),
                                   backend="sampled")
        errs = np.abs(sampled.values - exact.values)
        if np.all(errs <= sampled.target_precisions):
            good += 1
    assert good >= trials * (1 - 0.2)


def test_lambda_sampled_requires_generator():
    dense = np.diag([1.0, 0.5])
    a, spec, vecs = _exhaustive_vectors(dense, k=2)
    with pytest.raises(InvalidParameter):
        estimate_lambdas(a, np.array([1.0, 0.0]), vecs, epsilon=0.5, eta=0.1,
                         backend="sampled")
