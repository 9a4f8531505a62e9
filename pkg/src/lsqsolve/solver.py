"""End-to-end regression solver with an implicit solution handle.

``solve`` runs the pipeline: plan sizes, draw the two-stage sketch,
decompose the column sketch, estimate the overlap coefficients
``lambda_l = <v~_l| A^dagger |b>``, and assemble

    w = sum_l (lambda~_l / sigma~_l^3) w_l,        x~ = R^dagger w,

where ``w_l`` are the retained left vectors of the sketch.  The solution
is returned as a :class:`SolutionHandle` that supports entry queries
(O(r) contractions), length-square index sampling by rejection against
the sketched rows, and norm estimation, all without materializing ``x~``.

Determinism: all randomness derives from ``config.seed`` through tagged
streams, so equal seeds give bitwise-equal handles and sample sequences.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_vector, check_open_unit
from .errors import (DimensionMismatch, InvalidParameter, NormBoundViolated,
                     RejectionCapExceeded, ZeroMatrix, ZeroSolution, ZeroVector)
from .estimation import estimate_lambdas
from .lsaccess import LsMatrix
from .rng import stream
from .sketch import (ColumnSketch, RowSketch, plan_sketch, sample_columns,
                     sample_rows)
from .spectral import (ApproxSpectrum, right_vectors, svd_of_sketch)

# ||w|| <= NORM_BOUND_FACTOR * kappa^2 sqrt(k_hat) ||b|| on well-posed runs
DEFAULT_NORM_BOUND_FACTOR = 8.0
_PILOT_ROUNDS = 256
_CAP_MULTIPLIER = 100
_SAMPLE_BATCH = 1024


@dataclass
class SolverConfig:
    """Everything the solver needs besides the data.

    Attributes:
        epsilon, eta: accuracy target and failure budget in (0, 1).
        kappa: condition bound (>= 1); required in theoretical mode and
            for the default singular-value floor and norm certificate.
        k: target rank (positive integer).
        mode: ``"theoretical"`` derives (r, c) from the analysis;
            ``"manual"`` uses ``r`` and ``c`` as given.
        r, c: sketch sizes for manual mode.
        lambda_backend: ``"exact"`` (default; dense overlaps, the right
            choice in tests) or ``"sampled"`` (scaling experiments).
        rejection_cap: per-sample round cap; None resolves it by a pilot.
        sigma_floor: detection floor override.
        seed: root seed for every randomized stage.
        norm_bound_factor: multiplier of the ||w|| certificate.
    """

    epsilon: float = 0.25
    eta: float = 0.1
    kappa: float | None = None
    k: int | None = None
    mode: str = "manual"
    r: int | None = None
    c: int | None = None
    lambda_backend: str = "exact"
    rejection_cap: int | None = None
    sigma_floor: float | None = None
    seed: int = 0
    norm_bound_factor: float = DEFAULT_NORM_BOUND_FACTOR

    def __post_init__(self):
        self.epsilon = check_open_unit(self.epsilon, "epsilon")
        self.eta = check_open_unit(self.eta, "eta")
        if self.k is None:
            raise InvalidParameter("config.k (target rank) is required")
        if self.mode == "theoretical" and self.kappa is None:
            raise InvalidParameter("theoretical mode requires kappa")


@dataclass
class SolutionHandle:
    """Implicit description of the approximate minimum-norm solution.

    The handle owns everything needed to query and sample ``x~ = R^dagger w``
    and to serialize/replay the run: the row sketch, the retained spectrum,
    the overlap estimates, and the assembled coefficient vector ``w``.
    """

    sketch: RowSketch
    spectrum: ApproxSpectrum
    lambdas: np.ndarray
    w: np.ndarray
    b_norm: float
    seed: int
    rejection_cap: int
    lambda_info: object = None
    plan: object = None
    _group_weights: np.ndarray = field(default=None, repr=False)
    _group_sq_scales: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.w = np.asarray(self.w)
        g, gs = [], []
        for _, positions in self.sketch.distinct_rows():
            g.append(np.sum(self.sketch.scale_factors[positions]
                            * self.w[positions]))
            gs.append(np.sum(self.sketch.scale_factors[positions] ** 2))
        self._group_weights = np.asarray(g)
        self._group_sq_scales = np.asarray(gs, dtype=np.float64)

    @property
    def source(self) -> LsMatrix:
        return self.sketch.source

    @property
    def w_norm(self) -> float:
        return float(np.linalg.norm(self.w))

    def query_entries(self, cols) -> np.ndarray:
        """Entries ``x~[cols] = sum_s conj(R[s, col]) w_s``, vectorized."""
        cols = np.asarray(cols, dtype=np.int64)
        source = self.sketch.source
        out = np.zeros(cols.shape[0], dtype=np.complex128)
        for (i, _), g in zip(self.sketch.distinct_rows(), self._group_weights):
            out += np.conj(source.row_values(i)[cols]) * g
        if not np.iscomplexobj(source.row_values(0)) and not np.iscomplexobj(self.w):
            return out.real.copy()
        return out

    def query_entry(self, j: int):
        return self.query_entries(np.asarray([j]))[0]

    def materialize(self) -> np.ndarray:
        """Dense ``x~`` (oracle-mode convenience; O(r n))."""
        return self.query_entries(np.arange(self.source.n))


def assemble_solution(a: LsMatrix, b, rows: RowSketch, csk: ColumnSketch,
                      config: SolverConfig, plan=None
                      ) -> tuple[SolutionHandle, dict]:
    """Post-sketch stages: decompose, estimate overlaps, build ``w``.

    Shared by :func:`solve_pipeline` and by replayed or exhaustively built
    sketches.  Returns ``(handle, timings)`` with stage timings for svd,
    lambda and assembly in seconds.

    Raises:
        NormBoundViolated: the assembled ``w`` exceeds its certificate,
            which signals a bad instance or an undersized sketch.
    """
    from time import perf_counter

    b = as_vector(b, "right-hand side")
    if b.shape[0] != a.m:
        raise DimensionMismatch(
            f"matrix has {a.m} rows but right-hand side has {b.shape[0]}")
    b_norm = float(np.linalg.norm(b))
    if b_norm <= 0.0:
        raise ZeroVector("right-hand side has zero norm")

    t1 = perf_counter()
    spectrum = svd_of_sketch(csk, sigma_floor=config.sigma_floor,
                             kappa=config.kappa)
    t2 = perf_counter()
    vectors = right_vectors(rows, spectrum)
    lam = estimate_lambdas(a, b, vectors, epsilon=config.epsilon,
                           eta=config.eta,
                           gen=stream(config.seed, "lambdas"),
                           backend=config.lambda_backend)
    t3 = perf_counter()
    coeff = lam.values / spectrum.sigmas.astype(np.complex128) ** 3
    w = spectrum.left_vectors @ coeff
    if not np.iscomplexobj(csk.c_matrix) and np.all(lam.values.imag == 0.0):
        w = w.real.copy()
    w_norm = float(np.linalg.norm(w))
    if config.kappa is not None:
        bound = config.norm_bound_factor * config.kappa ** 2 \
            * math.sqrt(spectrum.detected_rank) * b_norm
        if w_norm > bound:
            raise NormBoundViolated(
                f"||w|| = {w_norm:.6g} exceeds certificate {bound:.6g} "
                f"(kappa={config.kappa}, k_hat={spectrum.detected_rank}, "
                f"sigma_min~={spectrum.sigmas[-1]:.4g}); the instance is "
                "ill-posed for this plan or the sketch is undersized")
    t4 = perf_counter()

    handle = SolutionHandle(sketch=rows, spectrum=spectrum, lambdas=lam.values,
                            w=w, b_norm=b_norm, seed=config.seed,
                            rejection_cap=0, lambda_info=lam, plan=plan)
    handle.rejection_cap = _resolve_rejection_cap(handle, config)
    timings = {"svd": t2 - t1, "lambda": t3 - t2, "assembly": t4 - t3}
    return handle, timings


def solve_pipeline(a: LsMatrix, b, config: SolverConfig
                   ) -> tuple[SolutionHandle, dict]:
    """Run the full pipeline and time its stages.

    Returns:
        ``(handle, timings)`` where ``timings`` maps stage name to seconds
        for stages sketch, svd, lambda, assembly.

    Raises:
        ZeroMatrix / ZeroVector: degenerate inputs.
        NormBoundViolated: the assembled ``w`` exceeds its certificate,
            which signals a bad instance or an undersized sketch.
    """
    from time import perf_counter

    b = as_vector(b, "right-hand side")
    if b.shape[0] != a.m:
        raise DimensionMismatch(
            f"matrix has {a.m} rows but right-hand side has {b.shape[0]}")
    b_norm = float(np.linalg.norm(b))
    if b_norm <= 0.0:
        raise ZeroVector("right-hand side has zero norm")
    frob = a.frobenius_norm()
    if frob <= 0.0:
        raise ZeroMatrix("matrix has zero Frobenius norm")

    plan = plan_sketch(n=a.n, k=config.k, kappa=config.kappa or 1.0,
                       frob=frob, epsilon=config.epsilon, eta=config.eta,
                       mode=config.mode, manual_r=config.r, manual_c=config.c)

    t0 = perf_counter()
    rows = sample_rows(a, plan, stream(config.seed, "rows"))
    csk = sample_columns(a, rows, plan, stream(config.seed, "columns"))
    t1 = perf_counter()
    handle, timings = assemble_solution(a, b, rows, csk, config, plan=plan)
    timings = {"sketch": t1 - t0, **timings}
    return handle, timings


def solve(a: LsMatrix, b, config: SolverConfig) -> SolutionHandle:
    """Pipeline without the stage timings; see :func:`solve_pipeline`."""
    return solve_pipeline(a, b, config)[0]


# -- rejection sampling ------------------------------------------------------


def _propose_batch(handle: SolutionHandle, gen: np.random.Generator,
                   size: int) -> tuple[np.ndarray, np.ndarray]:
    """One batch of proposals: column indices and their acceptance success.

    A proposal picks a sketch row uniformly, then a column within the
    underlying source row by length-square, and accepts with probability
    ``|x~_j|^2 / (||w||^2 ||R[:, j]||^2)``, which filters the row-mixture
    proposal into the exact length-square law of ``x~``.
    """
    sketch = handle.sketch
    source = sketch.source
    s_draws = gen.integers(0, sketch.r, size=size)
    source_rows = sketch.row_indices[s_draws]
    cols = np.empty(size, dtype=np.int64)
    for i in np.unique(source_rows):
        mask = source_rows == i
        cols[mask] = source.row(int(i)).sample_many(gen, int(mask.sum()))

    groups = sketch.distinct_rows()
    dtype = source.row_values(0).dtype
    gathered = np.empty((len(groups), size), dtype=dtype)
    for d, (i, _) in enumerate(groups):
        gathered[d] = source.row_values(i)[cols]
    # x~ at the proposed columns and squared column norms of R there
    y = np.conj(gathered).T @ handle._group_weights
    col_sq = np.abs(gathered.T) ** 2 @ handle._group_sq_scales
    w_sq = float(np.vdot(handle.w, handle.w).real)
    prob = (y.real ** 2 + y.imag ** 2) / (w_sq * col_sq)
    accept = gen.random(size) < prob
    return cols, accept


def sample_solutions(handle: SolutionHandle, gen: np.random.Generator,
                     size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` indices from the length-square law of ``x~``.

    Returns:
        ``(indices, rounds)`` where ``rounds[t]`` counts the proposals
        consumed by the ``t``-th acceptance (including the accepted one).

    Raises:
        ZeroSolution: ``w`` is identically zero.
        RejectionCapExceeded: some acceptance needed more than
            ``handle.rejection_cap`` consecutive rejected proposals.
    """
    if float(np.vdot(handle.w, handle.w).real) <= 0.0:
        raise ZeroSolution("the assembled solution is identically zero")
    cap = handle.rejection_cap
    indices = np.empty(size, dtype=np.int64)
    rounds = np.empty(size, dtype=np.int64)
    got = 0
    pending = 0
    while got < size:
        cols, accept = _propose_batch(handle, gen, _SAMPLE_BATCH)
        hits = np.flatnonzero(accept)
        if hits.size == 0:
            pending += _SAMPLE_BATCH
            if pending > cap:
                raise RejectionCapExceeded(
                    f"no acceptance within {pending} rounds (cap {cap})")
            continue
        # rounds consumed per acceptance: carried rejects + in-batch gap
        gaps = np.diff(hits, prepend=-1)
        gaps[0] += pending
        take = min(size - got, hits.size)
        worst = int(gaps[:take].max())
        if worst > cap:
            raise RejectionCapExceeded(
                f"an acceptance needed {worst} rounds (cap {cap})")
        indices[got:got + take] = cols[hits[:take]]
        rounds[got:got + take] = gaps[:take]
        got += take
        pending = _SAMPLE_BATCH - 1 - int(hits[take - 1]) if take == hits.size else 0
        if got == size:
            break
    return indices, rounds


def sample_solution(handle: SolutionHandle, gen: np.random.Generator) -> int:
    """One index drawn from the length-square law of ``x~``."""
    idx, _ = sample_solutions(handle, gen, 1)
    return int(idx[0])


def _resolve_rejection_cap(handle: SolutionHandle, config: SolverConfig) -> int:
    """Config override, or 100x the pilot-estimated expected rounds."""
    if config.rejection_cap is not None:
        if config.rejection_cap < 1:
            raise InvalidParameter("rejection_cap must be positive")
        return int(config.rejection_cap)
    if float(np.vdot(handle.w, handle.w).real) <= 0.0:
        return _CAP_MULTIPLIER  # degenerate; sampling will raise ZeroSolution
    gen = stream(config.seed, "pilot")
    _, accept = _propose_batch(handle, gen, _PILOT_ROUNDS)
    accepts = int(np.count_nonzero(accept))
    est_rounds = _PILOT_ROUNDS / max(accepts, 1)
    if accepts == 0:
        est_rounds *= 4.0
    return _CAP_MULTIPLIER * math.ceil(est_rounds)


# -- norms -------------------------------------------------------------------


def solution_norm(handle: SolutionHandle, method: str = "dense_contract",
                  rounds: int = 10_000,
                  gen: np.random.Generator | None = None) -> float:
    """Estimate or compute ``||x~||``.

    ``"dense_contract"`` evaluates every entry (O(n r), exact up to
    rounding).  ``"acceptance_rate"`` runs ``rounds`` rejection proposals
    and inverts the acceptance identity
    ``||x~||^2 = ||A||_F^2 ||w||^2 * P(accept)``.
    """
    if method == "dense_contract":
        return float(np.linalg.norm(handle.materialize()))
    if method == "acceptance_rate":
        if gen is None:
            gen = stream(handle.seed, "norm-estimate")
        accepts = 0
        done = 0
        while done < rounds:
            batch = min(_SAMPLE_BATCH, rounds - done)
            _, accept = _propose_batch(handle, gen, batch)
            accepts += int(np.count_nonzero(accept))
            done += batch
        rate = accepts / rounds
        return float(handle.sketch.frob * np.linalg.norm(handle.w) * math.sqrt(rate))
    raise InvalidParameter(f"unknown norm method {method!r}")


def expected_rounds(handle: SolutionHandle,
                    solution_norm_value: float | None = None) -> float:
    """Expected rejection rounds per output sample.

    Equals ``r ||w'||^2 / ||x~||^2`` for the row-normalized coefficient
    convention ``w' = (||A||_F / sqrt(r)) w``, i.e.
    ``||A||_F^2 ||w||^2 / ||x~||^2`` in the handle's own scaling.
    """
    if solution_norm_value is None:
        solution_norm_value = solution_norm(handle)
    if solution_norm_value <= 0.0:
        raise ZeroSolution("the assembled solution is identically zero")
    return float((handle.sketch.frob * np.linalg.norm(handle.w)
                  / solution_norm_value) ** 2)
