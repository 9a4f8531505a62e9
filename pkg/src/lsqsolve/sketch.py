"""Two-stage length-square sketching.

Stage one draws ``r`` row indices of ``A`` in proportion to squared row
norms and represents the row sketch ``R`` implicitly as indices plus scale
factors: row ``s`` of ``R`` is ``(||A||_F / sqrt(r)) * A_{i_s} / ||A_{i_s}||``,
so every row of ``R`` has norm ``||A||_F / sqrt(r)`` by construction.

Stage two draws ``c`` column indices by first picking a sketch row
uniformly and then a column within it by length-square, and materializes
the small ``r x c`` matrix ``C`` whose ``t``-th column is
``(||A||_F / sqrt(c)) * R_{., j_t} / ||R_{., j_t}||``.

A sketch must be taken on a frozen matrix: updating the source between
sketching and solving invalidates the stored scale factors, and the
library does not track that (documented contract, not enforced).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import (check_at_least, check_open_unit, check_positive,
                          check_positive_int)
from .errors import InvalidParameter, ZeroColumnNorm, ZeroMatrix, ZeroVector
from .lsaccess import LsMatrix

# Oversampling constants of the analysis-backed plan.
_ROW_CONSTANT = 2 ** 10
_COLUMN_CONSTANT = 2 ** 6 * 3 ** 4


@dataclass(frozen=True)
class SketchPlan:
    """Sketch sizes together with the parameters that produced them.

    ``r`` and ``c`` are the sizes actually used.  In ``"theoretical"`` mode
    they equal the analysis-backed values; in ``"manual"`` mode they echo
    caller-chosen sizes while ``theoretical_r``/``theoretical_c`` still
    record what the analysis would demand, for reporting.
    """

    r: int
    c: int
    epsilon: float
    eta: float
    kappa: float
    k: int
    frob: float
    mode: str
    theoretical_r: int
    theoretical_c: int


def theoretical_sizes(n: int, k: int, kappa: float, frob: float,
                      epsilon: float, eta: float) -> tuple[int, int]:
    """Analysis-backed sketch sizes, before any manual override.

    ``r = ceil(2^10 * ln(8 n / eta) * kappa^4 k^2 ||A||_F^2 / eps^2)`` and
    ``c = ceil(2^6 * 3^4 * ln(8 r / eta) * kappa^8 k^2 ||A||_F^2 / eps^2)``,
    where the ``c`` formula uses the already-rounded ``r``.
    """
    r_exact = (_ROW_CONSTANT * math.log(8.0 * n / eta)
               * kappa ** 4 * k ** 2 * frob ** 2 / epsilon ** 2)
    r = math.ceil(r_exact)
    c_exact = (_COLUMN_CONSTANT * math.log(8.0 * r / eta)
               * kappa ** 8 * k ** 2 * frob ** 2 / epsilon ** 2)
    return r, math.ceil(c_exact)


def plan_sketch(n: int, k: int, kappa: float, frob: float, epsilon: float,
                eta: float, mode: str = "theoretical",
                manual_r: int | None = None,
                manual_c: int | None = None) -> SketchPlan:
    """Build a :class:`SketchPlan`.

    Args:
        n: column count of the matrix to be sketched.
        k: target rank (positive integer).
        kappa: condition bound, >= 1.
        frob: Frobenius norm of the matrix, > 0.
        epsilon: accuracy target in (0, 1).
        eta: failure budget in (0, 1).
        mode: ``"theoretical"`` or ``"manual"``.
        manual_r, manual_c: required sizes when mode is ``"manual"``.
    """
    n = check_positive_int(n, "n")
    k = check_positive_int(k, "k")
    kappa = check_at_least(kappa, 1.0, "kappa")
    frob = check_positive(frob, "frob")
    epsilon = check_open_unit(epsilon, "epsilon")
    eta = check_open_unit(eta, "eta")
    theo_r, theo_c = theoretical_sizes(n, k, kappa, frob, epsilon, eta)
    if mode == "theoretical":
        r, c = theo_r, theo_c
    elif mode == "manual":
        if manual_r is None or manual_c is None:
            raise InvalidParameter("manual mode requires manual_r and manual_c")
        r = check_positive_int(manual_r, "manual_r")
        c = check_positive_int(manual_c, "manual_c")
    else:
        raise InvalidParameter(f"unknown plan mode {mode!r}")
    return SketchPlan(r=r, c=c, epsilon=epsilon, eta=eta, kappa=kappa, k=k,
                      frob=frob, mode=mode, theoretical_r=theo_r,
                      theoretical_c=theo_c)


@dataclass
class RowSketch:
    """Implicit representation of the row sketch ``R``.

    Attributes:
        source: the sketched matrix (must stay frozen while in use).
        row_indices: length-r array of sampled row indices (duplicates kept).
        scale_factors: length-r positive reals; row ``s`` of ``R`` is
            ``scale_factors[s] * A_{row_indices[s]}``.
        frob: Frobenius norm of the source at sketch time.
    """

    source: LsMatrix
    row_indices: np.ndarray
    scale_factors: np.ndarray
    frob: float
    _groups: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.row_indices = np.asarray(self.row_indices, dtype=np.int64)
        self.scale_factors = np.asarray(self.scale_factors, dtype=np.float64)
        if self.row_indices.shape != self.scale_factors.shape:
            raise InvalidParameter("indices and scale factors must have equal length")
        # positions of each distinct source row; duplicates share one gather
        self._groups = [(int(i), np.flatnonzero(self.row_indices == i))
                        for i in np.unique(self.row_indices)]

    @property
    def r(self) -> int:
        return int(self.row_indices.shape[0])

    def distinct_rows(self) -> list:
        return self._groups

    def row_of_r(self, s: int) -> np.ndarray:
        """Materialize the ``s``-th row of ``R`` (length n)."""
        return self.scale_factors[s] * self.source.row_values(int(self.row_indices[s]))

    def dense(self) -> np.ndarray:
        """Materialize ``R`` as an ``r x n`` array (diagnostics only)."""
        dtype = self.source.row_values(0).dtype
        out = np.empty((self.r, self.source.n), dtype=dtype)
        for i, positions in self._groups:
            row = self.source.row_values(i)
            out[positions] = self.scale_factors[positions, None] * row[None, :]
        return out

    def gather_columns(self, cols: np.ndarray) -> np.ndarray:
        """Materialize ``R[:, cols]`` as an ``r x len(cols)`` array."""
        cols = np.asarray(cols, dtype=np.int64)
        dtype = self.source.row_values(0).dtype
        out = np.empty((self.r, cols.shape[0]), dtype=dtype)
        for i, positions in self._groups:
            vals = self.source.row_values(i)[cols]
            out[positions] = self.scale_factors[positions, None] * vals[None, :]
        return out


def row_sketch_from_indices(a: LsMatrix, indices) -> RowSketch:
    """Build a :class:`RowSketch` from explicit row indices.

    Used for replaying a serialized sketch and for constructing exact
    proportional sketches in tests; the scale factors are the same as for
    sampled indices.
    """
    indices = np.asarray(indices, dtype=np.int64)
    frob = a.frobenius_norm()
    if frob <= 0.0:
        raise ZeroMatrix("cannot sketch a matrix with zero Frobenius norm")
    r = indices.shape[0]
    norms = np.array([a.row_norm(int(i)) for i in indices])
    if np.any(norms <= 0.0):
        raise ZeroVector("sketch references a zero row")  # pragma: no cover
    scale = frob / (np.sqrt(r) * norms)
    return RowSketch(source=a, row_indices=indices, scale_factors=scale, frob=frob)


def sample_rows(a: LsMatrix, plan: SketchPlan, gen: np.random.Generator) -> RowSketch:
    """Draw the row sketch: ``plan.r`` length-square row indices of ``a``."""
    frob = a.frobenius_norm()
    if frob <= 0.0:
        raise ZeroMatrix("cannot sketch a matrix with zero Frobenius norm")
    indices = a.sample_rows_many(gen, plan.r)
    return row_sketch_from_indices(a, indices)


@dataclass
class ColumnSketch:
    """Materialized column sketch ``C`` plus the indices that produced it.

    ``C[s, t] = (frob / sqrt(c)) * R[s, j_t] / ||R[:, j_t]||``; duplicates
    among ``column_indices`` become distinct (identical) columns.
    """

    column_indices: np.ndarray
    c_matrix: np.ndarray

    @property
    def c(self) -> int:
        return int(self.column_indices.shape[0])


def column_sketch_from_indices(rows: RowSketch, cols) -> ColumnSketch:
    """Materialize ``C`` for explicit column indices against a row sketch."""
    cols = np.asarray(cols, dtype=np.int64)
    c = cols.shape[0]
    sub = rows.gather_columns(cols)          # R[:, cols], shape r x c
    norms = np.linalg.norm(sub, axis=0)
    if np.any(norms <= 0.0):
        raise ZeroColumnNorm("a sampled column of R has zero norm")
    c_matrix = sub * (rows.frob / np.sqrt(c) / norms)[None, :]
    return ColumnSketch(column_indices=cols, c_matrix=c_matrix)


def sample_columns(a: LsMatrix, rows: RowSketch, plan: SketchPlan,
                   gen: np.random.Generator) -> ColumnSketch:
    """Draw the column sketch against a fixed row sketch.

    Each of the ``plan.c`` draws picks a sketch row uniformly, then a
    column within the underlying source row by length-square.  Because a
    row of ``R`` is a rescaled row of ``A``, the in-row law of ``R`` equals
    the in-row law of ``A`` and the source trees are reused directly.
    """
    s_draws = gen.integers(0, rows.r, size=plan.c)
    source_rows = rows.row_indices[s_draws]
    cols = np.empty(plan.c, dtype=np.int64)
    for i in np.unique(source_rows):
        mask = source_rows == i
        cols[mask] = a.row(int(i)).sample_many(gen, int(mask.sum()))
    return column_sketch_from_indices(rows, cols)
