"""Dynamic length-square sampling access to vectors and matrices.

An :class:`LsVector` keeps its entries alongside an array-backed complete
binary sum-tree over the squared magnitudes ``|v_i|^2``, padded to a power
of two.  Point updates and index sampling both cost O(log n).  An
:class:`LsMatrix` composes one tree per row with a tree over the row norms,
giving two-stage length-square sampling of entries: first a row index in
proportion to ``||A_i||^2``, then a column index within that row in
proportion to ``|A_ij|^2``.

Sampling follows a fixed inverse-CDF convention over leaf order: given a
uniform deviate ``u`` the returned index is the unique ``i`` with
``CDF(i-1) <= u * total < CDF(i)``; on an exact boundary the descent moves
right.  All sampling takes explicit deviates or an explicit generator;
nothing here reads ambient randomness.
"""

import numpy as np

from ._validation import (as_vector, check_index, check_unit_deviate)
from .errors import (DimensionMismatch, EmptyInput, NonFiniteEntry,
                     ZeroVector)


def squared_magnitudes(values: np.ndarray) -> np.ndarray:
    """Length-square weights ``re^2 + im^2`` of an array, elementwise."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return values.real ** 2 + values.imag ** 2
    return values.astype(np.float64) ** 2


class LsVector:
    """A vector with O(log n) length-square sampling and point updates.

    Args:
        values: nonempty 1-d array of finite float or complex entries.
        weights: optional explicit nonnegative leaf weights.  By default
            the squared magnitudes of ``values`` are used; the override
            exists so composite structures (e.g. a row-norm vector) can
            store exact weights that would otherwise round through a
            square root.
    """

    def __init__(self, values, weights=None):
        self._values = as_vector(values, "values").copy()
        n = self._values.shape[0]
        if weights is None:
            w = squared_magnitudes(self._values)
        else:
            w = np.asarray(weights, dtype=np.float64).copy()
            if w.shape != (n,):
                raise DimensionMismatch("weights must match values in length")
            if not np.all(np.isfinite(w)):
                raise NonFiniteEntry("weights contain non-finite entries")
            if np.any(w < 0.0):
                raise ValueError("weights must be nonnegative")
        # leaves occupy [capacity, capacity + n) in a 1-indexed heap layout
        self._capacity = 1 << (n - 1).bit_length() if n > 1 else 1
        self._tree = np.zeros(2 * self._capacity, dtype=np.float64)
        self._tree[self._capacity:self._capacity + n] = w
        self._rebuild()
        self._cdf = None
        self._last_positive = None

    def _rebuild(self) -> None:
        t, cap = self._tree, self._capacity
        size = cap >> 1
        while size >= 1:
            lo = size
            t[lo:2 * lo] = t[2 * lo:4 * lo:2] + t[2 * lo + 1:4 * lo:2]
            size >>= 1

    # -- basic views -------------------------------------------------------

    @property
    def n(self) -> int:
        return self._values.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def values(self) -> np.ndarray:
        """The stored entries.  Treat as read-only; mutate via update()."""
        return self._values

    @property
    def total(self) -> float:
        """Sum of leaf weights, i.e. ``||v||^2`` for default weights."""
        return float(self._tree[1])

    @property
    def depth(self) -> int:
        """Number of descent levels used by one sample: log2(capacity)."""
        return self._capacity.bit_length() - 1

    def norm(self) -> float:
        return float(np.sqrt(self.total))

    def query(self, i: int):
        return self._values[check_index(i, self.n)]

    def weight(self, i: int) -> float:
        return float(self._tree[self._capacity + check_index(i, self.n)])

    def weights(self) -> np.ndarray:
        return self._tree[self._capacity:self._capacity + self.n].copy()

    # -- sampling ----------------------------------------------------------

    def sample(self, u: float) -> int:
        """Length-square index sample from one uniform deviate.

        Descends the sum-tree: at each node the walk goes left when the
        running target is strictly below the left-child mass and right
        otherwise, matching the inverse-CDF convention exactly.  A right
        branch with zero mass is never entered, so rounding at the far
        edge of [0, 1) cannot land on padding.

        Args:
            u: uniform deviate in [0, 1).

        Returns:
            Index ``i`` with probability ``|v_i|^2 / ||v||^2``.

        Raises:
            ZeroVector: all weights are zero.
        """
        u = check_unit_deviate(u)
        t, cap = self._tree, self._capacity
        if t[1] <= 0.0:
            raise ZeroVector("cannot sample from a zero-mass vector")
        target = u * t[1]
        node = 1
        while node < cap:
            node <<= 1
            left = t[node]
            if target >= left and t[node + 1] > 0.0:
                target -= left
                node += 1
        return node - cap

    def sample_with(self, gen: np.random.Generator) -> int:
        return self.sample(gen.random())

    def sample_many(self, gen: np.random.Generator, size: int) -> np.ndarray:
        """Vectorized batch of length-square index samples.

        Uses a cached prefix-sum table with ``searchsorted`` under the same
        inverse-CDF boundary convention as :meth:`sample`; the two paths
        realize the same distribution.  The cache is invalidated by
        :meth:`update`.
        """
        if self._tree[1] <= 0.0:
            raise ZeroVector("cannot sample from a zero-mass vector")
        if self._cdf is None:
            self._cdf = np.cumsum(self._tree[self._capacity:self._capacity + self.n])
            self._last_positive = int(np.flatnonzero(
                self._tree[self._capacity:self._capacity + self.n] > 0.0)[-1])
        targets = gen.random(size) * self._cdf[-1]
        idx = np.searchsorted(self._cdf, targets, side="right")
        # u extremely close to 1 can round the target onto the full mass
        np.minimum(idx, self._last_positive, out=idx)
        return idx

    # -- updates -----------------------------------------------------------

    def update(self, i: int, value, weight=None) -> None:
        """Overwrite entry ``i`` and repair the tree path above it.

        Ancestor sums are recomputed from their children rather than
        delta-adjusted, so parent = left + right holds exactly at every
        node after any update sequence, and reverting an entry restores
        the original tree bit for bit.
        """
        i = check_index(i, self.n)
        value = complex(value) if np.iscomplexobj(self._values) else float(value)
        if not np.all(np.isfinite([np.real(value), np.imag(value)])):
            raise NonFiniteEntry("updated value must be finite")
        if weight is None:
            weight = float(squared_magnitudes(np.asarray([value]))[0])
        else:
            weight = float(weight)
            if not np.isfinite(weight) or weight < 0.0:
                raise NonFiniteEntry("explicit weight must be finite and nonnegative")
        self._values[i] = value
        node = self._capacity + i
        self._tree[node] = weight
        node >>= 1
        while node >= 1:
            self._tree[node] = self._tree[2 * node] + self._tree[2 * node + 1]
            node >>= 1
        self._cdf = None

    # -- diagnostics -------------------------------------------------------

    def tree_defect(self) -> float:
        """Max |parent - (left + right)| over internal nodes (0.0 when consistent)."""
        t, cap = self._tree, self._capacity
        if cap == 1:
            return 0.0
        parents = t[1:cap]
        children = t[2:2 * cap:2] + t[3:2 * cap:2]
        return float(np.max(np.abs(parents - children)))

    def ls_probabilities(self) -> np.ndarray:
        """Leaf weights normalized to the sampling distribution."""
        if self.total <= 0.0:
            raise ZeroVector("zero-mass vector has no sampling distribution")
        return self.weights() / self.total


class LsMatrix:
    """Row-major length-square access to a matrix.

    Composes one :class:`LsVector` per row with a row-norm tree whose leaf
    weights are the exact row totals, so the two-stage law
    ``P(i) * P(j | i) = |A_ij|^2 / ||A||_F^2`` holds identically in the
    stored weights.

    Args:
        a: 2-d array-like of finite float or complex entries.
    """

    def __init__(self, a):
        arr = np.asarray(a)
        if arr.ndim != 2:
            raise DimensionMismatch(f"matrix must be 2-d, got ndim={arr.ndim}")
        if arr.size == 0:
            raise EmptyInput("matrix has no entries")
        self._rows = [LsVector(arr[i]) for i in range(arr.shape[0])]
        totals = np.array([row.total for row in self._rows])
        self._row_norms = LsVector(np.sqrt(totals), weights=totals)
        self._shape = (arr.shape[0], arr.shape[1])

    # -- basic views -------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def m(self) -> int:
        return self._shape[0]

    @property
    def n(self) -> int:
        return self._shape[1]

    def row(self, i: int) -> LsVector:
        return self._rows[check_index(i, self.m, "row index")]

    def row_values(self, i: int) -> np.ndarray:
        return self._rows[check_index(i, self.m, "row index")].values

    def row_norm(self, i: int) -> float:
        return float(self._row_norms.values[check_index(i, self.m, "row index")].real)

    def row_norms(self) -> np.ndarray:
        return self._row_norms.values.real.copy()

    def query(self, i: int, j: int):
        return self.row(i).query(j)

    def frobenius_norm(self) -> float:
        return float(np.sqrt(self._row_norms.total))

    @property
    def depth(self) -> tuple[int, int]:
        """(row-tree depth, deepest in-row tree depth) for cost diagnostics."""
        return (self._row_norms.depth,
                max(row.depth for row in self._rows))

    def to_dense(self) -> np.ndarray:
        return np.stack([row.values for row in self._rows])

    # -- sampling ----------------------------------------------------------

    def sample_row(self, u: float) -> int:
        """Row index with probability ``||A_i||^2 / ||A||_F^2``."""
        return self._row_norms.sample(u)

    def sample_row_with(self, gen: np.random.Generator) -> int:
        return self._row_norms.sample_with(gen)

    def sample_rows_many(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return self._row_norms.sample_many(gen, size)

    def sample_in_row(self, i: int, u: float) -> int:
        """Column index within row ``i``, probability ``|A_ij|^2 / ||A_i||^2``."""
        return self.row(i).sample(u)

    def sample_entry(self, gen: np.random.Generator) -> tuple[int, int]:
        i = self.sample_row_with(gen)
        return i, self.row(i).sample_with(gen)

    def sample_entries(self, gen: np.random.Generator,
                       size: int) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized batch of two-stage entry samples.

        Row indices are drawn first for the whole batch, then column draws
        are grouped by distinct row, which keeps the output law identical
        to ``size`` sequential two-stage draws while using array kernels.
        """
        rows = self._row_norms.sample_many(gen, size)
        cols = np.empty(size, dtype=np.int64)
        for i in np.unique(rows):
            mask = rows == i
            cols[mask] = self._rows[i].sample_many(gen, int(mask.sum()))
        return rows, cols

    def entries_at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Gather ``A[rows[t], cols[t]]`` for index arrays, grouped by row."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise DimensionMismatch("row and column index arrays must match")
        dtype = self._rows[0].values.dtype
        out = np.empty(rows.shape[0], dtype=dtype)
        for i in np.unique(rows):
            mask = rows == i
            out[mask] = self._rows[i].values[cols[mask]]
        return out

    # -- updates -----------------------------------------------------------

    def set_entry(self, i: int, j: int, value) -> None:
        """Point update keeping both tree levels consistent."""
        i = check_index(i, self.m, "row index")
        self._rows[i].update(j, value)
        total = self._rows[i].total
        self._row_norms.update(i, np.sqrt(total), weight=total)
