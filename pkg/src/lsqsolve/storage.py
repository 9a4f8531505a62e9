"""Plain-text matrix/vector file formats.

``.lsm``: header ``LSM m n`` followed by one ``i j re im`` line per stored
entry, 1-based indices; omitted entries are zero.

``.vec``: header ``VEC n`` followed by ``i re im`` lines, 1-based.

Floats are written with ``repr`` so a round trip is bit-exact.
"""

import numpy as np

from .errors import InvalidSpec


def save_matrix_lsm(path, a) -> None:
    """Write a dense array's nonzero entries in .lsm format."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise InvalidSpec("matrix files require a 2-d array")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"LSM {a.shape[0]} {a.shape[1]}\n")
        rows, cols = np.nonzero(a)
        for i, j in zip(rows, cols):
            v = complex(a[i, j])
            fh.write(f"{i + 1} {j + 1} {v.real!r} {v.imag!r}\n")


def load_matrix_lsm(path) -> np.ndarray:
    """Read an .lsm file into a dense array (real when all im parts are 0)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "LSM":
            raise InvalidSpec(f"{path}: expected 'LSM m n' header")
        m, n = int(header[1]), int(header[2])
        if m < 1 or n < 1:
            raise InvalidSpec(f"{path}: invalid dimensions {m} x {n}")
        out = np.zeros((m, n), dtype=np.complex128)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise InvalidSpec(f"{path}:{lineno}: expected 'i j re im'")
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            if not (0 <= i < m and 0 <= j < n):
                raise InvalidSpec(f"{path}:{lineno}: index out of range")
            out[i, j] = float(parts[2]) + 1j * float(parts[3])
    if np.all(out.imag == 0.0):
        return out.real.copy()
    return out


def save_vector_vec(path, v) -> None:
    """Write a vector in .vec format (all entries, including zeros)."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidSpec("vector files require a 1-d array")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"VEC {v.shape[0]}\n")
        for i in range(v.shape[0]):
            x = complex(v[i])
            fh.write(f"{i + 1} {x.real!r} {x.imag!r}\n")


def load_vector_vec(path) -> np.ndarray:
    """Read a .vec file (real when all im parts are 0)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "VEC":
            raise InvalidSpec(f"{path}: expected 'VEC n' header")
        n = int(header[1])
        if n < 1:
            raise InvalidSpec(f"{path}: invalid length {n}")
        out = np.zeros(n, dtype=np.complex128)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidSpec(f"{path}:{lineno}: expected 'i re im'")
            i = int(parts[0]) - 1
            if not 0 <= i < n:
                raise InvalidSpec(f"{path}:{lineno}: index out of range")
            out[i] = float(parts[1]) + 1j * float(parts[2])
    if np.all(out.imag == 0.0):
        return out.real.copy()
    return out
