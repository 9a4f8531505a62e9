"""Seeded test-instance generation.

Two flavors:

* ``synthetic-lowrank``: exact rank-k ``A = U diag(sigma) V^dagger`` with
  orthonormal factors from QR of seeded Gaussians and singular values
  placed log-uniformly in ``[1/kappa, 1]``; the largest is pinned to 1 and
  (for k >= 2) the smallest to ``1/kappa``, so ``||A|| <= 1`` and
  ``||A^+|| <= kappa`` hold by construction.

* ``portfolio-returns``: a factor model ``F L^T`` plus entrywise noise,
  rescaled to unit spectral norm; approximately rank k.

The right-hand side mixes a unit vector inside the column space with an
orthogonal unit vector:  ``b = p * Az/||Az|| + sqrt(1 - p^2) * q`` with
``p`` the requested projection fraction, so ``||b|| = 1`` exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .lsaccess import LsMatrix
from .rng import stream


@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of one generated instance.

    ``frob_target`` is advisory metadata: the spectrum placement fixes the
    Frobenius norm, so the field is echoed into reports but not enforced.
    ``noise`` only applies to the portfolio flavor.
    """

    m: int
    n: int
    k: int
    kappa: float
    projection_fraction: float = 0.9
    noise: float = 0.0
    seed: int = 0
    flavor: str = "synthetic-lowrank"
    frob_target: float | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidSpec("m and n must be positive")
        if not 1 <= self.k <= min(self.m, self.n):
            raise InvalidSpec(f"k must lie in [1, min(m, n)], got {self.k}")
        if self.kappa < 1.0:
            raise InvalidSpec("kappa must be >= 1")
        if not 0.0 <= self.projection_fraction <= 1.0:
            raise InvalidSpec("projection_fraction must lie in [0, 1]")
        if self.noise < 0.0:
            raise InvalidSpec("noise must be nonnegative")
        if self.flavor not in ("synthetic-lowrank", "portfolio-returns"):
            raise InvalidSpec(f"unknown flavor {self.flavor!r}")
        if self.flavor == "synthetic-lowrank" and self.noise != 0.0:
            raise InvalidSpec("synthetic-lowrank is exactly rank k; noise must be 0")


@dataclass
class Instance:
    """A generated matrix, right-hand side, and the factors that built them."""

    spec: InstanceSpec
    dense: np.ndarray
    b: np.ndarray
    sigmas: np.ndarray
    left_factor: np.ndarray
    right_factor: np.ndarray
    projection_fraction_actual: float
    _ls: LsMatrix | None = field(default=None, repr=False)

    def ls_matrix(self) -> LsMatrix:
        """Length-square access to the dense matrix (built once, cached)."""
        if self._ls is None:
            self._ls = LsMatrix(self.dense)
        return self._ls

    def minimum_norm_solution(self) -> np.ndarray:
        """``A^+ b`` via the generating factors (synthetic flavor only)."""
        if self.spec.flavor != "synthetic-lowrank":
            raise InvalidSpec("factor-based ground truth needs the exact-rank flavor")
        coeff = (self.left_factor.conj().T @ self.b) / self.sigmas
        return self.right_factor @ coeff


def _orthonormal_columns(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, rfac = np.linalg.qr(gen.standard_normal((rows, cols)))
    # fix the QR sign ambiguity so generation is reproducible across builds
    signs = np.sign(np.diag(rfac))
    signs[signs == 0.0] = 1.0
    return q * signs[None, :]


def _spectrum(gen: np.random.Generator, k: int, kappa: float) -> np.ndarray:
    if k == 1:
        return np.array([1.0])
    middle = np.exp(gen.uniform(np.log(1.0 / kappa), 0.0, size=k - 2)) \
        if k > 2 else np.empty(0)
    sig = np.concatenate([[1.0], np.sort(middle)[::-1], [1.0 / kappa]])
    return sig


def generate_instance(spec: InstanceSpec) -> Instance:
    """Build the seeded instance described by ``spec``."""
    if spec.flavor == "synthetic-lowrank":
        u = _orthonormal_columns(stream(spec.seed, "instance-left"), spec.m, spec.k)
        v = _orthonormal_columns(stream(spec.seed, "instance-right"), spec.n, spec.k)
        sig = _spectrum(stream(spec.seed, "instance-spectrum"), spec.k, spec.kappa)
        a = (u * sig[None, :]) @ v.T
        col_basis = u
    else:
        gen = stream(spec.seed, "instance-factors")
        factors = gen.standard_normal((spec.m, spec.k))
        loadings = gen.standard_normal((spec.n, spec.k))
        a = factors @ loadings.T
        if spec.noise > 0.0:
            scale = spec.noise * np.linalg.norm(a) / np.sqrt(spec.m * spec.n)
            a = a + scale * stream(spec.seed, "instance-noise").standard_normal(
                (spec.m, spec.n))
        u_full, sig_full, vt_full = np.linalg.svd(a, full_matrices=False)
        a = a / sig_full[0]
        sig = sig_full / sig_full[0]
        u, v = u_full, vt_full.T
        col_basis = u_full[:, sig > 1e-12]

    gen_rhs = stream(spec.seed, "instance-rhs")
    z = gen_rhs.standard_normal(spec.n)
    az = a @ z
    az_norm = np.linalg.norm(az)
    if az_norm <= 0.0:  # pragma: no cover - probability zero
        raise InvalidSpec("degenerate draw: Az vanished")
    inside = az / az_norm

    p = spec.projection_fraction
    if p < 1.0:
        q = gen_rhs.standard_normal(spec.m)
        q = q - col_basis @ (col_basis.T @ q)
        q_norm = np.linalg.norm(q)
        if q_norm <= 1e-12:
            # column space fills the ambient space; nothing orthogonal exists
            p = 1.0
            b = inside
        else:
            b = p * inside + np.sqrt(1.0 - p * p) * (q / q_norm)
    else:
        b = inside

    return Instance(spec=spec, dense=a, b=b, sigmas=sig,
                    left_factor=u, right_factor=v,
                    projection_fraction_actual=float(p))
