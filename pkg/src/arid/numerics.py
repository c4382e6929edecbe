"""Structured linear algebra kernels used by the estimators.

Regularized least squares, banded and block-tridiagonal SPD solves, and
companion-matrix spectra via simultaneous polynomial root iteration. All
routines are pure functions of their inputs and safe to call from worker
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NonFinite, NotPositiveDefinite, SingularSystem

_ABERTH_MAX_ITER = 200


def _require_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")


def solve_regularized_ls(design: np.ndarray, targets: np.ndarray, lam: float) -> np.ndarray:
    """Solve ``min_W ||design @ W - targets||_F^2 + lam * ||W||_F^2``.

    Goes through the normal equations with a Cholesky factorization. At
    ``lam == 0`` the Gram matrix has to be numerically positive definite;
    rank deficiency raises :class:`SingularSystem` instead of silently
    falling back to a pseudoinverse.
    """
    design = np.asarray(design, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if design.ndim != 2 or design.shape[0] < 1 or design.shape[1] < 1:
        raise ValueError("design must be a nonempty 2-D matrix")
    if targets.shape[0] != design.shape[0]:
        raise ValueError("targets must have one row per design row")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    _require_finite("design", design)
    _require_finite("targets", targets)

    n = design.shape[1]
    gram = design.T @ design
    if lam > 0.0:
        gram = gram + lam * np.eye(n)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("normal matrix is not positive definite") from exc
    pivots = np.diag(chol)
    if lam == 0.0 and pivots.min() <= np.sqrt(n * np.finfo(float).eps) * pivots.max():
        # Factorization survived but below the float numerical rank: treat as singular.
        raise SingularSystem("normal matrix is numerically rank-deficient at lam == 0")
    return sla.cho_solve((chol, True), design.T @ targets)


@dataclass(frozen=True, eq=False)
class BandedSPDMatrix:
    """Symmetric band matrix in packed lower storage.

    ``bands[k, j]`` holds entry (j + k, j); row 0 is the main diagonal. Only
    the lower triangle is stored, symmetry is implied. Positive definiteness
    is asserted by the solver, not by the container.
    """

    dim: int
    bandwidth: int
    bands: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 <= self.bandwidth < self.dim:
            raise ValueError("bandwidth must lie in [0, dim)")
        bands = np.ascontiguousarray(np.asarray(self.bands, dtype=float))
        if bands.shape != (self.bandwidth + 1, self.dim):
            raise ValueError(f"bands must have shape {(self.bandwidth + 1, self.dim)}")
        _require_finite("bands", bands)
        object.__setattr__(self, "bands", bands)


def solve_banded_spd(matrix: BandedSPDMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` by banded Cholesky without pivoting."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (matrix.dim,):
        raise ValueError("rhs length must equal matrix dim")
    _require_finite("rhs", rhs)
    try:
        return sla.solveh_banded(matrix.bands, rhs, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("banded Cholesky hit a nonpositive pivot") from exc


@dataclass(frozen=True, eq=False)
class BlockTridiagonalSPDMatrix:
    """Block tridiagonal matrix with symmetric diagonal blocks.

    ``off_diagonal_blocks[i]`` couples block i+1 to block i (it sits at the
    (i+1, i) position of the block partition); its transpose is implied at
    (i, i+1).
    """

    diagonal_blocks: np.ndarray
    off_diagonal_blocks: np.ndarray

    def __post_init__(self):
        diag = np.ascontiguousarray(np.asarray(self.diagonal_blocks, dtype=float))
        off = np.ascontiguousarray(np.asarray(self.off_diagonal_blocks, dtype=float))
        if diag.ndim != 3 or diag.shape[1] != diag.shape[2]:
            raise ValueError("diagonal_blocks must be a (M, b, b) stack")
        m, b = diag.shape[0], diag.shape[1]
        if m < 1 or b < 1:
            raise ValueError("need at least one block of positive dimension")
        if off.shape != (m - 1, b, b):
            raise ValueError(f"off_diagonal_blocks must have shape {(m - 1, b, b)}")
        _require_finite("diagonal_blocks", diag)
        _require_finite("off_diagonal_blocks", off)
        diag_t = np.transpose(diag, (0, 2, 1))
        if not np.allclose(diag, diag_t, rtol=1e-10, atol=0.0):
            raise ValueError("diagonal blocks must be symmetric")
        object.__setattr__(self, "diagonal_blocks", (diag + diag_t) / 2.0)
        object.__setattr__(self, "off_diagonal_blocks", off)

    @property
    def num_blocks(self) -> int:
        return self.diagonal_blocks.shape[0]

    @property
    def block_dim(self) -> int:
        return self.diagonal_blocks.shape[1]

    @property
    def dim(self) -> int:
        return self.num_blocks * self.block_dim


def solve_block_tridiagonal_spd(matrix: BlockTridiagonalSPDMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve with a block Thomas recursion, Cholesky-factoring every pivot block."""
    m, b = matrix.num_blocks, matrix.block_dim
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (m * b,):
        raise ValueError("rhs length must equal num_blocks * block_dim")
    _require_finite("rhs", rhs)
    diag = matrix.diagonal_blocks
    off = matrix.off_diagonal_blocks
    r2 = rhs.reshape(m, b)

    factors = []
    z = np.empty((m, b))
    schur = diag[0]
    for i in range(m):
        try:
            factors.append(sla.cho_factor(schur, lower=True))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"pivot block {i} is not positive definite") from exc
        if i == 0:
            z[i] = r2[i]
        else:
            z[i] = r2[i] - off[i - 1] @ sla.cho_solve(factors[i - 1], z[i - 1])
        if i < m - 1:
            schur = diag[i + 1] - off[i] @ sla.cho_solve(factors[i], off[i].T)

    x = np.empty((m, b))
    x[m - 1] = sla.cho_solve(factors[m - 1], z[m - 1])
    for i in range(m - 2, -1, -1):
        x[i] = sla.cho_solve(factors[i], z[i] - off[i].T @ x[i + 1])
    return x.reshape(-1)


def companion_eigenvalues(theta: np.ndarray) -> np.ndarray:
    """All r roots of ``z^r - theta_1 z^(r-1) - ... - theta_r``.

    This is the spectrum of the companion matrix built from ``theta``. Roots
    are located with Aberth-Ehrlich simultaneous iteration started on a
    perturbed circle, so no general eigensolver is involved. Exact zero
    roots (trailing zero coefficients) are deflated up front.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError("theta must be a nonempty vector")
    _require_finite("theta", theta)
    r = theta.size
    coeffs = np.concatenate(([1.0], -theta))
    n_zero = 0
    while n_zero < r and coeffs[r - n_zero] == 0.0:
        n_zero += 1
    deg = r - n_zero
    roots = np.zeros(r, dtype=complex)
    if deg > 0:
        scale = max(1.0, float(np.linalg.norm(theta)))
        roots[:deg] = _aberth(coeffs[: deg + 1], scale)
    return roots


def _aberth(coeffs: np.ndarray, residual_scale: float) -> np.ndarray:
    """Roots of a monic real polynomial given by descending coefficients."""
    deg = coeffs.size - 1
    if deg == 1:
        return np.array([-coeffs[1]], dtype=complex)
    deriv = coeffs[:-1] * np.arange(deg, 0, -1)
    radius = max(1.0, float(np.max(np.abs(coeffs[1:]))) ** (1.0 / deg))
    # Start on a circle, rotated off the real axis so conjugate-symmetric
    # polynomials do not trap iterates on symmetric stationary points.
    angles = 2.0 * np.pi * (np.arange(deg) + 0.5) / deg + 0.4
    x = radius * np.exp(1j * angles)

    for _ in range(_ABERTH_MAX_ITER):
        p = np.polyval(coeffs, x)
        if np.all(np.abs(p) <= 1e-13 * residual_scale):
            break
        dp = np.polyval(deriv, x)
        if np.any(dp == 0):
            x = np.where(dp == 0, x * (1.0 + 1e-8) + 1e-8, x)
            continue
        w = p / dp
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        diff[diff == 0] = 1e-20 * (1.0 + 1.0j)
        s = np.sum(1.0 / diff, axis=1) - 1.0
        corr = w / (1.0 - w * s)
        x = x - corr
        if np.all(np.abs(corr) <= 1e-14 * (1.0 + np.abs(x))):
            break

    residual = np.abs(np.polyval(coeffs, x))
    if float(residual.max()) > 1e-8 * residual_scale:
        raise NoConvergence("root iteration did not reach the residual tolerance")
    return x
