"""Regularized recovery of the current-noise spectrum from a scan.

A measured scan is, in the long-interrogation limit, a convolution of
the current-noise spectral density with the condensate response kernel.
This module discretizes that forward map onto uniform frequency grids,
wraps the resulting linear system together with the data and its error
bars, and solves it by weighted Tikhonov regularization — optionally
with a non-negativity constraint, and with the regularization strength
chosen by the discrepancy principle when honest error bars exist.

Conventions
-----------
The matrix row for scan frequency ``Omega_i`` integrates the kernel
exactly over each spectral bin (bins are centered on the ``omega``
nodes), so applying the matrix to node values treats the spectrum as
piecewise constant.  On uniform grids every entry depends only on the
difference ``Omega_i - omega_j``, which keeps the matrix a (shifted)
convolution operator.

The regularization parameter is dimensionless: the stacked system is

    minimize ||W (K s - n)||^2  +  lam^2 (s_K / s_L)^2 ||L s||^2

where ``s_K`` is the largest singular value of the whitened matrix
``W K`` and ``s_L`` a fixed bound on ``||L||`` (1 for the identity, 4
for the second difference).  ``lam = 1`` therefore damps even the
best-determined data mode, and useful values sit well below one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .errors import NumericalError, ValidationError
from .kernel import ResponseKernel, resolution_function

__all__ = [
    "InverseProblem",
    "ReconstructionResult",
    "build_kernel_matrix",
    "deconvolve",
    "lambda_scan",
    "choose_lambda_discrepancy",
]

REGULARIZERS = ("identity", "second_difference")

# Largest singular value of the regularizer, used to keep lam dimensionless.
_REG_SCALE = {"identity": 1.0, "second_difference": 4.0}

# A zero-lam solve is only allowed when the whitened matrix is at least
# this well conditioned.
_COND_CAP = 1e8


def _check_uniform(grid, name: str) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError(f"{name} grid must be 1-D with at least two points")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise ValidationError(f"{name} grid must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValidationError(f"{name} grid must be uniform")
    return float(steps[0])


def _dtilde_antiderivative(w):
    """Integral of the normalized level density from 0 to w, clipped to [0, 1]."""
    w = np.clip(w, 0.0, 1.0)
    return 2.5 * w**1.5 - 1.5 * w**2.5


def build_kernel_matrix(omega, Omega, kernel: ResponseKernel, T: float,
                        regime: str = "LongTime") -> np.ndarray:
    """Discretize the forward map from spectrum values to transferred atoms.

    omega  - uniform spectral grid (bin centers) the spectrum lives on
    Omega  - uniform grid of scan (drive) frequencies
    kernel - condensate response kernel
    T      - interrogation time in seconds
    regime - "LongTime" uses the limiting kernel line shape;
             "Full" samples the finite-time resolution function

    Returns the (n_Omega, n_omega) matrix mapping spectrum node values to
    mean transferred atoms.  Entries integrate the kernel exactly over
    each omega bin, so the product with node values is the forward map
    for a piecewise-constant spectrum.
    """

    omega = np.asarray(omega, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    d_omega = _check_uniform(omega, "omega")
    _check_uniform(Omega, "Omega")
    if T <= 0:
        raise ValidationError(f"interrogation time must be positive, got {T}")
    if regime not in ("LongTime", "Full"):
        raise ValidationError(f"unknown regime {regime!r}")

    if kernel.n_det == 0.0:
        return np.zeros((Omega.size, omega.size))

    scale = kernel.omega_scale  # kernel support is [0, scale] in frequency
    pad = 6.0 * np.pi / T if regime == "Full" else 0.0
    lo_needed = Omega.min() - scale - pad
    hi_needed = Omega.max() + pad
    if omega[0] - d_omega / 2 > lo_needed or omega[-1] + d_omega / 2 < hi_needed:
        raise ValidationError(
            "omega grid does not cover the scan grid shifted by the kernel "
            f"support: need [{lo_needed:.6g}, {hi_needed:.6g}] rad/s, have "
            f"[{omega[0] - d_omega / 2:.6g}, {omega[-1] + d_omega / 2:.6g}]"
        )

    if regime == "Full":
        return _matrix_full(omega, Omega, kernel, T, d_omega)

    # Dimensionless bin edges seen from each scan point: the kernel weight
    # for bin j at scan point i spans w in [hbar*(Omega_i - omega_j -
    # d/2)/mu, hbar*(Omega_i - omega_j + d/2)/mu], clipped to the support.
    nu = Omega[:, None] - omega[None, :]
    w_hi = (nu + 0.5 * d_omega) / scale
    w_lo = (nu - 0.5 * d_omega) / scale

    if kernel.mode == "Approx1D":
        weight = _dtilde_antiderivative(w_hi) - _dtilde_antiderivative(w_lo)
        return T * kernel.n_det * weight

    # Exact3D: the line shape carries the smooth shell-coupling ratio, so
    # integrate each bin with Gauss nodes in t = sqrt(w), where the level
    # density is the polynomial (15/2) t^2 (1 - t^2).
    t_lo = np.sqrt(np.clip(w_lo, 0.0, 1.0))
    t_hi = np.sqrt(np.clip(w_hi, 0.0, 1.0))
    x, gw = np.polynomial.legendre.leggauss(12)
    half = 0.5 * (t_hi - t_lo)
    mid = 0.5 * (t_hi + t_lo)
    t = mid[..., None] + half[..., None] * x  # (nO, nw, 12)
    dens = 7.5 * t**2 * (1.0 - t**2)
    ratio = kernel.ratio_at(t.ravel() ** 2).reshape(t.shape)
    weight = (half[..., None] * gw * dens * ratio).sum(axis=-1)
    return T * kernel.n_det * weight


def _matrix_full(omega, Omega, kernel, T, d_omega):
    """Rows sample the finite-time resolution function, Gauss-4 per bin."""
    x, gw = np.polynomial.legendre.leggauss(4)
    nodes = omega[:, None] + 0.5 * d_omega * x  # (nw, 4)
    out = np.empty((Omega.size, omega.size))
    for i, Om in enumerate(Omega):
        r = resolution_function(T, Om - nodes.ravel(), kernel)
        out[i] = T * 0.5 * d_omega * (r.reshape(nodes.shape) @ gw)
    return out


@dataclass(frozen=True)
class InverseProblem:
    """A discretized deconvolution problem with data and error bars.

    Omega   - scan frequency grid (rad/s)
    omega   - spectral grid the estimate lives on (rad/s)
    matrix  - forward map from build_kernel_matrix
    data    - measured/simulated mean transferred atoms per scan point
    sigma   - standard error per scan point (must be positive; pass an
              explicit floor for noiseless synthetic data)
    lam     - dimensionless regularization strength
    nonneg  - constrain the estimate to be elementwise non-negative
    regularizer - "identity" or "second_difference"
    meta    - free-form provenance carried into results
    """

    Omega: np.ndarray
    omega: np.ndarray
    matrix: np.ndarray
    data: np.ndarray
    sigma: np.ndarray
    lam: float = 1e-3
    nonneg: bool = False
    regularizer: str = "identity"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "Omega", np.asarray(self.Omega, dtype=float))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        n, m = self.Omega.size, self.omega.size
        if self.matrix.shape != (n, m):
            raise ValidationError(
                f"matrix shape {self.matrix.shape} does not match grids ({n}, {m})"
            )
        if self.data.shape != (n,):
            raise ValidationError("data length does not match the scan grid")
        if self.sigma.shape != (n,):
            raise ValidationError("sigma length does not match the scan grid")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("data must be finite")
        if not np.all(np.isfinite(self.sigma)) or np.any(self.sigma <= 0):
            raise ValidationError(
                "sigma must be positive and finite everywhere; for noiseless "
                "synthetic data pass an explicit small error floor"
            )
        if self.lam < 0:
            raise ValidationError(f"lam must be >= 0, got {self.lam}")
        if self.regularizer not in REGULARIZERS:
            raise ValidationError(
                f"unknown regularizer {self.regularizer!r}; expected one of {REGULARIZERS}"
            )
        if self.regularizer == "second_difference" and m < 3:
            raise ValidationError("second-difference regularizer needs >= 3 bins")


@dataclass(frozen=True)
class ReconstructionResult:
    """Spectrum estimate with solver diagnostics."""

    omega: np.ndarray
    s_estimate: np.ndarray
    lam: float
    residual_norm: float      # whitened: ||W (K s - n)||
    solution_norm: float      # ||L s|| in physical spectrum units
    condition: float          # condition number of the whitened matrix
    nonneg: bool
    regularizer: str
    provenance: dict = field(default_factory=dict)


def _regularizer_matrix(m: int, kind: str) -> np.ndarray:
    if kind == "identity":
        return np.eye(m)
    L = np.zeros((m - 2, m))
    idx = np.arange(m - 2)
    L[idx, idx] = 1.0
    L[idx, idx + 1] = -2.0
    L[idx, idx + 2] = 1.0
    return L


def _whitened(problem: InverseProblem):
    A = problem.matrix / problem.sigma[:, None]
    b = problem.data / problem.sigma
    return A, b


def _solve(A, b, lam_eff, L, nonneg: bool):
    M = np.vstack([A, lam_eff * L])
    rhs = np.concatenate([b, np.zeros(L.shape[0])])
    if nonneg:
        try:
            x, _ = scipy.optimize.nnls(M, rhs, maxiter=30 * max(M.shape))
        except RuntimeError as exc:
            raise NumericalError(
                f"non-negative solver did not converge: {exc}"
            ) from exc
    else:
        x = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return x


def deconvolve(problem: InverseProblem, lam: float | None = None) -> ReconstructionResult:
    """Solve the weighted Tikhonov problem at problem.lam (or an override)."""

    lam = problem.lam if lam is None else float(lam)
    if lam < 0:
        raise ValidationError(f"lam must be >= 0, got {lam}")
    A, b = _whitened(problem)
    svals = np.linalg.svd(A, compute_uv=False)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else np.inf
    if lam == 0.0 and cond > _COND_CAP:
        raise ValidationError(
            f"lam = 0 requested but the whitened matrix has condition {cond:.3g} "
            f"(cap {_COND_CAP:.0e}); choose lam > 0"
        )
    L = _regularizer_matrix(problem.omega.size, problem.regularizer)
    lam_eff = lam * float(svals[0]) / _REG_SCALE[problem.regularizer]
    x = _solve(A, b, lam_eff, L, problem.nonneg)
    return ReconstructionResult(
        omega=problem.omega,
        s_estimate=x,
        lam=lam,
        residual_norm=float(np.linalg.norm(A @ x - b)),
        solution_norm=float(np.linalg.norm(L @ x)),
        condition=cond,
        nonneg=problem.nonneg,
        regularizer=problem.regularizer,
        provenance=dict(problem.meta),
    )


def lambda_scan(problem: InverseProblem, lambdas) -> np.ndarray:
    """L-curve table: rows of (lam, residual norm, solution norm).

    The residual norm must be non-decreasing and the solution norm
    non-increasing along increasing lam; a violation beyond floating-
    point slack means the solver went wrong and raises NumericalError.
    """

    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValidationError("lambda grid must be a non-empty 1-D array")
    if np.any(lambdas <= 0) or np.any(np.diff(lambdas) <= 0):
        raise ValidationError("lambda grid must be positive and strictly increasing")
    rows = np.empty((lambdas.size, 3))
    for k, lam in enumerate(lambdas):
        rec = deconvolve(problem, lam=lam)
        rows[k] = (lam, rec.residual_norm, rec.solution_norm)
    slack = 1e-8 * max(1.0, float(rows[:, 1].max()), float(rows[:, 2].max()))
    if np.any(np.diff(rows[:, 1]) < -slack):
        raise NumericalError("residual norm decreased along increasing lambda")
    if np.any(np.diff(rows[:, 2]) > slack):
        raise NumericalError("solution norm increased along increasing lambda")
    return rows


def choose_lambda_discrepancy(problem: InverseProblem, target: float | None = None,
                              bounds: tuple[float, float] = (1e-8, 1e3),
                              rtol: float = 1e-3, max_iter: int = 80):
    """Pick lam so the whitened residual matches its statistical expectation.

    target defaults to sqrt(n_points): with honest error bars the whitened
    residuals are unit-variance, so the residual norm of the true spectrum
    is sqrt(n) in expectation.  Returns (problem with lam set, met flag,
    info dict).  met is False when no lam in bounds reaches the target —
    the caller decides whether that is fatal.
    """

    if target is None:
        target = float(np.sqrt(problem.data.size))
    if target <= 0:
        raise ValidationError(f"discrepancy target must be positive, got {target}")
    lo, hi = bounds
    if not (0 < lo < hi):
        raise ValidationError(f"bounds must satisfy 0 < lo < hi, got {bounds}")

    def residual(lam):
        return deconvolve(problem, lam=lam).residual_norm

    r_lo = residual(lo)
    r_hi = residual(hi)
    info = {"target": target, "residual_lo": r_lo, "residual_hi": r_hi,
            "bounds": bounds, "iterations": 0}
    if r_lo >= target:
        # Even minimal smoothing overshoots: the error bars are
        # inconsistent with the model (or the grid cannot represent the
        # data).  Report the least-regularized solution.
        return replace(problem, lam=lo), False, info
    if r_hi <= target:
        return replace(problem, lam=hi), False, info

    a, b = np.log(lo), np.log(hi)
    lam = lo
    for it in range(max_iter):
        mid = 0.5 * (a + b)
        lam = float(np.exp(mid))
        r = residual(lam)
        info["iterations"] = it + 1
        if abs(r - target) <= rtol * target:
            info["residual"] = r
            return replace(problem, lam=lam), True, info
        if r < target:
            a = mid
        else:
            b = mid
    info["residual"] = residual(lam)
    return replace(problem, lam=lam), abs(info["residual"] - target) <= 10 * rtol * target, info
