"""Spectral response kernel of the condensate probe.

The transferred-atom observable is built from the coupling kernel

    D(tau) = Integral d^3r |eta(r)|^2 exp(-i V_T(r) tau / hbar),

the autocorrelation of the drive field over the cloud.  Because the
trap potential V_T enters only through its value, D reduces to a level
integral: writing rho for the stretched radius (V_T = mu rho^2 on the
TF ellipsoid) and v = V_T,

    D(tau) = Integral_0^mu dv  rho_lev(v) exp(-i v tau / hbar).

Derivation of the level density for |eta|^2 ~ density x |U|^2: the
shell v = const has measure d^3r = b^2 c sqrt(v/mu) dv dOmega / (2 mu)
(solid angle dOmega in stretched coordinates), and the TF density on it
is (mu - v)/g, so with U frozen at the cloud center,

    rho_lev(v) = n_det * p(v),    p(v) = (15/4) mu^(-5/2) sqrt(v) (mu - v),

where n_det collects everything that does not depend on position:
n_det = [mu_0 mu_B a / (16 pi sqrt(2) hbar y0^2)]^2 |U(0)|^2 N.  The
p(v) normalization Int p dv = 1 absorbs the TF volume through
N = (8 pi / 15) (mu/g) b^2 c.  In dimensionless form, w = v/mu:

    d_tilde(w) = (15/4) sqrt(w) (1 - w)  on [0, 1],  Int d_tilde = 1.

Two kernel modes:

* Approx1D -- U(r) frozen to its cloud-center value; D is the closed
  1-D integral of d_tilde above, and its transform is exactly
  kernel_freq(omega) = n_det (hbar/mu) d_tilde(hbar omega / mu).
* Exact3D  -- the full position dependence of U kept.  The level
  density picks up the shell-averaged factor <|U|^2>(w) / |U(0)|^2,
  computed by angular quadrature on each stretched shell.  Everything
  downstream (time kernel, frequency kernel, convolutions) consumes the
  same shell representation.

Transform convention used package-wide: spectra are plain transforms of
correlations, S(omega) = Int dtau e^{i omega tau} C(tau), and inverses
carry 1/(2 pi).  kernel_freq is defined as (1/2pi) x transform of D, i.e.
the density that convolves S(omega) directly (see spectra module).

The finite measurement window f(tau) = max(1 - |tau|/T, 0) has plain
transform T sinc^2(omega T / 2); resolution_function returns
(1/2pi) x transform of (f D), which tends to kernel_freq for T much
longer than hbar/mu and to window_ft x D(0) / (2 pi) for T much shorter.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import __version__
from .condensate import TrapConfig, chemical_potential
from .constants import PhysicalConstants
from .errors import NumericalError, QgalvWarning, ValidationError
from .nanowire import (NanowireConfig, drive_prefactor, u_factor,
                       u_factor_grid)

_LEG_CACHE = {}


def _leggauss01(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    if n not in _LEG_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _LEG_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _LEG_CACHE[n]


def d_tilde(w):
    """Dimensionless kernel shape (15/4) sqrt(w) (1 - w) on [0, 1], else 0."""
    w = np.asarray(w, dtype=float)
    inside = (w >= 0.0) & (w <= 1.0)
    safe = np.where(inside, w, 0.0)
    out = np.where(inside, 3.75 * np.sqrt(safe) * (1.0 - safe), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def u_center(cfg: NanowireConfig) -> complex:
    """U evaluated at the trap center (adaptive single-point quadrature)."""
    return u_factor((0.0, 0.0, -cfg.z_offset / cfg.y0), cfg.L / cfg.y0)


def n_det(cfg: NanowireConfig, trap: TrapConfig,
          constants: PhysicalConstants = None) -> float:
    """Detection prefactor: (drive prefactor)^2 |U(center)|^2 N  [1/(A^2 s^2)]."""
    cst = constants if constants is not None else trap.constants
    pref = drive_prefactor(cfg, cst)
    return pref**2 * abs(u_center(cfg))**2 * trap.N


def window_time(tau, T: float):
    """Triangular acquisition window f(tau) = max(1 - |tau|/T, 0)."""
    if not T > 0.0:
        raise ValidationError("window T must be > 0")
    return np.maximum(1.0 - np.abs(np.asarray(tau, dtype=float)) / T, 0.0)


def window_ft(T: float, omega):
    """Plain transform of the triangular window: T sinc^2(omega T / 2)  [s].

    Value T at omega = 0; first zeros at omega = +- 2 pi / T.
    """
    if not T > 0.0:
        raise ValidationError("window T must be > 0")
    x = np.asarray(omega, dtype=float) * T / (2.0 * np.pi)  # np.sinc is sin(pi x)/(pi x)
    return T * np.sinc(x) ** 2


@dataclass(frozen=True)
class Window:
    """Triangular measurement window of duration T (seconds)."""

    T: float

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValidationError("window T must be > 0")

    def time(self, tau):
        return window_time(tau, self.T)

    def transform(self, omega):
        return window_ft(self.T, omega)


@dataclass(frozen=True)
class ResponseKernel:
    """Immutable kernel representation shared by all downstream consumers.

    The shell arrays are the quadrature representation
    D(tau) = n_det * sum_k shell_q[k] * shell_ratio[k] * exp(-i mu shell_w[k] tau / hbar)
    with sum_k shell_q[k] = 1 (Gauss weights folded with d_tilde) and
    shell_ratio the per-shell <|U|^2>/|U(center)|^2 (all ones in Approx1D).
    ratio_t / ratio_vals tabulate the ratio against t = sqrt(w) including
    the endpoints, for monotone-cubic reevaluation on other grids.
    """

    n_det: float
    mu: float
    hbar: float
    mode: str
    u0_sq: float
    shell_w: np.ndarray
    shell_q: np.ndarray
    shell_ratio: np.ndarray
    ratio_t: np.ndarray
    ratio_vals: np.ndarray
    tau_grid: np.ndarray
    D_samples: np.ndarray
    omega_grid: np.ndarray
    Dt_samples: np.ndarray
    warnings: tuple = ()
    provenance: dict = field(default_factory=dict)

    @property
    def omega_scale(self) -> float:
        """Kernel bandwidth mu/hbar in rad/s (0 for an empty cloud)."""
        return self.mu / self.hbar

    def ratio_at(self, w):
        """Shell-mean |U|^2 ratio at dimensionless depth w (1 outside data)."""
        if self.mode == "Approx1D" or self.ratio_t.size < 2:
            return np.ones_like(np.asarray(w, dtype=float))
        t = np.sqrt(np.clip(np.asarray(w, dtype=float), 0.0, 1.0))
        return PchipInterpolator(self.ratio_t, self.ratio_vals)(t)


def _shell_points(bt, ct, z_off_t, w, n_theta, n_phi):
    """Angular nodes on the stretched shell of depth w, in wire-frame units."""
    cosn, cw = np.polynomial.legendre.leggauss(n_theta)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    rho = np.sqrt(w)
    sin_t = np.sqrt(1.0 - cosn**2)
    x = (bt * rho * sin_t[:, None] * np.cos(phi)).ravel()
    y = (bt * rho * sin_t[:, None] * np.sin(phi)).ravel()
    z = (ct * rho * cosn[:, None] * np.ones(n_phi)).ravel() - z_off_t
    return x, y, z, cw


def _shell_mean_u2(bt, ct, z_off_t, w, lt, n_theta, n_phi, u_rtol=1e-8):
    x, y, z, cw = _shell_points(bt, ct, z_off_t, w, n_theta, n_phi)
    u, _ = u_factor_grid(x, y, z, lt, rtol=u_rtol)
    u2 = np.abs(u) ** 2
    return float((u2.reshape(n_theta, n_phi) * cw[:, None]).sum() / (2.0 * n_phi))


def _shell_ratio_converged(bt, ct, z_off_t, w, lt, u0_sq, n_theta0=48,
                           rtol=1e-5, max_doublings=2):
    """Angular mean with resolution doubling; returns (ratio, converged)."""
    if w <= 0.0:
        return 1.0, True
    n_theta, n_phi = n_theta0, 2 * n_theta0
    prev = _shell_mean_u2(bt, ct, z_off_t, w, lt, n_theta, n_phi)
    for _ in range(max_doublings):
        n_theta *= 2
        n_phi *= 2
        cur = _shell_mean_u2(bt, ct, z_off_t, w, lt, n_theta, n_phi)
        if abs(cur - prev) <= rtol * max(abs(cur), u0_sq):
            return cur / u0_sq, True
        prev = cur
    return prev / u0_sq, False


def _zero_kernel(mode, trap, wire, hbar, n_omega, n_tau, provenance):
    omega_grid = np.linspace(-0.5, 1.5, n_omega)
    tau_grid = np.linspace(-40.0, 40.0, n_tau)
    t, q = _leggauss01(8)
    return ResponseKernel(
        n_det=0.0, mu=0.0, hbar=hbar, mode=mode, u0_sq=0.0,
        shell_w=t**2, shell_q=q * 7.5 * t**2 * (1.0 - t**2),
        shell_ratio=np.ones_like(t),
        ratio_t=np.array([0.0, 1.0]), ratio_vals=np.array([1.0, 1.0]),
        tau_grid=tau_grid, D_samples=np.zeros(n_tau, dtype=complex),
        omega_grid=omega_grid, Dt_samples=np.zeros(n_omega),
        warnings=("empty cloud (N = 0): kernel is identically zero",),
        provenance=provenance)


def build_kernel(trap: TrapConfig, wire: NanowireConfig, mode: str = "Approx1D",
                 *, n_omega: int = 1024, n_tau: int = 4097,
                 tau_span_factor: float = 40.0, n_shell_nodes: int = None,
                 angular_rtol: float = 1e-5, freeze_u_to_center: bool = False,
                 threads: int = 1) -> ResponseKernel:
    """Construct the response kernel for one trap + wire scenario.

    `freeze_u_to_center` forces the Exact3D shell factor to 1 (testing
    hook: isolates the U-variation error; with it the two modes agree
    to quadrature rounding).  `threads` parallelizes the independent
    shell averages.
    """
    if mode not in ("Approx1D", "Exact3D"):
        raise ValidationError(f"unknown kernel mode {mode!r}")
    cst = trap.constants
    cond = chemical_potential(trap)
    u0 = u_center(wire)
    u0_sq = abs(u0) ** 2
    pref = drive_prefactor(wire, cst)
    ndet = pref**2 * u0_sq * trap.N

    provenance = {
        "version": __version__, "mode": mode,
        "omega_r_rad_s": trap.omega_r, "omega_z_rad_s": trap.omega_z,
        "atoms": trap.N, "b_offs_T": trap.B_offs,
        "wire_length_m": wire.L, "wire_distance_m": wire.y0,
        "wire_amplitude_m": wire.a, "wire_frequency_rad_s": wire.omega_cnt,
        "wire_z_offset_m": wire.z_offset,
    }

    if trap.N == 0.0:
        zero = _zero_kernel(mode, trap, wire, cst.hbar, n_omega, n_tau,
                            provenance)
        for msg in zero.warnings:
            warnings.warn(msg, QgalvWarning, stacklevel=2)
        return zero

    bt = cond.b / wire.y0
    ct = cond.c / wire.y0
    z_off_t = wire.z_offset / wire.y0
    lt = wire.L / wire.y0
    notes = []

    if mode == "Exact3D":
        if bt >= 1.0:
            raise ValidationError(
                f"TF radius b = {cond.b:.3e} m reaches the wire distance "
                f"y0 = {wire.y0:.3e} m; the cloud would touch the wire")
        if bt > 0.95:
            notes.append(f"cloud edge within {100 * (1 - bt):.1f}% of the wire "
                         "distance; edge shells dominate the kernel")

    if n_shell_nodes is None:
        n_shell_nodes = 160 if (mode == "Exact3D" and bt > 0.9) else 96
    t_nodes, gw = _leggauss01(n_shell_nodes)
    shell_w = t_nodes**2
    # Int_0^1 F(w) d_tilde(w) dw = Int_0^1 F(t^2) (15/2) t^2 (1-t^2) dt
    shell_q = gw * 7.5 * t_nodes**2 * (1.0 - t_nodes**2)

    if mode == "Approx1D" or freeze_u_to_center:
        shell_ratio = np.ones(n_shell_nodes)
        ratio_t = np.array([0.0, 1.0])
        ratio_vals = np.array([1.0, 1.0])
        if freeze_u_to_center and mode == "Exact3D":
            notes.append("U frozen to cloud-center value (testing hook)")
    else:
        def one(w):
            return _shell_ratio_converged(bt, ct, z_off_t, w, lt, u0_sq,
                                          rtol=angular_rtol)
        work = list(shell_w) + [1.0]  # include the boundary shell for interp
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                res = list(pool.map(one, work))
        else:
            res = [one(w) for w in work]
        vals = np.array([r[0] for r in res])
        bad = [w for w, r in zip(work, res) if not r[1]]
        if bad:
            notes.append(
                f"{len(bad)} shell average(s) not converged at angular "
                f"doubling cap (depths w = {', '.join(f'{w:.3f}' for w in bad[:4])}"
                + ("..." if len(bad) > 4 else "") + ")")
        shell_ratio = vals[:-1]
        ratio_t = np.concatenate([[0.0], t_nodes, [1.0]])
        ratio_vals = np.concatenate([[1.0], vals[:-1], [vals[-1]]])

    mu = cond.mu
    hv = cst.hbar
    omega_grid = np.linspace(-0.5, 1.5, n_omega) * (mu / hv)
    tau_grid = np.linspace(-tau_span_factor, tau_span_factor, n_tau) * (hv / mu)

    kernel = ResponseKernel(
        n_det=ndet, mu=mu, hbar=hv, mode=mode, u0_sq=u0_sq,
        shell_w=shell_w, shell_q=shell_q, shell_ratio=shell_ratio,
        ratio_t=ratio_t, ratio_vals=ratio_vals,
        tau_grid=tau_grid, D_samples=np.empty(0, dtype=complex),
        omega_grid=omega_grid, Dt_samples=np.empty(0),
        warnings=tuple(notes), provenance=provenance)
    # fill the dense samples through the public evaluators
    object.__setattr__(kernel, "Dt_samples",
                       kernel_freq(omega_grid, kernel, check_grid=False))
    object.__setattr__(kernel, "D_samples", kernel_time(tau_grid, kernel))
    for msg in notes:
        warnings.warn(msg, QgalvWarning, stacklevel=2)
    return kernel


def _shell_nodes_for_phase(kernel: ResponseKernel, phase_max: float):
    """Shell quadrature dense enough for exp(-i mu w tau / hbar) integrals.

    Gauss-Legendre with n nodes integrates the oscillatory factor
    accurately while the total phase stays well under 2n; grow the rule
    (reevaluating the ratio by monotone interpolation) when a caller
    needs longer times than the stored rule supports.
    """
    n_have = kernel.shell_w.size
    n_need = max(32, int(0.75 * phase_max) + 16)
    if n_need <= n_have:
        return kernel.shell_w, kernel.shell_q, kernel.shell_ratio
    t, gw = _leggauss01(n_need)
    q = gw * 7.5 * t**2 * (1.0 - t**2)
    return t**2, q, kernel.ratio_at(t**2)


def kernel_time(tau, kernel: ResponseKernel):
    """D(tau) as a complex array, from the kernel's shell representation."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if kernel.mu == 0.0:
        return np.zeros(tau.shape, dtype=complex)
    phase_max = float(np.abs(tau).max()) * kernel.mu / kernel.hbar
    w, q, ratio = _shell_nodes_for_phase(kernel, phase_max)
    phases = np.exp(-1j * (kernel.mu / kernel.hbar) * np.outer(tau, w))
    return kernel.n_det * phases @ (q * ratio)


def kernel_freq(omega, kernel: ResponseKernel, check_grid: bool = True):
    """Frequency kernel (1/2pi) x transform of D, sampled at `omega` [rad/s].

    Real, non-negative, supported on [0, mu/hbar].  With `check_grid`
    the grid must span at least [-0.5, 1.5] mu/hbar and sample finer
    than (mu/hbar)/8 so the shape is actually resolved.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if kernel.mu == 0.0:
        return np.zeros(omega.shape)
    scale = kernel.omega_scale
    if check_grid and omega.size >= 2:
        if omega.min() > -0.5 * scale or omega.max() < 1.5 * scale:
            raise ValidationError(
                "kernel frequency grid must span [-0.5, 1.5] mu/hbar")
        if np.diff(omega).max() > scale / 8.0:
            raise ValidationError(
                "kernel frequency grid is too coarse to resolve mu/hbar")
    w = omega * (kernel.hbar / kernel.mu)
    vals = kernel.n_det * (kernel.hbar / kernel.mu) * d_tilde(w)
    if kernel.mode == "Exact3D":
        inside = (w > 0.0) & (w < 1.0)
        if np.any(inside):
            ratio = kernel.ratio_at(w[inside])
            out = np.array(vals, dtype=float)
            out[inside] = vals[inside] * ratio
            vals = out
    return vals


def resolution_function(T: float, omega, kernel: ResponseKernel,
                        rtol: float = 1e-7, max_doublings: int = 3):
    """Spectral weight (1/2pi) x transform of (window x D), at `omega`.

    This is the density that multiplies S(omega) in the finite-time
    forward map.  Long T: approaches kernel_freq.  Short T: approaches
    window_ft(T, omega) * D(0) / (2 pi).  Computed as a time-domain
    quadrature (1/pi) Re Int_0^T f D e^{i omega tau} dtau with panel
    doubling; non-convergence raises NumericalError.
    """
    if not T > 0.0:
        raise ValidationError("measurement time T must be > 0")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if kernel.mu == 0.0:
        return np.zeros(omega.shape)

    rate = float(np.abs(omega).max()) + kernel.omega_scale
    n_panels = int(np.ceil(T * rate / (2.0 * np.pi))) + 4

    prev = None
    for _ in range(max_doublings + 1):
        nodes, wts = _leggauss01(16)
        edges = np.linspace(0.0, T, n_panels + 1)
        tau = (edges[:-1, None] + np.diff(edges)[:, None] * nodes).ravel()
        wt = (np.diff(edges)[:, None] * wts).ravel()
        fd = window_time(tau, T) * kernel_time(tau, kernel) * wt
        cur = (np.exp(1j * np.outer(omega, tau)) @ fd).real / np.pi
        if prev is not None:
            scale = max(np.abs(cur).max(), kernel.n_det * kernel.hbar / kernel.mu * 1e-12)
            if np.abs(cur - prev).max() <= rtol * scale:
                return cur
        prev = cur
        n_panels *= 2
    raise NumericalError(
        "resolution_function time quadrature did not converge; the "
        "frequency grid or T may be out of the supported range")
