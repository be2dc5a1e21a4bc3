"""Geometry and coupling of the vibrating current-carrying nanotube.

The wire is a doubly clamped tube of length L suspended a distance y0
from the condensate center, lying along the z axis of the trap frame
(so it occupies x = 0, y = -y0, z in [z_offset - L/2, z_offset + L/2])
and vibrating in its fundamental string mode sin(pi zeta / L).

Its oscillating near field couples Zeeman sublevels with a complex,
position-dependent strength.  The geometry is captured by the
dimensionless factor

    U(r) = Integral_0^L dzeta sin(pi zeta / L) *
           [x^2 - 2 (1+y)^2 + (L/2 + z - zeta)^2 - i x (1+y)]
           / [x^2 + (1+y)^2 + (L/2 + z - zeta)^2]^(5/2)

where *all lengths are in units of y0* and (x, y, z) is the evaluation
point in a frame centered on the wire midpoint (the thin-wire field of
each element, differentiated along the vibration direction, summed over
the mode shape).  Two exact symmetries follow from the integrand:
U(-x, y, z) = conj U(x, y, z), and U(x, y, -z) = U(x, y, z).

The per-unit-current drive amplitude on a condensate atom is

    eta(r) = i sqrt(N) phi(r) * mu_0 mu_B a / (16 pi sqrt(2) hbar y0^2) * U(r)

with phi the TF wavefunction, so |eta| vanishes identically outside the
TF ellipsoid.  The offset field maps to the probe frequency through the
Larmor term: Omega = omega_cnt - (1/2) mu_B B_offs / hbar.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .condensate import CondensateTF, TrapConfig, tf_density, trap_potential
from .constants import PhysicalConstants
from .errors import NumericalError, QgalvWarning, ValidationError

_LEG_CACHE = {}


def _leggauss(n):
    if n not in _LEG_CACHE:
        _LEG_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEG_CACHE[n]


@dataclass(frozen=True)
class NanowireConfig:
    """Suspended-nanotube geometry and drive.

    L         : m, tube length
    y0        : m, tube-condensate distance
    a         : m, vibration amplitude (a << y0)
    omega_cnt : rad/s, mechanical frequency
    z_offset  : m, wire midpoint position along the trap z axis
    """

    L: float
    y0: float
    a: float
    omega_cnt: float
    z_offset: float = 0.0

    def __post_init__(self):
        if not self.L > 0.0:
            raise ValidationError("wire.L must be > 0")
        if not self.y0 > 0.0:
            raise ValidationError("wire.y0 must be > 0")
        if not self.a > 0.0:
            raise ValidationError("wire.a must be > 0")
        if not self.omega_cnt > 0.0:
            raise ValidationError("wire.omega_cnt must be > 0")
        if not self.a / self.y0 < 1.0:
            raise ValidationError(
                f"vibration amplitude a = {self.a} is not small against "
                f"y0 = {self.y0}; the linearized drive requires a < y0")
        if self.a / self.y0 >= 0.1:
            warnings.warn(
                f"a/y0 = {self.a / self.y0:.3g} is not << 1; the first-order "
                "field modulation is questionable", QgalvWarning, stacklevel=2)
        if self.y0 < 1e-6:
            warnings.warn(
                f"y0 = {self.y0:.3g} m is below the 1 um surface-interaction "
                "safety bound", QgalvWarning, stacklevel=2)


def _check_off_axis(x, y):
    # The wire axis is the line x = 0, y = -1 (scaled units); the field
    # diverges there and U is undefined on the axis even beyond the clamps.
    d2 = np.asarray(x) ** 2 + (1.0 + np.asarray(y)) ** 2
    if np.any(d2 < 1e-18):
        raise ValidationError(
            "evaluation point lies on the wire axis (x = 0, y = -y0)")


def u_factor(r_scaled, L_over_y0: float, rtol: float = 1e-8) -> complex:
    """Geometry factor U at a single point, adaptive quadrature.

    `r_scaled` is the evaluation point in units of y0, in the wire
    midpoint frame (z = 0 faces the mode antinode).  Relative accuracy
    `rtol` is requested from the quadrature; failure to reach it raises
    NumericalError.
    """
    x, y, z = (float(v) for v in r_scaled)
    lt = float(L_over_y0)
    if not lt > 0.0:
        raise ValidationError("L/y0 must be > 0")
    _check_off_axis(x, y)
    yd = 1.0 + y

    def num_re(zeta):
        dz = 0.5 * lt + z - zeta
        return ((x * x - 2.0 * yd * yd + dz * dz)
                / (x * x + yd * yd + dz * dz) ** 2.5 * np.sin(np.pi * zeta / lt))

    def num_im(zeta):
        dz = 0.5 * lt + z - zeta
        return (-x * yd
                / (x * x + yd * yd + dz * dz) ** 2.5 * np.sin(np.pi * zeta / lt))

    parts = []
    for f in (num_re, num_im):
        out = quad(f, 0.0, lt, epsabs=1e-14, epsrel=rtol, limit=200,
                   full_output=1)
        val, abserr = out[0], out[1]
        if len(out) > 3:  # quad appended a trouble message
            raise NumericalError(f"u_factor quadrature did not converge: {out[3]}")
        parts.append((val, abserr))
    u = complex(parts[0][0], parts[1][0])
    err = parts[0][1] + parts[1][1]
    if err > 10.0 * rtol * max(abs(u), 1e-6):
        raise NumericalError(
            f"u_factor error estimate {err:.2e} exceeds tolerance at {r_scaled}")
    return u


def u_factor_grid(x, y, z, L_over_y0: float, rtol: float = 1e-8,
                  max_doublings: int = 5):
    """Vectorized U over point arrays (scaled units, wire midpoint frame).

    Composite Gauss-Legendre panels along the wire, doubled until the
    result is stable to `rtol` (error measured against the largest |U|
    in the batch).  Returns (values, achieved_relative_change); callers
    that tolerate soft edges check the second element instead of relying
    on an exception.  Symmetric panel nodes keep the conjugation and
    z-mirror symmetries exact to rounding.
    """
    lt = float(L_over_y0)
    if not lt > 0.0:
        raise ValidationError("L/y0 must be > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    z = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    _check_off_axis(x, y)

    # Panel length should resolve the closest approach distance: the
    # integrand varies on the transverse-distance scale.
    d_min = float(np.sqrt((x * x + (1.0 + y) ** 2)).min())
    n_panels = int(min(64, max(2, np.ceil(lt / (3.0 * d_min)))))

    prev = None
    rel = np.inf
    for _ in range(max_doublings + 1):
        vals = _u_panels(x, y, z, lt, n_panels)
        if prev is not None:
            scale = max(np.abs(vals).max(), 1e-30)
            rel = float(np.abs(vals - prev).max() / scale)
            if rel < rtol:
                return vals, rel
        prev = vals
        n_panels *= 2
    return prev, rel


def _u_panels(x, y, z, lt, n_panels, order=32):
    nodes, wts = _leggauss(order)
    edges = np.linspace(0.0, lt, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    zeta = (mid[:, None] + half[:, None] * nodes).ravel()
    wz = (half[:, None] * wts).ravel()
    sw = np.sin(np.pi * zeta / lt) * wz

    out = np.empty(x.size, dtype=complex)
    chunk = max(1, int(2.0e6 / zeta.size))
    for i in range(0, x.size, chunk):
        xs = x[i:i + chunk, None]
        yd = 1.0 + y[i:i + chunk, None]
        dz = 0.5 * lt + z[i:i + chunk, None] - zeta
        den = (xs * xs + yd * yd + dz * dz) ** 2.5
        num = xs * xs - 2.0 * yd * yd + dz * dz - 1j * xs * yd
        out[i:i + chunk] = ((num / den) * sw).sum(axis=1)
    return out


def drive_prefactor(cfg: NanowireConfig, constants: PhysicalConstants) -> float:
    """Scalar drive strength mu_0 mu_B a / (16 pi sqrt(2) hbar y0^2), in 1/(A s).

    Multiplied by sqrt(density) [m^-3/2] and U it gives the per-unit-current
    drive amplitude eta(r).
    """
    return (constants.mu_0 * constants.mu_B * cfg.a
            / (16.0 * np.pi * np.sqrt(2.0) * constants.hbar * cfg.y0**2))


def wire_frame_scaled(r, cfg: NanowireConfig):
    """Map trap-frame positions (m) to wire-midpoint-frame units of y0."""
    r = np.asarray(r, dtype=float)
    x = r[..., 0] / cfg.y0
    y = r[..., 1] / cfg.y0
    z = (r[..., 2] - cfg.z_offset) / cfg.y0
    return x, y, z


def driving_amplitude(r, cfg: NanowireConfig, cond: CondensateTF,
                      trap: TrapConfig) -> complex:
    """Per-unit-current drive amplitude eta(r), in m^-3/2 A^-1 s^-1.

    Exactly zero outside the TF support (no U evaluation attempted there).
    """
    dens = float(tf_density(r, cond, trap))
    if dens == 0.0:
        return 0.0 + 0.0j
    x, y, z = wire_frame_scaled(r, cfg)
    u = u_factor((float(x), float(y), float(z)), cfg.L / cfg.y0)
    return 1j * np.sqrt(dens) * drive_prefactor(cfg, trap.constants) * u


def detuning(r, Omega: float, trap: TrapConfig):
    """Local detuning Delta(r) = Omega - V_T(r)/hbar, in rad/s."""
    return Omega - trap_potential(r, trap) / trap.constants.hbar


def omega_from_boffs(cfg: NanowireConfig, B_offs: float,
                     constants: PhysicalConstants) -> float:
    """Probe frequency Omega = omega_cnt - (1/2) mu_B B_offs / hbar  [rad/s]."""
    if B_offs < 0.0:
        raise ValidationError("B_offs must be >= 0")
    larmor = 0.5 * constants.mu_B * B_offs / constants.hbar
    if not (2.0 * np.pi * 0.1e6 <= larmor <= 2.0 * np.pi * 100e6):
        warnings.warn(
            f"Larmor frequency {larmor / (2 * np.pi):.3g} Hz is outside the "
            "0.1-100 MHz tuning range", QgalvWarning, stacklevel=2)
    return cfg.omega_cnt - larmor


def boffs_from_omega(cfg: NanowireConfig, Omega: float,
                     constants: PhysicalConstants) -> float:
    """Exact inverse of omega_from_boffs."""
    b = 2.0 * constants.hbar * (cfg.omega_cnt - Omega) / constants.mu_B
    if b < 0.0:
        raise ValidationError(
            f"Omega = {Omega} rad/s exceeds omega_cnt; no non-negative "
            "offset field realizes it")
    return b
