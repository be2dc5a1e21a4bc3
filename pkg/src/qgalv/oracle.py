"""Brute-force validation path: stochastic current trajectories.

Instead of the analytic convolution, drive the condensate with explicit
classical current records I(t) and integrate the first-order field
response node by node,

    psi0(r, T) = eta(r) Integral_0^T I(T - t) e^{-i Delta(r) t} dt,

then average Integral |psi0|^2 d^3r over an ensemble.  For a stationary
classical process the ensemble mean equals the analytic forward map with
the same spatial quadrature, so the comparison isolates the
process -> spectrum -> convolution chain from geometry systematics.

The three process variants have closed-form spectra:

    SinusoidRandomPhase  ->  symmetric line pair at +-omega0, weight I0^2/2
    OrnsteinUhlenbeck    ->  Lorentzian, gamma = 1/tau_c, power = rms^2
    BandLimitedWhite     ->  flat density on [-cutoff, +cutoff]

Determinism: per-trajectory seeds come from
numpy.random.SeedSequence(master_seed).spawn(n) -- a counter-based
split, so trajectory m is the same regardless of batching or thread
scheduling.

Spatial quadrature: tensor product on the stretched unit ball (the TF
support), Gauss in radius and polar angle, uniform azimuth.  The trap
potential is constant on each radial shell (V_T = mu rho^2), so the
per-trajectory work contracts to one matrix product over shells after
the angular weights are folded into per-shell coupling weights.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .condensate import TrapConfig, chemical_potential
from .errors import NumericalError, ValidationError
from .kernel import window_time
from .nanowire import NanowireConfig, drive_prefactor, u_factor_grid
from .spectra import (LineNoise, LorentzianNoise, TabulatedNoise,
                      autocorrelation, is_classical)

_LEG_CACHE = {}


def _leggauss01(n):
    if n not in _LEG_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _LEG_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _LEG_CACHE[n]


# ---------------------------------------------------------------------------
# current processes

@dataclass(frozen=True)
class SinusoidRandomPhase:
    """I(t) = I0 cos(omega0 t + phi), phi uniform per trajectory."""

    I0: float
    omega0: float
    seed: int = 0

    def __post_init__(self):
        if self.I0 < 0.0 or not self.omega0 > 0.0:
            raise ValidationError("sinusoid needs I0 >= 0 and omega0 > 0")


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    """Stationary OU current: rms amplitude, correlation time tau_c."""

    rms: float
    tau_c: float
    seed: int = 0

    def __post_init__(self):
        if self.rms < 0.0 or not self.tau_c > 0.0:
            raise ValidationError("OU needs rms >= 0 and tau_c > 0")


@dataclass(frozen=True)
class BandLimitedWhite:
    """Flat spectral density on [-cutoff, cutoff], synthesized from
    random-phase cosine components."""

    density: float
    cutoff: float
    seed: int = 0

    def __post_init__(self):
        if self.density < 0.0 or not self.cutoff > 0.0:
            raise ValidationError("band-limited white needs density >= 0, cutoff > 0")


CURRENT_PROCESSES = (SinusoidRandomPhase, OrnsteinUhlenbeck, BandLimitedWhite)


def equivalent_model(process):
    """The analytic spectrum realized by the process (all are classical)."""
    if isinstance(process, SinusoidRandomPhase):
        return LineNoise(omega0=process.omega0, weight=0.5 * process.I0**2,
                         symmetric=True)
    if isinstance(process, OrnsteinUhlenbeck):
        return LorentzianNoise(center=0.0, gamma=1.0 / process.tau_c,
                               power=process.rms**2)
    if isinstance(process, BandLimitedWhite):
        return TabulatedNoise(omega=np.array([-process.cutoff, process.cutoff]),
                              values=np.array([process.density, process.density]))
    raise ValidationError(f"unknown current process {type(process).__name__}")


def require_classical(model):
    """Reject asymmetric spectra: classical trajectories cannot realize them."""
    if not is_classical(model):
        raise ValidationError(
            "the trajectory oracle only realizes classical (symmetric) "
            "spectra: a real current record always has S(omega) = S(-omega), "
            "so an asymmetric model cannot be validated this way")


def _coarsest_dt(process):
    if isinstance(process, SinusoidRandomPhase):
        return (2.0 * np.pi / process.omega0) / 20.0
    if isinstance(process, OrnsteinUhlenbeck):
        return process.tau_c / 20.0
    if isinstance(process, BandLimitedWhite):
        return (2.0 * np.pi / process.cutoff) / 20.0
    raise ValidationError(f"unknown current process {type(process).__name__}")


def _check_dt(process, dt):
    if not dt > 0.0:
        raise ValidationError("dt must be > 0")
    if dt > _coarsest_dt(process):
        raise ValidationError(
            f"dt = {dt:.3e} s does not resolve the process (need "
            f"<= {_coarsest_dt(process):.3e} s, 20 samples per correlation time)")


def sample_current(process, dt: float, steps: int, seed=None):
    """One trajectory: steps+1 samples at t = 0, dt, ..., steps*dt  [A].

    Deterministic given (process, seed); `seed` defaults to process.seed.
    """
    _check_dt(process, dt)
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    sd = process.seed if seed is None else seed
    return _sample_batch(process, dt, steps, [np.random.SeedSequence(sd)])[0]


def _sample_batch(process, dt, steps, seedseqs):
    """(n_traj, steps+1) current records, one child seed per trajectory."""
    n = len(seedseqs)
    n_t = steps + 1
    t = np.arange(n_t) * dt
    if isinstance(process, SinusoidRandomPhase):
        phases = np.array([np.random.default_rng(s).uniform(0.0, 2.0 * np.pi)
                           for s in seedseqs])
        return process.I0 * np.cos(process.omega0 * t + phases[:, None])
    if isinstance(process, OrnsteinUhlenbeck):
        alpha = np.exp(-dt / process.tau_c)
        innov = np.empty((n, n_t))
        for i, s in enumerate(seedseqs):
            innov[i] = np.random.default_rng(s).standard_normal(n_t)
        # exact stationary AR(1): x_0 ~ N(0, rms^2), then the recursion
        innov *= process.rms * np.sqrt(1.0 - alpha**2)
        innov[:, 0] = innov[:, 0] / np.sqrt(1.0 - alpha**2)
        return lfilter([1.0], [1.0, -alpha], innov, axis=1)
    if isinstance(process, BandLimitedWhite):
        T_total = steps * dt
        n_comp = int(process.cutoff * T_total / 0.3) + 64
        dw = process.cutoff / n_comp
        om = (np.arange(n_comp) + 0.5) * dw
        amp = np.sqrt(2.0 * process.density * dw / np.pi)
        out = np.empty((n, n_t))
        cos_base = np.cos(np.outer(t, om))
        sin_base = np.sin(np.outer(t, om))
        for i, s in enumerate(seedseqs):
            phi = np.random.default_rng(s).uniform(0.0, 2.0 * np.pi, n_comp)
            # cos(om t + phi) = cos cos - sin sin, batched as matmuls
            out[i] = amp * (cos_base @ np.cos(phi) - sin_base @ np.sin(phi))
        return out
    raise ValidationError(f"unknown current process {type(process).__name__}")


# ---------------------------------------------------------------------------
# spatial quadrature

@dataclass(frozen=True)
class OracleGrid:
    """TF-support quadrature with per-node drive data.

    positions : (n, 3) m, trap frame
    weights   : (n,) m^3, sum = TF ellipsoid volume
    eta       : (n,) complex drive amplitudes per unit current
    rho       : (n_radial,) stretched shell radii
    shell_coupling : (n_radial,) sum of weights x |eta|^2 per shell
    """

    positions: np.ndarray
    weights: np.ndarray
    eta: np.ndarray
    rho: np.ndarray
    shell_coupling: np.ndarray
    mu: float
    hbar: float


def tf_quadrature_grid(trap: TrapConfig, wire: NanowireConfig,
                       n_radial: int = 24, n_theta: int = 24, n_phi: int = 24,
                       freeze_u_to_center: bool = False) -> OracleGrid:
    """Tensor quadrature over the TF ellipsoid with exact U(r) weights."""
    cst = trap.constants
    cond = chemical_potential(trap)
    if cond.mu == 0.0:
        raise ValidationError("empty cloud: the oracle grid is undefined for N = 0")
    rho, wr = _leggauss01(n_radial)
    cosn, cw = np.polynomial.legendre.leggauss(n_theta)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    wphi = 2.0 * np.pi / n_phi

    sin_t = np.sqrt(1.0 - cosn**2)
    # stretched ball -> ellipsoid: d^3r = b^2 c rho^2 drho dcos dphi
    x = cond.b * rho[:, None, None] * sin_t[None, :, None] * np.cos(phi)
    y = cond.b * rho[:, None, None] * sin_t[None, :, None] * np.sin(phi)
    z = cond.c * rho[:, None, None] * cosn[None, :, None] * np.ones(n_phi)
    pos = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    wgt = (cond.b**2 * cond.c * rho[:, None, None]**2 * wr[:, None, None]
           * cw[None, :, None] * wphi * np.ones(n_phi)).ravel()

    dens = (cond.mu * (1.0 - rho**2) / cond.g)  # TF density per shell
    dens_nodes = np.repeat(dens, n_theta * n_phi)
    pref = drive_prefactor(wire, cst)
    if freeze_u_to_center:
        u, _ = u_factor_grid(np.zeros(1), np.zeros(1),
                             np.array([-wire.z_offset / wire.y0]),
                             wire.L / wire.y0)
        u = np.full(pos.shape[0], u[0])
    else:
        u, _ = u_factor_grid(pos[:, 0] / wire.y0, pos[:, 1] / wire.y0,
                             (pos[:, 2] - wire.z_offset) / wire.y0,
                             wire.L / wire.y0)
    eta = 1j * np.sqrt(dens_nodes) * pref * u

    coupling = (wgt * np.abs(eta) ** 2).reshape(n_radial, -1).sum(axis=1)
    return OracleGrid(positions=pos, weights=wgt, eta=eta, rho=rho,
                      shell_coupling=coupling, mu=cond.mu, hbar=cst.hbar)


@dataclass(frozen=True)
class FieldSnapshot:
    """Per-node transferred-sublevel amplitudes at the end of one record."""

    positions: np.ndarray
    weights: np.ndarray
    psi0: np.ndarray

    def atom_count(self) -> float:
        """Integral |psi0|^2 d^3r for this single trajectory."""
        return float(np.sum(self.weights * np.abs(self.psi0) ** 2))


def evolve_psi0(trajectory, grid: OracleGrid, Omega: float, T: float) -> FieldSnapshot:
    """Integrate the driven response for one current record (trapezoid).

    The record must sample [0, T] uniformly, endpoints included.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 1 or traj.size < 2:
        raise ValidationError("trajectory must be a 1-D record with >= 2 samples")
    n_t = traj.size
    t = np.linspace(0.0, T, n_t)
    wt = np.full(n_t, T / (n_t - 1))
    wt[0] *= 0.5
    wt[-1] *= 0.5
    per_shell = grid.positions.shape[0] // grid.rho.size
    delta = Omega - grid.mu * np.repeat(grid.rho**2, per_shell) / grid.hbar
    # integrand I(T - t) e^{-i Delta(r) t}
    psi0 = grid.eta * (np.exp(-1j * np.outer(delta, t)) @ (wt * traj[::-1]))
    return FieldSnapshot(positions=grid.positions, weights=grid.weights,
                         psi0=psi0)


def oracle_scan(process, grid: OracleGrid, Omega_grid, T: float, dt: float,
                n_traj: int, seed=None, batch: int = 512):
    """Ensemble means and standard errors of the atom count per Omega.

    One common trajectory ensemble serves every Omega (the analytic
    comparison is per point; sharing records just correlates the
    sampling noise between points).  Per-trajectory seeds are spawned
    from the master seed by index, so results do not depend on `batch`.
    """
    _check_dt(process, dt)
    if n_traj < 2:
        raise ValidationError("need >= 2 trajectories for a standard error")
    Omega_grid = np.atleast_1d(np.asarray(Omega_grid, dtype=float))
    steps = int(round(T / dt))
    if abs(steps * dt - T) > 1e-9 * T or steps < 2:
        raise ValidationError("T must be an integer number of dt steps (>= 2)")
    n_t = steps + 1
    t = np.arange(n_t) * dt
    wt = np.full(n_t, dt)
    wt[0] *= 0.5
    wt[-1] *= 0.5

    sd = process.seed if seed is None else seed
    children = np.random.SeedSequence(sd).spawn(n_traj)

    # e^{+i mu rho^2 t / hbar} per shell; the Omega part factors out
    shell_phase = np.exp(1j * np.outer(grid.mu * grid.rho**2 / grid.hbar, t))
    mod = np.exp(-1j * np.outer(Omega_grid, t)) * wt

    counts = np.empty((n_traj, Omega_grid.size))
    for lo in range(0, n_traj, batch):
        hi = min(lo + batch, n_traj)
        rec = _sample_batch(process, dt, steps, children[lo:hi])[:, ::-1]
        for k in range(Omega_grid.size):
            g = shell_phase @ (mod[k] * rec).T     # (n_shells, batch)
            counts[lo:hi, k] = grid.shell_coupling @ (np.abs(g) ** 2)
    mean = counts.mean(axis=0)
    stderr = counts.std(axis=0, ddof=1) / np.sqrt(n_traj)
    return mean, stderr


def oracle_atom_count(process, grid: OracleGrid, Omega: float, T: float,
                      dt: float, n_traj: int, seed=None):
    """Single-Omega ensemble mean and standard error."""
    mean, err = oracle_scan(process, grid, [Omega], T, dt, n_traj, seed=seed)
    return float(mean[0]), float(err[0])


def analytic_reference(process, grid: OracleGrid, Omega_grid, T: float,
                       rtol: float = 1e-9, max_doublings: int = 6):
    """Forward map on the *same* spatial grid as the trajectory oracle.

    2 T Re Int_0^T e^{i Omega tau} C(tau) f(tau) D_grid(tau) dtau with
    D_grid built from the grid's shell couplings, so the comparison is
    free of spatial-quadrature systematics.
    """
    model = equivalent_model(process)
    Omega_grid = np.atleast_1d(np.asarray(Omega_grid, dtype=float))
    scale = grid.mu / grid.hbar
    rate = float(np.abs(Omega_grid).max()) + scale
    if isinstance(process, SinusoidRandomPhase):
        rate += process.omega0
    elif isinstance(process, OrnsteinUhlenbeck):
        rate += 1.0 / process.tau_c
    else:
        rate += process.cutoff
    n_panels = int(np.ceil(T * rate / (2.0 * np.pi))) + 4

    prev = None
    for _ in range(max_doublings + 1):
        nodes, wts = _leggauss01(16)
        edges = np.linspace(0.0, T, n_panels + 1)
        tau = (edges[:-1, None] + np.diff(edges)[:, None] * nodes).ravel()
        wq = (np.diff(edges)[:, None] * wts).ravel()
        d_grid = np.exp(-1j * np.outer(tau, scale * grid.rho**2)) \
            @ grid.shell_coupling
        cfd = autocorrelation(model, tau) * window_time(tau, T) * d_grid * wq
        cur = 2.0 * T * (np.exp(1j * np.outer(Omega_grid, tau)) @ cfd).real
        if prev is not None:
            ref = max(np.abs(cur).max(), 1e-300)
            if np.abs(cur - prev).max() <= rtol * ref:
                return cur
        prev = cur
        n_panels *= 2
    raise NumericalError("analytic reference quadrature did not converge")
