"""Current-noise spectrum models and the forward map to atom numbers.

Conventions (fixed package-wide, see kernel module): the spectrum is
the plain transform of the stationary current autocorrelation,

    S(omega) = Int dtau e^{i omega tau} C(tau),      [A^2 s]
    C(tau)   = (1/2pi) Int domega e^{-i omega tau} S(omega),   [A^2]

so C(-tau) = conj C(tau) always, and C is real iff S is symmetric
("classical").  The mean number of atoms transferred during a
measurement of duration T at probe frequency Omega is

    N(Omega) = T Int dtau e^{i Omega tau} C(tau) f(tau) D(tau)
             = T Int domega S(omega) R_T(Omega - omega),

with f the triangular window and R_T the resolution function of the
kernel module.  In the long-measurement regime f ~ 1 and R_T tends to
kernel_freq, giving the dimensionless convolution

    N_long(Omega) = T (hbar/mu) n_det Int dw~ S~(w~) d_tilde(W~ - w~)

where tildes are frequencies in units of mu/hbar and S~ = (mu/hbar) S
is the spectral density per unit dimensionless frequency.  For a flat
spectrum the d_tilde normalization collapses this to the exact identity
N = T n_det S0, which pins the transform convention and is kept exact
here by integrating d_tilde with the substitution w = t^2 (the
integrand becomes polynomial, so Gauss quadrature is exact for flat S).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, QgalvWarning, ValidationError
from .kernel import ResponseKernel, kernel_freq, kernel_time, window_time
from .nanowire import NanowireConfig, boffs_from_omega
from .constants import PhysicalConstants

_LEG_CACHE = {}


def _leggauss01(n):
    if n not in _LEG_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _LEG_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _LEG_CACHE[n]


# ---------------------------------------------------------------------------
# noise models

@dataclass(frozen=True)
class FlatNoise:
    """White spectrum S(omega) = S0  [A^2 s].

    Its autocorrelation is a delta at tau = 0; every consumer handles
    the flat case analytically instead of sampling C.
    """

    S0: float

    def __post_init__(self):
        if self.S0 < 0.0:
            raise ValidationError("flat spectral density must be >= 0")


@dataclass(frozen=True)
class LineNoise:
    """Single spectral line of integrated weight `weight` [A^2].

    symmetric=True: C(tau) = weight cos(omega0 tau), i.e. half the
    weight on each of +-omega0 (a classical sinusoid of rms
    sqrt(weight)).  symmetric=False: all weight on +omega0,
    C(tau) = weight e^{-i omega0 tau} (a strictly one-sided line).
    """

    omega0: float
    weight: float
    symmetric: bool = True

    def __post_init__(self):
        if self.weight < 0.0:
            raise ValidationError("line weight must be >= 0")
        if self.omega0 < 0.0:
            raise ValidationError("line frequency must be >= 0")


@dataclass(frozen=True)
class LorentzianNoise:
    """Lorentzian S(omega) = 2 P gamma / ((omega - center)^2 + gamma^2).

    P is the integrated power (1/2pi) Int S = C(0) in A^2; gamma the
    half-width in rad/s.  C(tau) = P e^{-i center tau - gamma |tau|}.
    """

    center: float
    gamma: float
    power: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValidationError("lorentzian half-width must be > 0")
        if self.power < 0.0:
            raise ValidationError("lorentzian power must be >= 0")


@dataclass(frozen=True)
class DetailedBalanceNoise:
    """Thermal asymmetry wrapped around a symmetric base model.

    S(omega) = S_base(omega) * 2 / (1 + e^{-hbar omega / k_B T_e}),
    which satisfies S(-omega) = e^{-hbar omega / k_B T_e} S(omega):
    emission and absorption sides weighted as for a source in thermal
    equilibrium at electron temperature T_e.  T_e = 0 keeps only the
    omega > 0 side (doubled).
    """

    base: object
    temperature: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.temperature < 0.0:
            raise ValidationError("detailed-balance temperature must be >= 0")
        if isinstance(self.base, (DetailedBalanceNoise, LineNoise)):
            raise ValidationError(
                "detailed-balance base must be a symmetric density model")
        if isinstance(self.base, LorentzianNoise) and self.base.center != 0.0:
            raise ValidationError(
                "detailed-balance base lorentzian must be centered at 0")


@dataclass(frozen=True)
class TabulatedNoise:
    """Sampled spectrum, linearly interpolated, zero outside the table."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if om.ndim != 1 or om.size < 2 or om.shape != vals.shape:
            raise ValidationError("tabulated spectrum needs matching 1-D arrays")
        if np.any(np.diff(om) <= 0.0):
            raise ValidationError("tabulated frequency grid must be increasing")
        if np.any(vals < 0.0):
            raise ValidationError("spectral density must be >= 0 everywhere")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "values", vals)


NOISE_MODELS = (FlatNoise, LineNoise, LorentzianNoise, DetailedBalanceNoise,
                TabulatedNoise)


def is_classical(model) -> bool:
    """True iff S(omega) = S(-omega) (even spectrum, real correlation)."""
    if isinstance(model, FlatNoise):
        return True
    if isinstance(model, LineNoise):
        return model.symmetric
    if isinstance(model, LorentzianNoise):
        return model.center == 0.0
    if isinstance(model, DetailedBalanceNoise):
        return False
    if isinstance(model, TabulatedNoise):
        lo, hi = model.omega[0], model.omega[-1]
        probe = np.linspace(0.0, max(abs(lo), abs(hi)), 257)
        return bool(np.allclose(spectral_density(model, probe),
                                spectral_density(model, -probe),
                                rtol=1e-12, atol=1e-300))
    raise ValidationError(f"unknown noise model {type(model).__name__}")


def spectral_density(model, omega):
    """S(omega) in A^2 s at the given angular frequencies.

    Line models are singular (delta spikes) and refuse pointwise
    sampling; their consumers use the analytic paths instead.
    """
    omega = np.asarray(omega, dtype=float)
    if isinstance(model, FlatNoise):
        return np.full(omega.shape, model.S0)
    if isinstance(model, LineNoise):
        raise ValidationError(
            "a line spectrum is a delta spike; sample its convolution, "
            "not its density")
    if isinstance(model, LorentzianNoise):
        return (2.0 * model.power * model.gamma
                / ((omega - model.center) ** 2 + model.gamma**2))
    if isinstance(model, DetailedBalanceNoise):
        base = spectral_density(model.base, omega)
        cst = model.constants
        if model.temperature == 0.0:
            factor = np.where(omega > 0.0, 2.0, 0.0)
            factor = np.where(omega == 0.0, 1.0, factor)
        else:
            x = cst.hbar * omega / (cst.k_B * model.temperature)
            factor = 2.0 / (1.0 + np.exp(-np.clip(x, -700.0, 700.0)))
        return base * factor
    if isinstance(model, TabulatedNoise):
        return np.interp(omega, model.omega, model.values, left=0.0, right=0.0)
    raise ValidationError(f"unknown noise model {type(model).__name__}")


def _support_halfwidth(model):
    """Frequency range that carries essentially all of the model's weight."""
    if isinstance(model, LorentzianNoise):
        return abs(model.center) + 2e4 * model.gamma
    if isinstance(model, DetailedBalanceNoise):
        return _support_halfwidth(model.base)
    if isinstance(model, TabulatedNoise):
        return float(max(abs(model.omega[0]), abs(model.omega[-1])))
    raise ValidationError(
        f"{type(model).__name__} has no numeric transform support")


def autocorrelation(model, tau):
    """C(tau) = (1/2pi) Int S e^{-i omega tau} domega, complex A^2.

    Closed forms where available; numeric transform for detailed-balance
    and tabulated models.  Flat spectra are delta-correlated and refuse
    this call.
    """
    tau = np.asarray(tau, dtype=float)
    if isinstance(model, FlatNoise):
        raise ValidationError(
            "flat spectrum has a delta autocorrelation; it is handled "
            "analytically, never sampled")
    if isinstance(model, LineNoise):
        if model.symmetric:
            return model.weight * np.cos(model.omega0 * tau) + 0.0j
        return model.weight * np.exp(-1j * model.omega0 * tau)
    if isinstance(model, LorentzianNoise):
        return model.power * np.exp(-1j * model.center * tau
                                    - model.gamma * np.abs(tau))
    if isinstance(model, (DetailedBalanceNoise, TabulatedNoise)):
        return _autocorrelation_numeric(model, tau)
    raise ValidationError(f"unknown noise model {type(model).__name__}")


def _finest_scale(model):
    """Narrowest spectral feature [rad/s] the numeric transform must resolve."""
    if isinstance(model, LorentzianNoise):
        return model.gamma
    if isinstance(model, DetailedBalanceNoise):
        cst = model.constants
        thermal = (cst.k_B * model.temperature / cst.hbar
                   if model.temperature > 0.0 else np.inf)
        return min(_finest_scale(model.base), thermal)
    if isinstance(model, TabulatedNoise):
        return float(np.diff(model.omega).min())
    return _support_halfwidth(model)


def _autocorrelation_numeric(model, tau, n_base=2048):
    half = _support_halfwidth(model)
    tau_flat = np.atleast_1d(tau).ravel()
    tau_max = float(np.abs(tau_flat).max()) if tau_flat.size else 0.0
    # resolve the spectral structure (narrow peaks, thermal steps) and
    # the fastest e^{-i omega tau} alike
    n_struct = 12.0 * half / _finest_scale(model)
    n = int(max(n_base,
                min(2**18, max(n_struct, 8 * half * tau_max / np.pi) + n_base)))
    om = np.linspace(-half, half, n)
    s = spectral_density(model, om)
    c = np.empty(tau_flat.size, dtype=complex)
    chunk = max(1, int(2.0e7 / n))  # keep the phase matrix under ~300 MB
    for i in range(0, tau_flat.size, chunk):
        phases = np.exp(-1j * np.outer(tau_flat[i:i + chunk], om))
        c[i:i + chunk] = np.trapezoid(phases * s, om, axis=-1) / (2.0 * np.pi)
    return c.reshape(np.shape(tau)) if np.ndim(tau) else complex(c[0])


# ---------------------------------------------------------------------------
# forward map

@dataclass(frozen=True)
class ScanResult:
    """One forward scan: probe grid, mean atom numbers, provenance.

    Omega      : rad/s, strictly increasing probe frequencies
    b_offs     : T, the offset fields realizing each Omega
    mean_atoms : dimensionless N(Omega), >= 0
    T          : s, measurement time
    regime     : "Full" or "LongTime"
    kernel_mode, n_det, mu : kernel provenance
    counts     : optional (n_Omega, shots) int array of simulated detections
    """

    Omega: np.ndarray
    b_offs: np.ndarray
    mean_atoms: np.ndarray
    T: float
    regime: str
    kernel_mode: str
    n_det: float
    mu: float
    warnings: tuple = ()
    counts: np.ndarray = None
    detection: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        om = np.asarray(self.Omega, dtype=float)
        if om.ndim != 1 or np.any(np.diff(om) <= 0.0):
            raise ValidationError("scan Omega grid must be 1-D strictly increasing")
        if np.any(np.asarray(self.mean_atoms) < 0.0):
            raise ValidationError("scan mean_atoms must be >= 0")


def transferred_atoms(model, kernel: ResponseKernel, T: float, Omega,
                      regime: str = "LongTime"):
    """Mean transferred-atom number N(Omega), dimensionless and >= 0.

    regime "Full": time-domain quadrature of T Int dtau e^{i Omega tau}
    C f D over [-T, T] (exact finite-T expression).  regime "LongTime":
    the kernel-limited convolution T Int S(omega) kernel_freq(Omega -
    omega) domega.  A negative result beyond rounding indicates a
    convention or grid bug and raises NumericalError.
    """
    if regime not in ("Full", "LongTime"):
        raise ValidationError(f"unknown regime {regime!r}")
    if not T > 0.0:
        raise ValidationError("measurement time T must be > 0")
    scalar = np.ndim(Omega) == 0
    Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
    if kernel.mu == 0.0 or kernel.n_det == 0.0:
        out = np.zeros(Omega.shape)
        return float(out[0]) if scalar else out

    if regime == "Full":
        vals = _atoms_full(model, kernel, T, Omega)
    else:
        vals = _atoms_long(model, kernel, T, Omega)

    scale = max(float(np.abs(vals).max()), T * kernel.n_det * 1e-300)
    if np.any(vals < -1e-8 * scale):
        raise NumericalError(
            f"negative transferred-atom number ({vals.min():.3e}) beyond "
            "tolerance: transform-convention or grid inconsistency")
    vals = np.maximum(vals, 0.0)
    return float(vals[0]) if scalar else vals


def _atoms_full(model, kernel, T, Omega, rtol=1e-9, max_doublings=6):
    """2 T Re Int_0^T e^{i Omega tau} C(tau) f(tau) D(tau) dtau, adaptively."""
    if isinstance(model, FlatNoise):
        # C = S0 delta(tau): the tau integral collapses at f(0) D(0)
        d0 = kernel_time(0.0, kernel)[0].real
        return np.full(Omega.shape, T * model.S0 * d0)

    # oscillation rate: probe + kernel bandwidth + model structure
    rate = float(np.abs(Omega).max()) + kernel.omega_scale
    if isinstance(model, LineNoise):
        rate += model.omega0
    elif isinstance(model, LorentzianNoise):
        rate += abs(model.center) + model.gamma
    elif isinstance(model, (DetailedBalanceNoise, TabulatedNoise)):
        rate += _support_halfwidth(model) / 20.0
    n_panels = int(np.ceil(T * rate / (2.0 * np.pi))) + 4

    prev = None
    for _ in range(max_doublings + 1):
        nodes, wts = _leggauss01(16)
        edges = np.linspace(0.0, T, n_panels + 1)
        tau = (edges[:-1, None] + np.diff(edges)[:, None] * nodes).ravel()
        wt = (np.diff(edges)[:, None] * wts).ravel()
        cfd = (autocorrelation(model, tau) * window_time(tau, T)
               * kernel_time(tau, kernel) * wt)
        cur = 2.0 * T * (np.exp(1j * np.outer(Omega, tau)) @ cfd).real
        if prev is not None:
            scale = max(np.abs(cur).max(), 1e-300)
            if np.abs(cur - prev).max() <= rtol * scale:
                return cur
        prev = cur
        n_panels *= 2
    raise NumericalError("transferred_atoms (Full) quadrature did not converge")


def _atoms_long(model, kernel, T, Omega):
    """T Int S(omega) kernel_freq(Omega - omega) domega on the t = sqrt(w) rule."""
    if isinstance(model, LineNoise):
        # delta lines: the convolution collapses onto kernel_freq samples
        if model.symmetric:
            return np.pi * T * model.weight * (
                kernel_freq(Omega - model.omega0, kernel, check_grid=False)
                + kernel_freq(Omega + model.omega0, kernel, check_grid=False))
        return 2.0 * np.pi * T * model.weight * kernel_freq(
            Omega - model.omega0, kernel, check_grid=False)

    scale = kernel.omega_scale

    def rule(n):
        t, gw = _leggauss01(n)
        w = t**2
        q = gw * 7.5 * t**2 * (1.0 - t**2)  # d_tilde(w) dw on the t axis
        ratio = (kernel.ratio_at(w) if kernel.mode == "Exact3D"
                 else np.ones_like(w))
        if isinstance(model, FlatNoise):
            s = np.full((Omega.size, w.size), model.S0)
        else:
            s = spectral_density(model, Omega[:, None] - scale * w)
        return kernel.n_det * T * (s @ (q * ratio))

    # structure finer than the kernel (narrow lorentzians, sharp tables)
    # needs more nodes across [0, mu/hbar]
    n = 64
    fine = scale
    if isinstance(model, LorentzianNoise):
        fine = model.gamma
    elif isinstance(model, DetailedBalanceNoise):
        if isinstance(model.base, LorentzianNoise):
            fine = model.base.gamma
    elif isinstance(model, TabulatedNoise):
        fine = float(np.diff(model.omega).min()) * 4.0
    if fine < scale:
        n = int(min(2048, max(64, 24.0 * scale / fine)))

    prev = rule(n)
    for _ in range(4):
        n2 = int(n * 1.7) + 1
        cur = rule(n2)
        ref = max(np.abs(cur).max(), 1e-300)
        if np.abs(cur - prev).max() <= 1e-7 * ref:
            return cur
        prev, n = cur, n2
    warnings.warn("long-time convolution only converged to "
                  f"{np.abs(cur - prev).max() / ref:.1e} relative",
                  QgalvWarning, stacklevel=3)
    return cur


def scan(model, kernel: ResponseKernel, T: float, Omega_grid,
         wire: NanowireConfig, constants: PhysicalConstants = None,
         regime: str = "LongTime", provenance: dict = None) -> ScanResult:
    """Element-wise forward map over a probe grid, with provenance.

    Warns (and records) when the grid leaves the rotating-frame validity
    range |Omega| << omega_cnt.
    """
    cst = constants if constants is not None else PhysicalConstants()
    Omega_grid = np.asarray(Omega_grid, dtype=float)
    notes = []
    if np.abs(Omega_grid).max() > 0.1 * wire.omega_cnt:
        msg = (f"probe grid reaches |Omega| = {np.abs(Omega_grid).max():.3g} "
               f"rad/s, not small against omega_cnt = {wire.omega_cnt:.3g}; "
               "rotating-frame treatment is marginal")
        warnings.warn(msg, QgalvWarning, stacklevel=2)
        notes.append(msg)
    atoms = transferred_atoms(model, kernel, T, Omega_grid, regime)
    b_offs = np.array([boffs_from_omega(wire, om, cst) for om in Omega_grid])
    return ScanResult(
        Omega=Omega_grid, b_offs=b_offs, mean_atoms=np.atleast_1d(atoms),
        T=T, regime=regime, kernel_mode=kernel.mode, n_det=kernel.n_det,
        mu=kernel.mu, warnings=tuple(notes),
        provenance=dict(provenance or {}))


def asymmetry(result: ScanResult):
    """N(Omega) - N(-Omega) on a grid symmetric about zero.

    Antisymmetric by construction.  Note the kernel itself is one-sided,
    so this is *not* zero for a generic symmetric (classical) spectrum:
    the classical expectation is the convolution of S with the odd part
    of the resolution kernel, and quantum asymmetry is whatever exceeds
    it (see tests for the frozen identity).  A flat spectrum gives an
    Omega-independent scan, hence exactly zero here.
    """
    om = result.Omega
    if not np.allclose(om + om[::-1], 0.0, atol=1e-9 * max(om.max(), 1e-300)):
        raise ValidationError("asymmetry needs a grid symmetric about Omega = 0")
    return result.mean_atoms - result.mean_atoms[::-1]


def sensitivity_estimate(kernel: ResponseKernel, T: float) -> float:
    """Rms current [A] giving one transferred atom in the long-time map.

    The long-time response to a broadband source of mean square current
    <I^2> is T (hbar/mu) n_det <I^2> x (spectral overlap <= 1); setting
    it to one atom gives sqrt(mu / (hbar T n_det)).
    """
    if not T > 0.0:
        raise ValidationError("measurement time T must be > 0")
    if kernel.n_det <= 0.0 or kernel.mu <= 0.0:
        raise ValidationError(
            "sensitivity is undefined for an empty-cloud kernel")
    return float(np.sqrt(kernel.mu / (kernel.hbar * T * kernel.n_det)))
