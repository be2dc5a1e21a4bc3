"""Scenario configuration: one text file describing one reproducible run.

Unit bugs are the dominant failure mode for this kind of physics, so the
format is deliberately rigid: every physical quantity carries an explicit
unit suffix (``wire.distance = 4 um``), dimensionless quantities carry
none, and unknown keys are rejected outright.  Frequencies given in the
Hz family are cyclic and converted to angular (multiplied by 2*pi) at
load; ``rad/s`` is taken literally.  Scan and model frequencies may also
use the unit token ``mu``, meaning multiples of the chemical potential
over hbar; those are kept symbolic until a condensate has been built and
the scale is known.  Spectral densities accept only ``A^2*s`` (density
per unit angular frequency) to keep the factor-2*pi trap out of config
files entirely.

A parsed scenario re-serializes to a canonical text (fixed key order,
shortest round-trip floats, original unit tokens).  Output files embed
that canonical block in their headers, and re-running a command from the
embedded block reproduces the file byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .condensate import TrapConfig
from .constants import RB87
from .counting import DetectionConfig
from .errors import ValidationError
from .nanowire import NanowireConfig
from .oracle import BandLimitedWhite, OrnsteinUhlenbeck, SinusoidRandomPhase
from .spectra import (DetailedBalanceNoise, FlatNoise, LineNoise,
                      LorentzianNoise)

__all__ = ["Quantity", "ScenarioConfig", "parse_scenario", "resolve_frequency"]

_TWO_PI = 2.0 * math.pi

# Unit tables per dimension; values are factors to SI.  Frequencies are
# special-cased below because of the cyclic-vs-angular distinction and
# the symbolic `mu` token.
_UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "nT": 1e-9, "G": 1e-4},
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6, "nA": 1e-9, "pA": 1e-12},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6, "nK": 1e-9},
    "noise_density": {"A^2*s": 1.0},
    "line_weight": {"A^2": 1.0},
}

_CYCLIC = {"Hz": _TWO_PI, "kHz": _TWO_PI * 1e3, "MHz": _TWO_PI * 1e6,
           "GHz": _TWO_PI * 1e9}


@dataclass(frozen=True)
class Quantity:
    """A parsed physical value: SI number, or symbolic in `mu` units.

    `raw` keeps the number exactly as written (in the written unit) so
    canonical re-serialization does not pick up round-trip noise from
    the unit conversion.
    """

    value: float
    unit: str
    raw: float

    @property
    def symbolic(self) -> bool:
        return self.unit == "mu"


def resolve_frequency(q: Quantity, mu_over_hbar: float) -> float:
    """Turn a parsed frequency into rad/s, resolving `mu` units."""
    if q.symbolic:
        return q.value * mu_over_hbar
    return q.value


# Schema: key -> (kind, help).  Kinds: the physical dimensions above,
# plus frequency (mu allowed), frequency_fixed (mu rejected — needed to
# *define* the condensate), float, int, bool, and choice:a|b|c.
_SCHEMA: dict[str, tuple[str, str]] = {
    "trap.omega_r": ("frequency_fixed", "radial trap frequency"),
    "trap.omega_z": ("frequency_fixed", "axial trap frequency"),
    "trap.n_atoms": ("float", "condensate atom number"),
    "trap.b_offs": ("field", "homogeneous offset field"),
    "wire.length": ("length", "nanowire length"),
    "wire.distance": ("length", "wire-to-trap-center distance"),
    "wire.amplitude": ("length", "wire vibration amplitude"),
    "wire.omega_cnt": ("frequency_fixed", "wire mechanical frequency"),
    "wire.z_offset": ("length", "wire midpoint offset along the trap axis"),
    "kernel.mode": ("choice:Approx1D|Exact3D", "kernel evaluation mode"),
    "kernel.shell_nodes": ("int", "radial shells for the Exact3D build"),
    "kernel.freeze_u": ("bool", "freeze the geometry factor to its center value"),
    "scan.t": ("time", "interrogation time"),
    "scan.regime": ("choice:LongTime|Full", "forward-map regime"),
    "scan.omega_min": ("frequency", "lowest scan detuning"),
    "scan.omega_max": ("frequency", "highest scan detuning"),
    "scan.n_points": ("int", "number of scan points"),
    "model.kind": ("choice:flat|line|lorentzian|detailed_balance",
                   "noise-spectrum model"),
    "model.s0": ("noise_density", "flat spectral density"),
    "model.omega0": ("frequency", "line frequency"),
    "model.weight": ("line_weight", "integrated line weight"),
    "model.symmetric": ("bool", "two-sided (classical) line"),
    "model.center": ("frequency", "Lorentzian center"),
    "model.gamma": ("frequency", "Lorentzian half width"),
    "model.power": ("line_weight", "Lorentzian integrated power"),
    "model.temperature": ("temperature", "detailed-balance temperature"),
    "detection.efficiency": ("float", "detection efficiency"),
    "detection.shots": ("int", "repetitions per scan point"),
    "detection.seed": ("int", "count-simulation seed"),
    "oracle.process": ("choice:sinusoid|ou|bandlimited", "stochastic current process"),
    "oracle.i0": ("current", "sinusoid amplitude"),
    "oracle.omega0": ("frequency", "sinusoid frequency"),
    "oracle.rms": ("current", "OU stationary rms current"),
    "oracle.tau_c": ("time", "OU correlation time"),
    "oracle.density": ("noise_density", "band-limited white density"),
    "oracle.cutoff": ("frequency", "band-limited white cutoff"),
    "oracle.n_traj": ("int", "trajectory count"),
    "oracle.dt": ("time", "trajectory time step"),
    "oracle.seed": ("int", "trajectory seed"),
    "oracle.z_max": ("float", "pass/fail z-score threshold"),
    "invert.omega_min": ("frequency", "lowest spectral bin center"),
    "invert.omega_max": ("frequency", "highest spectral bin center"),
    "invert.n_bins": ("int", "number of spectral bins"),
    "invert.regime": ("choice:LongTime|Full", "matrix regime"),
    "invert.lam": ("float", "regularization strength (dimensionless)"),
    "invert.auto_lambda": ("bool", "choose lam by the discrepancy principle"),
    "invert.nonneg": ("bool", "constrain the spectrum to be non-negative"),
    "invert.regularizer": ("choice:identity|second_difference", "penalty operator"),
    "invert.sigma_floor": ("float", "relative error floor for noiseless data"),
    "seed": ("int", "master seed"),
    "output.stem": ("string", "basename stem for output files"),
}

_FREQ_KINDS = ("frequency", "frequency_fixed")


def _parse_number(token: str, key: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValidationError(
            f"config line {lineno}: {key}: expected a number, got {token!r}"
        ) from None


def _parse_value(key: str, rhs: str, lineno: int):
    kind = _SCHEMA[key][0]
    tokens = rhs.split()
    where = f"config line {lineno}: {key}"
    if kind in _UNITS or kind in _FREQ_KINDS:
        if len(tokens) != 2:
            raise ValidationError(
                f"{where}: expected 'value unit' (physical quantity), got {rhs!r}"
            )
        value = _parse_number(tokens[0], key, lineno)
        unit = tokens[1]
        if kind in _FREQ_KINDS:
            if unit in _CYCLIC:
                return Quantity(value * _CYCLIC[unit], unit, value)
            if unit == "rad/s":
                return Quantity(value, unit, value)
            if unit == "mu":
                if kind == "frequency_fixed":
                    raise ValidationError(
                        f"{where}: `mu` units are circular here — this key helps "
                        "define the chemical potential"
                    )
                return Quantity(value, "mu", value)
            raise ValidationError(
                f"{where}: unknown frequency unit {unit!r} "
                f"(use {', '.join(_CYCLIC)}, rad/s, or mu)"
            )
        table = _UNITS[kind]
        if unit not in table:
            raise ValidationError(
                f"{where}: unknown {kind} unit {unit!r} (use {', '.join(table)})"
            )
        return Quantity(value * table[unit], unit, value)
    if len(tokens) != 1:
        raise ValidationError(
            f"{where}: dimensionless value must be a single token, got {rhs!r}"
        )
    token = tokens[0]
    if kind == "float":
        return _parse_number(token, key, lineno)
    if kind == "int":
        value = _parse_number(token, key, lineno)
        if value != int(value):
            raise ValidationError(f"{where}: expected an integer, got {token!r}")
        return int(value)
    if kind == "bool":
        if token not in ("true", "false"):
            raise ValidationError(f"{where}: expected true or false, got {token!r}")
        return token == "true"
    if kind == "string":
        return token
    choices = kind.split(":", 1)[1].split("|")
    if token not in choices:
        raise ValidationError(
            f"{where}: expected one of {', '.join(choices)}, got {token!r}"
        )
    return token


def _format_value(key: str, value) -> str:
    if isinstance(value, Quantity):
        return f"{value.raw!r} {value.unit}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, str)):
        return str(value)
    return repr(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario: validated entries plus typed section builders."""

    entries: dict = field(default_factory=dict)

    # -- section presence ------------------------------------------------
    def has(self, key: str) -> bool:
        return key in self.entries

    def get(self, key: str, default=None):
        return self.entries.get(key, default)

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if k not in self.entries]
        if missing:
            raise ValidationError(
                "config is missing required keys: " + ", ".join(missing)
            )

    # -- typed builders (module preconditions fire inside the constructors)
    def trap(self) -> TrapConfig:
        self.require("trap.omega_r", "trap.omega_z", "trap.n_atoms", "trap.b_offs")
        return TrapConfig(
            omega_r=self.entries["trap.omega_r"].value,
            omega_z=self.entries["trap.omega_z"].value,
            N=self.entries["trap.n_atoms"],
            B_offs=self.entries["trap.b_offs"].value,
        )

    def wire(self) -> NanowireConfig:
        self.require("wire.length", "wire.distance", "wire.amplitude",
                     "wire.omega_cnt")
        z_off = self.entries.get("wire.z_offset")
        return NanowireConfig(
            L=self.entries["wire.length"].value,
            y0=self.entries["wire.distance"].value,
            a=self.entries["wire.amplitude"].value,
            omega_cnt=self.entries["wire.omega_cnt"].value,
            z_offset=z_off.value if z_off is not None else 0.0,
        )

    def kernel_options(self) -> dict:
        opts: dict = {"mode": self.entries.get("kernel.mode", "Approx1D")}
        if "kernel.shell_nodes" in self.entries:
            n = self.entries["kernel.shell_nodes"]
            if n < 3:
                raise ValidationError(f"kernel.shell_nodes must be >= 3, got {n}")
            opts["n_shell_nodes"] = n
        if self.entries.get("kernel.freeze_u", False):
            opts["freeze_u_to_center"] = True
        return opts

    def interrogation_time(self) -> float:
        self.require("scan.t")
        t = self.entries["scan.t"].value
        if t <= 0:
            raise ValidationError(f"scan.t must be positive, got {t}")
        return t

    def scan_grid(self, mu_over_hbar: float):
        self.require("scan.omega_min", "scan.omega_max", "scan.n_points")
        import numpy as np
        lo = resolve_frequency(self.entries["scan.omega_min"], mu_over_hbar)
        hi = resolve_frequency(self.entries["scan.omega_max"], mu_over_hbar)
        n = self.entries["scan.n_points"]
        if n < 2:
            raise ValidationError(f"scan.n_points must be >= 2, got {n}")
        if hi <= lo:
            raise ValidationError("scan.omega_max must exceed scan.omega_min")
        return np.linspace(lo, hi, n)

    def regime(self) -> str:
        return self.entries.get("scan.regime", "LongTime")

    def model(self, mu_over_hbar: float):
        self.require("model.kind")
        kind = self.entries["model.kind"]
        freq = lambda key: resolve_frequency(self.entries[key], mu_over_hbar)
        if kind == "flat":
            self.require("model.s0")
            return FlatNoise(S0=self.entries["model.s0"].value)
        if kind == "line":
            self.require("model.omega0", "model.weight")
            return LineNoise(
                omega0=freq("model.omega0"),
                weight=self.entries["model.weight"].value,
                symmetric=self.entries.get("model.symmetric", True),
            )
        if kind == "lorentzian":
            self.require("model.center", "model.gamma", "model.power")
            return LorentzianNoise(
                center=freq("model.center"), gamma=freq("model.gamma"),
                power=self.entries["model.power"].value,
            )
        self.require("model.center", "model.gamma", "model.power",
                     "model.temperature")
        base = LorentzianNoise(
            center=freq("model.center"), gamma=freq("model.gamma"),
            power=self.entries["model.power"].value,
        )
        return DetailedBalanceNoise(
            base=base, temperature=self.entries["model.temperature"].value,
            constants=RB87,
        )

    def detection(self) -> DetectionConfig | None:
        if "detection.shots" not in self.entries:
            return None
        return DetectionConfig(
            efficiency=self.entries.get("detection.efficiency", 1.0),
            shots=self.entries["detection.shots"],
            seed=self.entries.get("detection.seed",
                                  self.entries.get("seed", 0)),
        )

    def oracle_process(self, mu_over_hbar: float):
        self.require("oracle.process")
        kind = self.entries["oracle.process"]
        seed = self.entries.get("oracle.seed", self.entries.get("seed", 0))
        if kind == "sinusoid":
            self.require("oracle.i0", "oracle.omega0")
            return SinusoidRandomPhase(
                I0=self.entries["oracle.i0"].value,
                omega0=resolve_frequency(self.entries["oracle.omega0"],
                                         mu_over_hbar),
                seed=seed,
            )
        if kind == "ou":
            self.require("oracle.rms", "oracle.tau_c")
            return OrnsteinUhlenbeck(
                rms=self.entries["oracle.rms"].value,
                tau_c=self.entries["oracle.tau_c"].value, seed=seed,
            )
        self.require("oracle.density", "oracle.cutoff")
        return BandLimitedWhite(
            density=self.entries["oracle.density"].value,
            cutoff=resolve_frequency(self.entries["oracle.cutoff"],
                                     mu_over_hbar),
            seed=seed,
        )

    def oracle_options(self) -> dict:
        self.require("oracle.n_traj", "oracle.dt")
        n_traj = self.entries["oracle.n_traj"]
        dt = self.entries["oracle.dt"].value
        z_max = self.entries.get("oracle.z_max", 3.0)
        if n_traj < 2:
            raise ValidationError(f"oracle.n_traj must be >= 2, got {n_traj}")
        if dt <= 0:
            raise ValidationError(f"oracle.dt must be positive, got {dt}")
        if z_max <= 0:
            raise ValidationError(f"oracle.z_max must be positive, got {z_max}")
        return {"n_traj": n_traj, "dt": dt, "z_max": z_max}

    def invert_options(self, mu_over_hbar: float) -> dict:
        self.require("invert.omega_min", "invert.omega_max", "invert.n_bins")
        import numpy as np
        lo = resolve_frequency(self.entries["invert.omega_min"], mu_over_hbar)
        hi = resolve_frequency(self.entries["invert.omega_max"], mu_over_hbar)
        n = self.entries["invert.n_bins"]
        if n < 2:
            raise ValidationError(f"invert.n_bins must be >= 2, got {n}")
        if hi <= lo:
            raise ValidationError("invert.omega_max must exceed invert.omega_min")
        lam = self.entries.get("invert.lam", 1e-3)
        if lam < 0:
            raise ValidationError(f"invert.lam must be >= 0, got {lam}")
        sigma_floor = self.entries.get("invert.sigma_floor", 1e-6)
        if sigma_floor <= 0:
            raise ValidationError(
                f"invert.sigma_floor must be positive, got {sigma_floor}"
            )
        return {
            "omega": np.linspace(lo, hi, n),
            "regime": self.entries.get("invert.regime", "LongTime"),
            "lam": lam,
            "auto_lambda": self.entries.get("invert.auto_lambda", True),
            "nonneg": self.entries.get("invert.nonneg", False),
            "regularizer": self.entries.get("invert.regularizer", "identity"),
            "sigma_floor": sigma_floor,
        }

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """New scenario with dotted keys replaced (used for CLI --seed)."""
        entries = dict(self.entries)
        for key, value in overrides.items():
            if key not in _SCHEMA:
                raise ValidationError(f"unknown config key {key!r}")
            entries[key] = value
        return ScenarioConfig(_ordered(entries))

    def canonical(self) -> str:
        """Schema-ordered, round-trip-exact text form of this scenario."""
        lines = [f"{key} = {_format_value(key, value)}"
                 for key, value in self.entries.items()]
        return "\n".join(lines) + "\n"


def _ordered(entries: dict) -> dict:
    return {key: entries[key] for key in _SCHEMA if key in entries}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario file; raises ValidationError with the
    offending line and key on any problem."""

    entries: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(
                f"config line {lineno}: expected 'key = value', got {raw!r}"
            )
        key, rhs = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        if not rhs:
            raise ValidationError(f"config line {lineno}: {key}: empty value")
        entries[key] = _parse_value(key, rhs, lineno)

    config = ScenarioConfig(_ordered(entries))
    # Fire the heavyweight validations eagerly: a config that names a
    # section must satisfy that section's module preconditions at load.
    if any(key.startswith("trap.") for key in entries):
        config.trap()
    if any(key.startswith("wire.") for key in entries):
        config.wire()
    if any(key.startswith("detection.") for key in entries):
        config.detection()
    if any(key.startswith("kernel.") for key in entries):
        config.kernel_options()
    return config
