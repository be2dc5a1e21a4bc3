"""Thomas-Fermi model of the trapped condensate.

The condensate sits in a cylindrically symmetric harmonic trap,
V_T(r) = (M/2) [omega_r^2 (x^2 + y^2) + omega_z^2 z^2],
and in the Thomas-Fermi limit its density is (mu - V_T)/g on the
ellipsoid V_T < mu and exactly zero outside.  The chemical potential
follows from normalizing that density to the atom number:

    mu = (N g (15/8pi) omega_r^2 omega_z)^(2/5) (M/2)^(3/5)

with g = 4 pi hbar^2 a_s / M.  The support is the ellipsoid with
semi-axes b = sqrt(2 mu / (M omega_r^2)) (radial, twice) and
c = sqrt(2 mu / (M omega_z^2)) (axial), so b/c = omega_z/omega_r.

N is treated as a real parameter: the normalization condition is
continuous in N and scans over fractional N are convenient.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import RB87, PhysicalConstants
from .errors import ValidationError


@dataclass(frozen=True)
class TrapConfig:
    """Harmonic trap, atom number and offset field.

    omega_r, omega_z : rad/s  (radial / axial trap frequency)
    N                : atom number (real-valued, >= 0)
    B_offs           : T, homogeneous offset field
    """

    omega_r: float
    omega_z: float
    N: float
    B_offs: float
    constants: PhysicalConstants = field(default_factory=lambda: RB87)

    def __post_init__(self):
        if not self.omega_r > 0.0:
            raise ValidationError("trap.omega_r must be > 0")
        if not self.omega_z > 0.0:
            raise ValidationError("trap.omega_z must be > 0")
        if not self.N >= 0.0:
            raise ValidationError("trap.N must be >= 0")
        if not self.B_offs > 0.0:
            raise ValidationError("trap.B_offs must be > 0")


@dataclass(frozen=True)
class CondensateTF:
    """Derived Thomas-Fermi quantities for one TrapConfig.

    mu       : J, chemical potential
    mu_prime : J, mu + (1/2) mu_B B_offs (transition energy offset)
    g        : J m^3, contact interaction constant
    b, c     : m, radial and axial semi-axes of the TF ellipsoid
    """

    mu: float
    mu_prime: float
    g: float
    b: float
    c: float


def interaction_g(constants: PhysicalConstants) -> float:
    """Contact interaction constant g = 4 pi hbar^2 a_s / M  [J m^3]."""
    return 4.0 * np.pi * constants.hbar**2 * constants.a_s / constants.M


def chemical_potential(trap: TrapConfig) -> CondensateTF:
    """Solve the TF normalization for mu and the ellipsoid semi-axes."""
    cst = trap.constants
    g = interaction_g(cst)
    mu = (trap.N * g * (15.0 / (8.0 * np.pi))
          * trap.omega_r**2 * trap.omega_z) ** 0.4 * (cst.M / 2.0) ** 0.6
    if trap.N == 0.0:
        mu = 0.0  # (...)**0.4 already gives 0.0, but make the limit explicit
    b = np.sqrt(2.0 * mu / (cst.M * trap.omega_r**2))
    c = np.sqrt(2.0 * mu / (cst.M * trap.omega_z**2))
    mu_prime = mu + 0.5 * cst.mu_B * trap.B_offs
    return CondensateTF(mu=mu, mu_prime=mu_prime, g=g, b=b, c=c)


def trap_potential(r, trap: TrapConfig):
    """V_T(r) in J.  `r` is a 3-vector in m, or an (..., 3) array."""
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    cst = trap.constants
    return 0.5 * cst.M * (trap.omega_r**2 * (x * x + y * y)
                          + trap.omega_z**2 * z * z)


def tf_density(r, cond: CondensateTF, trap: TrapConfig):
    """Atom density N |phi(r)|^2 in m^-3: (mu - V_T)/g inside, exactly 0 outside."""
    v = trap_potential(r, trap)
    dens = (cond.mu - v) / cond.g
    return np.where(v < cond.mu, dens, 0.0)
