"""Physical constants and atomic species data.

Everything in this package is SI internally: lengths in m, times in s,
angular frequencies in rad/s, energies in J, magnetic fields in T,
currents in A.  Constants are CODATA 2018 values, compiled in so that
golden-number tests do not drift with the installed scipy version.
"""

from dataclasses import dataclass

from .errors import ValidationError

# CODATA 2018
HBAR = 1.054571817e-34          # J s (exact via h = 6.62607015e-34)
MU_B = 9.2740100783e-24         # J/T, Bohr magneton
MU_0 = 1.25663706212e-6         # T m / A, vacuum permeability
K_B = 1.380649e-23              # J/K (exact)
ATOMIC_MASS = 1.66053906660e-27  # kg

# Rb-87: mass from AME2020, s-wave scattering length 5.4 nm,
# Lande factor of the relevant hyperfine manifold -1/2.
RB87_MASS = 86.909180531 * ATOMIC_MASS  # kg
RB87_SCATTERING_LENGTH = 5.4e-9         # m
RB87_G_F = -0.5


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of fundamental constants plus species-specific atomic data.

    hbar : J s
    mu_B : J/T
    mu_0 : T m/A
    k_B  : J/K
    M    : kg, atomic mass
    a_s  : m, s-wave scattering length
    g_F  : Lande factor of the trapped hyperfine manifold
    """

    hbar: float = HBAR
    mu_B: float = MU_B
    mu_0: float = MU_0
    k_B: float = K_B
    M: float = RB87_MASS
    a_s: float = RB87_SCATTERING_LENGTH
    g_F: float = RB87_G_F

    def __post_init__(self):
        for name in ("hbar", "mu_B", "mu_0", "k_B", "M", "a_s"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"constants.{name} must be > 0")


RB87 = PhysicalConstants()
