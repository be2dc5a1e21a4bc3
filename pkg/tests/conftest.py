import numpy as np
import pytest

from qgalv import NanowireConfig, TrapConfig, build_kernel

# The workhorse scenario used across the suite: kHz-scale trap, micron
# geometry, 1e5 atoms.  Scalar goldens for this exact configuration are
# frozen in the individual test modules.


@pytest.fixture(scope="session")
def trap_ref() -> TrapConfig:
    return TrapConfig(omega_r=2 * np.pi * 500.0, omega_z=2 * np.pi * 109.0,
                      N=1e5, B_offs=3.5e-4)


@pytest.fixture(scope="session")
def wire_ref() -> NanowireConfig:
    return NanowireConfig(L=2e-6, y0=4e-6, a=10e-9,
                          omega_cnt=2 * np.pi * 50e6)


@pytest.fixture(scope="session")
def kernel_1d(trap_ref, wire_ref):
    return build_kernel(trap_ref, wire_ref, "Approx1D")


@pytest.fixture(scope="session")
def kernel_3d(trap_ref, wire_ref):
    return build_kernel(trap_ref, wire_ref, "Exact3D")
