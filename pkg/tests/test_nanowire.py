import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgalv import NanowireConfig, QgalvWarning, ValidationError, chemical_potential
from qgalv.nanowire import (boffs_from_omega, detuning, drive_prefactor,
                            driving_amplitude, omega_from_boffs, u_factor,
                            u_factor_grid, wire_frame_scaled)

# mpmath quad of the U integrand at 30 digits, L/y0 = 0.5 (the reference
# wire: L = 2 um over y0 = 4 um).
U_CENTER = -0.61505406268051742121
U_GENERIC = complex(-0.72877906507871141025, -0.15086399523777535881)


def test_u_center_golden():
    u = u_factor((0.0, 0.0, 0.0), 0.5)
    assert u.real == pytest.approx(U_CENTER, rel=1e-10)
    assert u.imag == 0.0  # integrand vanishes identically at x = 0


def test_u_generic_point_golden():
    u = u_factor((0.3, -0.2, 0.15), 0.5)
    assert u.real == pytest.approx(U_GENERIC.real, rel=1e-9)
    assert u.imag == pytest.approx(U_GENERIC.imag, rel=1e-9)


def test_grid_agrees_with_adaptive_quad():
    rng = np.random.default_rng(7)
    x = rng.uniform(-0.8, 0.8, 25)
    y = rng.uniform(-0.5, 1.0, 25)
    z = rng.uniform(-1.2, 1.2, 25)
    vals, rel = u_factor_grid(x, y, z, 0.5, rtol=1e-10)
    assert rel < 1e-10
    for k in range(x.size):
        ref = u_factor((x[k], y[k], z[k]), 0.5, rtol=1e-10)
        assert vals[k] == pytest.approx(ref, rel=1e-8, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(min_value=0.05, max_value=1.5),
       y=st.floats(min_value=-0.5, max_value=1.5),
       z=st.floats(min_value=-1.5, max_value=1.5),
       lt=st.floats(min_value=0.3, max_value=3.0))
def test_u_symmetries(x, y, z, lt):
    # Mirror in x conjugates U; mirror in z leaves it unchanged.  The
    # panel nodes are symmetric, so these hold to rounding, not just to
    # quadrature tolerance.
    xs = np.array([x, -x, x])
    ys = np.array([y, y, y])
    zs = np.array([z, z, -z])
    vals, _ = u_factor_grid(xs, ys, zs, lt, rtol=1e-9)
    scale = max(abs(vals[0]), 1e-12)
    assert abs(vals[1] - np.conj(vals[0])) <= 1e-10 * scale
    assert abs(vals[2] - vals[0]) <= 1e-10 * scale


def test_u_decays_away_from_wire():
    # Pulling the evaluation point away from the wire along +y must
    # monotonically weaken the coupling.
    y = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
    vals, _ = u_factor_grid(np.zeros_like(y), y, np.zeros_like(y), 0.5)
    mags = np.abs(vals)
    assert np.all(np.diff(mags) < 0.0)
    assert mags[-1] < 1e-2 * mags[0]


def test_on_axis_point_rejected():
    with pytest.raises(ValidationError):
        u_factor((0.0, -1.0, 0.3), 0.5)
    with pytest.raises(ValidationError):
        u_factor_grid([0.2, 0.0], [0.0, -1.0], [0.0, 0.0], 0.5)


@pytest.mark.parametrize("kw", [
    dict(L=0.0), dict(L=-1e-6), dict(y0=0.0), dict(a=0.0),
    dict(omega_cnt=0.0), dict(a=5e-6),  # a >= y0
])
def test_wire_config_rejects(kw):
    base = dict(L=2e-6, y0=4e-6, a=10e-9, omega_cnt=2 * np.pi * 50e6)
    base.update(kw)
    with pytest.raises(ValidationError):
        NanowireConfig(**base)


def test_wire_config_warns_on_soft_limits():
    with pytest.warns(QgalvWarning, match="not << 1"):
        NanowireConfig(L=2e-6, y0=4e-6, a=0.5e-6, omega_cnt=2 * np.pi * 50e6)
    with pytest.warns(QgalvWarning, match="safety bound"):
        NanowireConfig(L=2e-6, y0=0.5e-6, a=1e-9, omega_cnt=2 * np.pi * 50e6)


def test_drive_prefactor_golden(trap_ref, wire_ref):
    # mu_0 mu_B a / (16 pi sqrt(2) hbar y0^2) for the reference wire.
    assert drive_prefactor(wire_ref, trap_ref.constants) == pytest.approx(
        971619.9671361761, rel=1e-12)


def test_driving_amplitude_center_and_outside(trap_ref, wire_ref):
    cond = chemical_potential(trap_ref)
    eta0 = driving_amplitude(np.zeros(3), wire_ref, cond, trap_ref)
    # i * sqrt(n0) * prefactor * U(0): U(0) is real negative, so eta0 is
    # purely imaginary with negative imaginary part.
    assert eta0.real == 0.0
    assert eta0.imag == pytest.approx(-1.7358583944977204e+16, rel=1e-9)
    far = np.array([0.0, 0.0, 2.0 * cond.c])
    assert driving_amplitude(far, wire_ref, cond, trap_ref) == 0.0 + 0.0j


def test_wire_frame_offset():
    cfg = NanowireConfig(L=2e-6, y0=4e-6, a=10e-9, omega_cnt=2 * np.pi * 50e6,
                         z_offset=1e-6)
    x, y, z = wire_frame_scaled(np.array([4e-6, -2e-6, 3e-6]), cfg)
    assert (x, y, z) == pytest.approx((1.0, -0.5, 0.5), rel=1e-12)


def test_detuning_is_rabi_minus_potential(trap_ref):
    Omega = 5e4
    assert detuning(np.zeros(3), Omega, trap_ref) == Omega
    r = np.array([1e-6, 0.0, 2e-6])
    v = 0.5 * trap_ref.constants.M * (trap_ref.omega_r**2 * 1e-12
                                      + trap_ref.omega_z**2 * 4e-12)
    expect = Omega - v / trap_ref.constants.hbar
    assert detuning(r, Omega, trap_ref) == pytest.approx(expect, rel=1e-12)


def test_omega_boffs_roundtrip(trap_ref, wire_ref):
    Om = omega_from_boffs(wire_ref, 3.5e-4, trap_ref.constants)
    assert Om == pytest.approx(298769590.2553965, rel=1e-12)
    back = boffs_from_omega(wire_ref, Om, trap_ref.constants)
    assert back == pytest.approx(3.5e-4, rel=1e-10)
    with pytest.raises(ValidationError):
        boffs_from_omega(wire_ref, wire_ref.omega_cnt + 1.0,
                         trap_ref.constants)
    with pytest.warns(QgalvWarning, match="tuning range"):
        omega_from_boffs(wire_ref, 1e-9, trap_ref.constants)
