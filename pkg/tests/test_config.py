import math

import numpy as np
import pytest

from qgalv import ValidationError
from qgalv.config import (Quantity, parse_scenario, resolve_frequency)
from qgalv.oracle import (BandLimitedWhite, OrnsteinUhlenbeck,
                          SinusoidRandomPhase)
from qgalv.spectra import (DetailedBalanceNoise, FlatNoise, LineNoise,
                           LorentzianNoise)

TWO_PI = 2.0 * math.pi

FULL = """\
# reference scenario used across the test suite
seed = 7

trap.omega_r = 500 Hz
trap.omega_z = 109 Hz
trap.n_atoms = 1e5
trap.b_offs = 3.5 G

wire.length = 2 um
wire.distance = 4 um
wire.amplitude = 10 nm
wire.omega_cnt = 50 MHz

kernel.mode = Approx1D

scan.t = 100 ms
scan.regime = LongTime
scan.omega_min = -0.5 mu
scan.omega_max = 1.5 mu
scan.n_points = 41

model.kind = lorentzian
model.center = 0.3 mu
model.gamma = 0.25 mu
model.power = 4e-12 A^2

detection.efficiency = 0.8
detection.shots = 16
"""


def entry(text, key):
    return parse_scenario(text).entries[key]


# ------------------------------------------------------------------ units

def test_cyclic_frequencies_become_angular():
    cfg = parse_scenario(FULL)
    q = cfg.entries["trap.omega_r"]
    assert q.value == TWO_PI * 500.0
    assert q.unit == "Hz" and q.raw == 500.0
    assert cfg.entries["wire.omega_cnt"].value == TWO_PI * 50e6


def test_rad_per_s_taken_literally():
    q = entry("scan.omega_min = 250 rad/s\n", "scan.omega_min")
    assert q.value == 250.0 and not q.symbolic


def test_mu_units_stay_symbolic_until_resolved():
    q = entry("scan.omega_max = 1.5 mu\n", "scan.omega_max")
    assert q.symbolic and q.value == 1.5
    assert resolve_frequency(q, 41838.0) == 1.5 * 41838.0
    plain = Quantity(300.0, "rad/s", 300.0)
    assert resolve_frequency(plain, 41838.0) == 300.0


def test_mu_rejected_where_it_would_be_circular():
    with pytest.raises(ValidationError, match="circular"):
        parse_scenario("trap.omega_r = 1 mu\n")


@pytest.mark.parametrize("line,key,si", [
    ("scan.t = 4.8 ms", "scan.t", 0.0048),
    ("oracle.tau_c = 20 us", "oracle.tau_c", 2e-5),
    ("oracle.rms = 5 nA", "oracle.rms", 5e-9),
    ("model.temperature = 80 nK", "model.temperature", 8e-8),
    ("model.s0 = 1e-12 A^2*s", "model.s0", 1e-12),
    ("model.power = 4e-12 A^2", "model.power", 4e-12),
])
def test_si_conversions(line, key, si):
    assert entry(line + "\n", key).value == pytest.approx(si, rel=1e-15)


def test_si_conversions_in_sections():
    # trap./wire. keys are section-validated at load, so convert them
    # inside a complete scenario
    cfg = parse_scenario(FULL)
    assert cfg.entries["wire.distance"].value == pytest.approx(4e-6, rel=1e-15)
    assert cfg.entries["wire.amplitude"].value == pytest.approx(1e-8, rel=1e-15)
    assert cfg.entries["trap.b_offs"].value == pytest.approx(3.5e-4, rel=1e-15)
    mt = parse_scenario(FULL.replace("trap.b_offs = 3.5 G",
                                     "trap.b_offs = 0.35 mT"))
    assert mt.entries["trap.b_offs"].value == pytest.approx(3.5e-4, rel=1e-15)


# ------------------------------------------------------------- rejections

@pytest.mark.parametrize("bad,msg", [
    ("trap.radius = 1 um", "unknown key"),
    ("seed = 1\nseed = 2", "duplicate"),
    ("just some words", "key = value"),
    ("scan.t =", "empty value"),
    ("scan.t = 0.1", "value unit"),
    ("scan.t = 0.1 fortnight", "unknown time unit"),
    ("wire.length = 4 Hz", "unknown length unit"),
    ("scan.omega_min = 1 THz", "unknown frequency unit"),
    ("scan.t = fast s", "expected a number"),
    ("scan.n_points = 2.5", "expected an integer"),
    ("invert.nonneg = yes", "expected true or false"),
    ("scan.regime = Sideways", "expected one of"),
    ("trap.n_atoms = 1e5 atoms", "single token"),
])
def test_parse_rejections(bad, msg):
    with pytest.raises(ValidationError, match=msg):
        parse_scenario(bad + "\n")


def test_section_preconditions_fire_at_load():
    # a wire thicker than its standoff is rejected when the file is
    # parsed, not when the simulation later touches the wire section
    text = ("wire.length = 2 um\nwire.distance = 4 um\n"
            "wire.amplitude = 5 um\nwire.omega_cnt = 50 MHz\n")
    with pytest.raises(ValidationError):
        parse_scenario(text)
    with pytest.raises(ValidationError):
        parse_scenario(FULL.replace("trap.n_atoms = 1e5", "trap.n_atoms = -3"))


def test_error_messages_carry_line_numbers():
    with pytest.raises(ValidationError, match="line 3"):
        parse_scenario("seed = 1\n\nscan.t = 0.1\n")


# -------------------------------------------------------------- canonical

def test_canonical_is_a_fixed_point():
    canon = parse_scenario(FULL).canonical()
    assert parse_scenario(canon).canonical() == canon


def test_canonical_preserves_written_units_and_digits():
    canon = parse_scenario(FULL).canonical()
    assert "trap.b_offs = 3.5 G" in canon
    assert "wire.amplitude = 10.0 nm" in canon
    assert "model.center = 0.3 mu" in canon
    assert "scan.t = 100.0 ms" in canon


def test_canonical_orders_by_schema_not_input():
    shuffled = "seed = 3\nscan.t = 1 s\nkernel.mode = Approx1D\n"
    canon = parse_scenario(shuffled).canonical()
    assert canon.index("kernel.mode") < canon.index("scan.t")
    assert canon.splitlines()[-1] == "seed = 3"  # seed sits at the tail


def test_comments_and_blank_lines_ignored():
    assert parse_scenario("# only a comment\n\n").entries == {}


# --------------------------------------------------------------- builders

def test_typed_builders():
    cfg = parse_scenario(FULL)
    trap = cfg.trap()
    assert trap.N == 1e5 and trap.B_offs == pytest.approx(3.5e-4)
    wire = cfg.wire()
    assert wire.L == 2e-6 and wire.y0 == 4e-6 and wire.z_offset == 0.0
    assert cfg.kernel_options() == {"mode": "Approx1D"}
    assert cfg.interrogation_time() == pytest.approx(0.1)
    assert cfg.regime() == "LongTime"
    grid = cfg.scan_grid(mu_over_hbar=40000.0)
    assert grid.size == 41
    assert grid[0] == pytest.approx(-20000.0) and grid[-1] == pytest.approx(60000.0)
    model = cfg.model(mu_over_hbar=40000.0)
    assert isinstance(model, LorentzianNoise)
    assert model.center == pytest.approx(12000.0)
    det = cfg.detection()
    assert det.efficiency == 0.8 and det.shots == 16 and det.seed == 7


def test_kernel_options_variants():
    cfg = parse_scenario("kernel.mode = Exact3D\nkernel.shell_nodes = 48\n"
                         "kernel.freeze_u = true\n")
    assert cfg.kernel_options() == {"mode": "Exact3D", "n_shell_nodes": 48,
                                    "freeze_u_to_center": True}
    with pytest.raises(ValidationError, match="shell_nodes"):
        parse_scenario("kernel.shell_nodes = 2\n")


def test_model_kinds():
    flat = parse_scenario("model.kind = flat\nmodel.s0 = 2e-12 A^2*s\n")
    m = flat.model(1.0)
    assert isinstance(m, FlatNoise) and m.S0 == 2e-12

    line = parse_scenario("model.kind = line\nmodel.omega0 = 0.5 mu\n"
                          "model.weight = 1e-12 A^2\nmodel.symmetric = false\n")
    ml = line.model(30000.0)
    assert isinstance(ml, LineNoise)
    assert ml.omega0 == 15000.0 and not ml.symmetric

    db = parse_scenario("model.kind = detailed_balance\nmodel.center = 0 rad/s\n"
                        "model.gamma = 0.5 mu\nmodel.power = 1e-12 A^2\n"
                        "model.temperature = 80 nK\n")
    mdb = db.model(40000.0)
    assert isinstance(mdb, DetailedBalanceNoise)
    assert mdb.base.gamma == 20000.0 and mdb.temperature == pytest.approx(8e-8)

    with pytest.raises(ValidationError, match="missing required"):
        parse_scenario("model.kind = flat\n").model(1.0)


def test_detection_absent_and_seed_fallback():
    assert parse_scenario("seed = 3\n").detection() is None
    cfg = parse_scenario("detection.shots = 4\n")
    det = cfg.detection()
    assert det.efficiency == 1.0 and det.seed == 0
    explicit = parse_scenario("seed = 5\ndetection.shots = 4\n"
                              "detection.seed = 9\n").detection()
    assert explicit.seed == 9


def test_oracle_builders():
    sin = parse_scenario("seed = 4\noracle.process = sinusoid\n"
                         "oracle.i0 = 10 nA\noracle.omega0 = 0.8 mu\n")
    p = sin.oracle_process(50000.0)
    assert isinstance(p, SinusoidRandomPhase)
    assert p.I0 == 1e-8 and p.omega0 == 40000.0 and p.seed == 4

    ou = parse_scenario("oracle.process = ou\noracle.rms = 5 nA\n"
                        "oracle.tau_c = 100 us\noracle.seed = 12\n")
    q = ou.oracle_process(1.0)
    assert isinstance(q, OrnsteinUhlenbeck)
    assert q.rms == 5e-9 and q.tau_c == pytest.approx(1e-4) and q.seed == 12

    blw = parse_scenario("oracle.process = bandlimited\n"
                         "oracle.density = 1e-12 A^2*s\n"
                         "oracle.cutoff = 2 mu\n")
    r = blw.oracle_process(30000.0)
    assert isinstance(r, BandLimitedWhite)
    assert r.cutoff == 60000.0

    opts = parse_scenario("oracle.n_traj = 100\noracle.dt = 1 us\n"
                          "oracle.z_max = 4\n").oracle_options()
    assert opts == {"n_traj": 100, "dt": 1e-6, "z_max": 4.0}
    with pytest.raises(ValidationError, match="n_traj"):
        parse_scenario("oracle.n_traj = 1\noracle.dt = 1 us\n").oracle_options()


def test_invert_options():
    cfg = parse_scenario("invert.omega_min = -1.7 mu\ninvert.omega_max = 1.7 mu\n"
                         "invert.n_bins = 69\ninvert.nonneg = true\n")
    opts = cfg.invert_options(40000.0)
    assert opts["omega"].size == 69
    assert opts["omega"][0] == pytest.approx(-68000.0)
    assert opts["nonneg"] is True
    assert opts["auto_lambda"] is True and opts["regularizer"] == "identity"
    bad = parse_scenario("invert.omega_min = 1 mu\ninvert.omega_max = -1 mu\n"
                         "invert.n_bins = 5\n")
    with pytest.raises(ValidationError, match="omega_max"):
        bad.invert_options(1.0)
    neg = parse_scenario("invert.omega_min = -1 mu\ninvert.omega_max = 1 mu\n"
                         "invert.n_bins = 5\ninvert.lam = -1\n")
    with pytest.raises(ValidationError, match="lam"):
        neg.invert_options(1.0)


def test_with_overrides():
    cfg = parse_scenario(FULL)
    bumped = cfg.with_overrides(**{"detection.seed": 99})
    assert bumped.detection().seed == 99
    assert cfg.detection().seed == 7  # original untouched
    assert "detection.seed = 99" in bumped.canonical()
    with pytest.raises(ValidationError, match="unknown config key"):
        cfg.with_overrides(**{"detection.luck": 1})
