import numpy as np
import pytest

from qgalv import ValidationError, __version__
from qgalv.kernel import kernel_time
from qgalv.spectra import ScanResult
from qgalv.tables import (TableFile, kernel_from_table, kernel_to_table,
                          parse_table, render_table, scan_from_table,
                          scan_to_table)

# Values chosen to stress shortest-round-trip float printing: repeating
# binary fractions, subnormals, huge exponents, negative zero.
AWKWARD = np.array([
    [0.1, 1.0 / 3.0, 1e-300],
    [-0.0, 5e-324, 9.876543210987654e+250],
    [np.pi, -2.718281828459045e-10, 1.0000000000000002],
])


def make_table(**over):
    base = dict(
        kind="scan",
        columns=["a", "b", "c"],
        data=AWKWARD,
        meta={"T": 0.25, "note": "x", "flags": [1, 2], "nested": {"k": True}},
        config_text="[trap]\nN = 1e5\n\n[wire]\ncurrent = 0\n",
    )
    base.update(over)
    return TableFile(**base)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_bit_exact(fmt):
    t = make_table()
    back = parse_table(render_table(t, fmt))
    assert back.kind == t.kind
    assert back.columns == t.columns
    assert np.array_equal(back.data, t.data)  # bit-exact, incl. -0.0 sign?
    # -0.0 == 0.0 under array_equal; check the sign bit survives too
    assert np.signbit(back.data[1, 0])
    assert back.meta == t.meta
    assert back.config_text == t.config_text
    assert back.version == __version__


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_empty_rows(fmt):
    t = make_table(data=np.empty((0, 3)), config_text="")
    back = parse_table(render_table(t, fmt))
    assert back.data.shape == (0, 3)
    assert back.columns == t.columns
    assert back.config_text == ""


def test_csv_is_commented_header_plus_plain_rows():
    text = render_table(make_table(), "csv")
    lines = text.splitlines()
    assert lines[0].startswith("# qgalv-table scan v")
    body = [ln for ln in lines if not ln.startswith("#")]
    assert len(body) == AWKWARD.shape[0]
    assert all(len(ln.split(",")) == 3 for ln in body)
    # scenario block fenced so a reader can cut it out mechanically
    assert "# scenario-begin" in lines and "# scenario-end" in lines


def test_column_accessor():
    t = make_table()
    assert np.array_equal(t.column("b"), AWKWARD[:, 1])
    with pytest.raises(ValidationError, match="no column"):
        t.column("zz")


def test_table_validation():
    with pytest.raises(ValidationError, match="kind"):
        make_table(kind="novel")
    with pytest.raises(ValidationError, match="columns declared"):
        make_table(columns=["a", "b"])
    with pytest.raises(ValidationError, match="column name"):
        make_table(columns=["a", "b c", "d"])


def test_parse_rejects_foreign_text():
    with pytest.raises(ValidationError, match="magic"):
        parse_table("Omega,mean\n1.0,2.0\n")
    with pytest.raises(ValidationError, match="format tag"):
        parse_table('{"format": "something-else", "kind": "scan"}')
    with pytest.raises(ValidationError, match="columns"):
        parse_table("# qgalv-table scan v0.0\n1.0,2.0\n")


# -- kernel files ----------------------------------------------------------

@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_kernel_file_rebuilds_kernel(kernel_1d, fmt):
    table = kernel_to_table(kernel_1d, config_text="[trap]\nN = 1e5\n")
    back = kernel_from_table(parse_table(render_table(table, fmt)))

    assert back.mode == kernel_1d.mode
    assert back.n_det == kernel_1d.n_det
    assert back.mu == kernel_1d.mu
    assert back.u0_sq == kernel_1d.u0_sq
    assert np.array_equal(back.omega_grid, kernel_1d.omega_grid)
    assert np.array_equal(back.Dt_samples, kernel_1d.Dt_samples)
    assert np.array_equal(back.shell_w, kernel_1d.shell_w)
    assert np.array_equal(back.shell_ratio, kernel_1d.shell_ratio)
    assert back.provenance == kernel_1d.provenance

    # The imported object is a working kernel, not a stub: the
    # time-domain response recomputed from its shells matches the
    # original bit for bit.
    tau = np.linspace(-5.0, 5.0, 201) / kernel_1d.omega_scale
    assert np.array_equal(kernel_time(tau, back), kernel_time(tau, kernel_1d))
    assert back.D_samples.size > 1
    assert np.all(np.isfinite(back.D_samples))


def test_kernel_table_wrong_kind(kernel_1d):
    table = kernel_to_table(kernel_1d)
    impostor = TableFile(kind="scan", columns=table.columns,
                         data=table.data, meta=table.meta)
    with pytest.raises(ValidationError, match="kernel table"):
        kernel_from_table(impostor)


# -- scan files ------------------------------------------------------------

def make_scan(with_counts):
    n, shots = 7, 4
    counts = None
    detection = {}
    if with_counts:
        counts = np.arange(n * shots, dtype=np.int64).reshape(n, shots)
        detection = {"efficiency": 0.8, "shots": shots, "seed": 11}
    return ScanResult(
        Omega=np.linspace(1e4, 5e4, n),
        b_offs=np.full(n, 3.5e-4),
        mean_atoms=np.linspace(0.0, 120.0, n),
        T=0.1,
        regime="LongTime",
        kernel_mode="Approx1D",
        n_det=3.57e16,
        mu=4.41e-30,
        warnings=("drive perturbative bound exceeded",),
        counts=counts,
        detection=detection,
        provenance={"seed": 3},
    )


@pytest.mark.parametrize("fmt", ["csv", "json"])
@pytest.mark.parametrize("with_counts", [False, True])
def test_scan_file_round_trip(fmt, with_counts):
    scan = make_scan(with_counts)
    back = scan_from_table(parse_table(render_table(scan_to_table(scan), fmt)))
    assert np.array_equal(back.Omega, scan.Omega)
    assert np.array_equal(back.b_offs, scan.b_offs)
    assert np.array_equal(back.mean_atoms, scan.mean_atoms)
    assert back.T == scan.T
    assert back.regime == scan.regime
    assert back.kernel_mode == scan.kernel_mode
    assert back.n_det == scan.n_det
    assert back.mu == scan.mu
    assert back.warnings == scan.warnings
    assert back.detection == scan.detection
    assert back.provenance == scan.provenance
    if with_counts:
        assert back.counts.dtype == np.int64
        assert np.array_equal(back.counts, scan.counts)
    else:
        assert back.counts is None


def test_scan_table_wrong_kind(kernel_1d):
    with pytest.raises(ValidationError, match="scan table"):
        scan_from_table(kernel_to_table(kernel_1d))
