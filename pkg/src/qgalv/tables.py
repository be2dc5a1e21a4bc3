"""Self-describing output files: delimited text or JSON, same content.

Every artifact this package emits is a table with a typed header: what
kind of table it is, the code version, a flat metadata mapping, the
canonical scenario text that produced it, column names, and float rows.
The text form is comment-prefixed delimited text (diffable, greppable);
the JSON form carries the identical fields for programmatic consumers.
Both round-trip bit-exactly: floats are written in shortest-round-trip
form, and reading a file back yields arrays equal to the ones written.

The embedded scenario block is the closure property: the header of any
output file is enough to re-run the command that produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ValidationError
from .kernel import ResponseKernel, kernel_time

__all__ = [
    "TableFile",
    "render_table",
    "parse_table",
    "kernel_to_table",
    "kernel_from_table",
    "scan_to_table",
    "scan_from_table",
]

_MAGIC = "qgalv-table"

KINDS = ("kernel", "scan", "oracle", "reconstruction", "estimate")


@dataclass(frozen=True)
class TableFile:
    """One output artifact: typed header plus a float matrix."""

    kind: str
    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)
    config_text: str = ""
    version: str = __version__

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown table kind {self.kind!r}")
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        object.__setattr__(self, "data", data)
        if data.shape[1] != len(self.columns):
            raise ValidationError(
                f"{len(self.columns)} columns declared but rows have "
                f"{data.shape[1]} fields"
            )
        for name in self.columns:
            if not name or any(c in name for c in ", \t\n"):
                raise ValidationError(f"bad column name {name!r}")

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise ValidationError(
                f"table has no column {name!r}; columns are {self.columns}"
            ) from None


def _meta_lines(meta: dict) -> list:
    lines = []
    for key, value in meta.items():
        encoded = json.dumps(value)
        lines.append(f"# meta.{key} = {encoded}")
    return lines


def render_table(table: TableFile, fmt: str = "csv") -> str:
    """Serialize to the requested format ("csv" or "json")."""

    if fmt == "json":
        doc = {
            "format": _MAGIC,
            "kind": table.kind,
            "version": table.version,
            "meta": table.meta,
            "config": table.config_text,
            "columns": list(table.columns),
            "data": [[float(x) for x in row] for row in table.data],
        }
        return json.dumps(doc, indent=1) + "\n"
    if fmt != "csv":
        raise ValidationError(f"unknown output format {fmt!r} (use csv or json)")
    lines = [f"# {_MAGIC} {table.kind} v{table.version}"]
    lines += _meta_lines(table.meta)
    if table.config_text:
        lines.append("# scenario-begin")
        lines += [f"# {line}" for line in table.config_text.rstrip("\n").split("\n")]
        lines.append("# scenario-end")
    lines.append("# columns: " + ",".join(table.columns))
    for row in table.data:
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> TableFile:
    """Read either serialization back into a TableFile."""

    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if doc.get("format") != _MAGIC:
            raise ValidationError("not a recognized table file (bad format tag)")
        return TableFile(
            kind=doc["kind"], columns=list(doc["columns"]),
            data=np.array(doc["data"], dtype=float).reshape(-1, len(doc["columns"])),
            meta=dict(doc["meta"]), config_text=doc.get("config", ""),
            version=doc.get("version", __version__),
        )

    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {_MAGIC} "):
        raise ValidationError("not a recognized table file (missing magic line)")
    head = lines[0].split()
    kind, version = head[2], head[3].lstrip("v")
    meta: dict = {}
    config_lines: list = []
    columns: list = []
    rows: list = []
    in_config = False
    for line in lines[1:]:
        if line.startswith("#"):
            body = line[1:].strip()
            if body == "scenario-begin":
                in_config = True
            elif body == "scenario-end":
                in_config = False
            elif in_config:
                config_lines.append(body)
            elif body.startswith("meta."):
                key, _, encoded = body[5:].partition(" = ")
                meta[key] = json.loads(encoded)
            elif body.startswith("columns:"):
                columns = body.split(":", 1)[1].strip().split(",")
        elif line.strip():
            rows.append([float(tok) for tok in line.split(",")])
    if not columns:
        raise ValidationError("table file has no columns line")
    data = (np.array(rows, dtype=float) if rows
            else np.empty((0, len(columns))))
    config_text = "\n".join(config_lines) + "\n" if config_lines else ""
    return TableFile(kind=kind, columns=columns, data=data.reshape(-1, len(columns)),
                     meta=meta, config_text=config_text, version=version)


# -- kernel files ---------------------------------------------------------

def kernel_to_table(kernel: ResponseKernel, config_text: str = "") -> TableFile:
    """Kernel transform on its grid, with enough header state to rebuild
    the kernel object exactly (no physics recomputation on import)."""

    meta = {
        "mode": kernel.mode,
        "n_det": kernel.n_det,
        "mu": kernel.mu,
        "hbar": kernel.hbar,
        "u0_sq": kernel.u0_sq,
        "shell_w": [float(x) for x in kernel.shell_w],
        "shell_q": [float(x) for x in kernel.shell_q],
        "shell_ratio": [float(x) for x in kernel.shell_ratio],
        "ratio_t": [float(x) for x in kernel.ratio_t],
        "ratio_vals": [float(x) for x in kernel.ratio_vals],
        "warnings": list(kernel.warnings),
        "provenance": dict(kernel.provenance),
    }
    data = np.column_stack([kernel.omega_grid, kernel.Dt_samples.real,
                            np.zeros_like(kernel.omega_grid)])
    return TableFile(kind="kernel", columns=["omega", "kernel_ft_re", "kernel_ft_im"],
                     data=data, meta=meta, config_text=config_text)


def kernel_from_table(table: TableFile) -> ResponseKernel:
    if table.kind != "kernel":
        raise ValidationError(f"expected a kernel table, got {table.kind!r}")
    meta = table.meta
    omega_grid = table.column("omega")
    Dt = table.column("kernel_ft_re") + 1j * table.column("kernel_ft_im")
    kernel = ResponseKernel(
        n_det=float(meta["n_det"]), mu=float(meta["mu"]),
        hbar=float(meta["hbar"]), mode=str(meta["mode"]),
        u0_sq=float(meta["u0_sq"]),
        shell_w=np.array(meta["shell_w"], dtype=float),
        shell_q=np.array(meta["shell_q"], dtype=float),
        shell_ratio=np.array(meta["shell_ratio"], dtype=float),
        ratio_t=np.array(meta["ratio_t"], dtype=float),
        ratio_vals=np.array(meta["ratio_vals"], dtype=float),
        tau_grid=np.zeros(1), D_samples=np.zeros(1, dtype=complex),
        omega_grid=omega_grid, Dt_samples=Dt.real,
        warnings=tuple(meta.get("warnings", ())),
        provenance=dict(meta.get("provenance", {})),
    )
    # Regenerate the time-domain samples from the shells so the imported
    # object is a full citizen, not a stub.
    if kernel.n_det > 0.0:
        span = 40.0 / kernel.omega_scale
        tau = np.linspace(-span, span, 4097)
        object.__setattr__(kernel, "tau_grid", tau)
        object.__setattr__(kernel, "D_samples", kernel_time(tau, kernel))
    return kernel


# -- scan files -----------------------------------------------------------

def scan_to_table(result, config_text: str = "") -> TableFile:
    """ScanResult -> table; counts (if any) become extra integer columns."""

    meta = {
        "T": result.T,
        "regime": result.regime,
        "kernel_mode": result.kernel_mode,
        "n_det": result.n_det,
        "mu": result.mu,
        "warnings": list(result.warnings),
        "detection": dict(result.detection),
        "provenance": dict(result.provenance),
    }
    columns = ["Omega", "b_offs", "mean_atoms"]
    parts = [result.Omega, result.b_offs, result.mean_atoms]
    if result.counts is not None:
        shots = result.counts.shape[1]
        columns += [f"counts_{k:03d}" for k in range(shots)]
        parts.append(result.counts.astype(float))
    data = np.column_stack(parts)
    return TableFile(kind="scan", columns=columns, data=data, meta=meta,
                     config_text=config_text)


def scan_from_table(table: TableFile):
    from .spectra import ScanResult

    if table.kind != "scan":
        raise ValidationError(f"expected a scan table, got {table.kind!r}")
    count_cols = [c for c in table.columns if c.startswith("counts_")]
    counts = None
    if count_cols:
        counts = np.column_stack([table.column(c) for c in count_cols])
        counts = counts.astype(np.int64)
    return ScanResult(
        Omega=table.column("Omega"),
        b_offs=table.column("b_offs"),
        mean_atoms=table.column("mean_atoms"),
        T=float(table.meta["T"]),
        regime=str(table.meta["regime"]),
        kernel_mode=str(table.meta["kernel_mode"]),
        n_det=float(table.meta["n_det"]),
        mu=float(table.meta["mu"]),
        warnings=tuple(table.meta.get("warnings", ())),
        counts=counts,
        detection=dict(table.meta.get("detection", {})),
        provenance=dict(table.meta.get("provenance", {})),
    )
