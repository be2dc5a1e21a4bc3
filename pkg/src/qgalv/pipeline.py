"""The five batch commands as pure functions of a parsed scenario.

Each function turns configuration (plus, for inversion, previously
written artifact files) into a mapping of output file names to rendered
file contents, a printable summary, and outcome flags.  Nothing here
touches the filesystem or the network; the service layer and the CLI
both delegate to these functions, which is what keeps the two front
ends byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .condensate import chemical_potential
from .config import ScenarioConfig
from .counting import estimate_means, simulate_counts
from .errors import ValidationError
from .inversion import (InverseProblem, build_kernel_matrix,
                        choose_lambda_discrepancy, deconvolve)
from .kernel import build_kernel
from .oracle import analytic_reference, oracle_scan, tf_quadrature_grid
from .spectra import scan, sensitivity_estimate
from .tables import (TableFile, kernel_from_table, kernel_to_table,
                     parse_table, render_table, scan_from_table,
                     scan_to_table)

__all__ = ["CommandOutput", "run_kernel", "run_scan", "run_oracle",
           "run_invert", "run_estimate"]


@dataclass(frozen=True)
class CommandOutput:
    """What one command produced: files, console summary, outcome flags."""

    files: dict
    summary: str
    warnings: tuple = ()
    flags: dict = field(default_factory=dict)


def _ext(fmt: str) -> str:
    if fmt not in ("csv", "json"):
        raise ValidationError(f"unknown output format {fmt!r} (use csv or json)")
    return fmt


def _stem(config: ScenarioConfig) -> str:
    stem = config.get("output.stem")
    return f"{stem}_" if stem else ""


def _scale_or_fail(config: ScenarioConfig, keys, scale: float) -> float:
    """Guard `mu`-unit frequencies against an empty cloud (scale 0)."""
    if scale > 0.0:
        return scale
    symbolic = [k for k in keys
                if config.has(k) and getattr(config.get(k), "symbolic", False)]
    if symbolic:
        raise ValidationError(
            "frequencies in `mu` units are undefined for an empty cloud: "
            + ", ".join(symbolic)
        )
    return scale


def run_kernel(config: ScenarioConfig, fmt: str = "csv",
               threads: int = 1) -> CommandOutput:
    """Both kernel line shapes on their grids, plus the scalar summary."""

    fmt = _ext(fmt)
    trap = config.trap()
    wire = config.wire()
    opts = config.kernel_options()
    opts.pop("mode", None)
    canonical = config.canonical()
    files = {}
    notes: list = []
    kernels = {}
    for mode in ("Approx1D", "Exact3D"):
        kernel = build_kernel(trap, wire, mode, threads=threads, **opts)
        kernels[mode] = kernel
        notes.extend(kernel.warnings)
        name = f"{_stem(config)}kernel_{mode.lower()}.{fmt}"
        files[name] = render_table(kernel_to_table(kernel, canonical), fmt)
    k = kernels["Exact3D"]
    lines = [
        f"kernel tables written for modes Approx1D, Exact3D ({len(files)} files)",
        f"geometry factor |U(center)|^2 = {k.u0_sq:.6f}",
        f"detection scale n_det = {float(k.n_det)!r} 1/(A^2 s^2)",
        f"chemical potential mu = {k.mu!r} J  (mu/hbar = {k.omega_scale!r} rad/s)",
    ]
    return CommandOutput(files=files, summary="\n".join(lines),
                         warnings=tuple(dict.fromkeys(notes)))


def run_scan(config: ScenarioConfig, fmt: str = "csv",
             threads: int = 1) -> CommandOutput:
    """Forward pipeline: kernel, spectrum model, scan, optional counts."""

    fmt = _ext(fmt)
    trap = config.trap()
    wire = config.wire()
    opts = config.kernel_options()
    mode = opts.pop("mode")
    kernel = build_kernel(trap, wire, mode, threads=threads, **opts)
    T = config.interrogation_time()
    scale = _scale_or_fail(
        config, ("scan.omega_min", "scan.omega_max", "model.omega0",
                 "model.center", "model.gamma"), kernel.omega_scale)
    grid = config.scan_grid(scale)
    model = config.model(scale)
    result = scan(model, kernel, T, grid, wire, regime=config.regime(),
                  provenance={"model": type(model).__name__})
    detection = config.detection()
    if detection is not None:
        result = simulate_counts(result, detection)
    files = {f"{_stem(config)}scan.{fmt}":
             render_table(scan_to_table(result, config.canonical()), fmt)}
    lines = [
        f"scan of {grid.size} points, regime {result.regime}, kernel {mode}",
        f"mean transferred atoms in [{float(result.mean_atoms.min())!r}, "
        f"{float(result.mean_atoms.max())!r}]",
    ]
    if detection is not None:
        lines.append(f"simulated counts: {detection.shots} shots/point, "
                     f"efficiency {detection.efficiency}, seed {detection.seed}")
    notes = tuple(dict.fromkeys(kernel.warnings + result.warnings))
    return CommandOutput(files=files, summary="\n".join(lines), warnings=notes)


def run_oracle(config: ScenarioConfig, fmt: str = "csv") -> CommandOutput:
    """Trajectory Monte-Carlo vs the analytic forward map, with z-scores."""

    fmt = _ext(fmt)
    trap = config.trap()
    wire = config.wire()
    freeze = bool(config.get("kernel.freeze_u", False))
    grid = tf_quadrature_grid(trap, wire, freeze_u_to_center=freeze)
    scale = _scale_or_fail(
        config, ("scan.omega_min", "scan.omega_max", "oracle.omega0",
                 "oracle.cutoff"), grid.mu / grid.hbar)
    Omega = config.scan_grid(scale)
    T = config.interrogation_time()
    process = config.oracle_process(scale)
    opts = config.oracle_options()
    analytic = analytic_reference(process, grid, Omega, T)
    mc_mean, mc_err = oracle_scan(process, grid, Omega, T, opts["dt"],
                                  opts["n_traj"])
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(mc_err > 0.0, (mc_mean - analytic) / np.where(mc_err > 0, mc_err, 1.0),
                     np.where(np.isclose(mc_mean, analytic, rtol=1e-12, atol=1e-300),
                              0.0, np.inf))
    passed = bool(np.all(np.abs(z) <= opts["z_max"]))
    table = TableFile(
        kind="oracle",
        columns=["Omega", "analytic_atoms", "oracle_atoms", "oracle_stderr",
                 "z_score"],
        data=np.column_stack([Omega, analytic, mc_mean, mc_err, z]),
        meta={
            "process": type(process).__name__,
            "n_traj": opts["n_traj"],
            "dt": opts["dt"],
            "T": T,
            "z_max": opts["z_max"],
            "passed": passed,
        },
        config_text=config.canonical(),
    )
    files = {f"{_stem(config)}oracle.{fmt}": render_table(table, fmt)}
    worst = float(np.abs(z).max()) if z.size else 0.0
    lines = [
        f"oracle comparison at {Omega.size} points, {opts['n_traj']} trajectories",
        f"largest |z| = {worst:.3f} against threshold {opts['z_max']}",
        "agreement PASSED" if passed else "agreement FAILED",
    ]
    return CommandOutput(files=files, summary="\n".join(lines),
                         flags={"oracle_passed": passed, "max_abs_z": worst})


def run_invert(scan_text: str, kernel_text: str, config: ScenarioConfig,
               fmt: str = "csv") -> CommandOutput:
    """Deconvolve a written scan against a written kernel."""

    fmt = _ext(fmt)
    result = scan_from_table(parse_table(scan_text))
    kernel = kernel_from_table(parse_table(kernel_text))
    scale = _scale_or_fail(config, ("invert.omega_min", "invert.omega_max"),
                           kernel.omega_scale)
    opts = config.invert_options(scale)

    if result.counts is not None:
        data, stderr = estimate_means(result)
        if np.any(np.isnan(stderr)):
            raise ValidationError(
                "single-shot counts carry no error estimate; rerun the scan "
                "with detection.shots >= 2 or invert the noiseless means"
            )
        base = max(float(np.abs(data).max()), 1.0)
        sigma = np.maximum(stderr, opts["sigma_floor"] * base)
    else:
        data = result.mean_atoms
        base = float(np.abs(data).max())
        sigma = np.full(data.shape, opts["sigma_floor"] * (base if base > 0 else 1.0))

    matrix = build_kernel_matrix(opts["omega"], result.Omega, kernel,
                                 result.T, opts["regime"])
    problem = InverseProblem(
        Omega=result.Omega, omega=opts["omega"], matrix=matrix, data=data,
        sigma=sigma, lam=opts["lam"], nonneg=opts["nonneg"],
        regularizer=opts["regularizer"],
        meta={"kernel_mode": kernel.mode, "regime": opts["regime"]},
    )
    dp_info: dict = {}
    dp_met = True
    if opts["auto_lambda"]:
        problem, dp_met, dp_info = choose_lambda_discrepancy(problem)
    rec = deconvolve(problem)
    table = TableFile(
        kind="reconstruction",
        columns=["omega", "spectral_density"],
        data=np.column_stack([rec.omega, rec.s_estimate]),
        meta={
            "lam": rec.lam,
            "residual_norm": rec.residual_norm,
            "solution_norm": rec.solution_norm,
            "condition": rec.condition,
            "nonneg": rec.nonneg,
            "regularizer": rec.regularizer,
            "regime": opts["regime"],
            "auto_lambda": opts["auto_lambda"],
            "dp_met": dp_met,
            "dp_target": dp_info.get("target"),
            "kernel_mode": kernel.mode,
            "n_det": kernel.n_det,
            "mu": kernel.mu,
            "T": result.T,
        },
        config_text=config.canonical(),
    )
    files = {f"{_stem(config)}reconstruction.{fmt}": render_table(table, fmt)}
    lines = [
        f"reconstructed {rec.omega.size} spectral bins from "
        f"{result.Omega.size} scan points",
        f"lam = {rec.lam!r} ({'discrepancy principle' if opts['auto_lambda'] else 'fixed'})",
        f"whitened residual = {rec.residual_norm!r} "
        f"(target {dp_info.get('target')!r})" if opts["auto_lambda"] else
        f"whitened residual = {rec.residual_norm!r}",
        f"condition number = {rec.condition:.6g}",
    ]
    if not dp_met:
        lines.append("discrepancy principle NOT met within the lambda bounds")
    return CommandOutput(files=files, summary="\n".join(lines),
                         flags={"dp_met": dp_met, "lam": rec.lam})


def run_estimate(config: ScenarioConfig, fmt: str = "csv") -> CommandOutput:
    """Scalar sensitivity report for the configured scenario."""

    fmt = _ext(fmt)
    trap = config.trap()
    wire = config.wire()
    kernel = build_kernel(trap, wire, "Approx1D")
    T = config.interrogation_time()
    i_rms = sensitivity_estimate(kernel, T)
    cond = chemical_potential(trap)
    table = TableFile(
        kind="estimate",
        columns=["u_center_sq", "n_det", "mu", "t", "current_rms"],
        data=np.array([[kernel.u0_sq, kernel.n_det, kernel.mu, T, i_rms]]),
        meta={"mu_over_hbar": kernel.omega_scale,
              "tf_semi_axis_b": cond.b, "tf_semi_axis_c": cond.c},
        config_text=config.canonical(),
    )
    files = {f"{_stem(config)}estimate.{fmt}": render_table(table, fmt)}
    lines = [
        f"geometry factor |U(center)|^2 = {kernel.u0_sq:.6f}",
        f"detection scale n_det = {float(kernel.n_det)!r} 1/(A^2 s^2)",
        f"chemical potential mu = {kernel.mu!r} J "
        f"(mu/hbar = {kernel.omega_scale!r} rad/s)",
        f"rms current for one transferred atom in T = {T!r} s: "
        f"{i_rms * 1e6:.6f} uA",
    ]
    return CommandOutput(files=files, summary="\n".join(lines))
