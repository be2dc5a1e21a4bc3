"""Shot-noise simulation for the detection stage.

The spectroscopy signal is the number of atoms transferred to the
anti-trapped Zeeman state during one interrogation window.  A real
experiment detects those atoms with finite efficiency and repeats the
sequence a handful of times per drive frequency, so the observable is a
small stack of Poisson draws rather than the smooth mean curve the
scan produces.  This module adds that layer: given a scan result it
draws counts, and given counts it recovers mean estimates with
uncertainties suitable for feeding the spectral inversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .spectra import ScanResult

__all__ = ["DetectionConfig", "simulate_counts", "estimate_means"]


@dataclass(frozen=True)
class DetectionConfig:
    """Detection efficiency and repetition settings.

    efficiency - probability that a transferred atom is actually counted
    shots      - independent repetitions per drive-frequency point
    seed       - master seed for the count draws
    """

    efficiency: float = 1.0
    shots: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.efficiency <= 1.0):
            raise ValidationError(
                f"detection efficiency must be in (0, 1], got {self.efficiency}"
            )
        if self.shots < 1:
            raise ValidationError(f"shots must be >= 1, got {self.shots}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


def simulate_counts(result: ScanResult, detection: DetectionConfig) -> ScanResult:
    """Draw Poisson counts for every point of a scan.

    Each drive-frequency point gets its own child seed spawned from the
    master, so inserting or removing points elsewhere in the grid does
    not perturb the draws at a given frequency index.  Counts are shaped
    (n_points, shots).
    """

    lam = detection.efficiency * result.mean_atoms
    children = np.random.SeedSequence(detection.seed).spawn(lam.size)
    counts = np.empty((lam.size, detection.shots), dtype=np.int64)
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        counts[k] = rng.poisson(lam[k], size=detection.shots)
    return ScanResult(
        Omega=result.Omega,
        b_offs=result.b_offs,
        mean_atoms=result.mean_atoms,
        T=result.T,
        regime=result.regime,
        kernel_mode=result.kernel_mode,
        n_det=result.n_det,
        mu=result.mu,
        warnings=result.warnings,
        counts=counts,
        detection={
            "efficiency": detection.efficiency,
            "shots": detection.shots,
            "seed": detection.seed,
        },
        provenance=dict(result.provenance),
    )


def estimate_means(result: ScanResult) -> tuple[np.ndarray, np.ndarray]:
    """Recover transferred-atom means (and standard errors) from counts.

    Inverts the efficiency scaling: the estimator is counts/efficiency
    averaged over shots.  With a single shot per point the statistical
    error cannot be estimated from the data itself, so the returned
    standard errors are NaN — downstream code must then fall back on the
    Poisson model (variance = mean/efficiency) or refuse to weight.
    """

    if result.counts is None:
        raise ValidationError("scan result carries no counts; run simulate_counts first")
    eff = float(result.detection.get("efficiency", 1.0))
    counts = np.asarray(result.counts, dtype=float)
    means = counts.mean(axis=1) / eff
    shots = counts.shape[1]
    if shots < 2:
        stderr = np.full(means.shape, np.nan)
    else:
        stderr = counts.std(axis=1, ddof=1) / (np.sqrt(shots) * eff)
    return means, stderr
