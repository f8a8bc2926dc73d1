"""Trajectory accuracy metrics: start-referenced relative error (RPE)
and absolute position error (APE)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class EvaluationReport:
    rpe_mean: float
    rpe_max: float
    ape_mean: float
    rpe_series: np.ndarray     # per-epoch, index 1..n-1
    ape_series: np.ndarray     # per-epoch, index 0..n-1
    method_label: str = ""

    def as_dict(self) -> dict:
        return {
            "method": self.method_label,
            "rpe_mean_m": self.rpe_mean,
            "rpe_max_m": self.rpe_max,
            "ape_mean_m": self.ape_mean,
            "rpe_series_m": [float(v) for v in self.rpe_series],
            "ape_series_m": [float(v) for v in self.ape_series],
        }


def _aligned(estimate, truth, minimum: int):
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape or estimate.ndim != 2 \
            or estimate.shape[1] != 3:
        raise LengthMismatch(
            f"trajectory shapes differ: {estimate.shape} vs {truth.shape}")
    if estimate.shape[0] < minimum:
        raise LengthMismatch(
            f"need at least {minimum} epochs, got {estimate.shape[0]}")
    return estimate, truth


def compute_rpe(estimate, truth):
    """Start-referenced relative position error.

    rpe_i = |(p̂_i − p̂_0) − (p_i − p_0)|; mean and max over i ≥ 1, so a
    constant offset between the trajectories cancels exactly.
    """
    estimate, truth = _aligned(estimate, truth, minimum=2)
    relative = (estimate - estimate[0]) - (truth - truth[0])
    series = np.linalg.norm(relative[1:], axis=1)
    return float(series.mean()), float(series.max()), series


def compute_ape(estimate, truth):
    """Absolute position error: ape_i = |p̂_i − p_i|, mean over all i."""
    estimate, truth = _aligned(estimate, truth, minimum=1)
    series = np.linalg.norm(estimate - truth, axis=1)
    return float(series.mean()), series


def evaluate(estimate, truth, method_label: str = "") -> EvaluationReport:
    rpe_mean, rpe_max, rpe_series = compute_rpe(estimate, truth)
    ape_mean, ape_series = compute_ape(estimate, truth)
    return EvaluationReport(rpe_mean, rpe_max, ape_mean, rpe_series,
                            ape_series, method_label)
