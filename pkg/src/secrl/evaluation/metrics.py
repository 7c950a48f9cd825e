"""Scoring: undiscounted mean root error and steady-state windowed means.

All metrics are recomputed from logged references and measurements with
discount 0, independent of whatever reward shaping ran during training;
action penalties never enter reported numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import ConfigurationError


@dataclass
class Trajectory:
    """Per-step rollout record for one evaluation episode."""

    kind: str                 # 'grid' or 'motor'
    limit: float              # v_lim or i_lim used for normalization
    reference: np.ndarray     # (N, d)
    measured: np.ndarray      # (N, d)
    raw_action: np.ndarray    # (N, m or 2m)
    applied_action: np.ndarray  # (N, m)
    integrator: np.ndarray | None = None  # (N, m) when augmented
    terminal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    violations: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in ("grid", "motor"):
            raise ConfigurationError(f"unknown trajectory kind {self.kind!r}")
        if self.reference.shape != self.measured.shape:
            raise ConfigurationError("reference/measured shape mismatch")

    def __len__(self) -> int:
        return len(self.reference)

    def to_csv(self, path: str | Path) -> None:
        d = self.reference.shape[1]
        m = self.applied_action.shape[1]
        raw_w = self.raw_action.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = (
                ["k"]
                + [f"ref_{i}" for i in range(d)]
                + [f"meas_{i}" for i in range(d)]
                + [f"raw_{i}" for i in range(raw_w)]
                + [f"applied_{i}" for i in range(m)]
                + [f"integrator_{i}" for i in range(m)]
                + ["reward", "terminal"]
            )
            writer.writerow(header)
            rewards = per_step_rewards(self)
            zeta = self.integrator if self.integrator is not None else np.zeros((len(self), m))
            term = self.terminal if len(self.terminal) else np.zeros(len(self))
            for k in range(len(self)):
                writer.writerow(
                    [k]
                    + list(self.reference[k])
                    + list(self.measured[k])
                    + list(self.raw_action[k])
                    + list(self.applied_action[k])
                    + list(zeta[k])
                    + [rewards[k], int(term[k])]
                )


def per_step_rewards(traj: Trajectory) -> np.ndarray:
    """Task reward per step with discount 0 (mean root error, saturated)."""
    ratio = np.minimum(np.abs(traj.reference - traj.measured) / traj.limit, 1.0)
    d = traj.reference.shape[1]
    return -np.sum(np.sqrt(ratio), axis=1) / d


def mean_task_reward(traj: Trajectory) -> float:
    if len(traj) == 0:
        raise ConfigurationError("empty trajectory")
    return float(np.mean(per_step_rewards(traj)))


def steady_state_metric(
    traj: Trajectory,
    segment_length: int = 500,
    skip: int | None = None,
) -> tuple[np.ndarray, float]:
    """Per-segment means with the transient window dropped.

    The first `skip` steps of every segment are discarded (100 for the grid
    plant, 200 for the slower motor loop) and the task reward is averaged
    over the remainder; returns (per-segment means, their mean).
    """
    if skip is None:
        skip = 100 if traj.kind == "grid" else 200
    n = len(traj)
    if segment_length <= skip:
        raise ConfigurationError("segment_length must exceed the skipped window")
    if n % segment_length != 0:
        raise ConfigurationError(
            f"trajectory length {n} is not a whole number of {segment_length}-step segments"
        )
    rewards = per_step_rewards(traj)
    segments = n // segment_length
    means = np.empty(segments)
    evaluated = 0
    for s in range(segments):
        lo = s * segment_length + skip
        hi = (s + 1) * segment_length
        means[s] = np.mean(rewards[lo:hi])
        evaluated += hi - lo
    assert evaluated == segments * (segment_length - skip)
    return means, float(np.mean(means))


def box_stats(values) -> dict:
    """Quartile summary with Tukey outliers (reported, never dropped)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ConfigurationError("no values to aggregate")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return {
        "count": int(v.size),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(v.min()),
        "max": float(v.max()),
        "outliers": [float(x) for x in np.sort(outliers)],
        "crop_lo": float(lo_fence),
        "crop_hi": float(hi_fence),
    }
