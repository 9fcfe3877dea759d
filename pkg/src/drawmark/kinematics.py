"""Kinematic feature extraction from pen traces.

Three feature vectors per trial: the 9 standard speed/acceleration/jerk
means, the 12-dimensional extension with template-matching statistics, and
the 36-dimensional variant that additionally partitions the standard
quantities into eight 45-degree movement-direction bins.

Derivatives use central differences that stay exact for quadratics on
non-uniform timestamp grids, so stylus sampling jitter does not alias into
the features. "Jitter" is realized as jerk magnitude, the standard kinematic
smoothness proxy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import dtw
from .errors import EmptyTrainingError, TooFewSamplesError
from .model import Trace

STANDARD_FEATURE_NAMES = (
    "speed",
    "speed_x",
    "speed_y",
    "accel",
    "accel_x",
    "accel_y",
    "jerk",
    "jerk_x",
    "jerk_y",
)
EXTENDED_EXTRA_NAMES = ("dtw_cost", "dtw_mean_dist", "dtw_match_fraction")

N_ANGULAR_BINS = 8
ANGULAR_BIN_NAMES = tuple(
    f"{stat}_bin{b}" for b in range(N_ANGULAR_BINS) for stat in ("speed", "accel", "jerk")
)

# jerk = third derivative; each central-difference pass trims one sample
# from both ends, so three passes need at least 7 samples
MIN_SAMPLES_FOR_JERK = 7


class FeatureSet(Enum):
    STANDARD = 9
    EXTENDED = 12
    ANGULAR = 36

    @property
    def dimension(self) -> int:
        return self.value

    @property
    def feature_names(self) -> tuple[str, ...]:
        if self is FeatureSet.STANDARD:
            return STANDARD_FEATURE_NAMES
        if self is FeatureSet.EXTENDED:
            return STANDARD_FEATURE_NAMES + EXTENDED_EXTRA_NAMES
        return ANGULAR_BIN_NAMES + STANDARD_FEATURE_NAMES + EXTENDED_EXTRA_NAMES


@dataclass(eq=False)
class FeatureVector:
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.names),):
            raise ValueError(
                f"{self.values.shape[0]} values for {len(self.names)} names"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains non-finite values")


@dataclass(eq=False)
class Derivatives:
    """Velocity, acceleration and jerk at interior trace samples.

    Component arrays are (n_k, 2); ``t_*`` hold the timestamps the values
    refer to. Lengths shrink by two per derivative order.
    """

    t_vel: np.ndarray
    velocity: np.ndarray
    t_acc: np.ndarray
    acceleration: np.ndarray
    t_jerk: np.ndarray
    jerk: np.ndarray

    @property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.velocity, axis=1)

    @property
    def accel_mag(self) -> np.ndarray:
        return np.linalg.norm(self.acceleration, axis=1)

    @property
    def jerk_mag(self) -> np.ndarray:
        return np.linalg.norm(self.jerk, axis=1)


def _central_diff(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """First derivative of f(t) at interior nodes.

    Weighted two-sided difference, exact for polynomials up to degree 2 on
    arbitrary strictly increasing grids.
    """
    h1 = (t[1:-1] - t[:-2])[:, None]
    h2 = (t[2:] - t[1:-1])[:, None]
    num = h1 * h1 * (f[2:] - f[1:-1]) + h2 * h2 * (f[1:-1] - f[:-2])
    return num / (h1 * h2 * (h1 + h2))


def derivatives(trace: Trace) -> Derivatives:
    """Per-sample velocity, acceleration and jerk of a trace."""
    t = trace.t
    if trace.n_samples < MIN_SAMPLES_FOR_JERK:
        raise TooFewSamplesError(
            f"need >= {MIN_SAMPLES_FOR_JERK} samples for jerk, got {trace.n_samples}"
        )
    xy = trace.xy
    vel = _central_diff(t, xy)
    t_v = t[1:-1]
    acc = _central_diff(t_v, vel)
    t_a = t_v[1:-1]
    jerk = _central_diff(t_a, acc)
    t_j = t_a[1:-1]
    return Derivatives(t_v, vel, t_a, acc, t_j, jerk)


def standard_features(trace: Trace) -> FeatureVector:
    """Mean |speed|, |acceleration| and |jerk|, total and per screen axis."""
    d = derivatives(trace)
    values = np.array(
        [
            d.speed.mean(),
            np.abs(d.velocity[:, 0]).mean(),
            np.abs(d.velocity[:, 1]).mean(),
            d.accel_mag.mean(),
            np.abs(d.acceleration[:, 0]).mean(),
            np.abs(d.acceleration[:, 1]).mean(),
            d.jerk_mag.mean(),
            np.abs(d.jerk[:, 0]).mean(),
            np.abs(d.jerk[:, 1]).mean(),
        ]
    )
    return FeatureVector(values, STANDARD_FEATURE_NAMES)


def extended_features(trace: Trace) -> FeatureVector:
    """Standard features plus template-match cost, distance and coverage."""
    standard = standard_features(trace)
    alignment = dtw.align(trace.xy, trace.template)
    mean_dist = float(np.mean(alignment.per_trace_distance))
    fraction = alignment.n_c / trace.template.shape[0]
    values = np.concatenate(
        [standard.values, [alignment.total_cost, mean_dist, fraction]]
    )
    return FeatureVector(values, STANDARD_FEATURE_NAMES + EXTENDED_EXTRA_NAMES)


def _direction_bins(velocity: np.ndarray) -> np.ndarray:
    angles = np.degrees(np.arctan2(velocity[:, 1], velocity[:, 0])) % 360.0
    return (angles // 45.0).astype(int) % N_ANGULAR_BINS


def angular_features(trace: Trace) -> FeatureVector:
    """Directionally binned kinematics followed by the extended features.

    Each velocity sample is assigned to one of eight 45-degree bins by its
    movement direction; acceleration and jerk samples inherit the direction
    of the velocity sample at the same timestamp. Empty bins yield zeros.
    """
    d = derivatives(trace)
    bins_v = _direction_bins(d.velocity)
    # acceleration/jerk samples sit two/four timestamps inside the velocity grid
    bins_a = bins_v[1:-1]
    bins_j = bins_v[2:-2]

    binned = np.zeros(N_ANGULAR_BINS * 3)
    for b in range(N_ANGULAR_BINS):
        for offset, (mags, bins) in enumerate(
            ((d.speed, bins_v), (d.accel_mag, bins_a), (d.jerk_mag, bins_j))
        ):
            mask = bins == b
            if np.any(mask):
                binned[3 * b + offset] = mags[mask].mean()

    ext = extended_features(trace)
    return FeatureVector(
        np.concatenate([binned, ext.values]),
        ANGULAR_BIN_NAMES + ext.names,
    )


def extract_features(trace: Trace, feature_set: FeatureSet) -> FeatureVector:
    if feature_set is FeatureSet.STANDARD:
        return standard_features(trace)
    if feature_set is FeatureSet.EXTENDED:
        return extended_features(trace)
    return angular_features(trace)


def feature_matrix(traces: list[Trace], feature_set: FeatureSet) -> np.ndarray:
    return np.array([extract_features(tr, feature_set).values for tr in traces])


def preprocess_features(
    train: np.ndarray | list[FeatureVector],
    apply_to: np.ndarray | list[FeatureVector],
) -> tuple[np.ndarray, np.ndarray]:
    """Clip to +-3 training STDs, then z-score with training statistics.

    Both matrices are transformed with the statistics of ``train`` alone;
    constant features map to zero. Outputs are bounded in [-3, 3].
    """
    train_m = _as_matrix(train)
    apply_m = _as_matrix(apply_to)
    if train_m.shape[0] == 0:
        raise EmptyTrainingError("cannot standardize with an empty training set")
    if apply_m.shape[1] != train_m.shape[1]:
        raise EmptyTrainingError(
            f"feature count mismatch: train {train_m.shape[1]}, "
            f"apply {apply_m.shape[1]}"
        )
    mean = train_m.mean(axis=0)
    std = train_m.std(axis=0)
    safe = np.where(std > 0, std, 1.0)

    def transform(mat: np.ndarray) -> np.ndarray:
        clipped = np.clip(mat, mean - 3 * std, mean + 3 * std)
        z = (clipped - mean) / safe
        z[:, std == 0] = 0.0
        return z

    return transform(train_m), transform(apply_m)


def _as_matrix(data: np.ndarray | list[FeatureVector]) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return np.atleast_2d(np.asarray(data, dtype=float))
    return np.array([fv.values for fv in data], dtype=float)
