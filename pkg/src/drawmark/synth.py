"""Synthetic sessions with known ground truth.

Traces follow a pseudo-letter template with an Ornstein-Uhlenbeck pen
perturbation; the ON/OFF kinematic effect scales the walker's speed and
perturbation amplitude. Neural epochs are mixtures of band-limited sources
whose per-trial variance comodulates with the session's behavioral score
and/or the DBS condition, plus spatially white noise at a requested SNR.
Everything is a pure function of the spec and its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.spatial.distance import cdist

from .errors import InvalidSpecError, TooLargeError
from .kinematics import FeatureSet, feature_matrix, preprocess_features
from .linmodels import decision_scores, fit_lda
from .model import (
    Block,
    DbsCondition,
    Modality,
    NeuralEpoch,
    Session,
    Trace,
    Trial,
)
from .spoc import BAND_BY_NAME, bandpass_array

# floor for the per-trial variance factor; keeps 1 + gain * z positive
MIN_VARIANCE_FACTOR = 0.05


def default_template(points_per_atom: int = 54) -> np.ndarray:
    """Pseudo-letter polyline built from three concatenated stroke atoms,
    resampled to uniform arc length (screen-pixel units)."""
    s = np.linspace(0.0, 1.0, 200)

    # atom 1: descending hook
    a1 = np.stack([60 * np.sin(np.pi * s), 220 * s], axis=1)
    # atom 2: double wave moving right
    a2 = np.stack([240 * s, 55 * np.sin(2.5 * np.pi * s)], axis=1)
    # atom 3: closing loop with exit stroke
    phi = 1.75 * 2 * np.pi * s
    a3 = np.stack(
        [80 * (1 - np.cos(phi)) / 2 + 90 * s, -70 * np.sin(phi) - 140 * s], axis=1
    )

    parts = [a1]
    for atom in (a2, a3):
        shifted = atom - atom[0] + parts[-1][-1]
        parts.append(shifted[1:])
    raw = np.vstack(parts)
    # scaled so the full glyph spans a ~2750 px drawing path on screen
    raw = raw * np.array([2.2, -2.2]) + np.array([240.0, 760.0])

    seg = np.linalg.norm(np.diff(raw, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, arc[-1], 3 * points_per_atom)
    return np.stack(
        [np.interp(targets, arc, raw[:, 0]), np.interp(targets, arc, raw[:, 1])],
        axis=1,
    )


@dataclass(frozen=True)
class KinematicEffect:
    """Multiplicative ON-vs-OFF shifts applied by the trace walker."""

    speed_on: float = 1.0   # scales drawing speed under DBS ON
    jitter_on: float = 1.0  # scales the OU perturbation (accel/jerk features)


@dataclass(frozen=True)
class SourceSpec:
    """One planted band-limited source.

    Per-trial variance factor: max(1 + gain_score * z + gain_condition * [ON],
    a small floor). ``mixing`` is a per-channel column; unit-norm random if
    omitted.
    """

    band: str = "beta"
    gain_score: float = 0.8
    gain_condition: float = 0.0
    mixing: tuple[float, ...] | None = None


@dataclass(frozen=True)
class NeuralSpec:
    n_channels: int = 8
    sources: tuple[SourceSpec, ...] = (SourceSpec(),)
    snr: float = 3.0
    epoch_duration: float = 2.0
    sample_rate: float = 300.0
    modality: Modality = Modality.EEG
    # comodulation target: session-wide behavioral scores or the latent
    # per-trial kinematic state
    comodulate_with: str = "copydraw"
    # use within-condition score deviations only (a source modulated by
    # behavior but orthogonal to the DBS condition)
    orthogonalize_condition: bool = False


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_blocks: int = 12
    trials_per_block: int = 12
    kinematic: KinematicEffect = KinematicEffect()
    neural: NeuralSpec | None = None
    base_speed: float = 250.0      # px/s under DBS OFF
    speed_sigma: float = 0.12      # lognormal trial-to-trial speed spread
    ou_amplitude: float = 3.0      # stationary pen-perturbation RMS, px
    ou_jitter_sigma: float = 0.25  # per-trial, per-axis lognormal OU spread
    ou_rate: float = 12.0          # OU mean reversion, 1/s
    pen_rate: float = 60.0         # pen samples per second
    duration_limit: float = 8.0    # trial time limit, s
    session_id: str = "synth"

    def validate(self) -> None:
        if self.seed is None:
            raise InvalidSpecError("seed is mandatory")
        if self.n_blocks < 2:
            raise InvalidSpecError("need >= 2 blocks for both conditions")
        if not (1 <= self.trials_per_block <= 12):
            raise InvalidSpecError("trials_per_block must be in [1, 12]")
        if self.base_speed <= 0 or self.pen_rate <= 0 or self.duration_limit <= 0:
            raise InvalidSpecError("speeds, rates and durations must be positive")
        if self.kinematic.speed_on <= 0 or self.kinematic.jitter_on <= 0:
            raise InvalidSpecError("kinematic multipliers must be positive")
        if self.neural is not None:
            n = self.neural
            if n.snr <= 0:
                raise InvalidSpecError("SNR must be positive")
            if n.n_channels < 1:
                raise InvalidSpecError("need >= 1 channel")
            if n.comodulate_with not in ("copydraw", "latent"):
                raise InvalidSpecError(
                    f"unknown comodulation target '{n.comodulate_with}'"
                )
            for src in n.sources:
                if src.band not in BAND_BY_NAME:
                    raise InvalidSpecError(
                        f"unknown band '{src.band}'; "
                        f"expected one of {sorted(BAND_BY_NAME)}"
                    )
                if src.mixing is not None and len(src.mixing) != n.n_channels:
                    raise InvalidSpecError("mixing length must equal n_channels")


@dataclass(eq=False)
class GroundTruth:
    """What was planted: per-source mixing columns and the realized
    modulations, for oracle comparisons."""

    conditions: np.ndarray          # per trial, True = ON
    latent: np.ndarray              # per-trial kinematic state (z-scored)
    speeds: np.ndarray              # per-trial walker speed, px/s
    copydraw_scores: np.ndarray | None = None
    comodulation: np.ndarray | None = None   # z actually fed to the sources
    mixing: np.ndarray | None = None         # (n_sources, n_channels), unit norm
    source_bands: tuple[str, ...] = ()
    variance_factors: np.ndarray | None = None  # (n_sources, n_trials)
    noise_std: float | None = None


def _synth_trace(
    rng: np.random.Generator,
    template: np.ndarray,
    arc: np.ndarray,
    speed: float,
    ou_amp: np.ndarray,
    spec: SynthSpec,
) -> Trace:
    dt0 = 1.0 / spec.pen_rate
    n_max = int(np.ceil(spec.duration_limit * spec.pen_rate)) + 1
    dts = dt0 * (1.0 + 0.2 * (rng.random(n_max) - 0.5))
    dts[0] = 0.0
    t = np.cumsum(dts)
    pos = np.cumsum(speed * dts)

    total = arc[-1]
    done = np.flatnonzero(pos >= total)
    if done.size:
        end = done[0] + 1
        t, pos = t[:end], np.minimum(pos[:end], total)
    else:
        keep = t <= spec.duration_limit
        t, pos = t[keep], pos[keep]

    xy = np.stack(
        [np.interp(pos, arc, template[:, 0]), np.interp(pos, arc, template[:, 1])],
        axis=1,
    )
    # per-trial, per-axis perturbation bandwidth (smoothness varies trial to
    # trial independently of amplitude)
    rates = spec.ou_rate * np.exp(0.3 * rng.standard_normal(2))
    noise = rng.standard_normal((len(t), 2))
    ou = np.empty_like(noise)
    for axis in range(2):
        a = np.exp(-rates[axis] * dt0)
        ou[:, axis] = lfilter([np.sqrt(1.0 - a * a)], [1.0, -a], noise[:, axis])
    samples = np.column_stack([t, xy + ou * ou_amp])
    return Trace(samples, template, spec.duration_limit)


def _session_scores(traces: list[Trace], conditions: np.ndarray) -> np.ndarray:
    """Session-wide behavioral scores: full-data shrinkage LDA on the
    standard features (same construction the behavioral pipeline exports)."""
    features = feature_matrix(traces, FeatureSet.STANDARD)
    x, _ = preprocess_features(features, features)
    model = fit_lda(x, conditions)
    return decision_scores(model, x)


def _synth_epoch_bank(
    rng: np.random.Generator,
    sources: tuple[SourceSpec, ...],
    n_channels: int,
    snr: float,
    z: np.ndarray,
    conditions: np.ndarray,
    n_samples: int,
    sample_rate: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Returns (epochs (n,C,T), mixing (S,C), variance factors (S,n), noise std)."""
    n = len(conditions)
    epochs = np.zeros((n, n_channels, n_samples))
    mixing = np.zeros((len(sources), n_channels))
    factors = np.zeros((len(sources), n))

    for si, src in enumerate(sources):
        if src.mixing is not None:
            m = np.asarray(src.mixing, dtype=float)
        else:
            m = rng.standard_normal(n_channels)
        m = m / np.linalg.norm(m)
        mixing[si] = m

        g = 1.0 + src.gain_score * z + src.gain_condition * conditions.astype(float)
        g = np.maximum(g, MIN_VARIANCE_FACTOR)
        factors[si] = g

        band = BAND_BY_NAME[src.band]
        white = rng.standard_normal((n, n_samples))
        narrow = bandpass_array(white, band, sample_rate)
        narrow = narrow / narrow.std(axis=1, keepdims=True)
        narrow = narrow * np.sqrt(g)[:, None]
        epochs += m[None, :, None] * narrow[:, None, :]

    signal_power = factors.mean(axis=1).sum() / n_channels if len(sources) else 1.0
    noise_std = float(np.sqrt(signal_power / snr)) if len(sources) else 1.0
    epochs += noise_std * rng.standard_normal(epochs.shape)
    return epochs, mixing, factors, noise_std


def generate_planted_epochs(
    n_epochs: int,
    n_channels: int = 8,
    sources: tuple[SourceSpec, ...] = (SourceSpec(),),
    snr: float = 3.0,
    epoch_duration: float = 2.0,
    sample_rate: float = 300.0,
    conditions: np.ndarray | None = None,
    z: np.ndarray | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, GroundTruth]:
    """Planted epochs without the behavioral layer: (epochs, z, truth).

    z defaults to standard-normal draws; conditions default to all OFF.
    """
    rng = np.random.default_rng(seed)
    if conditions is None:
        conditions = np.zeros(n_epochs, dtype=bool)
    conditions = np.asarray(conditions, dtype=bool)
    if z is None:
        z = rng.standard_normal(n_epochs)
    z = np.asarray(z, dtype=float)
    n_samples = int(round(epoch_duration * sample_rate))
    epochs, mixing, factors, noise_std = _synth_epoch_bank(
        rng, tuple(sources), n_channels, snr, z, conditions, n_samples, sample_rate
    )
    truth = GroundTruth(
        conditions=conditions,
        latent=z,
        speeds=np.zeros(n_epochs),
        comodulation=z,
        mixing=mixing,
        source_bands=tuple(s.band for s in sources),
        variance_factors=factors,
        noise_std=noise_std,
    )
    return epochs, z, truth


def generate_session(spec: SynthSpec) -> tuple[Session, GroundTruth]:
    """Generate a full session (traces, optionally epochs) plus ground truth.

    Blocks alternate OFF, ON, OFF, ... Epoch source power comodulates with
    the session-wide behavioral score (or the latent kinematic state) and
    the DBS condition, per the spec's gains.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    template = default_template()
    seg = np.linalg.norm(np.diff(template, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])

    n_trials = spec.n_blocks * spec.trials_per_block
    conditions_block = [
        DbsCondition.ON if b % 2 else DbsCondition.OFF for b in range(spec.n_blocks)
    ]
    conditions = np.array(
        [c is DbsCondition.ON for c in conditions_block for _ in range(spec.trials_per_block)]
    )

    latent = rng.standard_normal(n_trials)
    speed_mult = np.where(conditions, spec.kinematic.speed_on, 1.0)
    jitter_mult = np.where(conditions, spec.kinematic.jitter_on, 1.0)
    speeds = spec.base_speed * speed_mult * np.exp(spec.speed_sigma * latent)
    # smoothness varies per trial and per axis (independent of drawing speed)
    ou_amps = spec.ou_amplitude * jitter_mult[:, None] * np.exp(
        spec.ou_jitter_sigma * rng.standard_normal((n_trials, 2))
    )

    traces = [
        _synth_trace(rng, template, arc, speeds[i], ou_amps[i], spec)
        for i in range(n_trials)
    ]

    scores = None
    epochs = None
    truth_extra: dict = {}
    if spec.neural is not None:
        ns = spec.neural
        if ns.comodulate_with == "copydraw":
            scores = _session_scores(traces, conditions)
            z = scores.copy()
        else:
            z = latent.copy()
        if ns.orthogonalize_condition:
            # match first AND second moments across conditions: the log-power
            # features are concave in the variance factor, so a class variance
            # difference alone would leak condition information
            z = z.astype(float)
            for mask in (conditions, ~conditions):
                z[mask] -= z[mask].mean()
                sd_class = z[mask].std()
                if sd_class > 0:
                    z[mask] /= sd_class
        sd = z.std()
        if sd == 0:
            raise InvalidSpecError("comodulation target is constant")
        z = (z - z.mean()) / sd
        n_samples = int(round(ns.epoch_duration * ns.sample_rate))
        bank, mixing, factors, noise_std = _synth_epoch_bank(
            rng, ns.sources, ns.n_channels, ns.snr, z, conditions, n_samples,
            ns.sample_rate,
        )
        epochs = bank
        truth_extra = dict(
            comodulation=z,
            mixing=mixing,
            source_bands=tuple(s.band for s in ns.sources),
            variance_factors=factors,
            noise_std=noise_std,
        )

    channel_names = (
        tuple(f"ch{c}" for c in range(spec.neural.n_channels))
        if spec.neural is not None
        else ()
    )
    blocks = []
    for b in range(spec.n_blocks):
        trials = []
        for k in range(spec.trials_per_block):
            i = b * spec.trials_per_block + k
            neural = None
            if epochs is not None:
                neural = NeuralEpoch(
                    epochs[i],
                    spec.neural.sample_rate,
                    channel_names,
                    spec.neural.modality,
                )
            trials.append(Trial(traces[i], neural))
        blocks.append(Block(b, conditions_block[b], trials))
    modality = spec.neural.modality if spec.neural is not None else Modality.EEG
    session = Session(spec.session_id, blocks, modality)

    truth = GroundTruth(
        conditions=conditions,
        latent=latent,
        speeds=speeds,
        copydraw_scores=scores,
        **truth_extra,
    )
    return session, truth


def brute_force_dtw(
    points_a: np.ndarray, points_b: np.ndarray
) -> tuple[float, int, list[tuple[int, int]]]:
    """Exhaustive open-end DTW for point lists of length <= 6.

    Enumerates every monotone path with steps {(1,0),(0,1),(1,1)} from (0,0)
    to the last trace row, at any template end column; returns the minimal
    (cost, n_c, path) with cost accumulated from the path start and ties
    broken toward the shorter template prefix.
    """
    a = np.asarray(points_a, dtype=float)
    b = np.asarray(points_b, dtype=float)
    n, m = a.shape[0], b.shape[0]
    if n > 6 or m > 6:
        raise TooLargeError(f"oracle limited to 6 points per side, got {n} x {m}")
    local = cdist(a, b)

    best_cost = np.inf
    best_j = m
    best_path: list[tuple[int, int]] = []

    stack = [(0, 0, local[0, 0], [(0, 0)])]
    while stack:
        i, j, cost, path = stack.pop()
        if i == n - 1:
            if cost < best_cost or (cost == best_cost and j < best_j):
                best_cost, best_j, best_path = cost, j, path
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ii, jj = i + di, j + dj
            if ii < n and jj < m:
                stack.append((ii, jj, cost + local[ii, jj], path + [(ii, jj)]))
    return float(best_cost), best_j + 1, best_path
