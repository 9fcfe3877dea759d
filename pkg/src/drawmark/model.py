"""Domain types for drawing sessions: traces, trials, blocks, neural epochs.

A session is immutable after construction and safe to share across workers.
All validation happens in ``__post_init__``; a successfully constructed
object satisfies its invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvariantViolationError

MIN_TRACE_SAMPLES = 4
MAX_TRIALS_PER_BLOCK = 12

# Analysis bands reach up to 90 Hz; epochs must resolve that.
MAX_ANALYSIS_FREQ_HZ = 90.0


class DbsCondition(str, Enum):
    ON = "ON"
    OFF = "OFF"


class Modality(str, Enum):
    EEG = "EEG"
    ECOG = "ECOG"


class ExclusionReason(str, Enum):
    NONE = "none"
    MARKER_ISSUE = "marker_issue"
    LAB_PROTOCOL = "lab_protocol"
    FRAGMENTED = "fragmented"


@dataclass(frozen=True)
class PenSample:
    """One timestamped cursor position, t in seconds since trial start."""

    t: float
    x: float
    y: float


@dataclass(eq=False)
class Trace:
    """Pen samples of one trial plus the template that was copied.

    ``samples`` is an (n, 3) array with columns (t, x, y). Timestamps must be
    non-decreasing on input; duplicates are collapsed by keeping the last
    sample so that t is strictly increasing afterwards (derivative
    computations require strict monotonicity).
    """

    samples: np.ndarray
    template: np.ndarray
    duration_limit: float = float("inf")

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        template = np.asarray(self.template, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise InvariantViolationError(
                f"trace samples must be (n, 3) [t, x, y], got shape {samples.shape}"
            )
        if template.ndim != 2 or template.shape[1] != 2 or template.shape[0] < 2:
            raise InvariantViolationError(
                f"template must be (m >= 2, 2), got shape {template.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise InvariantViolationError("trace contains non-finite values")
        if not np.all(np.isfinite(template)):
            raise InvariantViolationError("template contains non-finite values")
        t = samples[:, 0]
        if t.size and t[0] < 0:
            raise InvariantViolationError("trace timestamps must be >= 0")
        dt = np.diff(t)
        if np.any(dt < 0):
            raise InvariantViolationError("trace timestamps must be non-decreasing")
        # duplicate timestamps: keep the last sample for each t
        keep = np.ones(len(t), dtype=bool)
        keep[:-1] = dt > 0
        samples = samples[keep]
        if samples.shape[0] < MIN_TRACE_SAMPLES:
            raise InvariantViolationError(
                f"trace needs >= {MIN_TRACE_SAMPLES} samples after de-duplication, "
                f"got {samples.shape[0]}"
            )
        if not (self.duration_limit > 0):
            raise InvariantViolationError("duration_limit must be positive")
        self.samples = samples
        self.template = template

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def xy(self) -> np.ndarray:
        return self.samples[:, 1:]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_pen_samples(
        cls,
        pen_samples: list[PenSample],
        template: np.ndarray,
        duration_limit: float = float("inf"),
    ) -> "Trace":
        arr = np.array([[s.t, s.x, s.y] for s in pen_samples], dtype=float)
        return cls(arr, np.asarray(template, dtype=float), duration_limit)


@dataclass(eq=False)
class NeuralEpoch:
    """One trial's multichannel recording, channels x samples at a fixed rate."""

    data: np.ndarray
    sample_rate: float = 300.0
    channel_names: tuple[str, ...] = ()
    modality: Modality = Modality.EEG

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise InvariantViolationError(
                f"epoch data must be 2-D (channels, samples), got {data.ndim}-D"
            )
        if data.shape[0] < 1:
            raise InvariantViolationError("epoch needs at least one channel")
        if not np.all(np.isfinite(data)):
            raise InvariantViolationError("epoch contains non-finite values")
        if not (self.sample_rate > 2 * MAX_ANALYSIS_FREQ_HZ):
            raise InvariantViolationError(
                f"sample_rate must exceed {2 * MAX_ANALYSIS_FREQ_HZ} Hz to resolve "
                f"the {MAX_ANALYSIS_FREQ_HZ} Hz analysis band, got {self.sample_rate}"
            )
        if self.channel_names and len(self.channel_names) != data.shape[0]:
            raise InvariantViolationError(
                f"{len(self.channel_names)} channel names for {data.shape[0]} channels"
            )
        self.data = data
        self.channel_names = tuple(self.channel_names)
        self.modality = Modality(self.modality)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class Trial:
    trace: Trace
    neural: NeuralEpoch | None = None
    excluded: bool = False
    exclusion_reason: ExclusionReason = ExclusionReason.NONE
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.exclusion_reason = ExclusionReason(self.exclusion_reason)
        if self.excluded != (self.exclusion_reason is not ExclusionReason.NONE):
            raise InvariantViolationError(
                "excluded flag and exclusion_reason disagree: "
                f"excluded={self.excluded}, reason={self.exclusion_reason.value}"
            )


@dataclass(eq=False)
class Block:
    index: int
    condition: DbsCondition
    trials: list[Trial]

    def __post_init__(self) -> None:
        self.condition = DbsCondition(self.condition)
        n_valid = sum(1 for tr in self.trials if not tr.excluded)
        if n_valid > MAX_TRIALS_PER_BLOCK:
            raise InvariantViolationError(
                f"block {self.index} has {n_valid} non-excluded trials "
                f"(max {MAX_TRIALS_PER_BLOCK})"
            )

    def valid_trials(self) -> list[Trial]:
        return [tr for tr in self.trials if not tr.excluded]


@dataclass(eq=False)
class Session:
    id: str
    blocks: list[Block]
    modality: Modality = Modality.EEG

    def __post_init__(self) -> None:
        self.modality = Modality(self.modality)
        indices = [b.index for b in self.blocks]
        if any(j <= i for i, j in zip(indices, indices[1:])):
            raise InvariantViolationError(
                f"block indices must be strictly increasing, got {indices}"
            )
        conditions = {b.condition for b in self.blocks}
        if len(conditions) < 2:
            raise InvariantViolationError(
                "session must contain at least one ON and one OFF block"
            )
        self._check_epoch_uniformity()

    def _check_epoch_uniformity(self) -> None:
        ref: NeuralEpoch | None = None
        for block in self.blocks:
            for trial in block.trials:
                ep = trial.neural
                if ep is None:
                    continue
                if ref is None:
                    ref = ep
                    continue
                if ep.n_channels != ref.n_channels:
                    raise InvariantViolationError(
                        "epochs disagree on channel count: "
                        f"{ep.n_channels} vs {ref.n_channels}"
                    )
                if ep.channel_names != ref.channel_names:
                    raise InvariantViolationError("epochs disagree on channel names")
                if ep.sample_rate != ref.sample_rate:
                    raise InvariantViolationError(
                        "epochs disagree on sample rate: "
                        f"{ep.sample_rate} vs {ref.sample_rate}"
                    )

    def valid_trials(self) -> list[tuple[Block, Trial]]:
        """Non-excluded trials in chronological order, with their block."""
        out = []
        for block in self.blocks:
            for trial in block.trials:
                if not trial.excluded:
                    out.append((block, trial))
        return out

    @property
    def n_valid_trials(self) -> int:
        return len(self.valid_trials())
