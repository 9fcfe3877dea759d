"""Filterbank band-pass filtering, SPoC spatial filters, forward-model
patterns, log band-power features, and Welch PSD estimation.

SPoC solves the generalized eigenproblem C_z w = lambda C w, where C_z is the
target-weighted mean epoch covariance and C the plain mean; the projected
band power of an epoch, w' C_e w, then covaries maximally with the target.
Components are ranked by |lambda| so positive and negative comodulation
compete on equal footing; downstream feature selection resolves redundancy.

The per-channel-band-power variant used for strip recordings reuses the same
filterbank and returns log variance per channel and band.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg, signal

from .errors import (
    BandOutOfRangeError,
    DegenerateTargetError,
    DimensionMismatchError,
    EigenFailureError,
    KTooLargeError,
    SegmentTooLongError,
    SingularProjectionError,
    TooFewSamplesError,
)
from .model import NeuralEpoch

# ridge factor stabilizing the average covariance before the eigensolve;
# referenced or rank-reduced data can be rank-deficient
EIGEN_STABILIZER = 1e-6


@dataclass(frozen=True)
class FrequencyBand:
    name: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0 < self.lo < self.hi):
            raise BandOutOfRangeError(f"invalid band {self.name}: ({self.lo}, {self.hi})")


#: theta through high gamma; upper edge stays below 90 Hz to avoid the second
#: line-noise harmonic and the stimulation artifact.
CANONICAL_BANDS = (
    FrequencyBand("theta", 4.0, 8.0),
    FrequencyBand("alpha", 8.0, 12.0),
    FrequencyBand("beta", 12.0, 30.0),
    FrequencyBand("gamma", 30.0, 45.0),
    FrequencyBand("gamma_high", 55.0, 90.0),
)

BAND_BY_NAME = {b.name: b for b in CANONICAL_BANDS}


def band_sos(band: FrequencyBand, sample_rate: float) -> np.ndarray:
    if band.hi >= sample_rate / 2:
        raise BandOutOfRangeError(
            f"band {band.name} ({band.lo}-{band.hi} Hz) exceeds Nyquist "
            f"({sample_rate / 2} Hz)"
        )
    return signal.butter(
        4, [band.lo, band.hi], btype="bandpass", fs=sample_rate, output="sos"
    )


def bandpass_array(
    data: np.ndarray, band: FrequencyBand, sample_rate: float
) -> np.ndarray:
    """Zero-phase 4th-order Butterworth band-pass along the last axis.

    Forward-backward application; edges are padded by reflection over one
    settling length before filtering.
    """
    sos = band_sos(band, sample_rate)
    return signal.sosfiltfilt(sos, np.asarray(data, dtype=float), axis=-1)


def bandpass(epoch: NeuralEpoch, band: FrequencyBand) -> NeuralEpoch:
    filtered = bandpass_array(epoch.data, band, epoch.sample_rate)
    return NeuralEpoch(filtered, epoch.sample_rate, epoch.channel_names, epoch.modality)


def epoch_cov(data: np.ndarray) -> np.ndarray:
    """Within-epoch covariance: channel means removed, denominator n_samples."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DimensionMismatchError("epoch data must be (channels, samples)")
    if data.shape[1] < 2:
        raise TooFewSamplesError("covariance needs >= 2 samples")
    centered = data - data.mean(axis=1, keepdims=True)
    return centered @ centered.T / data.shape[1]


def stack_band_covariances(
    epochs: np.ndarray, bands: tuple[FrequencyBand, ...], sample_rate: float
) -> np.ndarray:
    """Per-epoch covariances of band-filtered data.

    epochs: (n_epochs, channels, samples) with a common sample rate.
    Returns (n_epochs, n_bands, channels, channels). Filtering is batched
    across epochs and channels per band.
    """
    epochs = np.asarray(epochs, dtype=float)
    n_e, n_ch, n_s = epochs.shape
    covs = np.empty((n_e, len(bands), n_ch, n_ch))
    flat = epochs.reshape(n_e * n_ch, n_s)
    for bi, band in enumerate(bands):
        filtered = bandpass_array(flat, band, sample_rate).reshape(n_e, n_ch, n_s)
        filtered = filtered - filtered.mean(axis=2, keepdims=True)
        covs[:, bi] = np.einsum("ect,edt->ecd", filtered, filtered) / n_s
    return covs


@dataclass(eq=False)
class SpocComponent:
    """One spatial filter with its forward-model pattern.

    The filter is normalized to w' C w = 1 under the training-average
    covariance C; eigenvalue = cov(projected band power, target).
    """

    filter: np.ndarray
    pattern: np.ndarray
    eigenvalue: float
    band: FrequencyBand


def spoc_from_covariances(
    covs: np.ndarray, z: np.ndarray, k: int, band: FrequencyBand
) -> list[SpocComponent]:
    """Fit SPoC filters from per-epoch covariances of one band.

    z is z-scored internally (constant targets are rejected); components are
    the k generalized eigenvectors with largest |eigenvalue|.
    """
    covs = np.asarray(covs, dtype=float)
    z = np.asarray(z, dtype=float)
    n_e, n_ch = covs.shape[0], covs.shape[1]
    if covs.shape[0] != z.shape[0]:
        raise DimensionMismatchError("one target per epoch required")
    if k > n_ch:
        raise KTooLargeError(f"k={k} exceeds {n_ch} channels")
    sd = z.std()
    if sd == 0:
        raise DegenerateTargetError("target is constant after z-scoring")
    if n_e <= n_ch:
        warnings.warn(
            f"SPoC fit with {n_e} epochs for {n_ch} channels; "
            "covariance estimates may be unstable",
            stacklevel=2,
        )
    zs = (z - z.mean()) / sd
    c_mean = covs.mean(axis=0)
    c_z = np.einsum("e,eij->ij", zs, covs) / n_e
    c_stab = c_mean + EIGEN_STABILIZER * (np.trace(c_mean) / n_ch) * np.eye(n_ch)
    try:
        eigvals, eigvecs = linalg.eigh(c_z, c_stab)
    except linalg.LinAlgError as exc:
        raise EigenFailureError(f"generalized eigensolve failed: {exc}") from exc
    order = np.argsort(-np.abs(eigvals))[:k]
    components = []
    for idx in order:
        w = eigvecs[:, idx]
        # eigh normalizes w' C_stab w = 1 already; renormalize defensively
        q = float(w @ c_stab @ w)
        w = w / np.sqrt(q)
        if w[np.argmax(np.abs(w))] < 0:
            w = -w
        pattern = c_stab @ w
        components.append(SpocComponent(w, pattern, float(eigvals[idx]), band))
    return components


def fit_spoc(
    epochs: list[NeuralEpoch] | np.ndarray,
    z: np.ndarray,
    k: int,
    band: FrequencyBand | None = None,
) -> list[SpocComponent]:
    """SPoC on already band-filtered epochs (list of epochs or 3-D array)."""
    if isinstance(epochs, np.ndarray):
        data = epochs
    else:
        data = np.stack([e.data for e in epochs])
    covs = np.stack([epoch_cov(e) for e in data])
    if band is None:
        band = FrequencyBand("unspecified", 1.0, 2.0)
    return spoc_from_covariances(covs, z, k, band)


def spoc_power(component: SpocComponent, epoch: NeuralEpoch | np.ndarray) -> float:
    """log(w' C_e w) of a band-filtered epoch under one component."""
    data = epoch.data if isinstance(epoch, NeuralEpoch) else np.asarray(epoch, float)
    if data.shape[0] != component.filter.shape[0]:
        raise DimensionMismatchError(
            f"component has {component.filter.shape[0]} channels, "
            f"epoch has {data.shape[0]}"
        )
    c_e = epoch_cov(data)
    return float(np.log(component.filter @ c_e @ component.filter))


def patterns(filters: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Forward-model patterns A = C W (W' C W)^-1 for filter columns W."""
    filters = np.atleast_2d(np.asarray(filters, dtype=float))
    if filters.shape[0] == 1 and cov.shape[0] != 1:
        filters = filters.T
    cw = cov @ filters
    gram = filters.T @ cw
    try:
        return cw @ np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularProjectionError(f"W' C W is singular: {exc}") from exc


def log_band_powers(covs: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """log(w' C_e w) for every epoch covariance and filter row."""
    return np.log(np.einsum("eij,ki,kj->ek", covs, filters, filters))


def ecog_band_powers(
    epoch: NeuralEpoch | np.ndarray,
    bands: tuple[FrequencyBand, ...] = CANONICAL_BANDS,
    sample_rate: float | None = None,
) -> np.ndarray:
    """Log variance per channel and band; bands vary slowest.

    Epochs are expected common-average referenced upstream.
    """
    if isinstance(epoch, NeuralEpoch):
        data, rate = epoch.data, epoch.sample_rate
    else:
        data, rate = np.asarray(epoch, dtype=float), sample_rate
        if rate is None:
            raise DimensionMismatchError("sample_rate required for raw arrays")
    out = []
    for band in bands:
        filtered = bandpass_array(data, band, rate)
        out.append(np.log(filtered.var(axis=-1)))
    return np.concatenate(out)


def welch_psd(
    epoch: NeuralEpoch | np.ndarray,
    segment_length: int,
    overlap: int | None = None,
    sample_rate: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed averaged periodogram, one-sided density normalization.

    Returns (freqs, psd) with psd of shape (channels, n_freqs); the integral
    of the density approximates the per-channel signal variance.
    """
    if isinstance(epoch, NeuralEpoch):
        data, rate = epoch.data, epoch.sample_rate
    else:
        data, rate = np.atleast_2d(np.asarray(epoch, dtype=float)), sample_rate
        if rate is None:
            raise DimensionMismatchError("sample_rate required for raw arrays")
    if segment_length > data.shape[-1]:
        raise SegmentTooLongError(
            f"segment_length {segment_length} exceeds {data.shape[-1]} samples"
        )
    if overlap is None:
        overlap = segment_length // 2
    freqs, psd = signal.welch(
        data,
        fs=rate,
        window="hann",
        nperseg=segment_length,
        noverlap=overlap,
        detrend="constant",
        scaling="density",
        axis=-1,
    )
    return freqs, psd


# --- portable fitted marker -------------------------------------------------


@dataclass(eq=False)
class MarkerFeatureBank:
    """Frozen frequency/spatial feature definitions of a fitted marker.

    kind "spoc": filters has shape (n_bands, k, channels).
    kind "channel_power": plain per-channel log band power, no filters.
    Feature order is band-major in both cases.
    """

    kind: str
    bands: tuple[FrequencyBand, ...]
    sample_rate: float
    n_channels: int
    filters: np.ndarray | None = None
    patterns: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        per_band = self.filters.shape[1] if self.kind == "spoc" else self.n_channels
        return len(self.bands) * per_band

    @property
    def feature_labels(self) -> tuple[str, ...]:
        labels = []
        for band in self.bands:
            if self.kind == "spoc":
                labels += [f"{band.name}:spoc{k}" for k in range(self.filters.shape[1])]
            else:
                labels += [f"{band.name}:ch{c}" for c in range(self.n_channels)]
        return tuple(labels)

    def band_of_feature(self, index: int) -> FrequencyBand:
        per_band = self.filters.shape[1] if self.kind == "spoc" else self.n_channels
        return self.bands[index // per_band]

    def features_from_covariances(self, covs: np.ndarray) -> np.ndarray:
        """Log-power features (n_epochs, n_features) from a covariance stack
        shaped (n_epochs, n_bands, channels, channels)."""
        if covs.shape[1] != len(self.bands) or covs.shape[2] != self.n_channels:
            raise DimensionMismatchError("covariance stack does not match bank")
        cols = []
        for bi in range(len(self.bands)):
            if self.kind == "spoc":
                cols.append(log_band_powers(covs[:, bi], self.filters[bi]))
            else:
                diag = np.einsum("eii->ei", covs[:, bi])
                cols.append(np.log(diag))
        return np.concatenate(cols, axis=1)

    def features_from_epochs(self, epochs: np.ndarray) -> np.ndarray:
        covs = stack_band_covariances(epochs, self.bands, self.sample_rate)
        return self.features_from_covariances(covs)


@dataclass(eq=False)
class FittedMarker:
    """Everything needed to re-apply a neural marker without refitting:
    band definitions, spatial filters/patterns, feature normalization from
    the training data, selected feature indices, and regression weights."""

    bank: MarkerFeatureBank
    feature_mean: np.ndarray
    feature_std: np.ndarray
    selected: tuple[int, ...]
    ridge_weights: np.ndarray
    ridge_bias: float
    ridge_alpha: float
    target_kind: str = "copydraw"

    def normalized_features(self, covs: np.ndarray) -> np.ndarray:
        feats = self.bank.features_from_covariances(covs)
        safe = np.where(self.feature_std > 0, self.feature_std, 1.0)
        return (feats - self.feature_mean) / safe

    def predict_from_covariances(self, covs: np.ndarray) -> np.ndarray:
        feats = self.normalized_features(covs)[:, list(self.selected)]
        return feats @ self.ridge_weights + self.ridge_bias

    def predict(self, epochs: np.ndarray) -> np.ndarray:
        covs = stack_band_covariances(epochs, self.bank.bands, self.bank.sample_rate)
        return self.predict_from_covariances(covs)

    def to_dict(self) -> dict:
        bank = {
            "kind": self.bank.kind,
            "bands": [[b.name, b.lo, b.hi] for b in self.bank.bands],
            "sample_rate": self.bank.sample_rate,
            "n_channels": self.bank.n_channels,
            "filters": None if self.bank.filters is None else self.bank.filters.tolist(),
            "patterns": None
            if self.bank.patterns is None
            else self.bank.patterns.tolist(),
            "eigenvalues": None
            if self.bank.eigenvalues is None
            else self.bank.eigenvalues.tolist(),
        }
        return {
            "bank": bank,
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "selected": list(self.selected),
            "ridge_weights": self.ridge_weights.tolist(),
            "ridge_bias": self.ridge_bias,
            "ridge_alpha": self.ridge_alpha,
            "target_kind": self.target_kind,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FittedMarker":
        raw_bank = payload["bank"]
        bank = MarkerFeatureBank(
            kind=raw_bank["kind"],
            bands=tuple(FrequencyBand(n, lo, hi) for n, lo, hi in raw_bank["bands"]),
            sample_rate=raw_bank["sample_rate"],
            n_channels=raw_bank["n_channels"],
            filters=None
            if raw_bank["filters"] is None
            else np.asarray(raw_bank["filters"], dtype=float),
            patterns=None
            if raw_bank["patterns"] is None
            else np.asarray(raw_bank["patterns"], dtype=float),
            eigenvalues=None
            if raw_bank["eigenvalues"] is None
            else np.asarray(raw_bank["eigenvalues"], dtype=float),
        )
        return cls(
            bank=bank,
            feature_mean=np.asarray(payload["feature_mean"], dtype=float),
            feature_std=np.asarray(payload["feature_std"], dtype=float),
            selected=tuple(payload["selected"]),
            ridge_weights=np.asarray(payload["ridge_weights"], dtype=float),
            ridge_bias=payload["ridge_bias"],
            ridge_alpha=payload["ridge_alpha"],
            target_kind=payload.get("target_kind", "copydraw"),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "FittedMarker":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
