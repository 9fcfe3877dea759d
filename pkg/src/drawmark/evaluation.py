"""Pipeline evaluation: chronological cross-validation, behavioral and
neural decoding, permutation chance levels, controllability, cluster
permutation tests, and the six-type outcome taxonomy.

Chrono-CV pairs chronologically adjacent blocks of opposite DBS condition as
test folds; everything else trains. Chance levels are the 95th percentile of
the metric over replicates that shuffle only the training labels, with the
test labels untouched. All randomness flows through per-replicate seeds
derived from one seed, so results do not depend on the execution schedule.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy import stats as sps

from . import dtw
from .errors import (
    DimensionMismatchError,
    EmptyTrainError,
    MissingEpochsError,
    SingleConditionError,
    TooFewTrialsError,
    UnreachableCombinationError,
)
from .kinematics import FeatureSet, feature_matrix, preprocess_features
from .linmodels import (
    LdaModel,
    ShapAttribution,
    cohens_d,
    decision_scores,
    fit_lda,
    fit_ridge,
    icc,
    linear_shap,
    mann_whitney_u,
    roc_auc,
)
from .model import DbsCondition, Modality, Session
from .mrmr import mrmr_select
from .spoc import (
    CANONICAL_BANDS,
    FittedMarker,
    FrequencyBand,
    MarkerFeatureBank,
    spoc_from_covariances,
    stack_band_covariances,
)

DEFAULT_K_SPOC = 8
DEFAULT_K_SELECT = 8
DEFAULT_RIDGE_ALPHA = 1.0
DEFAULT_N_PERMUTATIONS = 1000
DEFAULT_CHANCE_PERCENTILE = 95.0
DEFAULT_ICC_THRESHOLD = 0.5


# --- chronological cross-validation ----------------------------------------


@dataclass(frozen=True)
class ChronoFold:
    test_on_block: int
    test_off_block: int
    train_blocks: tuple[int, ...]

    @property
    def test_blocks(self) -> tuple[int, int]:
        return (self.test_on_block, self.test_off_block)


def chrono_folds(session: Session) -> list[ChronoFold]:
    """Pair adjacent blocks of opposite condition, stepping past each pair.

    Every fold's test set holds exactly one ON and one OFF block; unpaired
    blocks (e.g. a trailing block) only ever appear in training sets.
    """
    blocks = session.blocks
    conditions = [b.condition for b in blocks]
    if len(set(conditions)) < 2:
        raise SingleConditionError("chrono-CV needs both DBS conditions")
    pairs: list[tuple[int, int]] = []
    i = 0
    while i < len(blocks) - 1:
        if conditions[i] != conditions[i + 1]:
            pairs.append((i, i + 1))
            i += 2
        else:
            i += 1
    if not pairs:
        raise SingleConditionError("no adjacent pair of opposite-condition blocks")
    folds = []
    for a, b in pairs:
        on_pos, off_pos = (a, b) if conditions[a] is DbsCondition.ON else (b, a)
        train = tuple(
            blk.index for j, blk in enumerate(blocks) if j != a and j != b
        )
        if not train:
            raise EmptyTrainError(
                "fold pairing blocks "
                f"({blocks[a].index}, {blocks[b].index}) leaves no training data"
            )
        folds.append(ChronoFold(blocks[on_pos].index, blocks[off_pos].index, train))
    return folds


# --- chance estimation ------------------------------------------------------


@dataclass(eq=False)
class ChanceEstimate:
    value: float
    percentile: float
    n_permutations: int
    distribution: np.ndarray

    def to_dict(self, include_distribution: bool = False) -> dict:
        out = {
            "value": self.value,
            "percentile": self.percentile,
            "n_permutations": self.n_permutations,
        }
        if include_distribution:
            out["distribution"] = self.distribution.tolist()
        return out


def _run_replicates(replicate, n: int, percentile: float, seed: int, workers: int):
    seeds = np.random.SeedSequence(seed).spawn(n)
    rngs = [np.random.default_rng(s) for s in seeds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(replicate, rngs))
    else:
        values = [replicate(rng) for rng in rngs]
    dist = np.asarray(values, dtype=float)
    value = float(np.percentile(dist, percentile, method="linear"))
    return ChanceEstimate(value, percentile, n, dist)


# --- behavioral pipeline ----------------------------------------------------


@dataclass(eq=False)
class _FoldView:
    train_idx: np.ndarray
    test_idx: np.ndarray


@dataclass(eq=False)
class BehavioralDesign:
    """Per-trial feature matrix, labels and fold layout of one session."""

    session_id: str
    feature_set: FeatureSet
    feature_names: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray  # True = DBS ON
    block_of_trial: np.ndarray
    trial_ids: list[tuple[int, int]]
    folds: list[ChronoFold]
    _views: list["_FoldPreprocessed"] = field(default_factory=list, repr=False)

    def fold_views(self) -> list["_FoldPreprocessed"]:
        if not self._views:
            for fold in self.folds:
                train_idx = np.flatnonzero(
                    np.isin(self.block_of_trial, fold.train_blocks)
                )
                test_idx = np.flatnonzero(
                    np.isin(self.block_of_trial, fold.test_blocks)
                )
                _check_fold(self.labels, train_idx, test_idx, fold)
                x_tr, x_te = preprocess_features(
                    self.features[train_idx], self.features[test_idx]
                )
                self._views.append(
                    _FoldPreprocessed(train_idx, test_idx, x_tr, x_te)
                )
        return self._views


@dataclass(eq=False)
class _FoldPreprocessed:
    train_idx: np.ndarray
    test_idx: np.ndarray
    x_train: np.ndarray
    x_test: np.ndarray


def _check_fold(labels, train_idx, test_idx, fold) -> None:
    if len(test_idx) == 0 or len(set(labels[test_idx])) < 2:
        raise EmptyTrainError(
            f"fold {fold}: test blocks contribute no trials of both conditions"
        )
    if len(train_idx) == 0 or len(set(labels[train_idx])) < 2:
        raise EmptyTrainError(f"fold {fold}: training set lacks a condition")


def prepare_behavioral(
    session: Session, feature_set: FeatureSet = FeatureSet.STANDARD
) -> BehavioralDesign:
    folds = chrono_folds(session)
    traces, labels, block_of_trial, trial_ids = [], [], [], []
    for block in session.blocks:
        for k, trial in enumerate(block.trials):
            if trial.excluded:
                continue
            traces.append(trial.trace)
            labels.append(block.condition is DbsCondition.ON)
            block_of_trial.append(block.index)
            trial_ids.append((block.index, k))
    features = feature_matrix(traces, feature_set)
    return BehavioralDesign(
        session.id,
        feature_set,
        feature_set.feature_names,
        features,
        np.asarray(labels, dtype=bool),
        np.asarray(block_of_trial, dtype=int),
        trial_ids,
        folds,
    )


def _shuffled_labels(
    labels: np.ndarray,
    views: list,
    rng: np.random.Generator,
    max_tries: int = 100,
) -> np.ndarray:
    """One label shuffle per replicate, shared by every fold of the chrono-CV
    rerun (overlapping training sets must see correlated shuffles for the
    permutation null to match the true-label null). Redraws until every
    fold's training subset keeps >= 2 trials of both classes."""
    for _ in range(max_tries):
        permuted = labels[rng.permutation(labels.size)]
        ok = True
        for view in views:
            y = permuted[view.train_idx]
            if y.sum() < 2 or (~y).sum() < 2:
                ok = False
                break
        if ok:
            return permuted
    raise SingleConditionError(
        "could not shuffle labels without starving a training fold"
    )


def behavioral_fold_aucs(
    design: BehavioralDesign, rng: np.random.Generator | None = None
) -> list[float]:
    """Per-fold test ROC AUC; with an rng, one shuffle of the session's
    labels is used for training across all folds (test labels keep their
    identity)."""
    views = design.fold_views()
    train_labels = design.labels
    if rng is not None:
        train_labels = _shuffled_labels(design.labels, views, rng)
    aucs = []
    for view in views:
        model = fit_lda(view.x_train, train_labels[view.train_idx])
        scores = decision_scores(model, view.x_test)
        aucs.append(roc_auc(scores, design.labels[view.test_idx]))
    return aucs


@dataclass(eq=False)
class TaskPerformanceStats:
    values: np.ndarray  # per valid trial; PERFECT sentinel = +inf
    n_perfect: int
    mean_on: float
    mean_off: float
    effect_size_d: float
    mwu_u: float
    mwu_p: float
    fold_aucs: list[float]
    mean_auc: float
    mean_fraction_on: float
    mean_fraction_off: float
    mean_distance_on: float
    mean_distance_off: float


def _task_performance_stats(
    session: Session, design: BehavioralDesign
) -> TaskPerformanceStats:
    perf = [dtw.task_performance(tr.trace) for _, tr in session.valid_trials()]
    values = np.array([p.value for p in perf])
    fractions = np.array([p.fraction_matched for p in perf])
    distances = np.array([p.mean_distance for p in perf])
    finite = np.isfinite(values)
    labels = design.labels
    on, off = finite & labels, finite & ~labels
    u, p = mann_whitney_u(values[on], values[off])
    d = cohens_d(values[on], values[off])

    # single-feature LDA over the same folds, sentinel trials dropped
    aucs = []
    for fold in design.folds:
        tr = np.isin(design.block_of_trial, fold.train_blocks) & finite
        te = np.isin(design.block_of_trial, fold.test_blocks) & finite
        x_tr, x_te = preprocess_features(
            values[tr][:, None], values[te][:, None]
        )
        model = fit_lda(x_tr, labels[tr])
        aucs.append(roc_auc(decision_scores(model, x_te), labels[te]))
    return TaskPerformanceStats(
        values=values,
        n_perfect=int((~finite).sum()),
        mean_on=float(values[on].mean()),
        mean_off=float(values[off].mean()),
        effect_size_d=d,
        mwu_u=u,
        mwu_p=p,
        fold_aucs=aucs,
        mean_auc=float(np.mean(aucs)),
        mean_fraction_on=float(fractions[labels].mean()),
        mean_fraction_off=float(fractions[~labels].mean()),
        mean_distance_on=float(distances[labels].mean()),
        mean_distance_off=float(distances[~labels].mean()),
    )


@dataclass(eq=False)
class BehavioralResult:
    design: BehavioralDesign
    fold_aucs: list[float]
    mean_auc: float
    scores: np.ndarray  # session-wide CopyDraw scores (full-data model)
    score_icc: float
    model: LdaModel
    shap: ShapAttribution
    chance: ChanceEstimate | None = None
    task_performance: TaskPerformanceStats | None = None

    @property
    def significant(self) -> bool | None:
        if self.chance is None:
            return None
        return self.mean_auc > self.chance.value


def behavioral_decode(
    session: Session | BehavioralDesign,
    feature_set: FeatureSet = FeatureSet.STANDARD,
    include_task_performance: bool = False,
) -> BehavioralResult:
    """Chrono-CV DBS classification from kinematic features.

    Also fits one model on the full session to produce the session-wide
    per-trial scores used as neural-decoding labels, with SHAP attributions.
    (Labels from the full fit are mildly optimistic; reports carry the
    per-fold AUC as the generalization estimate.)
    """
    if isinstance(session, BehavioralDesign):
        design, session_obj = session, None
        if include_task_performance:
            raise DimensionMismatchError(
                "task performance stats need the full session, not a design"
            )
    else:
        design = prepare_behavioral(session, feature_set)
        session_obj = session
    fold_aucs = behavioral_fold_aucs(design)

    x_all, _ = preprocess_features(design.features, design.features)
    model = fit_lda(x_all, design.labels)
    scores = decision_scores(model, x_all)
    background = x_all.mean(axis=0)
    shap = linear_shap(model, x_all, background)
    shap.feature_names = design.feature_names
    score_icc = icc(scores, design.labels)

    task_stats = None
    if include_task_performance and session_obj is not None:
        task_stats = _task_performance_stats(session_obj, design)

    return BehavioralResult(
        design=design,
        fold_aucs=fold_aucs,
        mean_auc=float(np.mean(fold_aucs)),
        scores=scores,
        score_icc=score_icc,
        model=model,
        shap=shap,
        task_performance=task_stats,
    )


# --- neural pipeline ---------------------------------------------------------


@dataclass(eq=False)
class NeuralDesign:
    """Band-filtered epoch covariances, targets and fold layout."""

    session_id: str
    modality: Modality
    bands: tuple[FrequencyBand, ...]
    sample_rate: float
    covs: np.ndarray  # (n_trials, n_bands, channels, channels)
    labels: np.ndarray
    targets: np.ndarray
    target_kind: str
    block_of_trial: np.ndarray
    trial_ids: list[tuple[int, int]]
    folds: list[ChronoFold]
    k_spoc: int = DEFAULT_K_SPOC
    k_select: int = DEFAULT_K_SELECT
    alpha: float = DEFAULT_RIDGE_ALPHA
    _views: list[_FoldView] = field(default_factory=list, repr=False)

    @property
    def n_channels(self) -> int:
        return self.covs.shape[-1]

    def fold_views(self) -> list[_FoldView]:
        if not self._views:
            for fold in self.folds:
                train_idx = np.flatnonzero(
                    np.isin(self.block_of_trial, fold.train_blocks)
                )
                test_idx = np.flatnonzero(
                    np.isin(self.block_of_trial, fold.test_blocks)
                )
                _check_fold(self.labels, train_idx, test_idx, fold)
                self._views.append(_FoldView(train_idx, test_idx))
        return self._views


def prepare_neural(
    session: Session,
    targets: np.ndarray,
    target_kind: str = "copydraw",
    bands: tuple[FrequencyBand, ...] = CANONICAL_BANDS,
    k_spoc: int = DEFAULT_K_SPOC,
    k_select: int = DEFAULT_K_SELECT,
    alpha: float = DEFAULT_RIDGE_ALPHA,
) -> NeuralDesign:
    """Band-pass filter all epochs once and cache per-band covariances."""
    folds = chrono_folds(session)
    valid = session.valid_trials()
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(valid),):
        raise DimensionMismatchError(
            f"{len(valid)} valid trials but {targets.shape[0]} targets"
        )
    epochs, labels, block_of_trial, trial_ids = [], [], [], []
    for block, trial in valid:
        if trial.neural is None:
            raise MissingEpochsError(
                f"trial in block {block.index} has no neural epoch"
            )
        epochs.append(trial.neural)
        labels.append(block.condition is DbsCondition.ON)
        block_of_trial.append(block.index)
    for block in session.blocks:
        for k, trial in enumerate(block.trials):
            if not trial.excluded:
                trial_ids.append((block.index, k))

    sample_rate = epochs[0].sample_rate
    n_ch = epochs[0].n_channels
    covs = np.empty((len(epochs), len(bands), n_ch, n_ch))
    # batch the filtering per distinct epoch length
    lengths = np.array([e.n_samples for e in epochs])
    for n_s in np.unique(lengths):
        idx = np.flatnonzero(lengths == n_s)
        stacked = np.stack([epochs[i].data for i in idx])
        covs[idx] = stack_band_covariances(stacked, bands, sample_rate)

    return NeuralDesign(
        session_id=session.id,
        modality=session.modality,
        bands=tuple(bands),
        sample_rate=sample_rate,
        covs=covs,
        labels=np.asarray(labels, dtype=bool),
        targets=targets,
        target_kind=target_kind,
        block_of_trial=np.asarray(block_of_trial, dtype=int),
        trial_ids=trial_ids,
        folds=folds,
    )


def _fit_marker(design: NeuralDesign, idx: np.ndarray) -> FittedMarker:
    """Fit the frequency/spatial bank, normalization, selection and ridge on
    the trials in ``idx``."""
    covs_tr = design.covs[idx]
    z_tr = design.targets[idx]
    n_ch = design.n_channels
    if design.modality is Modality.EEG:
        k_eff = min(design.k_spoc, n_ch)
        filters = np.empty((len(design.bands), k_eff, n_ch))
        pats = np.empty_like(filters)
        eigs = np.empty((len(design.bands), k_eff))
        for bi, band in enumerate(design.bands):
            comps = spoc_from_covariances(covs_tr[:, bi], z_tr, k_eff, band)
            for ki, comp in enumerate(comps):
                filters[bi, ki] = comp.filter
                pats[bi, ki] = comp.pattern
                eigs[bi, ki] = comp.eigenvalue
        bank = MarkerFeatureBank(
            "spoc", design.bands, design.sample_rate, n_ch, filters, pats, eigs
        )
    else:
        bank = MarkerFeatureBank(
            "channel_power", design.bands, design.sample_rate, n_ch
        )

    feats_tr = bank.features_from_covariances(covs_tr)
    mean = feats_tr.mean(axis=0)
    std = feats_tr.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    feats_norm = (feats_tr - mean) / safe

    k_sel = min(design.k_select, feats_norm.shape[1])
    selection = mrmr_select(feats_norm, z_tr, k_sel)
    sel = selection.selected_indices
    ridge = fit_ridge(feats_norm[:, list(sel)], z_tr, design.alpha)

    return FittedMarker(
        bank=bank,
        feature_mean=mean,
        feature_std=std,
        selected=sel,
        ridge_weights=ridge.weights,
        ridge_bias=ridge.bias,
        ridge_alpha=design.alpha,
        target_kind=design.target_kind,
    )


def _safe_pearson(a: np.ndarray, b: np.ndarray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def neural_fold_rs(
    design: NeuralDesign, rng: np.random.Generator | None = None
) -> list[float]:
    """Per-fold Pearson r between predictions and true targets; with an rng,
    one shuffle of the session's targets is used for training across all
    folds (test targets keep their identity)."""
    views = design.fold_views()
    if rng is None:
        fit_design = design
    else:
        permuted = design.targets[rng.permutation(design.targets.size)]
        fit_design = _shuffled_design(design, permuted)
    out = []
    for view in views:
        marker = _fit_marker(fit_design, view.train_idx)
        pred = marker.predict_from_covariances(design.covs[view.test_idx])
        out.append(_safe_pearson(pred, design.targets[view.test_idx]))
    return out


def _shuffled_design(design: NeuralDesign, permuted_targets: np.ndarray) -> NeuralDesign:
    clone = NeuralDesign(
        session_id=design.session_id,
        modality=design.modality,
        bands=design.bands,
        sample_rate=design.sample_rate,
        covs=design.covs,
        labels=design.labels,
        targets=permuted_targets,
        target_kind=design.target_kind,
        block_of_trial=design.block_of_trial,
        trial_ids=design.trial_ids,
        folds=design.folds,
        k_spoc=design.k_spoc,
        k_select=design.k_select,
        alpha=design.alpha,
    )
    clone._views = design.fold_views()
    return clone


@dataclass(eq=False)
class NeuralResult:
    design: NeuralDesign
    fold_rs: list[float]
    mean_r: float
    marker: FittedMarker
    predictions: np.ndarray  # per valid trial, from its test fold (nan if untested)
    band_counts: dict[str, int]
    chance: ChanceEstimate | None = None

    @property
    def significant(self) -> bool | None:
        if self.chance is None:
            return None
        return self.mean_r > self.chance.value


def neural_decode(
    session_or_design: Session | NeuralDesign,
    targets: np.ndarray | None = None,
    target_kind: str = "copydraw",
    bands: tuple[FrequencyBand, ...] = CANONICAL_BANDS,
    k_spoc: int = DEFAULT_K_SPOC,
    k_select: int = DEFAULT_K_SELECT,
    alpha: float = DEFAULT_RIDGE_ALPHA,
) -> NeuralResult:
    """Chrono-CV regression of behavioral targets from neural epochs.

    Per fold the full pipeline is refit on the training blocks (filterbank
    SPoC or channel band powers, z-scoring, MRMR to k features, ridge) and
    applied frozen to the test pair. The exported marker is refit on all
    trials.
    """
    if isinstance(session_or_design, NeuralDesign):
        design = session_or_design
    else:
        if targets is None:
            raise DimensionMismatchError("targets required when passing a session")
        design = prepare_neural(
            session_or_design, targets, target_kind, bands, k_spoc, k_select, alpha
        )
    fold_rs = neural_fold_rs(design)

    predictions = np.full(design.targets.shape, np.nan)
    for view in design.fold_views():
        marker = _fit_marker(design, view.train_idx)
        predictions[view.test_idx] = marker.predict_from_covariances(
            design.covs[view.test_idx]
        )

    final_marker = _fit_marker(design, np.arange(design.covs.shape[0]))
    band_counts = {band.name: 0 for band in design.bands}
    for feat in final_marker.selected:
        band_counts[final_marker.bank.band_of_feature(feat).name] += 1

    return NeuralResult(
        design=design,
        fold_rs=fold_rs,
        mean_r=float(np.mean(fold_rs)),
        marker=final_marker,
        predictions=predictions,
        band_counts=band_counts,
    )


# --- controllability ---------------------------------------------------------


@dataclass(eq=False)
class ControllabilityResult:
    fold_aucs: list[float]
    mean_auc: float
    chance: ChanceEstimate | None = None

    @property
    def significant(self) -> bool | None:
        if self.chance is None:
            return None
        return self.mean_auc > self.chance.value


def controllability_fold_aucs(
    design: NeuralDesign,
    marker: FittedMarker,
    rng: np.random.Generator | None = None,
) -> list[float]:
    feats = marker.normalized_features(design.covs)[:, list(marker.selected)]
    views = design.fold_views()
    train_labels = design.labels
    if rng is not None:
        train_labels = _shuffled_labels(design.labels, views, rng)
    out = []
    for view in views:
        model = fit_lda(feats[view.train_idx], train_labels[view.train_idx])
        scores = decision_scores(model, feats[view.test_idx])
        out.append(roc_auc(scores, design.labels[view.test_idx]))
    return out


def controllability(
    session_or_design: Session | NeuralDesign,
    marker: FittedMarker,
    targets: np.ndarray | None = None,
) -> ControllabilityResult:
    """DBS classifiability of a marker's frozen features.

    The frequency and spatial filters stay fixed; only an LDA on the selected
    features is refit per chrono-CV fold, giving the regression-feature ROC
    AUC for DBS ON vs OFF.
    """
    if isinstance(session_or_design, NeuralDesign):
        design = session_or_design
    else:
        placeholder = (
            targets
            if targets is not None
            else np.zeros(session_or_design.n_valid_trials)
        )
        design = prepare_neural(
            session_or_design, placeholder, "condition", marker.bank.bands
        )
    if design.bands != marker.bank.bands:
        raise DimensionMismatchError("design and marker disagree on bands")
    fold_aucs = controllability_fold_aucs(design, marker)
    return ControllabilityResult(fold_aucs, float(np.mean(fold_aucs)))


# --- permutation chance -------------------------------------------------------


def permutation_chance(
    pipeline: str,
    design: BehavioralDesign | NeuralDesign,
    n: int = DEFAULT_N_PERMUTATIONS,
    percentile: float = DEFAULT_CHANCE_PERCENTILE,
    seed: int = 0,
    workers: int = 1,
    marker: FittedMarker | None = None,
) -> ChanceEstimate:
    """Chance level of a pipeline's mean metric under training-label shuffles.

    Returns the requested percentile plus the full permutation distribution.
    Replicates draw independent generators from one seed sequence, so any
    worker count produces identical results.
    """
    if pipeline == "behavioral":
        if not isinstance(design, BehavioralDesign):
            raise DimensionMismatchError("behavioral chance needs a BehavioralDesign")
        replicate = lambda rng: float(np.mean(behavioral_fold_aucs(design, rng)))
    elif pipeline == "neural":
        if not isinstance(design, NeuralDesign):
            raise DimensionMismatchError("neural chance needs a NeuralDesign")
        replicate = lambda rng: float(np.mean(neural_fold_rs(design, rng)))
    elif pipeline == "controllability":
        if not isinstance(design, NeuralDesign) or marker is None:
            raise DimensionMismatchError(
                "controllability chance needs a NeuralDesign and a marker"
            )
        replicate = lambda rng: float(
            np.mean(controllability_fold_aucs(design, marker, rng))
        )
    else:
        raise DimensionMismatchError(f"unknown pipeline '{pipeline}'")
    return _run_replicates(replicate, n, percentile, seed, workers)


# --- cluster permutation test --------------------------------------------------


@dataclass(frozen=True)
class BinCluster:
    start: int
    stop: int  # exclusive
    mass: float
    p_value: float


def _welch_t_and_df(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    na, nb = a.shape[0], b.shape[0]
    va = a.var(axis=0, ddof=1) / na
    vb = b.var(axis=0, ddof=1) / nb
    denom = np.sqrt(va + vb)
    denom = np.where(denom > 0, denom, np.inf)
    t = (a.mean(axis=0) - b.mean(axis=0)) / denom
    num = (va + vb) ** 2
    den = va**2 / (na - 1) + vb**2 / (nb - 1)
    df = np.where(den > 0, num / np.where(den > 0, den, 1.0), na + nb - 2)
    return t, df


def _suprathreshold_clusters(
    t: np.ndarray, thresh: np.ndarray
) -> list[tuple[int, int, float]]:
    above = np.abs(t) > thresh
    clusters = []
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            clusters.append((start, i, float(np.abs(t[start:i]).sum())))
            start = None
    if start is not None:
        clusters.append((start, len(above), float(np.abs(t[start:]).sum())))
    return clusters


def cluster_permutation_test(
    samples_a: np.ndarray,
    samples_b: np.ndarray,
    n_perm: int = 1000,
    cluster_alpha: float = 0.05,
    report_alpha: float = 0.05,
    seed: int = 0,
) -> list[BinCluster]:
    """Cluster-based permutation test over contiguous bins.

    Per-bin Welch t values above the two-sided ``cluster_alpha`` critical
    threshold form clusters scored by summed |t|; the null distribution is
    the maximum cluster mass over label permutations. Clusters with
    p < ``report_alpha`` are returned.
    """
    a = np.atleast_2d(np.asarray(samples_a, dtype=float))
    b = np.atleast_2d(np.asarray(samples_b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise TooFewTrialsError("bin axes must match")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise TooFewTrialsError("need >= 2 trials per group")

    def clusters_of(xa: np.ndarray, xb: np.ndarray) -> list[tuple[int, int, float]]:
        t, df = _welch_t_and_df(xa, xb)
        thresh = sps.t.ppf(1 - cluster_alpha / 2.0, df)
        return _suprathreshold_clusters(t, thresh)

    observed = clusters_of(a, b)
    if not observed:
        return []

    stacked = np.vstack([a, b])
    n_a = a.shape[0]
    rng = np.random.default_rng(seed)
    null_max = np.zeros(n_perm)
    for i in range(n_perm):
        perm = rng.permutation(stacked.shape[0])
        xa, xb = stacked[perm[:n_a]], stacked[perm[n_a:]]
        cl = clusters_of(xa, xb)
        if cl:
            null_max[i] = max(mass for _, _, mass in cl)

    results = []
    for start, stop, mass in observed:
        p = (1.0 + float(np.sum(null_max >= mass))) / (1.0 + n_perm)
        if p < report_alpha:
            results.append(BinCluster(start, stop, mass, p))
    return results


# --- outcome taxonomy -----------------------------------------------------------


class OutcomeType(IntEnum):
    TYPE1 = 1  # proportional control candidate
    TYPE2 = 2  # threshold control candidate
    TYPE3 = 3  # behavioral effect, decoding failed, effect possibly too subtle
    TYPE4 = 4  # neural decoding without DBS effect: check stimulation benefit
    TYPE5 = 5  # strong behavioral effect, failed decoding: check data/pipeline
    TYPE6 = 6  # no effects: check DBS parameters


OUTCOME_DESCRIPTIONS = {
    OutcomeType.TYPE1: "suitable for proportional control",
    OutcomeType.TYPE2: "suitable for threshold control",
    OutcomeType.TYPE3: "DBS effect too subtle or decoding suboptimal",
    OutcomeType.TYPE4: "no behavioral DBS effect; reassess stimulation",
    OutcomeType.TYPE5: "check data quality or decoding pipeline",
    OutcomeType.TYPE6: "check DBS parameters / possible ceiling effect",
}

_OUTCOME_TABLE = {
    (True, True, True): OutcomeType.TYPE1,
    (True, True, False): OutcomeType.TYPE2,
    (True, False, False): OutcomeType.TYPE3,
    (False, True, False): OutcomeType.TYPE4,
    (True, False, True): OutcomeType.TYPE5,
    (False, False, False): OutcomeType.TYPE6,
}


@dataclass(frozen=True)
class OutcomeClassification:
    outcome: OutcomeType
    auc_significant: bool
    r_significant: bool
    icc_high: bool
    icc_threshold: float

    @property
    def description(self) -> str:
        return OUTCOME_DESCRIPTIONS[self.outcome]


def classify_outcome(
    auc: float,
    auc_chance: float,
    r: float,
    r_chance: float,
    icc_value: float,
    icc_threshold: float = DEFAULT_ICC_THRESHOLD,
) -> OutcomeClassification:
    """Map (behavioral AUC, neural r, score ICC) onto the six outcome types.

    A non-significant AUC combined with a high ICC is rejected: clearly
    separated score clusters imply linear separability, so that combination
    cannot arise.
    """
    for name, v in (("auc", auc), ("auc_chance", auc_chance), ("r", r),
                    ("r_chance", r_chance), ("icc", icc_value)):
        if not np.isfinite(v):
            raise DimensionMismatchError(f"{name} must be finite, got {v}")
    key = (auc > auc_chance, r > r_chance, icc_value >= icc_threshold)
    if not key[0] and key[2]:
        raise UnreachableCombinationError(
            "non-significant AUC with high ICC is unreachable "
            f"(auc={auc} vs chance {auc_chance}, icc={icc_value})"
        )
    return OutcomeClassification(_OUTCOME_TABLE[key], *key, icc_threshold)


def task_performance_targets(session: Session) -> np.ndarray:
    """Task-performance value per valid trial (PERFECT maps to +inf)."""
    return np.array(
        [dtw.task_performance(tr.trace).value for _, tr in session.valid_trials()]
    )
