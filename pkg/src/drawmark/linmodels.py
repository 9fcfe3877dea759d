"""Linear models and scalar statistics.

Shrinkage LDA produces the continuous per-trial score (decision-function
value, calibrated so the ON class scores >= 0 on average), ridge regression
maps neural features back onto those scores, and exact linear SHAP values
attribute score differences to single features. The remaining functions are
thin, contract-pinning wrappers for the scalar statistics used in reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    DegenerateVarianceError,
    DimensionMismatchError,
    EmptySampleError,
    SingleClassError,
    TooFewSamplesError,
)


def ledoit_wolf_cov(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Shrunk covariance (1 - d) * S + d * (tr(S)/p) * I with the closed-form
    optimal shrinkage d clipped to [0, 1].

    S is the empirical covariance of the rows of X (denominator n). With two
    samples the centered rows are mirror images, so the dispersion term and
    hence d are exactly zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError("X must be 2-D (samples, features)")
    n, p = X.shape
    if n < 2:
        raise TooFewSamplesError(f"need >= 2 samples, got {n}")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / n
    mu = np.trace(S) / p
    # squared deviations use the normalized Frobenius norm ||A||^2 = tr(AA^T)/p
    d2 = np.sum((S - mu * np.eye(p)) ** 2) / p
    if d2 <= 0:
        return S.copy(), 0.0
    sq = Xc**2
    b2_bar = (np.sum(sq.T @ sq) / n - np.sum(S**2)) / (n * p)
    b2 = min(b2_bar, d2)
    delta = float(np.clip(b2 / d2, 0.0, 1.0))
    return (1.0 - delta) * S + delta * mu * np.eye(p), delta


@dataclass(eq=False)
class LdaModel:
    """Binary shrinkage-LDA; decision(x) = w . x + b, positive class = ON."""

    weights: np.ndarray
    bias: float
    mean_on: np.ndarray
    mean_off: np.ndarray
    shrinkage: float
    flipped: bool = False

    def decision(self, X: np.ndarray) -> np.ndarray:
        return decision_scores(self, X)


def fit_lda(X: np.ndarray, y: np.ndarray) -> LdaModel:
    """LDA with Ledoit-Wolf-shrunk pooled within-class covariance.

    y holds ON/OFF labels as booleans (True = ON). The weight vector is
    Sigma^-1 (mu_on - mu_off) with the midpoint bias (equal priors); the sign
    is flipped if needed so the mean training decision value of the ON class
    is non-negative.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X and y disagree on sample count")
    X_on, X_off = X[y], X[~y]
    if len(X_on) == 0 or len(X_off) == 0:
        raise SingleClassError("both classes must be present")
    if len(X_on) < 2 or len(X_off) < 2:
        raise TooFewSamplesError("need >= 2 samples per class")
    mu_on = X_on.mean(axis=0)
    mu_off = X_off.mean(axis=0)
    centered = np.vstack([X_on - mu_on, X_off - mu_off])
    cov, delta = ledoit_wolf_cov(centered)
    w = np.linalg.solve(cov, mu_on - mu_off)
    b = -float(w @ (mu_on + mu_off) / 2.0)
    flipped = False
    if float(np.mean(X_on @ w + b)) < 0:
        w, b, flipped = -w, -b, True
    return LdaModel(w, b, mu_on, mu_off, delta, flipped)


def decision_scores(model: LdaModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatchError(
            f"model has {model.weights.shape[0]} features, input has {X.shape[1]}"
        )
    return X @ model.weights + model.bias


@dataclass(eq=False)
class ShapAttribution:
    """Per-trial, per-feature signed attributions with local accuracy:
    values.sum(axis=1) + base_value == decision scores, exactly."""

    values: np.ndarray
    base_value: float
    feature_names: tuple[str, ...] = ()


def linear_shap(
    model: LdaModel, X: np.ndarray, background_mean: np.ndarray
) -> ShapAttribution:
    """Exact Shapley values of a linear model under feature independence:
    phi_i(x) = w_i * (x_i - background_mean_i)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    background_mean = np.asarray(background_mean, dtype=float)
    if X.shape[1] != model.weights.shape[0] or background_mean.shape != model.weights.shape:
        raise DimensionMismatchError("feature dimensions disagree")
    phi = (X - background_mean) * model.weights
    base = float(model.weights @ background_mean + model.bias)
    return ShapAttribution(phi, base)


@dataclass(eq=False)
class RidgeModel:
    weights: np.ndarray
    bias: float
    alpha: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[0]:
            raise DimensionMismatchError(
                f"model has {self.weights.shape[0]} features, input has {X.shape[1]}"
            )
        return X @ self.weights + self.bias


def fit_ridge(X: np.ndarray, z: np.ndarray, alpha: float = 1.0) -> RidgeModel:
    """Ridge regression on centered targets; bias = mean(z).

    Features are expected z-scored upstream, so no internal feature scaling.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = np.asarray(z, dtype=float)
    if X.shape[0] != z.shape[0]:
        raise DimensionMismatchError("X and z disagree on sample count")
    bias = float(z.mean()) if z.size else 0.0
    p = X.shape[1]
    w = np.linalg.solve(X.T @ X + alpha * np.eye(p), X.T @ (z - bias))
    return RidgeModel(w, bias, alpha)


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability that a random positive score exceeds a random negative
    one, ties counted 1/2 (Mann-Whitney construction)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC AUC needs both classes")
    ranks = stats.rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def icc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Between-cluster over total variance of scores grouped by a binary label.

    sigma_b is the standard deviation of the two cluster means around their
    midpoint; sigma_w pools the within-cluster variance over both clusters.
    1 for two separated constants, 0 for identical cluster means.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    a, b = scores[labels], scores[~labels]
    if len(a) == 0 or len(b) == 0:
        raise SingleClassError("ICC needs both clusters non-empty")
    mean_a, mean_b = a.mean(), b.mean()
    var_b = ((mean_a - mean_b) / 2.0) ** 2
    var_w = (np.sum((a - mean_a) ** 2) + np.sum((b - mean_b) ** 2)) / scores.size
    if var_b + var_w == 0:
        return 0.0
    return float(var_b / (var_b + var_w))


def pearson_r(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Pearson correlation with its two-sided p value (t transform, n-2 df)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size:
        raise DimensionMismatchError("samples disagree in length")
    if a.size < 3:
        raise TooFewSamplesError("Pearson r needs n >= 3")
    if np.std(a) == 0 or np.std(b) == 0:
        raise DegenerateVarianceError("constant input has no defined correlation")
    res = stats.pearsonr(a, b)
    return float(res.statistic), float(res.pvalue)


def ols_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    """Least-squares line fit; returns (slope, intercept, r, p, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise TooFewSamplesError("OLS fit needs n >= 3")
    if np.std(x) == 0 or np.std(y) == 0:
        raise DegenerateVarianceError("constant input")
    res = stats.linregress(x, y)
    return (
        float(res.slope),
        float(res.intercept),
        float(res.rvalue),
        float(res.pvalue),
        float(res.rvalue**2),
    )


def mann_whitney_u(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided Mann-Whitney U via the normal approximation with tie and
    continuity corrections."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("both samples must be non-empty")
    if np.all(np.concatenate([a, b]) == np.concatenate([a, b])[0]):
        # all observations tied: U exactly at its mean, no evidence
        return float(a.size * b.size / 2.0), 1.0
    res = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
    return float(res.statistic), float(res.pvalue)


def welch_t(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch's two-sided t test (Welch-Satterthwaite degrees of freedom)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise EmptySampleError("Welch's t needs >= 2 samples per group")
    res = stats.ttest_ind(a, b, equal_var=False)
    t = float(res.statistic)
    p = float(res.pvalue)
    if np.isnan(t):
        # both groups constant and equal
        return 0.0, 1.0
    return t, p


def cohens_d(a: np.ndarray, b: np.ndarray) -> float:
    """Mean difference over pooled standard deviation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise EmptySampleError("effect size needs >= 2 samples per group")
    pooled = np.sqrt(
        ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1))
        / (a.size + b.size - 2)
    )
    if pooled == 0:
        return 0.0
    return float((a.mean() - b.mean()) / pooled)
