"""Greedy minimum-redundancy maximum-relevance feature selection.

Correlation-based difference criterion: relevance is |Pearson r| with the
target, redundancy the mean |Pearson r| with already-selected features, and
each step picks argmax(relevance - redundancy). Ties break toward the lowest
feature index for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KInvalidError, TooFewTrialsError


@dataclass(eq=False)
class SelectionResult:
    selected_indices: tuple[int, ...]
    relevance: tuple[float, ...]   # relevance of the pick at each step
    redundancy: tuple[float, ...]  # mean redundancy of the pick at each step

    def __len__(self) -> int:
        return len(self.selected_indices)


def _abs_corr(matrix: np.ndarray, target: np.ndarray) -> np.ndarray:
    """|Pearson r| of every column with the target; constant columns get 0."""
    mc = matrix - matrix.mean(axis=0)
    tc = target - target.mean()
    denom = np.sqrt((mc**2).sum(axis=0) * (tc**2).sum())
    num = mc.T @ tc
    out = np.zeros(matrix.shape[1])
    ok = denom > 0
    out[ok] = np.abs(num[ok] / denom[ok])
    return out


def mrmr_select(F: np.ndarray, z: np.ndarray, k: int) -> SelectionResult:
    """Select k of F's columns for predicting z.

    F: (n_trials, n_features); requires at least 3 trials and finite values.
    Selection order is preserved in the result.
    """
    F = np.asarray(F, dtype=float)
    z = np.asarray(z, dtype=float)
    if F.ndim != 2:
        raise TooFewTrialsError("F must be (trials, features)")
    n, p = F.shape
    if n < 3:
        raise TooFewTrialsError(f"need >= 3 trials, got {n}")
    if z.shape != (n,):
        raise TooFewTrialsError("one target value per trial required")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(z))):
        raise TooFewTrialsError("features and target must be finite")
    if k < 1:
        raise KInvalidError(f"k must be >= 1, got {k}")
    k = min(k, p)

    relevance = _abs_corr(F, z)
    selected: list[int] = []
    rel_steps: list[float] = []
    red_steps: list[float] = []
    redundancy_sum = np.zeros(p)

    first = int(np.argmax(relevance))  # argmax takes the lowest index on ties
    selected.append(first)
    rel_steps.append(float(relevance[first]))
    red_steps.append(0.0)

    while len(selected) < k:
        last = selected[-1]
        redundancy_sum += _abs_corr(F, F[:, last])
        score = relevance - redundancy_sum / len(selected)
        score[selected] = -np.inf
        pick = int(np.argmax(score))
        selected.append(pick)
        rel_steps.append(float(relevance[pick]))
        red_steps.append(float(redundancy_sum[pick] / (len(selected) - 1)))

    return SelectionResult(tuple(selected), tuple(rel_steps), tuple(red_steps))
