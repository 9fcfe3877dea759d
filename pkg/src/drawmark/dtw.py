"""Dynamic time warping of a drawn trace onto its template.

The alignment is open-ended on the template axis: the warping path must
consume every trace sample but may stop at any template point, so a drawing
cut short by the trial time-out matches only a template prefix. The index of
the last matched template point divided by the template length, over the mean
trace-to-template distance, gives the task-performance scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import TooFewPointsError
from .model import Trace

#: Reported task-performance value when the trace matches the template with
#: zero distance. Unattainable with real pen data; callers exclude it from
#: regression fits.
PERFECT = math.inf


@dataclass(eq=False)
class DtwAlignment:
    """Warping path and per-sample distances of one trace/template match.

    path is an (L, 2) int array of (trace index, template index) pairs,
    monotone in both columns with steps in {(1,0),(0,1),(1,1)}, starting at
    (0, 0) and ending at (n_trace - 1, n_c - 1).
    """

    path: np.ndarray
    total_cost: float
    n_c: int
    per_trace_distance: np.ndarray

    @property
    def n_trace(self) -> int:
        return int(self.per_trace_distance.shape[0])


@dataclass(frozen=True)
class TaskPerformance:
    fraction_matched: float
    mean_distance: float
    value: float

    @property
    def perfect(self) -> bool:
        return not math.isfinite(self.value)


def align(trace_points: np.ndarray, template: np.ndarray) -> DtwAlignment:
    """Match trace samples to template points by open-end DTW.

    Classical accumulated-cost dynamic programming with Euclidean local cost;
    the end column is the argmin of the last accumulated row, ties broken
    toward the shorter template prefix.
    """
    trace_points = np.asarray(trace_points, dtype=float)
    template = np.asarray(template, dtype=float)
    if trace_points.ndim != 2 or trace_points.shape[1] != 2:
        raise TooFewPointsError(f"trace points must be (n, 2), got {trace_points.shape}")
    if template.ndim != 2 or template.shape[1] != 2:
        raise TooFewPointsError(f"template must be (m, 2), got {template.shape}")
    n, m = trace_points.shape[0], template.shape[0]
    if n < 2 or m < 2:
        raise TooFewPointsError(f"need >= 2 points on both sides, got {n} and {m}")
    if not (np.all(np.isfinite(trace_points)) and np.all(np.isfinite(template))):
        raise TooFewPointsError("non-finite coordinates")

    local = cdist(trace_points, template)
    acc = _accumulate(local)

    j_end = int(np.argmin(acc[n - 1]))
    path = _backtrace(acc, local, n - 1, j_end)
    total_cost = float(acc[n - 1, j_end])

    dist_sum = np.zeros(n)
    counts = np.zeros(n)
    d_on_path = local[path[:, 0], path[:, 1]]
    np.add.at(dist_sum, path[:, 0], d_on_path)
    np.add.at(counts, path[:, 0], 1.0)
    per_trace = dist_sum / counts  # every trace row appears on the path

    return DtwAlignment(path, total_cost, j_end + 1, per_trace)


def _accumulate(local: np.ndarray) -> np.ndarray:
    """Accumulated-cost matrix, vectorized over anti-diagonals.

    Sums are accumulated from the path start (cumsum on the border rows,
    ``local + min(predecessors)`` inside), so a brute-force oracle that folds
    costs forward along a path reproduces these values bit-exactly.
    """
    n, m = local.shape
    acc = np.empty_like(local)
    acc[:, 0] = np.cumsum(local[:, 0])
    acc[0, :] = np.cumsum(local[0, :])
    for k in range(2, n + m - 1):
        i0 = max(1, k - m + 1)
        i1 = min(n - 1, k - 1)
        if i0 > i1:
            continue
        i = np.arange(i0, i1 + 1)
        j = k - i
        up = acc[i - 1, j]
        diag = acc[i - 1, j - 1]
        left = acc[i, j - 1]
        acc[i, j] = local[i, j] + np.minimum(np.minimum(up, left), diag)
    return acc


def _backtrace(acc: np.ndarray, local: np.ndarray, i: int, j: int) -> np.ndarray:
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            candidates = (acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            move = int(np.argmin(candidates))
            if move == 0:
                i, j = i - 1, j - 1
            elif move == 1:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    return np.array(path[::-1], dtype=int)


def task_performance(trace: Trace) -> TaskPerformance:
    """Fraction of template matched divided by mean trace-to-template distance."""
    alignment = align(trace.xy, trace.template)
    fraction = alignment.n_c / trace.template.shape[0]
    mean_distance = float(np.mean(alignment.per_trace_distance))
    if mean_distance == 0.0:
        return TaskPerformance(fraction, 0.0, PERFECT)
    return TaskPerformance(fraction, mean_distance, fraction / mean_distance)
