"""Report assembly: JSON-first session reports plus CSV projections and the
cross-session tables used for group-level figures.

Every section embeds its resolved configuration and seed; serialization is
sorted and timestamp-free, so identical inputs produce byte-identical files
(wall-clock metadata goes to a `.meta.json` sidecar).
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import SchemaViolationError
from .evaluation import (
    BehavioralResult,
    ControllabilityResult,
    NeuralResult,
    OutcomeClassification,
)
from .linmodels import ols_fit

REPORT_SCHEMA_VERSION = 1
REPORT_NAME = "report.json"


def behavioral_section(result: BehavioralResult, config: dict) -> dict:
    labels = result.design.labels
    shap = result.shap
    section = {
        "config": config,
        "feature_set": result.design.feature_set.name.lower(),
        "n_trials": int(labels.size),
        "n_folds": len(result.fold_aucs),
        "fold_aucs": [float(a) for a in result.fold_aucs],
        "mean_auc": result.mean_auc,
        "chance": None if result.chance is None else result.chance.to_dict(),
        "significant": result.significant,
        "icc": result.score_icc,
        "notes": [
            "per-trial scores come from a model fitted on the full session "
            "(optimistic labels); the per-fold AUC is the generalization "
            "estimate"
        ],
        "shap": {
            "feature_names": list(shap.feature_names),
            "base_value": shap.base_value,
            "mean_signed_on": shap.values[labels].mean(axis=0).tolist(),
            "mean_abs": np.abs(shap.values).mean(axis=0).tolist(),
        },
    }
    tp = result.task_performance
    if tp is not None:
        section["task_performance"] = {
            "n_perfect": tp.n_perfect,
            "mean_on": tp.mean_on,
            "mean_off": tp.mean_off,
            "effect_size_d": tp.effect_size_d,
            "mwu_u": tp.mwu_u,
            "mwu_p": tp.mwu_p,
            "fold_aucs": [float(a) for a in tp.fold_aucs],
            "mean_auc": tp.mean_auc,
            "mean_fraction_on": tp.mean_fraction_on,
            "mean_fraction_off": tp.mean_fraction_off,
            "mean_distance_on": tp.mean_distance_on,
            "mean_distance_off": tp.mean_distance_off,
        }
    else:
        section["task_performance"] = None
    return section


def neural_section(result: NeuralResult, config: dict, marker_file: str | None) -> dict:
    return {
        "config": config,
        "target_kind": result.design.target_kind,
        "n_trials": int(result.design.labels.size),
        "n_folds": len(result.fold_rs),
        "fold_rs": [float(r) for r in result.fold_rs],
        "mean_r": result.mean_r,
        "chance": None if result.chance is None else result.chance.to_dict(),
        "significant": result.significant,
        "band_counts": result.band_counts,
        "marker_file": marker_file,
    }


def controllability_section(result: ControllabilityResult, config: dict) -> dict:
    return {
        "config": config,
        "fold_aucs": [float(a) for a in result.fold_aucs],
        "mean_auc": result.mean_auc,
        "chance": None if result.chance is None else result.chance.to_dict(),
        "significant": result.significant,
    }


def outcome_section(outcome: OutcomeClassification, inputs: dict) -> dict:
    return {
        "type": int(outcome.outcome),
        "label": outcome.outcome.name,
        "description": outcome.description,
        "auc_significant": outcome.auc_significant,
        "r_significant": outcome.r_significant,
        "icc_high": outcome.icc_high,
        "icc_threshold": outcome.icc_threshold,
        "inputs": inputs,
    }


def merge_into_report(
    path: Path, session_id: str, modality: str | None, sections: dict
) -> dict:
    """Insert or replace sections in the session's report file."""
    if path.exists():
        with open(path) as fh:
            report = json.load(fh)
        if report.get("session_id") != session_id:
            raise SchemaViolationError(
                f"report {path} belongs to session '{report.get('session_id')}', "
                f"not '{session_id}'"
            )
    else:
        report = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "session_id": session_id,
        }
    if modality is not None:
        report["modality"] = modality
    report.update(sections)
    write_report(path, report)
    return report


def write_report(path: Path, report: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path.with_suffix(".meta.json"), "w") as fh:
        json.dump({"written_at": datetime.now(timezone.utc).isoformat()}, fh)
        fh.write("\n")


def load_report(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaViolationError(f"report not found: {path}")
    with open(path) as fh:
        report = json.load(fh)
    if not isinstance(report, dict) or "session_id" not in report:
        raise SchemaViolationError(f"{path} is not a session report")
    return report


def write_predictions_csv(
    path: Path,
    trial_ids: list[tuple[int, int]],
    conditions: np.ndarray,
    true_scores: np.ndarray,
    predicted: np.ndarray,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "block", "condition", "true_score", "predicted_score"])
        for (block, trial), cond, true, pred in zip(
            trial_ids, conditions, true_scores, predicted
        ):
            writer.writerow(
                [trial, block, "ON" if cond else "OFF", repr(float(true)), repr(float(pred))]
            )


def write_features_csv(
    path: Path,
    trial_ids: list[tuple[int, int]],
    conditions: np.ndarray,
    names: tuple[str, ...],
    features: np.ndarray,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", "trial", "condition", *names])
        for (block, trial), cond, row in zip(trial_ids, conditions, features):
            writer.writerow(
                [block, trial, "ON" if cond else "OFF", *[repr(float(v)) for v in row]]
            )


def write_band_counts_csv(path: Path, rows: list[tuple[str, str, int]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["session_id", "band", "count"])
        writer.writerows(rows)


# --- cross-session aggregation ----------------------------------------------


def _get(report: dict, *keys, default=None):
    node = report
    for key in keys:
        if not isinstance(node, dict) or key not in node or node[key] is None:
            return default
        node = node[key]
    return node


def session_row(report: dict) -> dict:
    return {
        "session_id": report["session_id"],
        "modality": report.get("modality"),
        "n_trials": _get(report, "behavioral", "n_trials"),
        "mean_auc": _get(report, "behavioral", "mean_auc"),
        "auc_chance": _get(report, "behavioral", "chance", "value"),
        "auc_significant": _get(report, "behavioral", "significant"),
        "icc": _get(report, "behavioral", "icc"),
        "task_perf_effect_d": _get(report, "behavioral", "task_performance", "effect_size_d"),
        "task_perf_mwu_p": _get(report, "behavioral", "task_performance", "mwu_p"),
        "task_perf_auc": _get(report, "behavioral", "task_performance", "mean_auc"),
        "mean_r": _get(report, "neural", "mean_r"),
        "r_chance": _get(report, "neural", "chance", "value"),
        "r_significant": _get(report, "neural", "significant"),
        "task_perf_r": _get(report, "neural_task_performance", "mean_r"),
        "controllability_auc": _get(report, "controllability", "mean_auc"),
        "controllability_chance": _get(report, "controllability", "chance", "value"),
        "controllability_significant": _get(report, "controllability", "significant"),
        "outcome_type": _get(report, "outcome", "type"),
    }


def _group_stats(values: list) -> dict | None:
    vals = np.array([v for v in values if v is not None], dtype=float)
    if vals.size == 0:
        return None
    return {"n": int(vals.size), "mean": float(vals.mean()), "std": float(vals.std())}


def _ols_or_none(x: list, y: list) -> dict | None:
    pairs = [(a, b) for a, b in zip(x, y) if a is not None and b is not None]
    if len(pairs) < 3:
        return None
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    if np.std(xs) == 0 or np.std(ys) == 0:
        return None
    slope, intercept, r, p, r2 = ols_fit(xs, ys)
    return {
        "n": len(pairs),
        "slope": slope,
        "intercept": intercept,
        "r": r,
        "p": p,
        "r2": r2,
    }


def cross_session_summary(rows: list[dict]) -> dict:
    """Group means/STDs and the OLS fits behind the aggregate figures."""
    col = lambda name: [row[name] for row in rows]
    pos = [row for row in rows if (row["task_perf_effect_d"] or 0) > 0]
    neg = [row for row in rows if (row["task_perf_effect_d"] or 0) < 0]
    outcome_counts: dict[str, int] = {}
    for row in rows:
        if row["outcome_type"] is not None:
            key = f"type{row['outcome_type']}"
            outcome_counts[key] = outcome_counts.get(key, 0) + 1
    return {
        "n_sessions": len(rows),
        "copydraw_auc": _group_stats(col("mean_auc")),
        "copydraw_auc_chance": _group_stats(col("auc_chance")),
        "copydraw_auc_significant_sessions": sum(
            1 for v in col("auc_significant") if v
        ),
        "neural_r": _group_stats(col("mean_r")),
        "neural_r_chance": _group_stats(col("r_chance")),
        "neural_r_significant_sessions": sum(1 for v in col("r_significant") if v),
        "controllability_auc": _group_stats(col("controllability_auc")),
        "controllability_significant_sessions": sum(
            1 for v in col("controllability_significant") if v
        ),
        "icc": _group_stats(col("icc")),
        "outcome_counts": outcome_counts,
        "ols_auc_vs_neural_r": _ols_or_none(col("mean_r"), col("mean_auc")),
        "ols_auc_vs_task_perf_effect_positive": _ols_or_none(
            [r["task_perf_effect_d"] for r in pos], [r["mean_auc"] for r in pos]
        ),
        "ols_auc_vs_task_perf_effect_negative": _ols_or_none(
            [r["task_perf_effect_d"] for r in neg], [r["mean_auc"] for r in neg]
        ),
        "ols_copydraw_r_vs_task_perf_r": _ols_or_none(
            col("mean_r"), col("task_perf_r")
        ),
    }


def write_sessions_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
