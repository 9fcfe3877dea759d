"""Command-line entry point.

Subcommands: simulate, behavioral-decode, neural-decode, controllability,
outcome-type, report. Decode commands merge their section into the session's
report.json; `outcome-type` classifies a merged report; `report` aggregates
several session reports into cross-session tables.

Exit codes: 0 success, 2 validation/usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, report as rpt, synth
from .errors import DrawmarkError, SchemaViolationError
from .io import load_session, save_session
from .kinematics import FeatureSet
from .model import Modality, Session
from .spoc import CANONICAL_BANDS, FittedMarker

_FEATURE_SETS = {fs.name.lower(): fs for fs in FeatureSet}


def _out_dir(args, session_path: Path | None) -> Path:
    if args.output is not None:
        return Path(args.output)
    env = os.environ.get("DRAWMARK_OUT")
    if env:
        return Path(env)
    if session_path is not None:
        return session_path if session_path.is_dir() else session_path.parent
    return Path.cwd()


def _load(session_arg: str) -> tuple[Session, Path]:
    path = Path(session_arg)
    return load_session(path), path


def _chance_config(args) -> dict:
    # worker count is an execution detail: results are schedule-independent,
    # so it stays out of the report to keep reruns byte-identical
    return {
        "n_permutations": args.n_perm,
        "chance_percentile": args.percentile,
        "seed": args.seed,
    }


def _add_chance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-perm", type=int, default=evaluation.DEFAULT_N_PERMUTATIONS,
                   help="label-shuffle replicates for the chance level")
    p.add_argument("--percentile", type=float,
                   default=evaluation.DEFAULT_CHANCE_PERCENTILE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1,
                   help="worker threads for permutations (results are "
                        "schedule-independent)")


def _add_output_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", default=None,
                   help="output directory (default: session directory or "
                        "$DRAWMARK_OUT)")


# --- simulate ----------------------------------------------------------------


def _cmd_simulate(args) -> int:
    sources = (
        synth.SourceSpec(
            band=args.band,
            gain_score=args.gamma_score,
            gain_condition=args.gamma_condition,
        ),
    )
    neural = None
    if not args.no_neural:
        neural = synth.NeuralSpec(
            n_channels=args.channels,
            sources=sources,
            snr=args.snr,
            epoch_duration=args.epoch_duration,
            modality=Modality(args.modality),
            orthogonalize_condition=args.orthogonalize_condition,
        )
    spec = synth.SynthSpec(
        seed=args.seed,
        n_blocks=args.blocks,
        trials_per_block=args.trials,
        kinematic=synth.KinematicEffect(speed_on=args.speed_shift,
                                        jitter_on=args.jitter_shift),
        neural=neural,
        session_id=args.id,
    )
    session, truth = synth.generate_session(spec)
    out = Path(args.output)
    manifest = save_session(session, out)
    truth_payload = {
        "seed": args.seed,
        "conditions": ["ON" if c else "OFF" for c in truth.conditions],
        "latent": truth.latent.tolist(),
        "speeds": truth.speeds.tolist(),
        "copydraw_scores": None
        if truth.copydraw_scores is None
        else truth.copydraw_scores.tolist(),
        "comodulation": None
        if truth.comodulation is None
        else truth.comodulation.tolist(),
        "mixing": None if truth.mixing is None else truth.mixing.tolist(),
        "source_bands": list(truth.source_bands),
        "noise_std": truth.noise_std,
    }
    with open(out / "ground_truth.json", "w") as fh:
        json.dump(truth_payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote session '{session.id}' to {manifest}")
    return 0


# --- behavioral decode ---------------------------------------------------------


def _cmd_behavioral(args) -> int:
    session, spath = _load(args.session)
    feature_set = _FEATURE_SETS[args.feature_set]
    result = evaluation.behavioral_decode(
        session, feature_set,
        include_task_performance=not args.skip_task_performance,
    )
    if args.n_perm > 0:
        result.chance = evaluation.permutation_chance(
            "behavioral", result.design, n=args.n_perm,
            percentile=args.percentile, seed=args.seed, workers=args.workers,
        )
    config = {
        "feature_set": args.feature_set,
        "icc_threshold": args.icc_threshold,
        **_chance_config(args),
    }
    out = _out_dir(args, spath)
    out.mkdir(parents=True, exist_ok=True)
    section = rpt.behavioral_section(result, config)
    rpt.merge_into_report(
        out / rpt.REPORT_NAME, session.id, session.modality.value,
        {"behavioral": section},
    )
    if args.dump_features:
        rpt.write_features_csv(
            Path(args.dump_features),
            result.design.trial_ids,
            result.design.labels,
            result.design.feature_names,
            result.design.features,
        )
    flag = {True: "significant", False: "not significant", None: "chance skipped"}
    print(
        f"CopyDraw ROC AUC {result.mean_auc:.3f} "
        f"({flag[result.significant]}), ICC {result.score_icc:.3f}"
    )
    return 0


# --- neural decode ---------------------------------------------------------------


def _targets_for(session: Session, kind: str) -> np.ndarray:
    if kind == "copydraw":
        return evaluation.behavioral_decode(session).scores
    values = evaluation.task_performance_targets(session)
    finite = np.isfinite(values)
    if not np.all(finite):
        raise SchemaViolationError(
            f"{int((~finite).sum())} trial(s) have a degenerate (perfect) task "
            "performance; exclude them before neural decoding"
        )
    return values


def _cmd_neural(args) -> int:
    session, spath = _load(args.session)
    kind = "copydraw" if args.target == "copydraw" else "task_performance"
    targets = _targets_for(session, kind)
    design = evaluation.prepare_neural(
        session, targets, kind, CANONICAL_BANDS,
        k_spoc=args.k_spoc, k_select=args.k_select, alpha=args.alpha,
    )
    result = evaluation.neural_decode(design)
    if args.n_perm > 0:
        result.chance = evaluation.permutation_chance(
            "neural", design, n=args.n_perm, percentile=args.percentile,
            seed=args.seed, workers=args.workers,
        )
    out = _out_dir(args, spath)
    out.mkdir(parents=True, exist_ok=True)
    marker_file = f"marker_{kind}.json"
    result.marker.save(out / marker_file)
    config = {
        "target": kind,
        "bands": [[b.name, b.lo, b.hi] for b in CANONICAL_BANDS],
        "k_spoc": args.k_spoc,
        "k_select": args.k_select,
        "ridge_alpha": args.alpha,
        **_chance_config(args),
    }
    section_key = "neural" if kind == "copydraw" else "neural_task_performance"
    rpt.merge_into_report(
        out / rpt.REPORT_NAME, session.id, session.modality.value,
        {section_key: rpt.neural_section(result, config, marker_file)},
    )
    tested = np.isfinite(result.predictions)
    rpt.write_predictions_csv(
        out / f"predictions_{kind}.csv",
        [tid for tid, ok in zip(design.trial_ids, tested) if ok],
        design.labels[tested],
        design.targets[tested],
        result.predictions[tested],
    )
    flag = {True: "significant", False: "not significant", None: "chance skipped"}
    print(f"neural correlation {result.mean_r:.3f} ({flag[result.significant]})")
    return 0


# --- controllability --------------------------------------------------------------


def _cmd_controllability(args) -> int:
    session, spath = _load(args.session)
    if args.marker:
        marker = FittedMarker.load(args.marker)
    else:
        targets = _targets_for(session, "copydraw")
        marker = evaluation.neural_decode(
            session, targets, "copydraw", CANONICAL_BANDS,
        ).marker
    design = evaluation.prepare_neural(
        session, np.zeros(session.n_valid_trials), "condition", marker.bank.bands
    )
    result = evaluation.controllability(design, marker)
    if args.n_perm > 0:
        result.chance = evaluation.permutation_chance(
            "controllability", design, n=args.n_perm, percentile=args.percentile,
            seed=args.seed, workers=args.workers, marker=marker,
        )
    config = {"marker": args.marker or "refit", **_chance_config(args)}
    out = _out_dir(args, spath)
    out.mkdir(parents=True, exist_ok=True)
    rpt.merge_into_report(
        out / rpt.REPORT_NAME, session.id, session.modality.value,
        {"controllability": rpt.controllability_section(result, config)},
    )
    flag = {True: "significant", False: "not significant", None: "chance skipped"}
    print(
        f"regression-feature ROC AUC {result.mean_auc:.3f} "
        f"({flag[result.significant]})"
    )
    return 0


# --- outcome type --------------------------------------------------------------------


def _cmd_outcome(args) -> int:
    path = Path(args.report)
    document = rpt.load_report(path)
    needed = {
        "auc": ("behavioral", "mean_auc"),
        "auc_chance": ("behavioral", "chance", "value"),
        "icc": ("behavioral", "icc"),
        "r": ("neural", "mean_r"),
        "r_chance": ("neural", "chance", "value"),
    }
    inputs = {}
    for name, keys in needed.items():
        node = document
        for key in keys:
            node = node.get(key) if isinstance(node, dict) else None
            if node is None:
                raise SchemaViolationError(
                    f"report lacks {'.'.join(keys)} (run the decode commands "
                    "with permutations first)"
                )
        inputs[name] = node
    outcome = evaluation.classify_outcome(
        inputs["auc"], inputs["auc_chance"], inputs["r"], inputs["r_chance"],
        inputs["icc"], args.icc_threshold,
    )
    inputs["icc_threshold"] = args.icc_threshold
    document["outcome"] = rpt.outcome_section(outcome, inputs)
    rpt.write_report(path, document)
    print(f"{outcome.outcome.name}: {outcome.description}")
    return 0


# --- cross-session report ----------------------------------------------------------


def _cmd_report(args) -> int:
    out = Path(args.output) if args.output else Path(os.environ.get("DRAWMARK_OUT", "."))
    out.mkdir(parents=True, exist_ok=True)
    rows, band_rows = [], []
    for path in args.reports:
        document = rpt.load_report(path)
        rows.append(rpt.session_row(document))
        counts = (document.get("neural") or {}).get("band_counts") or {}
        for band, count in sorted(counts.items()):
            band_rows.append((document["session_id"], band, count))
    rpt.write_sessions_csv(out / "sessions.csv", rows)
    rpt.write_band_counts_csv(out / "band_counts.csv", band_rows)
    summary = rpt.cross_session_summary(rows)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"aggregated {len(rows)} session report(s) into {out}")
    return 0


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drawmark",
        description="Decode DBS condition from drawing kinematics and decode "
        "the resulting scores from neural epochs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic session")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--id", default="synth")
    p.add_argument("--blocks", type=int, default=12)
    p.add_argument("--trials", type=int, default=12)
    p.add_argument("--speed-shift", type=float, default=1.5,
                   help="ON-vs-OFF drawing speed multiplier")
    p.add_argument("--jitter-shift", type=float, default=1.0)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--snr", type=float, default=3.0)
    p.add_argument("--band", default="beta")
    p.add_argument("--gamma-score", type=float, default=0.8,
                   help="source-power comodulation with the behavioral score")
    p.add_argument("--gamma-condition", type=float, default=0.0)
    p.add_argument("--epoch-duration", type=float, default=2.0)
    p.add_argument("--modality", choices=["EEG", "ECOG"], default="EEG")
    p.add_argument("--orthogonalize-condition", action="store_true")
    p.add_argument("--no-neural", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("behavioral-decode",
                       help="chrono-CV DBS classification from kinematics")
    p.add_argument("session")
    p.add_argument("--feature-set", choices=sorted(_FEATURE_SETS), default="standard")
    p.add_argument("--icc-threshold", type=float,
                   default=evaluation.DEFAULT_ICC_THRESHOLD)
    p.add_argument("--dump-features", default=None, metavar="CSV")
    p.add_argument("--skip-task-performance", action="store_true")
    _add_chance_args(p)
    _add_output_arg(p)
    p.set_defaults(func=_cmd_behavioral)

    p = sub.add_parser("neural-decode",
                       help="chrono-CV regression of scores from epochs")
    p.add_argument("session")
    p.add_argument("--target", choices=["copydraw", "task-performance"],
                   default="copydraw")
    p.add_argument("--k-spoc", type=int, default=evaluation.DEFAULT_K_SPOC)
    p.add_argument("--k-select", type=int, default=evaluation.DEFAULT_K_SELECT)
    p.add_argument("--alpha", type=float, default=evaluation.DEFAULT_RIDGE_ALPHA)
    _add_chance_args(p)
    _add_output_arg(p)
    p.set_defaults(func=_cmd_neural)

    p = sub.add_parser("controllability",
                       help="DBS classifiability of a fitted marker's features")
    p.add_argument("session")
    p.add_argument("--marker", default=None, help="marker JSON (default: refit)")
    _add_chance_args(p)
    _add_output_arg(p)
    p.set_defaults(func=_cmd_controllability)

    p = sub.add_parser("outcome-type", help="classify a merged session report")
    p.add_argument("report")
    p.add_argument("--icc-threshold", type=float,
                   default=evaluation.DEFAULT_ICC_THRESHOLD)
    p.set_defaults(func=_cmd_outcome)

    p = sub.add_parser("report", help="merge session reports into group tables")
    p.add_argument("reports", nargs="+")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DrawmarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
