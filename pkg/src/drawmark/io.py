"""Session persistence.

Format (schema version 1):
  session.json   manifest: blocks, conditions, relative file references
  traces/*.json  per-trial pen samples as a JSON array of [t, x, y]
  templates/*.json  template polylines as a JSON array of [x, y]
  epochs/*.bin   little-endian float64, row-major channels x samples, behind a
                 32-byte header (magic, n_channels u32, n_samples u32,
                 sample_rate f64, 8 reserved bytes)

Metadata stays human-inspectable JSON; numerics are compact binary.
Floats in JSON round-trip bit-exactly (shortest-repr serialization).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import (
    InvariantViolationError,
    IoError,
    MissingFileError,
    SchemaViolationError,
)
from .model import (
    Block,
    DbsCondition,
    ExclusionReason,
    Modality,
    NeuralEpoch,
    Session,
    Trace,
    Trial,
)

SCHEMA_VERSION = 1
MANIFEST_NAME = "session.json"

_EPOCH_MAGIC = b"DMEPOCH1"
_EPOCH_HEADER = struct.Struct("<8sIId8x")  # magic, n_channels, n_samples, rate
assert _EPOCH_HEADER.size == 32


def write_epoch(path: Path, data: np.ndarray, sample_rate: float) -> None:
    data = np.ascontiguousarray(data, dtype="<f8")
    header = _EPOCH_HEADER.pack(_EPOCH_MAGIC, data.shape[0], data.shape[1], sample_rate)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_epoch(path: Path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _EPOCH_HEADER.size:
        raise SchemaViolationError(f"epoch file too short: {path}")
    magic, n_ch, n_s, rate = _EPOCH_HEADER.unpack_from(raw)
    if magic != _EPOCH_MAGIC:
        raise SchemaViolationError(f"bad epoch magic in {path}")
    expected = _EPOCH_HEADER.size + 8 * n_ch * n_s
    if len(raw) != expected:
        raise SchemaViolationError(
            f"epoch file {path}: expected {expected} bytes, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_EPOCH_HEADER.size).reshape(n_ch, n_s)
    return data.copy(), rate


def save_session(session: Session, directory: str | Path) -> Path:
    """Write a session under ``directory``; returns the manifest path.

    ``load_session(save_session(s))`` reproduces ``s`` exactly.
    """
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
        (root / "traces").mkdir(exist_ok=True)
        (root / "templates").mkdir(exist_ok=True)

        # deduplicate templates by content
        template_files: dict[bytes, str] = {}
        channel_names: tuple[str, ...] | None = None
        sample_rate: float | None = None

        blocks_json = []
        has_epochs = any(
            tr.neural is not None for b in session.blocks for tr in b.trials
        )
        if has_epochs:
            (root / "epochs").mkdir(exist_ok=True)

        for block in session.blocks:
            trials_json = []
            for k, trial in enumerate(block.trials):
                key = trial.trace.template.tobytes() + bytes(
                    str(trial.trace.template.shape), "ascii"
                )
                if key not in template_files:
                    name = f"templates/template_{len(template_files):03d}.json"
                    with open(root / name, "w") as fh:
                        json.dump(trial.trace.template.tolist(), fh)
                    template_files[key] = name
                trace_name = f"traces/b{block.index:03d}_t{k:03d}.json"
                with open(root / trace_name, "w") as fh:
                    json.dump(trial.trace.samples.tolist(), fh)

                entry: dict = {
                    "trace": trace_name,
                    "template": template_files[key],
                    "duration_limit": trial.trace.duration_limit,
                    "epoch": None,
                    "excluded": trial.excluded,
                    "exclusion_reason": trial.exclusion_reason.value,
                }
                if trial.meta:
                    entry["meta"] = trial.meta
                if trial.neural is not None:
                    epoch_name = f"epochs/b{block.index:03d}_t{k:03d}.bin"
                    write_epoch(
                        root / epoch_name, trial.neural.data, trial.neural.sample_rate
                    )
                    entry["epoch"] = epoch_name
                    channel_names = trial.neural.channel_names
                    sample_rate = trial.neural.sample_rate
                trials_json.append(entry)
            blocks_json.append(
                {
                    "index": block.index,
                    "condition": block.condition.value,
                    "trials": trials_json,
                }
            )

        manifest: dict = {
            "schema_version": SCHEMA_VERSION,
            "id": session.id,
            "modality": session.modality.value,
            "blocks": blocks_json,
        }
        if channel_names is not None:
            manifest["channel_names"] = list(channel_names)
        if sample_rate is not None:
            manifest["sample_rate"] = sample_rate

        manifest_path = root / MANIFEST_NAME
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"failed to write session to {root}: {exc}") from exc
    return manifest_path


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaViolationError(f"{where}: missing required field '{key}'")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolationError(f"{where}: field '{key}' must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise SchemaViolationError(
            f"{where}: field '{key}' must be {kind.__name__}, "
            f"got {type(value).__name__}"
        )
    return value


def _load_points(path: Path, n_cols: int, what: str) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"{what} file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError(f"{what} file {path}: invalid JSON: {exc}")
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise SchemaViolationError(
            f"{what} file {path}: expected (n, {n_cols}) array, got shape {arr.shape}"
        )
    return arr


def load_session(manifest_path: str | Path) -> Session:
    """Load and fully validate a session from its manifest.

    Raises MissingFileError / SchemaViolationError / InvariantViolationError;
    never returns a partially built session.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    if not manifest_path.exists():
        raise MissingFileError(f"manifest not found: {manifest_path}")
    root = manifest_path.parent
    with open(manifest_path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError(f"manifest {manifest_path}: invalid JSON: {exc}")
    if not isinstance(manifest, dict):
        raise SchemaViolationError("manifest root must be a JSON object")

    version = _require(manifest, "schema_version", int, "manifest")
    if version != SCHEMA_VERSION:
        raise SchemaViolationError(
            f"unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )
    session_id = _require(manifest, "id", str, "manifest")
    modality_raw = _require(manifest, "modality", str, "manifest")
    try:
        modality = Modality(modality_raw)
    except ValueError:
        raise SchemaViolationError(
            f"manifest: modality must be one of {[m.value for m in Modality]}, "
            f"got '{modality_raw}'"
        )
    channel_names = tuple(manifest.get("channel_names", ()))
    blocks_json = _require(manifest, "blocks", list, "manifest")

    template_cache: dict[str, np.ndarray] = {}
    blocks: list[Block] = []
    for bi, block_json in enumerate(blocks_json):
        where = f"blocks[{bi}]"
        if not isinstance(block_json, dict):
            raise SchemaViolationError(f"{where}: block must be an object")
        index = _require(block_json, "index", int, where)
        cond_raw = _require(block_json, "condition", str, where)
        try:
            condition = DbsCondition(cond_raw)
        except ValueError:
            raise SchemaViolationError(
                f"{where}: condition must be 'ON' or 'OFF', got '{cond_raw}'"
            )
        trials_json = _require(block_json, "trials", list, where)
        trials: list[Trial] = []
        for ti, trial_json in enumerate(trials_json):
            twhere = f"{where}.trials[{ti}]"
            if not isinstance(trial_json, dict):
                raise SchemaViolationError(f"{twhere}: trial must be an object")
            if "condition" in trial_json and trial_json["condition"] != cond_raw:
                raise InvariantViolationError(
                    f"{twhere}: trial condition '{trial_json['condition']}' differs "
                    f"from block condition '{cond_raw}' (blocks must be homogeneous)"
                )
            trace_rel = _require(trial_json, "trace", str, twhere)
            template_rel = _require(trial_json, "template", str, twhere)
            duration = float(trial_json.get("duration_limit", float("inf")))
            samples = _load_points(root / trace_rel, 3, "trace")
            if template_rel not in template_cache:
                template_cache[template_rel] = _load_points(
                    root / template_rel, 2, "template"
                )
            try:
                trace = Trace(samples, template_cache[template_rel], duration)
            except InvariantViolationError as exc:
                raise InvariantViolationError(f"{twhere}: {exc}") from exc

            neural = None
            epoch_rel = trial_json.get("epoch")
            if epoch_rel is not None:
                if not isinstance(epoch_rel, str):
                    raise SchemaViolationError(f"{twhere}: 'epoch' must be a path")
                epoch_path = root / epoch_rel
                if not epoch_path.exists():
                    raise MissingFileError(f"{twhere}: epoch file not found: {epoch_path}")
                data, rate = read_epoch(epoch_path)
                try:
                    neural = NeuralEpoch(data, rate, channel_names, modality)
                except InvariantViolationError as exc:
                    raise InvariantViolationError(f"{twhere}: {exc}") from exc

            excluded = bool(trial_json.get("excluded", False))
            reason_raw = trial_json.get("exclusion_reason", "none")
            try:
                reason = ExclusionReason(reason_raw)
            except ValueError:
                raise SchemaViolationError(
                    f"{twhere}: unknown exclusion_reason '{reason_raw}'"
                )
            meta = trial_json.get("meta", {})
            if not isinstance(meta, dict):
                raise SchemaViolationError(f"{twhere}: 'meta' must be an object")
            try:
                trials.append(Trial(trace, neural, excluded, reason, meta))
            except InvariantViolationError as exc:
                raise InvariantViolationError(f"{twhere}: {exc}") from exc
        try:
            blocks.append(Block(index, condition, trials))
        except InvariantViolationError as exc:
            raise InvariantViolationError(f"{where}: {exc}") from exc

    return Session(session_id, blocks, modality)


def sessions_equal(a: Session, b: Session) -> bool:
    """Exact (bitwise for numerics) equality of two sessions."""
    if a.id != b.id or a.modality != b.modality or len(a.blocks) != len(b.blocks):
        return False
    for ba, bb in zip(a.blocks, b.blocks):
        if ba.index != bb.index or ba.condition != bb.condition:
            return False
        if len(ba.trials) != len(bb.trials):
            return False
        for ta, tb in zip(ba.trials, bb.trials):
            if ta.excluded != tb.excluded or ta.exclusion_reason != tb.exclusion_reason:
                return False
            if ta.meta != tb.meta:
                return False
            if not np.array_equal(ta.trace.samples, tb.trace.samples):
                return False
            if not np.array_equal(ta.trace.template, tb.trace.template):
                return False
            if ta.trace.duration_limit != tb.trace.duration_limit:
                return False
            if (ta.neural is None) != (tb.neural is None):
                return False
            if ta.neural is not None and tb.neural is not None:
                if not np.array_equal(ta.neural.data, tb.neural.data):
                    return False
                if ta.neural.sample_rate != tb.neural.sample_rate:
                    return False
                if ta.neural.channel_names != tb.neural.channel_names:
                    return False
    return True
