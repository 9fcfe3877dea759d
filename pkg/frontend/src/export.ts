/** Session export in the drawmark session format (schema version 1).
 *
 * Produces a path -> content map: a session.json manifest plus one JSON
 * trace file per trial and deduplicated template files, ready to be written
 * into a directory and loaded by the analysis pipeline.
 */

import { DEFAULT_TEMPLATES, Template } from "./templates.js";
import type { BlockRecord, SessionRecorder } from "./session.js";

export const SCHEMA_VERSION = 1;

export class ExportBlockedError extends Error {}

interface ManifestTrial {
  trace: string;
  template: string;
  duration_limit: number;
  epoch: null;
  excluded: boolean;
  exclusion_reason: "none" | "fragmented";
  meta?: Record<string, unknown>;
}

function pad3(n: number): string {
  return String(n).padStart(3, "0");
}

export function exportSession(
  recorder: SessionRecorder,
  templates: Template[] = DEFAULT_TEMPLATES,
): Record<string, string> {
  if (recorder.blockInProgress) {
    throw new ExportBlockedError("a block is still in progress");
  }
  const blocks = recorder.completedBlocks();
  if (blocks.length === 0) {
    throw new ExportBlockedError("nothing to export: no completed block");
  }
  const conditions = new Set(blocks.map((b) => b.condition));
  if (conditions.size < 2) {
    throw new ExportBlockedError(
      "the analysis schema needs at least one ON and one OFF block",
    );
  }

  const templateById = new Map(templates.map((t) => [t.id, t]));
  const files: Record<string, string> = {};
  const templatePaths = new Map<string, string>();

  const manifestBlocks = blocks.map((block) => ({
    index: block.index,
    condition: block.condition,
    trials: block.trials.map((trial, k) =>
      exportTrial(block, trial, k, templateById, templatePaths, files),
    ),
  }));

  const manifest = {
    schema_version: SCHEMA_VERSION,
    id: recorder.sessionId,
    modality: "EEG",
    blocks: manifestBlocks,
  };
  files["session.json"] = JSON.stringify(manifest, null, 2) + "\n";
  return files;
}

function exportTrial(
  block: BlockRecord,
  trial: BlockRecord["trials"][number],
  k: number,
  templateById: Map<string, Template>,
  templatePaths: Map<string, string>,
  files: Record<string, string>,
): ManifestTrial {
  const template = templateById.get(trial.templateId);
  if (!template) throw new ExportBlockedError(`unknown template '${trial.templateId}'`);
  let templatePath = templatePaths.get(template.id);
  if (templatePath === undefined) {
    templatePath = `templates/template_${pad3(templatePaths.size)}.json`;
    templatePaths.set(template.id, templatePath);
    files[templatePath] = JSON.stringify(template.points) + "\n";
  }

  const tracePath = `traces/b${pad3(block.index)}_t${pad3(k)}.json`;
  const rows = trial.samples.map((s) => [s.t, s.x, s.y]);
  files[tracePath] = JSON.stringify(rows) + "\n";

  const meta: Record<string, unknown> = {
    template_id: trial.templateId,
    original_template: false,
    canvas_transform: trial.transform,
  };
  if (trial.timedOut) meta.timeout = true;
  if (trial.completed) meta.completed = true;

  return {
    trace: tracePath,
    template: templatePath,
    duration_limit: trial.durationLimit,
    epoch: null,
    excluded: trial.fragmented,
    exclusion_reason: trial.fragmented ? "fragmented" : "none",
    meta,
  };
}
