export type Condition = "ON" | "OFF";

/** One pointer sample; t is in seconds since drawing started. */
export interface PenSample {
  t: number;
  x: number;
  y: number;
}

/** Scale/offset mapping from template space to CSS pixels, recorded per
 * trial so the pixel-unit convention downstream is documented. */
export interface CanvasTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface TrialRecord {
  samples: PenSample[];
  templateId: string;
  durationLimit: number;
  fragmented: boolean;
  timedOut: boolean;
  completed: boolean;
  transform: CanvasTransform;
}

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export const MIN_DURATION_LIMIT = 6.0;
export const MAX_DURATION_LIMIT = 10.5;
export const TRIALS_PER_BLOCK = 12;

/** The downstream loader needs at least this many samples per trace. */
export const MIN_EXPORTABLE_SAMPLES = 4;
