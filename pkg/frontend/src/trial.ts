/** One timed copy-drawing trial as a state machine.
 *
 * The participant expresses readiness by moving the cursor over the cyan
 * ready box, then to the start of the trace; only then do sampling and the
 * countdown begin. The trial ends when the cursor reaches the template end
 * (completed), the time limit expires (timed out, samples truncated at the
 * limit), or the pointer is lost (fragmented). Pointer events are captured
 * at their native rate with high-resolution timestamps.
 */

import type { Template } from "./templates.js";
import {
  CanvasTransform,
  MAX_DURATION_LIMIT,
  MIN_DURATION_LIMIT,
  PenSample,
  Rect,
  TrialRecord,
} from "./types.js";

export type TrialPhase =
  | "idle"
  | "awaiting-ready"
  | "armed"
  | "drawing"
  | "done";

export interface TrialConfig {
  template: Template;
  durationLimit: number;
  readyBox?: Rect;
  startRadius?: number;
  endRadius?: number;
  transform?: CanvasTransform;
}

const DEFAULT_READY_BOX: Rect = { x: 20, y: 20, width: 60, height: 60 };

export class TrialRunner {
  readonly config: Required<TrialConfig>;
  private readonly now: () => number;
  private phase_: TrialPhase = "idle";
  private startMs = NaN;
  private samples: PenSample[] = [];
  private fragmented = false;
  private timedOut = false;
  private completed = false;

  constructor(config: TrialConfig, now: () => number = () => performance.now()) {
    const limit = config.durationLimit;
    if (!(limit >= MIN_DURATION_LIMIT && limit <= MAX_DURATION_LIMIT)) {
      throw new Error(
        `durationLimit must be within [${MIN_DURATION_LIMIT}, ${MAX_DURATION_LIMIT}] s, got ${limit}`,
      );
    }
    this.config = {
      template: config.template,
      durationLimit: limit,
      readyBox: config.readyBox ?? DEFAULT_READY_BOX,
      startRadius: config.startRadius ?? 25,
      endRadius: config.endRadius ?? 18,
      transform: config.transform ?? { scale: 1, offsetX: 0, offsetY: 0 },
    };
    this.now = now;
  }

  get phase(): TrialPhase {
    return this.phase_;
  }

  /** Remaining fraction of the time limit, for the countdown bar. */
  get countdownFraction(): number {
    if (this.phase_ !== "drawing") return 1;
    const elapsed = (this.now() - this.startMs) / 1000;
    return Math.max(0, 1 - elapsed / this.config.durationLimit);
  }

  begin(): void {
    if (this.phase_ !== "idle") throw new Error("trial already started");
    this.phase_ = "awaiting-ready";
  }

  pointerMove(x: number, y: number): void {
    switch (this.phase_) {
      case "awaiting-ready": {
        const b = this.config.readyBox;
        if (x >= b.x && x <= b.x + b.width && y >= b.y && y <= b.y + b.height) {
          this.phase_ = "armed";
        }
        return;
      }
      case "armed": {
        const [sx, sy] = this.config.template.points[0];
        if (Math.hypot(x - sx, y - sy) <= this.config.startRadius) {
          this.phase_ = "drawing";
          this.startMs = this.now();
          this.push(0, x, y);
        }
        return;
      }
      case "drawing": {
        const elapsed = (this.now() - this.startMs) / 1000;
        if (elapsed >= this.config.durationLimit) {
          this.finish({ timedOut: true });
          return;
        }
        this.push(elapsed, x, y);
        const pts = this.config.template.points;
        const [ex, ey] = pts[pts.length - 1];
        if (Math.hypot(x - ex, y - ey) <= this.config.endRadius) {
          this.finish({ completed: true });
        }
        return;
      }
      default:
        return;
    }
  }

  pointerDown(x: number, y: number): void {
    this.pointerMove(x, y);
  }

  /** Stylus lifted: mid-drawing this fragments the trial. */
  pointerUp(): void {
    if (this.phase_ === "drawing") this.finish({ fragmented: true });
  }

  /** Pointer capture lost (pointercancel / leave / device drop). */
  pointerLost(): void {
    if (this.phase_ === "drawing") {
      this.finish({ fragmented: true });
    }
  }

  /** Frame tick; enforces the time limit even without pointer events. */
  tick(): void {
    if (this.phase_ !== "drawing") return;
    if ((this.now() - this.startMs) / 1000 >= this.config.durationLimit) {
      this.finish({ timedOut: true });
    }
  }

  get record(): TrialRecord {
    if (this.phase_ !== "done") throw new Error("trial still running");
    return {
      samples: this.samples,
      templateId: this.config.template.id,
      durationLimit: this.config.durationLimit,
      fragmented: this.fragmented,
      timedOut: this.timedOut,
      completed: this.completed,
      transform: this.config.transform,
    };
  }

  private push(t: number, x: number, y: number): void {
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && t <= last.t) {
      // sub-resolution event timing: keep the latest position for that time
      this.samples[this.samples.length - 1] = { t: last.t, x, y };
      return;
    }
    this.samples.push({ t, x, y });
  }

  private finish(flags: {
    fragmented?: boolean;
    timedOut?: boolean;
    completed?: boolean;
  }): void {
    this.fragmented = flags.fragmented ?? false;
    this.timedOut = flags.timedOut ?? false;
    this.completed = flags.completed ?? false;
    this.phase_ = "done";
  }
}
