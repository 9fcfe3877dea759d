/** Canvas UI: template rendering, pointer capture, countdown bar, block
 * flow, and export. All task logic lives in trial.ts / session.ts; this
 * file only wires the DOM.
 */

import { exportSession } from "./export.js";
import { DEFAULT_TEMPLATES } from "./templates.js";
import { SessionRecorder, PersistenceStore } from "./session.js";
import { TrialRunner } from "./trial.js";
import { Condition, TRIALS_PER_BLOCK } from "./types.js";

const READY_BOX = { x: 20, y: 20, width: 60, height: 60 };

class LocalStore implements PersistenceStore {
  constructor(private key: string) {}
  save(state: string): void {
    localStorage.setItem(this.key, state);
  }
  load(): string | null {
    return localStorage.getItem(this.key);
  }
}

export function mount(root: Document = document): void {
  const canvas = root.getElementById("task-canvas") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const bar = root.getElementById("countdown-bar") as HTMLDivElement;
  const status = root.getElementById("status") as HTMLSpanElement;
  const conditionSel = root.getElementById("condition") as HTMLSelectElement;
  const limitInput = root.getElementById("limit") as HTMLInputElement;
  const startBtn = root.getElementById("start-block") as HTMLButtonElement;
  const exportBtn = root.getElementById("export") as HTMLButtonElement;

  const store = new LocalStore("copydraw-session");
  const recorder =
    SessionRecorder.restore(store) ??
    new SessionRecorder(`session-${Date.now()}`, store);

  let trial: TrialRunner | null = null;
  let trialIndex = 0;

  function nextTemplate() {
    return DEFAULT_TEMPLATES[trialIndex % DEFAULT_TEMPLATES.length];
  }

  function beginTrial(): void {
    trial = new TrialRunner({
      template: nextTemplate(),
      durationLimit: Number(limitInput.value),
      readyBox: READY_BOX,
    });
    trial.begin();
    draw();
  }

  function draw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!trial) return;
    // template
    ctx.strokeStyle = "#2a6fdb";
    ctx.lineWidth = 3;
    ctx.beginPath();
    const pts = trial.config.template.points;
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (const [x, y] of pts) ctx.lineTo(x, y);
    ctx.stroke();
    // cyan ready box, top left
    ctx.fillStyle = trial.phase === "awaiting-ready" ? "cyan" : "#bfeeee";
    ctx.fillRect(READY_BOX.x, READY_BOX.y, READY_BOX.width, READY_BOX.height);
    status.textContent =
      `block ${recorder.blocks.length} | trial ${trialIndex % TRIALS_PER_BLOCK + 1}` +
      `/${TRIALS_PER_BLOCK} | ${trial.phase}`;
  }

  function finishTrialIfDone(): void {
    if (!trial || trial.phase !== "done") return;
    recorder.recordTrial(trial.record);
    trialIndex += 1;
    const block = recorder.currentBlock;
    if (block === null) {
      trial = null;
      status.textContent = "block complete; start the next block";
      startBtn.disabled = false;
    } else {
      beginTrial();  // self-paced: next trial arms immediately
    }
  }

  canvas.addEventListener("pointermove", (ev) => {
    trial?.pointerMove(ev.offsetX, ev.offsetY);
    finishTrialIfDone();
    draw();
  });
  canvas.addEventListener("pointerdown", (ev) => {
    trial?.pointerDown(ev.offsetX, ev.offsetY);
    finishTrialIfDone();
  });
  canvas.addEventListener("pointerup", () => {
    trial?.pointerUp();
    finishTrialIfDone();
  });
  for (const kind of ["pointercancel", "pointerleave"] as const) {
    canvas.addEventListener(kind, () => {
      trial?.pointerLost();
      finishTrialIfDone();
    });
  }

  startBtn.addEventListener("click", () => {
    recorder.startBlock(conditionSel.value as Condition);
    conditionSel.disabled = true;  // label locked once the block starts
    startBtn.disabled = true;
    beginTrial();
    const unlock = setInterval(() => {
      if (!recorder.blockInProgress) {
        conditionSel.disabled = false;
        clearInterval(unlock);
      }
    }, 500);
  });

  exportBtn.addEventListener("click", async () => {
    const files = exportSession(recorder);
    await writeFiles(files);
    status.textContent = `exported ${Object.keys(files).length} files`;
  });

  // buffered persistence across page-visibility changes
  root.addEventListener("visibilitychange", () => recorder.persist());

  function frame(): void {
    if (trial) {
      trial.tick();
      finishTrialIfDone();
      if (trial && trial.phase === "drawing") {
        bar.style.width = `${100 * trial.countdownFraction}%`;
      }
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
  draw();
}

/** Prefer a real directory (File System Access API); fall back to a single
 * bundle download the user can unpack. */
async function writeFiles(files: Record<string, string>): Promise<void> {
  const picker = (window as any).showDirectoryPicker;
  if (typeof picker === "function") {
    const dir: any = await picker.call(window, { mode: "readwrite" });
    for (const [path, content] of Object.entries(files)) {
      const parts = path.split("/");
      let node = dir;
      for (const part of parts.slice(0, -1)) {
        node = await node.getDirectoryHandle(part, { create: true });
      }
      const file = await node.getFileHandle(parts[parts.length - 1], {
        create: true,
      });
      const stream = await file.createWritable();
      await stream.write(content);
      await stream.close();
    }
    return;
  }
  const blob = new Blob([JSON.stringify(files)], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "copydraw-session-bundle.json";
  a.click();
  URL.revokeObjectURL(a.href);
}
