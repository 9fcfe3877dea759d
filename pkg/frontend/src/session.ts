/** Session bookkeeping: blocks of twelve trials under an operator-entered
 * DBS label, with buffered persistence so a page reload never loses
 * recorded trials.
 */

import {
  Condition,
  MIN_EXPORTABLE_SAMPLES,
  TRIALS_PER_BLOCK,
  TrialRecord,
} from "./types.js";

export interface BlockRecord {
  index: number;
  condition: Condition;
  trials: TrialRecord[];
  /** Pointer losses too short to keep (fewer than 4 samples); logged so no
   * trial disappears silently, but they do not fill a block slot. */
  abortedTrials: number;
  complete: boolean;
}

export interface PersistenceStore {
  save(state: string): void;
  load(): string | null;
}

export class MemoryStore implements PersistenceStore {
  private state: string | null = null;
  save(state: string): void {
    this.state = state;
  }
  load(): string | null {
    return this.state;
  }
}

interface SessionState {
  sessionId: string;
  blocks: BlockRecord[];
}

export class SessionRecorder {
  readonly sessionId: string;
  private blocks_: BlockRecord[] = [];
  private store: PersistenceStore;

  constructor(sessionId: string, store: PersistenceStore = new MemoryStore()) {
    this.sessionId = sessionId;
    this.store = store;
    this.persist();
  }

  static restore(store: PersistenceStore): SessionRecorder | null {
    const raw = store.load();
    if (raw === null) return null;
    const state = JSON.parse(raw) as SessionState;
    const recorder = new SessionRecorder(state.sessionId, store);
    recorder.blocks_ = state.blocks;
    return recorder;
  }

  get blocks(): readonly BlockRecord[] {
    return this.blocks_;
  }

  get currentBlock(): BlockRecord | null {
    const last = this.blocks_[this.blocks_.length - 1];
    return last && !last.complete ? last : null;
  }

  get blockInProgress(): boolean {
    return this.currentBlock !== null;
  }

  /** The condition label locks for the whole block the moment it starts. */
  startBlock(condition: Condition): void {
    if (this.blockInProgress) {
      throw new Error("finish the current block before starting a new one");
    }
    this.blocks_.push({
      index: this.blocks_.length,
      condition,
      trials: [],
      abortedTrials: 0,
      complete: false,
    });
    this.persist();
  }

  recordTrial(record: TrialRecord): void {
    const block = this.currentBlock;
    if (block === null) throw new Error("no block in progress");
    if (record.samples.length < MIN_EXPORTABLE_SAMPLES) {
      block.abortedTrials += 1;  // flagged, never silently dropped
      this.persist();
      return;
    }
    block.trials.push(record);
    if (block.trials.length >= TRIALS_PER_BLOCK) {
      block.complete = true;
    }
    this.persist();
  }

  /** Flush to the persistence store (also called on every mutation, so a
   * visibilitychange flush is belt-and-braces). */
  persist(): void {
    const state: SessionState = { sessionId: this.sessionId, blocks: this.blocks_ };
    this.store.save(JSON.stringify(state));
  }

  completedBlocks(): BlockRecord[] {
    return this.blocks_.filter((b) => b.complete);
  }
}
