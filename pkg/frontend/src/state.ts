/**
 * Headless review state: cell models, the review queue and the correction
 * round trip. All mutations go through the server; after any action the
 * state is rebuilt from fresh GETs, never patched locally.
 */

import type { ApiClient, MosaicManifest, TrainView } from "./api.js";
import { validateCodeText } from "./codes.js";

export const MARK_DAMAGED = "mark_damaged";

export interface Cell {
  pos: number;
  status: string;
  border: string;
  code: string | null;
  cropRef: string;
  rejectReason: string | null;
  conflict: boolean;
  correctedBy: string | null;
  maintenanceFlag: boolean;
  needsReview: boolean;
}

/**
 * Join the mosaic manifest with the train view. Both come from the same
 * server snapshot; any disagreement means a partial/stale read, which is an
 * error rather than something to render silently.
 */
export function buildCells(manifest: MosaicManifest, view: TrainView): Cell[] {
  if (manifest.train_id !== view.train_id || manifest.cells.length !== view.wagons.length) {
    throw new Error(
      `mosaic (${manifest.train_id}, ${manifest.cells.length} cells) does not match ` +
        `train view (${view.train_id}, ${view.wagons.length} wagons)`,
    );
  }
  return manifest.cells.map((cell, i) => {
    const wagon = view.wagons[i]!;
    if (wagon.position !== cell.pos) {
      throw new Error(`cell ${cell.pos} out of step with wagon ${wagon.position}`);
    }
    const needsReview =
      cell.status === "rejected" || cell.status === "not_located" || wagon.conflict;
    return {
      pos: cell.pos,
      status: cell.status,
      border: cell.border,
      code: cell.code,
      cropRef: cell.crop_ref,
      rejectReason: wagon.reject_reason,
      conflict: wagon.conflict,
      correctedBy: wagon.corrected_by,
      maintenanceFlag: wagon.maintenance_flag,
      needsReview,
    };
  });
}

/** Positions needing operator attention, in composition order. */
export function reviewQueue(cells: Cell[]): number[] {
  return cells.filter((c) => c.needsReview).map((c) => c.pos);
}

/** Next queue entry strictly after `current`, wrapping; null when queue is empty. */
export function nextReviewPosition(queue: number[], current: number | null): number | null {
  if (queue.length === 0) return null;
  if (current === null) return queue[0]!;
  for (const pos of queue) {
    if (pos > current) return pos;
  }
  return queue[0]!;
}

export interface Precheck {
  ok: boolean;
  error?: string;
}

/** Local grammar/check-digit gate; a failing code never reaches the network. */
export function precheckCorrection(codeText: string, reason: string): Precheck {
  if (reason === MARK_DAMAGED) {
    return { ok: true };
  }
  if (!codeText.trim()) {
    return { ok: false, error: "enter a code or mark the wagon damaged" };
  }
  const result = validateCodeText(codeText);
  return result.valid ? { ok: true } : { ok: false, error: result.error };
}

export interface SessionState {
  trainId: string;
  view: TrainView;
  cells: Cell[];
  queue: number[];
}

/** One train under review; shared by the browser UI and the tests. */
export class ReviewSession {
  state: SessionState | null = null;

  constructor(private readonly api: ApiClient) {}

  async load(trainId: string): Promise<SessionState> {
    const [view, manifest] = await Promise.all([
      this.api.getTrain(trainId),
      this.api.getMosaic(trainId),
    ]);
    const cells = buildCells(manifest, view);
    this.state = { trainId, view, cells, queue: reviewQueue(cells) };
    return this.state;
  }

  /**
   * Precheck, PATCH, then reload everything from the server. The returned
   * state is a fresh GET; nothing is updated optimistically.
   */
  async submitCorrection(
    position: number,
    codeText: string,
    operator: string,
    reason: string,
  ): Promise<SessionState> {
    if (this.state === null) {
      throw new Error("no train loaded");
    }
    if (!operator.trim()) {
      throw new Error("operator name is required for the audit trail");
    }
    const gate = precheckCorrection(codeText, reason);
    if (!gate.ok) {
      throw new Error(gate.error ?? "invalid code");
    }
    await this.api.submitCorrection(this.state.trainId, position, {
      new_code: codeText.trim().toUpperCase(),
      operator: operator.trim(),
      reason,
    });
    return this.load(this.state.trainId);
  }
}
