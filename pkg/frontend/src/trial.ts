/** State of one MUSHRA trial: slider values and the submit gate. */

import type { RatingRecord, SessionTrial } from "./api.js";

export interface Slot {
  stimulusId: string;
  /** The labelled reference has no slider; it is always the leftmost slot. */
  isReference: boolean;
}

export class TrialState {
  readonly trialId: string;
  readonly referenceId: string;
  readonly conditionIds: string[];
  private readonly ratings = new Map<string, number>();
  private readonly touched = new Set<string>();

  constructor(trial: SessionTrial) {
    this.trialId = trial.trial;
    this.referenceId = trial.reference;
    // keep the server-provided (per-participant deterministic) order
    this.conditionIds = [...trial.conditions];
    for (const id of this.conditionIds) {
      this.ratings.set(id, 0);
    }
  }

  /** Reference leftmost, then the rated conditions in server order. */
  slots(): Slot[] {
    return [
      { stimulusId: this.referenceId, isReference: true },
      ...this.conditionIds.map((id) => ({ stimulusId: id, isReference: false })),
    ];
  }

  rating(conditionId: string): number {
    const value = this.ratings.get(conditionId);
    if (value === undefined) {
      throw new Error(`unknown condition ${conditionId}`);
    }
    return value;
  }

  setRating(conditionId: string, value: number): void {
    if (!this.ratings.has(conditionId)) {
      throw new Error(`unknown condition ${conditionId}`);
    }
    if (!Number.isFinite(value)) {
      throw new Error("rating must be a number");
    }
    const clamped = Math.min(100, Math.max(0, Math.round(value)));
    this.ratings.set(conditionId, clamped);
    this.touched.add(conditionId);
  }

  isTouched(conditionId: string): boolean {
    return this.touched.has(conditionId);
  }

  /** Every slider must have been moved (or deliberately set) once. */
  canSubmit(): boolean {
    return this.conditionIds.every((id) => this.touched.has(id));
  }

  records(participant: string): RatingRecord[] {
    if (!this.canSubmit()) {
      throw new Error("not all conditions have been rated");
    }
    return this.conditionIds.map((condition) => ({
      participant,
      trial: this.trialId,
      condition,
      rating: this.rating(condition),
    }));
  }
}
