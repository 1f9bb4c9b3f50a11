import { RatingServiceClient, ServiceError } from './api.js';
import {
  DIMENSIONS,
  type Dimension,
  type DraftStorage,
  type RatingDraft,
  type UiBlindedItem,
} from './types.js';

class MemoryStorage implements DraftStorage {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export interface FlowOptions {
  client: RatingServiceClient;
  sessionId: string;
  raterId: string;
  /** Drafts survive reloads when this is localStorage; defaults to memory. */
  storage?: DraftStorage;
}

/**
 * Drives one rater through a session: serves the current blinded item,
 * accumulates per-slot drafts (all three dimensions required before submit),
 * submits records, and advances until the service reports done.
 */
export class RatingFlow {
  readonly sessionId: string;
  readonly raterId: string;
  private readonly client: RatingServiceClient;
  private readonly storage: DraftStorage;
  private item: UiBlindedItem | null = null;
  private finished = false;
  private submittedSlots = new Set<number>();

  constructor(options: FlowOptions) {
    this.client = options.client;
    this.sessionId = options.sessionId;
    this.raterId = options.raterId;
    this.storage = options.storage ?? new MemoryStorage();
  }

  get done(): boolean {
    return this.finished;
  }

  get current(): UiBlindedItem | null {
    return this.item;
  }

  async loadNext(): Promise<UiBlindedItem | null> {
    const envelope = await this.client.nextItem(this.sessionId, this.raterId);
    if (envelope.done || !envelope.item) {
      this.finished = true;
      this.item = null;
      return null;
    }
    this.item = envelope.item;
    this.submittedSlots = new Set(
      this.item.responses
        .map((r) => r.slot)
        .filter((slot) => !this.item!.pending_slots.includes(slot)),
    );
    return this.item;
  }

  private draftKey(slot: number): string {
    const sample = this.item ? this.item.sample_id : '?';
    return `draft:${this.sessionId}:${this.raterId}:${sample}:${slot}`;
  }

  getDraft(slot: number): RatingDraft {
    const raw = this.storage.getItem(this.draftKey(slot));
    return raw ? (JSON.parse(raw) as RatingDraft) : {};
  }

  setScore(slot: number, dimension: Dimension, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new Error(`${dimension} must be an integer 1..5, got ${value}`);
    }
    const draft = this.getDraft(slot);
    draft[dimension] = value;
    this.storage.setItem(this.draftKey(slot), JSON.stringify(draft));
  }

  setNote(slot: number, note: string): void {
    const draft = this.getDraft(slot);
    draft.note = note;
    this.storage.setItem(this.draftKey(slot), JSON.stringify(draft));
  }

  /** Submit is allowed only when every dimension has a score. */
  canSubmit(slot: number): boolean {
    if (this.submittedSlots.has(slot)) return false;
    const draft = this.getDraft(slot);
    return DIMENSIONS.every((d) => typeof draft[d] === 'number');
  }

  slotSubmitted(slot: number): boolean {
    return this.submittedSlots.has(slot);
  }

  itemComplete(): boolean {
    if (!this.item) return true;
    return this.item.responses.every((r) => this.submittedSlots.has(r.slot));
  }

  async submit(slot: number): Promise<void> {
    if (!this.item) throw new Error('no item loaded');
    if (this.submittedSlots.has(slot)) {
      throw new Error(`slot ${slot} already submitted`);
    }
    if (!this.canSubmit(slot)) {
      throw new Error(`slot ${slot} needs all three dimensions before submit`);
    }
    const draft = this.getDraft(slot);
    try {
      await this.client.submitRating(this.sessionId, {
        rater_id: this.raterId,
        sample_id: this.item.sample_id,
        display_slot: slot,
        correctness: draft.correctness!,
        completeness: draft.completeness!,
        readability: draft.readability!,
        note: draft.note ?? '',
      });
    } catch (error) {
      if (error instanceof ServiceError && error.status === 409) {
        // server says this slot is already recorded; treat as submitted
        this.submittedSlots.add(slot);
        this.storage.removeItem(this.draftKey(slot));
      }
      throw error;
    }
    this.submittedSlots.add(slot);
    this.storage.removeItem(this.draftKey(slot));
  }

  /** Submit every rateable slot of the current item, then fetch the next. */
  async submitItemAndAdvance(): Promise<UiBlindedItem | null> {
    if (!this.item) throw new Error('no item loaded');
    for (const response of this.item.responses) {
      if (!this.submittedSlots.has(response.slot)) {
        await this.submit(response.slot);
      }
    }
    return this.loadNext();
  }
}
