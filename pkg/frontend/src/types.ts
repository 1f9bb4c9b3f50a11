/** Wire types mirroring the rating-service payloads. */

export interface BlindedResponse {
  slot: number;
  label: string; // "Response 1".."Response k"
  text: string;
}

export interface UiBlindedItem {
  sample_id: string;
  sample_index: number;
  n_samples: number;
  text: string;
  responses: BlindedResponse[];
  pending_slots: number[];
}

export interface NextItemEnvelope {
  done: boolean;
  item?: UiBlindedItem;
}

export const DIMENSIONS = ['correctness', 'completeness', 'readability'] as const;
export type Dimension = (typeof DIMENSIONS)[number];

export interface RubricDimension {
  question: string;
  anchors: Record<string, string>; // "1".."5" -> anchor line
  annotation_note?: string;
}

export interface Rubric {
  version: string;
  scale_note: string;
  dimensions: Record<Dimension, RubricDimension>;
}

export interface RatingDraft {
  correctness?: number;
  completeness?: number;
  readability?: number;
  note?: string;
}

export interface RatingSubmission {
  rater_id: string;
  sample_id: string;
  display_slot: number;
  correctness: number;
  completeness: number;
  readability: number;
  note: string;
}

export interface SubmitAck {
  status: string;
  sample_id: string;
  display_slot: number;
}

/** Minimal storage surface so drafts work with localStorage or a plain Map. */
export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
