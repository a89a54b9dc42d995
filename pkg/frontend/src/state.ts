/**
 * Pure session state for the page.
 *
 * Invariants enforced here rather than in the DOM layer: at most one request
 * is in flight, history is append-only and newest first, and history rows
 * copy the verdict and raw score straight from the service response (the
 * client never re-thresholds).
 */

import type { Prediction, Verdict } from './api.js';

export interface HistoryEntry {
  thumbnail: string;
  verdict: Verdict;
  raw: number;
  timestamp: number;
}

export interface UiState {
  inFlight: boolean;
  preview: string | null;
  lastPrediction: Prediction | null;
  history: readonly HistoryEntry[];
}

export function initialState(): UiState {
  return { inFlight: false, preview: null, lastPrediction: null, history: [] };
}

/** Whether a new upload may start. False only while one is outstanding. */
export function canSubmit(state: UiState): boolean {
  return !state.inFlight;
}

/** Mark a request started and show the chosen image. */
export function beginUpload(state: UiState, preview: string): UiState {
  if (state.inFlight) {
    throw new Error('an upload is already in flight');
  }
  return { ...state, inFlight: true, preview };
}

/** Record a service response and prepend it to the session history. */
export function completeUpload(
  state: UiState,
  prediction: Prediction,
  thumbnail: string,
  timestamp: number,
): UiState {
  if (!state.inFlight) {
    throw new Error('no upload in flight');
  }
  const entry: HistoryEntry = {
    thumbnail,
    verdict: prediction.verdict,
    raw: prediction.raw,
    timestamp,
  };
  return {
    inFlight: false,
    preview: state.preview,
    lastPrediction: prediction,
    history: [entry, ...state.history],
  };
}

/** Record a failed request. History and the last result are untouched. */
export function failUpload(state: UiState): UiState {
  if (!state.inFlight) {
    throw new Error('no upload in flight');
  }
  return { ...state, inFlight: false };
}
