/** Typed client for the water-analysis service HTTP endpoints. */

export type Verdict = 'clean' | 'contaminated';

export interface Prediction {
  verdict: Verdict;
  raw: number;
  confidence: number;
  modelVersion: string;
  latencyMs: number;
}

export interface Health {
  status: string;
  modelVersion: string;
}

/** The service answered and rejected the request (HTTP 4xx/5xx). */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`service rejected the request (HTTP ${status}): ${detail}`);
    this.name = 'ApiError';
    this.status = status;
    this.detail = detail;
  }
}

/** The service could not be reached at all (stopped, refused, unreachable). */
export class NetworkError extends Error {
  readonly url: string;

  constructor(url: string, cause: unknown) {
    super(`cannot reach the analysis service at ${url}`, { cause });
    this.name = 'NetworkError';
    this.url = url;
  }
}

function joinUrl(baseUrl: string, path: string): string {
  return baseUrl.replace(/\/+$/, '') + path;
}

function contentTypeFor(file: File): string {
  if (file.type.startsWith('image/')) return file.type;
  const name = file.name.toLowerCase();
  if (name.endsWith('.png')) return 'image/png';
  if (name.endsWith('.jpg') || name.endsWith('.jpeg')) return 'image/jpeg';
  return file.type || 'application/octet-stream';
}

/** Pull the human-readable rejection reason out of an error response. */
async function readDetail(res: Response): Promise<string> {
  let text = '';
  try {
    text = await res.text();
  } catch {
    // body unreadable; fall through to the status line
  }
  try {
    const body: unknown = JSON.parse(text);
    if (typeof body === 'object' && body !== null) {
      const detail = (body as Record<string, unknown>)['detail'];
      if (typeof detail === 'string') return detail;
    }
  } catch {
    // not JSON; use the raw text
  }
  return text || res.statusText || `status ${res.status}`;
}

function parsePrediction(body: unknown): Prediction {
  const obj = (typeof body === 'object' && body !== null ? body : {}) as Record<string, unknown>;
  const verdict = obj['class'];
  const raw = obj['raw'];
  const confidence = obj['confidence'];
  const modelVersion = obj['model-version'];
  const latencyMs = obj['latency-ms'];
  if (
    (verdict !== 'clean' && verdict !== 'contaminated') ||
    typeof raw !== 'number' || !Number.isFinite(raw) ||
    typeof confidence !== 'number' || !Number.isFinite(confidence) ||
    typeof modelVersion !== 'string' ||
    typeof latencyMs !== 'number'
  ) {
    throw new ApiError(200, 'malformed prediction response');
  }
  return { verdict, raw, confidence, modelVersion, latencyMs };
}

/**
 * Send one image to POST /predict and return the parsed verdict.
 *
 * Throws NetworkError when the service cannot be reached and ApiError when
 * it answers with a rejection, so callers can render the two differently.
 */
export async function predictImage(baseUrl: string, file: File): Promise<Prediction> {
  const url = joinUrl(baseUrl, '/predict');
  const body = await file.arrayBuffer();
  let res: Response;
  try {
    res = await fetch(url, {
      method: 'POST',
      headers: { 'Content-Type': contentTypeFor(file) },
      body,
    });
  } catch (cause) {
    throw new NetworkError(url, cause);
  }
  if (!res.ok) {
    throw new ApiError(res.status, await readDetail(res));
  }
  let parsed: unknown;
  try {
    parsed = await res.json();
  } catch {
    throw new ApiError(res.status, 'response body is not JSON');
  }
  return parsePrediction(parsed);
}

/** Fetch GET /health; used for the status line, not for gating uploads. */
export async function fetchHealth(baseUrl: string): Promise<Health> {
  const url = joinUrl(baseUrl, '/health');
  let res: Response;
  try {
    res = await fetch(url);
  } catch (cause) {
    throw new NetworkError(url, cause);
  }
  if (!res.ok) {
    throw new ApiError(res.status, await readDetail(res));
  }
  let parsed: unknown;
  try {
    parsed = await res.json();
  } catch {
    throw new ApiError(res.status, 'response body is not JSON');
  }
  const obj = (typeof parsed === 'object' && parsed !== null ? parsed : {}) as Record<string, unknown>;
  const status = obj['status'];
  const modelVersion = obj['model-version'];
  if (typeof status !== 'string' || typeof modelVersion !== 'string') {
    throw new ApiError(res.status, 'malformed health response');
  }
  return { status, modelVersion };
}
