/**
 * Page controller: wires the dropzone, result card, banners, and history
 * list to the pure state module and the service client.
 */

import { ApiError, NetworkError, fetchHealth, predictImage } from './api.js';
import { renderGauge } from './gauge.js';
import {
  beginUpload,
  canSubmit,
  completeUpload,
  failUpload,
  initialState,
  type HistoryEntry,
  type UiState,
} from './state.js';

export interface AppOptions {
  serviceUrl: string;
}

export interface AppController {
  /** Current immutable UI state, exposed for tests and debugging. */
  getState(): UiState;
  /** Run one chosen file through the full upload pipeline. Never rejects. */
  handleFile(file: File): Promise<void>;
  /** Re-query GET /health and update the status line. Never rejects. */
  refreshHealth(): Promise<void>;
}

async function thumbnailFor(file: File): Promise<string> {
  // Object URLs are cheap, but not every embedder implements them; fall
  // back to an inline data URL (the uploads are small photos).
  if (typeof URL !== 'undefined' && typeof URL.createObjectURL === 'function') {
    try {
      return URL.createObjectURL(file);
    } catch {
      // fall through to the data URL
    }
  }
  const bytes = new Uint8Array(await file.arrayBuffer());
  let binary = '';
  for (const byte of bytes) {
    binary += String.fromCharCode(byte);
  }
  return `data:${file.type || 'image/png'};base64,${btoa(binary)}`;
}

export function wireApp(root: HTMLElement, options: AppOptions): AppController {
  const doc = root.ownerDocument;
  root.innerHTML = `
    <header class="app-header">
      <h1>AquaSight</h1>
      <p class="tagline">Upload a water photo to screen it for contamination.</p>
      <p class="service-status">checking service...</p>
    </header>
    <section class="upload-panel">
      <div class="dropzone" tabindex="0">
        <p class="dropzone-hint">Drop a water photo here, or click to browse.</p>
        <img class="preview" alt="selected water sample" hidden>
      </div>
      <input class="file-input" type="file" accept="image/png,image/jpeg" hidden>
    </section>
    <div class="banner-area"></div>
    <section class="result-panel" hidden>
      <p class="verdict"></p>
      <div class="gauge-mount"></div>
      <p class="confidence"></p>
      <p class="result-meta"></p>
    </section>
    <section class="history-panel">
      <h2>This session</h2>
      <p class="history-empty">No uploads yet this session.</p>
      <ul class="history-list"></ul>
    </section>
  `;

  const statusEl = root.querySelector('.service-status') as HTMLElement;
  const dropzone = root.querySelector('.dropzone') as HTMLElement;
  const hint = root.querySelector('.dropzone-hint') as HTMLElement;
  const previewImg = root.querySelector('.preview') as HTMLImageElement;
  const input = root.querySelector('.file-input') as HTMLInputElement;
  const bannerArea = root.querySelector('.banner-area') as HTMLElement;
  const resultPanel = root.querySelector('.result-panel') as HTMLElement;
  const verdictEl = root.querySelector('.verdict') as HTMLElement;
  const gaugeMount = root.querySelector('.gauge-mount') as HTMLElement;
  const confidenceEl = root.querySelector('.confidence') as HTMLElement;
  const metaEl = root.querySelector('.result-meta') as HTMLElement;
  const historyEmpty = root.querySelector('.history-empty') as HTMLElement;
  const historyList = root.querySelector('.history-list') as HTMLElement;

  let state: UiState = initialState();

  function historyRow(entry: HistoryEntry): HTMLLIElement {
    const li = doc.createElement('li');
    li.className = `history-row history-${entry.verdict}`;
    const img = doc.createElement('img');
    img.className = 'history-thumb';
    img.src = entry.thumbnail;
    img.alt = `${entry.verdict} sample`;
    const verdict = doc.createElement('span');
    verdict.className = 'history-verdict';
    verdict.textContent = entry.verdict;
    const raw = doc.createElement('span');
    raw.className = 'history-raw';
    raw.textContent = `raw ${entry.raw.toFixed(3)}`;
    const time = doc.createElement('time');
    time.className = 'history-time';
    time.textContent = new Date(entry.timestamp).toLocaleTimeString();
    li.append(img, verdict, raw, time);
    return li;
  }

  function render(): void {
    dropzone.classList.toggle('dropzone-busy', state.inFlight);
    input.disabled = state.inFlight;
    if (state.preview !== null) {
      previewImg.src = state.preview;
      previewImg.hidden = false;
      hint.textContent = state.inFlight
        ? 'Analyzing...'
        : 'Drop another photo, or click to browse.';
    }
    const prediction = state.lastPrediction;
    if (prediction !== null) {
      resultPanel.hidden = false;
      verdictEl.textContent = prediction.verdict;
      verdictEl.className = `verdict verdict-${prediction.verdict}`;
      gaugeMount.replaceChildren(renderGauge(prediction.raw, doc));
      confidenceEl.textContent = `confidence ${prediction.confidence.toFixed(3)}`;
      metaEl.textContent =
        `raw ${prediction.raw.toFixed(6)}, model ${prediction.modelVersion.slice(0, 16)}, ` +
        `${prediction.latencyMs.toFixed(1)} ms server time`;
    }
    historyEmpty.hidden = state.history.length > 0;
    historyList.replaceChildren(...state.history.map(historyRow));
  }

  function showBanner(kind: 'network' | 'server', message: string): void {
    const banner = doc.createElement('div');
    banner.className = `banner banner-${kind}`;
    banner.textContent = (kind === 'network' ? 'Network error: ' : 'Service error: ') + message;
    bannerArea.replaceChildren(banner);
  }

  function clearBanner(): void {
    bannerArea.replaceChildren();
  }

  async function handleFile(file: File): Promise<void> {
    if (!canSubmit(state)) {
      return; // resubmission is disabled while a request is out, never queued
    }
    clearBanner();
    try {
      const preview = await thumbnailFor(file);
      state = beginUpload(state, preview);
      render();
      const prediction = await predictImage(options.serviceUrl, file);
      state = completeUpload(state, prediction, preview, Date.now());
      render();
    } catch (err) {
      if (state.inFlight) {
        state = failUpload(state);
      }
      render();
      if (err instanceof NetworkError) {
        showBanner('network', err.message);
      } else if (err instanceof ApiError) {
        showBanner('server', err.message);
      } else {
        showBanner('server', String(err));
      }
    }
  }

  async function refreshHealth(): Promise<void> {
    try {
      const health = await fetchHealth(options.serviceUrl);
      statusEl.textContent = `service ${health.status}, model ${health.modelVersion.slice(0, 16)}`;
      statusEl.className = 'service-status status-ok';
    } catch {
      statusEl.textContent = `service unreachable at ${options.serviceUrl}`;
      statusEl.className = 'service-status status-down';
    }
  }

  dropzone.addEventListener('click', () => {
    if (canSubmit(state)) input.click();
  });
  dropzone.addEventListener('keydown', (event) => {
    if ((event.key === 'Enter' || event.key === ' ') && canSubmit(state)) {
      event.preventDefault();
      input.click();
    }
  });
  input.addEventListener('change', () => {
    const file = input.files?.[0];
    if (file) void handleFile(file);
    input.value = ''; // allow re-selecting the same file
  });
  dropzone.addEventListener('dragover', (event) => {
    event.preventDefault();
    dropzone.classList.add('dropzone-active');
  });
  dropzone.addEventListener('dragleave', () => {
    dropzone.classList.remove('dropzone-active');
  });
  dropzone.addEventListener('drop', (event) => {
    event.preventDefault();
    dropzone.classList.remove('dropzone-active');
    const file = event.dataTransfer?.files?.[0];
    if (file) void handleFile(file);
  });

  render();
  void refreshHealth();

  return {
    getState: () => state,
    handleFile,
    refreshHealth,
  };
}
