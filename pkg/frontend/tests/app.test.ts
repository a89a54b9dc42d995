import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { wireApp, type AppController } from '../src/app.js';

const SERVICE = 'http://svc.test';

const HEALTH_BODY = { status: 'ok', 'model-version': 'feedfacefeedface' };

function predictionBody(verdict: 'clean' | 'contaminated', raw: number) {
  return {
    class: verdict,
    raw,
    confidence: Math.abs(raw - 0.5) * 2,
    'model-version': 'feedfacefeedface',
    'latency-ms': 2.5,
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

interface Route {
  predict: (init?: RequestInit) => Promise<Response>;
}

/** Stub fetch with a healthy /health and a per-test /predict behavior. */
function stubRoutes(route: Route) {
  const spy = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (url.endsWith('/health')) return jsonResponse(HEALTH_BODY);
    if (url.endsWith('/predict')) return route.predict(init);
    throw new Error(`unexpected fetch ${url}`);
  });
  vi.stubGlobal('fetch', spy);
  return spy;
}

function sampleFile(): File {
  return new File([new Uint8Array([137, 80, 78, 71, 1, 2, 3])], 'sample.png', {
    type: 'image/png',
  });
}

function mount(): { root: HTMLElement; app: AppController } {
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.getElementById('app') as HTMLElement;
  const app = wireApp(root, { serviceUrl: SERVICE });
  return { root, app };
}

function text(root: HTMLElement, selector: string): string {
  return root.querySelector(selector)?.textContent ?? '';
}

beforeEach(() => {
  document.body.innerHTML = '';
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('initial render', () => {
  it('shows the empty-state message and no result card', () => {
    stubRoutes({ predict: async () => jsonResponse(predictionBody('clean', 0.1)) });
    const { root } = mount();
    expect(text(root, '.history-empty')).toContain('No uploads yet');
    expect((root.querySelector('.history-empty') as HTMLElement).hidden).toBe(false);
    expect((root.querySelector('.result-panel') as HTMLElement).hidden).toBe(true);
    expect(root.querySelectorAll('.history-row')).toHaveLength(0);
  });

  it('reports the service model version in the status line', async () => {
    stubRoutes({ predict: async () => jsonResponse(predictionBody('clean', 0.1)) });
    const { root } = mount();
    await vi.waitFor(() => {
      expect(text(root, '.service-status')).toContain('feedfacefeedface');
    });
    expect(root.querySelector('.service-status')?.classList.contains('status-ok')).toBe(true);
  });

  it('marks the service unreachable when the health check fails', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () => {
        throw new TypeError('fetch failed');
      }),
    );
    const { root } = mount();
    await vi.waitFor(() => {
      expect(text(root, '.service-status')).toContain('unreachable');
    });
    expect(root.querySelector('.service-status')?.classList.contains('status-down')).toBe(true);
  });
});

describe('upload and predict', () => {
  it('renders the class exactly as the service returned it', async () => {
    stubRoutes({ predict: async () => jsonResponse(predictionBody('contaminated', 0.931)) });
    const { root, app } = mount();
    await app.handleFile(sampleFile());

    const verdict = root.querySelector('.verdict') as HTMLElement;
    expect(verdict.textContent).toBe('contaminated');
    expect(verdict.classList.contains('verdict-contaminated')).toBe(true);
    expect((root.querySelector('.result-panel') as HTMLElement).hidden).toBe(false);
    const fill = root.querySelector('.gauge-fill') as HTMLElement;
    expect(parseFloat(fill.style.width)).toBeGreaterThan(50);
    expect(text(root, '.confidence')).toContain('0.862');
    expect(text(root, '.result-meta')).toContain('raw 0.931000');
  });

  it('renders a clean response with the gauge left of the threshold', async () => {
    stubRoutes({ predict: async () => jsonResponse(predictionBody('clean', 0.042)) });
    const { root, app } = mount();
    await app.handleFile(sampleFile());

    const verdict = root.querySelector('.verdict') as HTMLElement;
    expect(verdict.textContent).toBe('clean');
    expect(verdict.classList.contains('verdict-clean')).toBe(true);
    const fill = root.querySelector('.gauge-fill') as HTMLElement;
    expect(parseFloat(fill.style.width)).toBeLessThan(50);
  });

  it('appends history rows newest first', async () => {
    let raw = 0.1;
    stubRoutes({
      predict: async () =>
        jsonResponse(predictionBody(raw >= 0.5 ? 'contaminated' : 'clean', raw)),
    });
    const { root, app } = mount();
    await app.handleFile(sampleFile());
    raw = 0.93;
    await app.handleFile(sampleFile());
    raw = 0.2;
    await app.handleFile(sampleFile());

    const rows = [...root.querySelectorAll('.history-row')];
    expect(rows).toHaveLength(3);
    expect(rows.map((row) => row.querySelector('.history-verdict')?.textContent)).toEqual([
      'clean',
      'contaminated',
      'clean',
    ]);
    expect(rows[0]?.querySelector('.history-raw')?.textContent).toBe('raw 0.200');
    expect((root.querySelector('.history-empty') as HTMLElement).hidden).toBe(true);
    expect(rows[0]?.querySelector('.history-thumb')).not.toBeNull();
    expect(rows[0]?.querySelector('.history-time')?.textContent).not.toBe('');
  });

  it('uploads through the file input change event', async () => {
    const spy = stubRoutes({
      predict: async () => jsonResponse(predictionBody('clean', 0.1)),
    });
    const { root } = mount();
    const input = root.querySelector('.file-input') as HTMLInputElement;
    Object.defineProperty(input, 'files', { value: [sampleFile()], configurable: true });
    input.dispatchEvent(new Event('change', { bubbles: true }));
    await vi.waitFor(() => {
      expect(root.querySelectorAll('.history-row')).toHaveLength(1);
    });
    const predictCalls = spy.mock.calls.filter(([u]) => String(u).endsWith('/predict'));
    expect(predictCalls).toHaveLength(1);
  });
});

describe('failure banners', () => {
  it('a service rejection shows a server banner and leaves history alone', async () => {
    stubRoutes({
      predict: async () =>
        jsonResponse({ detail: 'unsupported content type text/plain' }, 415),
    });
    const { root, app } = mount();
    await app.handleFile(sampleFile());

    const banner = root.querySelector('.banner') as HTMLElement;
    expect(banner.classList.contains('banner-server')).toBe(true);
    expect(banner.classList.contains('banner-network')).toBe(false);
    expect(banner.textContent).toContain('Service error');
    expect(banner.textContent).toContain('unsupported content type');
    expect(root.querySelectorAll('.history-row')).toHaveLength(0);
    expect(app.getState().inFlight).toBe(false);
  });

  it('an unreachable service shows a network banner, not a crash', async () => {
    stubRoutes({
      predict: async () => {
        throw new TypeError('fetch failed');
      },
    });
    const { root, app } = mount();
    await app.handleFile(sampleFile());

    const banner = root.querySelector('.banner') as HTMLElement;
    expect(banner.classList.contains('banner-network')).toBe(true);
    expect(banner.textContent).toContain('Network error');
    expect(banner.textContent).toContain('cannot reach');
    expect(root.querySelectorAll('.history-row')).toHaveLength(0);
  });

  it('a failure keeps the previous result visible and the banner clears on retry', async () => {
    let fail = false;
    stubRoutes({
      predict: async () => {
        if (fail) throw new TypeError('fetch failed');
        return jsonResponse(predictionBody('contaminated', 0.9));
      },
    });
    const { root, app } = mount();
    await app.handleFile(sampleFile());
    fail = true;
    await app.handleFile(sampleFile());

    expect(text(root, '.verdict')).toBe('contaminated');
    expect(root.querySelectorAll('.history-row')).toHaveLength(1);
    expect(root.querySelector('.banner-network')).not.toBeNull();

    fail = false;
    await app.handleFile(sampleFile());
    expect(root.querySelector('.banner')).toBeNull();
    expect(root.querySelectorAll('.history-row')).toHaveLength(2);
  });
});

describe('in-flight lock', () => {
  it('disables resubmission while a request is out instead of queuing', async () => {
    let release: (value: Response) => void = () => {};
    const gate = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const spy = stubRoutes({ predict: () => gate });
    const { root, app } = mount();

    const first = app.handleFile(sampleFile());
    await vi.waitFor(() => {
      expect(app.getState().inFlight).toBe(true);
    });
    const dropzone = root.querySelector('.dropzone') as HTMLElement;
    const input = root.querySelector('.file-input') as HTMLInputElement;
    expect(dropzone.classList.contains('dropzone-busy')).toBe(true);
    expect(input.disabled).toBe(true);

    await app.handleFile(sampleFile()); // refused, not queued
    const predictCalls = spy.mock.calls.filter(([u]) => String(u).endsWith('/predict'));
    expect(predictCalls).toHaveLength(1);

    release(jsonResponse(predictionBody('clean', 0.1)));
    await first;
    expect(app.getState().inFlight).toBe(false);
    expect(root.querySelectorAll('.history-row')).toHaveLength(1);
    expect(input.disabled).toBe(false);
  });
});
