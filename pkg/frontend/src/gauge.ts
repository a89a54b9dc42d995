/** Horizontal 0-to-1 gauge for the raw score, with the 0.5 threshold marked. */

export function renderGauge(raw: number, doc: Document = document): HTMLElement {
  const clamped = Math.min(1, Math.max(0, raw));
  const side = clamped >= 0.5 ? 'gauge-high' : 'gauge-low';

  const gauge = doc.createElement('div');
  gauge.className = `gauge ${side}`;

  const track = doc.createElement('div');
  track.className = 'gauge-track';

  const fill = doc.createElement('div');
  fill.className = 'gauge-fill';
  fill.style.width = `${(clamped * 100).toFixed(1)}%`;

  const threshold = doc.createElement('div');
  threshold.className = 'gauge-threshold';
  threshold.style.left = '50%';
  threshold.title = 'decision threshold 0.5';

  const value = doc.createElement('span');
  value.className = 'gauge-value';
  value.textContent = clamped.toFixed(3);

  track.append(fill, threshold);
  gauge.append(track, value);
  return gauge;
}
