/**
 * Minimal SVG line-chart builder.
 *
 * Every chart carries an annotation layer: <text class="annotation"> elements
 * whose data-value attributes echo source-file cell strings verbatim, so
 * downstream checks can read figures back without loss.
 */

export interface Series {
  x: number[];
  y: number[];
  label: string;
  color: string;
  markersOnly?: boolean;
}

export interface RefLine {
  value: number;
  label: string;
  color: string;
}

export interface Annotation {
  x: number;
  y: number;
  /** verbatim source string; never recomputed */
  value: string;
  series: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  refLines?: RefLine[];
  annotations?: Annotation[];
  logX?: boolean;
  width?: number;
  height?: number;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(rough))));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 1e-9; v += step) ticks.push(v);
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(0);
  return parseFloat(v.toPrecision(4)).toString();
}

export function buildChart(spec: ChartSpec): string {
  const W = spec.width ?? 640;
  const H = spec.height ?? 360;
  const ml = 64;
  const mr = 18;
  const mt = 34;
  const mb = 46;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const allX = spec.series.flatMap((s) => s.x);
  const allY = spec.series
    .flatMap((s) => s.y)
    .concat((spec.refLines ?? []).map((r) => r.value));
  if (allX.length === 0) throw new Error("nothing to plot: no data points");

  const toX = (v: number) => (spec.logX ? Math.log10(v) : v);
  let xMin = Math.min(...allX.map(toX));
  let xMax = Math.max(...allX.map(toX));
  if (xMax === xMin) {
    xMin -= 0.5;
    xMax += 0.5;
  }
  let yMin = Math.min(...allY);
  let yMax = Math.max(...allY);
  const pad = (yMax - yMin || Math.abs(yMax) || 1) * 0.08;
  yMin -= pad;
  yMax += pad;

  const xOf = (v: number) => ml + ((toX(v) - xMin) / (xMax - xMin)) * pw;
  const yOf = (v: number) => mt + ph - ((v - yMin) / (yMax - yMin)) * ph;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ml}" y="${mt - 14}" font-size="12" font-weight="600" fill="#222">${esc(spec.title)}</text>\n`;

  const yTicks = niceTicks(yMin, yMax, 6);
  for (const v of yTicks) {
    const y = yOf(v);
    s += `<line x1="${ml}" y1="${y.toFixed(1)}" x2="${ml + pw}" y2="${y.toFixed(1)}" stroke="#eee" stroke-width="0.6"/>\n`;
    s += `<text x="${ml - 6}" y="${(y + 3).toFixed(1)}" text-anchor="end" font-size="9" fill="#555">${esc(fmtTick(v))}</text>\n`;
  }
  const xTickVals = spec.logX
    ? niceTicks(xMin, xMax, 6).map((v) => Math.pow(10, v))
    : niceTicks(xMin, xMax, 7);
  for (const v of xTickVals) {
    const x = xOf(v);
    if (x < ml - 1 || x > ml + pw + 1) continue;
    s += `<line x1="${x.toFixed(1)}" y1="${mt + ph}" x2="${x.toFixed(1)}" y2="${mt + ph + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${x.toFixed(1)}" y="${mt + ph + 16}" text-anchor="middle" font-size="9" fill="#555">${esc(fmtTick(v))}</text>\n`;
  }

  // frame
  s += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${mt + ph}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<line x1="${ml}" y1="${mt + ph}" x2="${ml + pw}" y2="${mt + ph}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<text x="${ml + pw / 2}" y="${H - 8}" text-anchor="middle" font-size="10" fill="#333">${esc(spec.xLabel)}</text>\n`;
  s += `<text x="16" y="${mt + ph / 2}" text-anchor="middle" font-size="10" fill="#333" transform="rotate(-90,16,${mt + ph / 2})">${esc(spec.yLabel)}</text>\n`;

  // dotted equilibrium reference lines
  for (const ref of spec.refLines ?? []) {
    const y = yOf(ref.value);
    s += `<line class="ref-line" data-label="${esc(ref.label)}" data-value="${esc(String(ref.value))}" x1="${ml}" y1="${y.toFixed(1)}" x2="${ml + pw}" y2="${y.toFixed(1)}" stroke="${ref.color}" stroke-width="1" stroke-dasharray="2,4"/>\n`;
  }

  for (const series of spec.series) {
    const pts = series.x.map((xv, i) => `${xOf(xv).toFixed(2)},${yOf(series.y[i]).toFixed(2)}`);
    if (!series.markersOnly && pts.length > 1) {
      s += `<polyline fill="none" stroke="${series.color}" stroke-width="1.4" points="${pts.join(" ")}"/>\n`;
    }
    if (series.markersOnly || pts.length === 1) {
      for (const p of pts) {
        const [px, py] = p.split(",");
        s += `<circle cx="${px}" cy="${py}" r="2.5" fill="${series.color}"/>\n`;
      }
    }
  }

  // legend
  let ly = mt + 8;
  for (const series of spec.series) {
    const lx = ml + pw - 176;
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 16}" y2="${ly}" stroke="${series.color}" stroke-width="1.6"/>\n`;
    s += `<text x="${lx + 20}" y="${ly + 3}" font-size="9" fill="#444">${esc(series.label)}</text>\n`;
    ly += 12;
  }
  for (const ref of spec.refLines ?? []) {
    const lx = ml + pw - 176;
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 16}" y2="${ly}" stroke="${ref.color}" stroke-width="1" stroke-dasharray="2,4"/>\n`;
    s += `<text x="${lx + 20}" y="${ly + 3}" font-size="9" fill="#444">${esc(ref.label)}</text>\n`;
    ly += 12;
  }

  // annotation layer: verbatim source values
  s += `<g class="annotations">\n`;
  for (const a of spec.annotations ?? []) {
    const px = Math.min(xOf(a.x), ml + pw - 4).toFixed(1);
    const py = (yOf(a.y) - 5).toFixed(1);
    const shown = parseFloat(a.value);
    s += `  <text class="annotation" data-series="${esc(a.series)}" data-value="${esc(a.value)}" x="${px}" y="${py}" text-anchor="end" font-size="8" fill="#222">${esc(Number.isFinite(shown) ? parseFloat(shown.toPrecision(5)).toString() : a.value)}</text>\n`;
  }
  s += `</g>\n`;
  s += `</svg>\n`;
  return s;
}

/** Read back the annotation layer of a rendered chart: series -> verbatim value. */
export function readAnnotations(svg: string): Map<string, string> {
  const out = new Map<string, string>();
  const re = /<text class="annotation" data-series="([^"]*)" data-value="([^"]*)"/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(svg)) !== null) out.set(m[1], m[2]);
  return out;
}
