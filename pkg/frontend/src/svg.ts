// Small SVG plotting helpers shared by the figure renderers.
//
// Everything here is a pure string builder: no timestamps, no randomness,
// and coordinates rounded to a fixed precision, so the same inputs always
// produce byte-identical output.

export const COLORS = {
  axis: '#374151',
  grid: '#e5e7eb',
  text: '#111827',
  blue: '#2563eb',
  red: '#dc2626',
  green: '#16a34a',
  amber: '#f59e0b',
  gray: '#6b7280',
};

/** Pixel coordinate with fixed precision. */
export function px(v: number): string {
  return v.toFixed(2);
}

/** Compact tick label: plain decimals in a middle range, mantissa-e-exponent outside. */
export function fmtTick(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    const exp = Math.floor(Math.log10(a));
    const mant = parseFloat((v / Math.pow(10, exp)).toPrecision(3));
    return `${mant}e${exp}`;
  }
  return String(parseFloat(v.toPrecision(4)));
}

function niceNum(x: number, round: boolean): number {
  const exp = Math.floor(Math.log10(x));
  const f = x / Math.pow(10, exp);
  let nf: number;
  if (round) nf = f < 1.5 ? 1 : f < 3 ? 2 : f < 7 ? 5 : 10;
  else nf = f <= 1 ? 1 : f <= 2 ? 2 : f <= 5 ? 5 : 10;
  return nf * Math.pow(10, exp);
}

/** Round tick positions inside [lo, hi] (roughly `count` of them). */
export function linearTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    lo -= 1;
    hi += 1;
  }
  const step = niceNum(niceNum(hi - lo, false) / (count - 1), true);
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(parseFloat(v.toPrecision(12)));
  }
  return ticks;
}

/** Powers of ten inside [lo, hi]; falls back to the endpoints for sub-decade ranges. */
export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks.length >= 2 ? ticks : [lo, hi];
}

export interface AxisSpec {
  label: string;
  domain: [number, number];
  log?: boolean;
  /** Explicit tick positions; otherwise derived from the domain. */
  ticks?: number[];
}

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

/** Data-to-pixel map for one axis. */
export function makeScale(axis: AxisSpec, range: [number, number]): (v: number) => number {
  const d0 = axis.log ? Math.log10(axis.domain[0]) : axis.domain[0];
  const d1 = axis.log ? Math.log10(axis.domain[1]) : axis.domain[1];
  const span = d1 - d0 || 1;
  return (v) => {
    const t = ((axis.log ? Math.log10(v) : v) - d0) / span;
    return range[0] + t * (range[1] - range[0]);
  };
}

export function svgOpen(width: number, height: number): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n`;
}

export function svgClose(): string {
  return '</svg>\n';
}

export interface AxesResult {
  svg: string;
  sx: (v: number) => number;
  sy: (v: number) => number;
}

/** Axis lines, ticks, grid, labels, and title; returns the two pixel maps. */
export function axes(frame: Frame, x: AxisSpec, y: AxisSpec, title: string,
                     grid = true): AxesResult {
  const { width, height, margin } = frame;
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const x0 = margin.left;
  const y0 = margin.top + plotH;
  const sx = makeScale(x, [x0, x0 + plotW]);
  const sy = makeScale(y, [y0, margin.top]);

  const xTicks = x.ticks ?? (x.log ? logTicks(x.domain[0], x.domain[1])
    : linearTicks(x.domain[0], x.domain[1], 6));
  const yTicks = y.ticks ?? (y.log ? logTicks(y.domain[0], y.domain[1])
    : linearTicks(y.domain[0], y.domain[1], 5));

  let svg = '';
  if (grid) {
    for (const v of yTicks) {
      const yy = px(sy(v));
      svg += `<line x1="${px(x0)}" y1="${yy}" x2="${px(x0 + plotW)}" y2="${yy}" ` +
        `stroke="${COLORS.grid}" stroke-width="1"/>\n`;
    }
  }
  svg += `<line x1="${px(x0)}" y1="${px(y0)}" x2="${px(x0 + plotW)}" y2="${px(y0)}" ` +
    `stroke="${COLORS.axis}" stroke-width="1.5"/>\n`;
  svg += `<line x1="${px(x0)}" y1="${px(margin.top)}" x2="${px(x0)}" y2="${px(y0)}" ` +
    `stroke="${COLORS.axis}" stroke-width="1.5"/>\n`;

  for (const v of xTicks) {
    const xx = px(sx(v));
    svg += `<line x1="${xx}" y1="${px(y0)}" x2="${xx}" y2="${px(y0 + 5)}" ` +
      `stroke="${COLORS.axis}" stroke-width="1"/>\n`;
    svg += `<text x="${xx}" y="${px(y0 + 18)}" text-anchor="middle" font-size="11" ` +
      `fill="${COLORS.text}">${fmtTick(v)}</text>\n`;
  }
  for (const v of yTicks) {
    const yy = sy(v);
    svg += `<line x1="${px(x0 - 5)}" y1="${px(yy)}" x2="${px(x0)}" y2="${px(yy)}" ` +
      `stroke="${COLORS.axis}" stroke-width="1"/>\n`;
    svg += `<text x="${px(x0 - 8)}" y="${px(yy + 4)}" text-anchor="end" font-size="11" ` +
      `fill="${COLORS.text}">${fmtTick(v)}</text>\n`;
  }

  svg += `<text x="${px(x0 + plotW / 2)}" y="${px(height - 8)}" text-anchor="middle" ` +
    `font-size="13" fill="${COLORS.text}">${x.label}</text>\n`;
  svg += `<text x="15" y="${px(margin.top + plotH / 2)}" text-anchor="middle" ` +
    `font-size="13" fill="${COLORS.text}" ` +
    `transform="rotate(-90, 15, ${px(margin.top + plotH / 2)})">${y.label}</text>\n`;
  svg += `<text x="${px(width / 2)}" y="22" text-anchor="middle" font-size="15" ` +
    `font-weight="bold" fill="${COLORS.text}">${title}</text>\n`;
  return { svg, sx, sy };
}

/** Connected line through data points already mapped to pixels. */
export function polyline(points: Array<[number, number]>, color: string,
                         dash = ''): string {
  if (points.length === 0) return '';
  let d = `M ${px(points[0][0])} ${px(points[0][1])}`;
  for (let i = 1; i < points.length; i++) {
    d += ` L ${px(points[i][0])} ${px(points[i][1])}`;
  }
  const dashAttr = dash === '' ? '' : ` stroke-dasharray="${dash}"`;
  return `<path d="${d}" fill="none" stroke="${color}" stroke-width="2"${dashAttr}/>\n`;
}

/** Legend swatches in the right margin. */
export function legend(frame: Frame,
                       entries: Array<{ label: string; color: string; dash?: string }>): string {
  const x = frame.width - frame.margin.right + 10;
  let y = frame.margin.top + 12;
  let svg = '';
  for (const e of entries) {
    const dashAttr = e.dash ? ` stroke-dasharray="${e.dash}"` : '';
    svg += `<line x1="${px(x)}" y1="${px(y)}" x2="${px(x + 22)}" y2="${px(y)}" ` +
      `stroke="${e.color}" stroke-width="2.5"${dashAttr}/>\n`;
    svg += `<text x="${px(x + 27)}" y="${px(y + 4)}" font-size="11" ` +
      `fill="${COLORS.text}">${e.label}</text>\n`;
    y += 18;
  }
  return svg;
}

function channel(a: number, b: number, t: number): number {
  return Math.round(a + (b - a) * t);
}

/** Diverging blue-white-red map for t in [-1, 1]. */
export function divergingColor(t: number): string {
  const c = Math.max(-1, Math.min(1, t));
  // blue #2563eb, white #ffffff, red #dc2626
  const [r, g, b] = c < 0
    ? [channel(255, 0x25, -c), channel(255, 0x63, -c), channel(255, 0xeb, -c)]
    : [channel(255, 0xdc, c), channel(255, 0x26, c), channel(255, 0x26, c)];
  return `#${((1 << 24) + (r << 16) + (g << 8) + b).toString(16).slice(1)}`;
}

/** Vertical colorbar for a symmetric diverging range [-maxAbs, maxAbs]. */
export function colorbar(x: number, y: number, height: number, maxAbs: number): string {
  const barW = 14;
  const steps = 16;
  let svg = '';
  for (let i = 0; i < steps; i++) {
    const t = 1 - (2 * i + 1) / steps; // +1 at the top, -1 at the bottom
    const segY = y + (i * height) / steps;
    svg += `<rect x="${px(x)}" y="${px(segY)}" width="${barW}" ` +
      `height="${px(height / steps + 0.5)}" fill="${divergingColor(t)}"/>\n`;
  }
  svg += `<rect x="${px(x)}" y="${px(y)}" width="${barW}" height="${px(height)}" ` +
    `fill="none" stroke="${COLORS.axis}" stroke-width="1"/>\n`;
  const labels: Array<[number, string]> = [
    [y + 4, fmtTick(maxAbs)],
    [y + height / 2 + 4, '0'],
    [y + height + 4, fmtTick(-maxAbs)],
  ];
  for (const [yy, text] of labels) {
    svg += `<text x="${px(x + barW + 5)}" y="${px(yy)}" font-size="10" ` +
      `fill="${COLORS.text}">${text}</text>\n`;
  }
  return svg;
}
