/**
 * Minimal server-side SVG assembly: scales and path generators come from d3,
 * element markup is built directly (no DOM needed).
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeXml(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ESCAPES[c]);
}

export function attrs(pairs: Record<string, string | number>): string {
  return Object.entries(pairs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? round(v) : escapeXml(v)}"`)
    .join(" ");
}

export function round(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

export function el(tag: string, attributes: Record<string, string | number>, body = ""): string {
  const a = attrs(attributes);
  return body === "" ? `<${tag} ${a}/>` : `<${tag} ${a}>${body}</${tag}>`;
}

export function text(
  content: string,
  x: number,
  y: number,
  extra: Record<string, string | number> = {},
): string {
  return el(
    "text",
    { x, y, "font-family": "sans-serif", "font-size": 11, fill: "#222", ...extra },
    escapeXml(content),
  );
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

/** Horizontal axis line with ticks and labels. */
export function xAxis(
  scale: (v: number) => number,
  ticks: number[],
  y: number,
  format: (v: number) => string,
): string {
  const parts: string[] = [];
  const [x0, x1] = [scale(ticks[0]), scale(ticks[ticks.length - 1])];
  parts.push(el("line", { x1: x0, y1: y, x2: x1, y2: y, stroke: "#222" }));
  for (const t of ticks) {
    const x = scale(t);
    parts.push(el("line", { x1: x, y1: y, x2: x, y2: y + 5, stroke: "#222" }));
    parts.push(text(format(t), x, y + 17, { "text-anchor": "middle" }));
  }
  return parts.join("\n");
}

/** Vertical axis line with ticks and labels. */
export function yAxis(
  scale: (v: number) => number,
  ticks: number[],
  x: number,
  format: (v: number) => string,
): string {
  const parts: string[] = [];
  const [y0, y1] = [scale(ticks[0]), scale(ticks[ticks.length - 1])];
  parts.push(el("line", { x1: x, y1: y0, x2: x, y2: y1, stroke: "#222" }));
  for (const t of ticks) {
    const y = scale(t);
    parts.push(el("line", { x1: x - 5, y1: y, x2: x, y2: y, stroke: "#222" }));
    parts.push(text(format(t), x - 8, y + 4, { "text-anchor": "end" }));
  }
  return parts.join("\n");
}
