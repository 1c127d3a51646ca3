/**
 * Figure rendering: diversity-multiplexing curve families and outage sweeps.
 *
 * Inputs are dmtlab CLI CSVs and are never modified; output is a standalone
 * SVG.  Slope annotations on outage sweeps are taken verbatim from the CSV
 * summary row, never re-fitted here.
 */

import fs from "node:fs";
import path from "node:path";
import { line, scaleLinear } from "d3";
import { readDmtCsv, readSweepCsv, SweepTable } from "./csv.js";
import { el, PALETTE, svgDocument, text, xAxis, yAxis } from "./svg.js";

export type FigureKind = "dmt-family" | "outage-sweep";

export interface FigureSpec {
  figure: FigureKind;
  /** input CSV paths: one curve table, or one sweep per scenario */
  inputs: string[];
  /** analytic diversity orders to overlay as dashed guide lines */
  referenceSlopes: number[];
  output: string;
  title?: string;
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 40, right: 200, bottom: 50, left: 64 };

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

/** Render the figure described by `spec`, write it, and return the SVG text. */
export function render(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new Error("figure spec needs at least one input CSV");
  }
  const svg =
    spec.figure === "dmt-family" ? renderDmtFamily(spec) : renderOutageSweep(spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg, "utf-8");
  return svg;
}

function renderDmtFamily(spec: FigureSpec): string {
  const rows = spec.inputs.flatMap((p) => readDmtCsv(p));
  const byScenario = new Map<string, { r: number; d: number }[]>();
  for (const row of rows) {
    if (!Number.isFinite(row.diversity)) continue; // genie curves are unbounded
    const list = byScenario.get(row.scenario) ?? [];
    list.push({ r: row.r, d: row.diversity });
    byScenario.set(row.scenario, list);
  }
  for (const [scenario, pts] of byScenario) {
    if (pts.length < 2) byScenario.delete(scenario); // a lone boundary point is no curve
  }
  if (byScenario.size === 0) {
    throw new Error("no finite tradeoff curves in input");
  }
  const area = plotArea();
  const rMax = Math.max(...rows.map((r) => r.r));
  const dMax = Math.max(...[...byScenario.values()].flat().map((p) => p.d));
  const x = scaleLinear().domain([0, rMax]).range([area.x0, area.x1]);
  const y = scaleLinear().domain([0, dMax * 1.05]).range([area.y0, area.y1]);

  const parts: string[] = [];
  const makeLine = line<{ r: number; d: number }>()
    .x((p) => x(p.r))
    .y((p) => y(p.d));
  let idx = 0;
  for (const [scenario, pts] of byScenario) {
    pts.sort((a, b) => a.r - b.r);
    const color = PALETTE[idx % PALETTE.length];
    parts.push(
      el("path", { d: makeLine(pts) ?? "", fill: "none", stroke: color, "stroke-width": 2 }),
    );
    const ly = MARGIN.top + 16 * idx;
    parts.push(
      el("line", {
        x1: area.x1 + 10, y1: ly, x2: area.x1 + 34, y2: ly,
        stroke: color, "stroke-width": 2,
      }),
    );
    parts.push(text(scenario, area.x1 + 40, ly + 4));
    idx += 1;
  }
  parts.push(xAxis(x, x.ticks(6), area.y0, (v) => String(v)));
  parts.push(yAxis(y, y.ticks(8), area.x0, (v) => String(v)));
  parts.push(
    text("multiplexing gain r", (area.x0 + area.x1) / 2, HEIGHT - 12, {
      "text-anchor": "middle",
    }),
  );
  parts.push(
    text("diversity order d(r)", 16, (area.y0 + area.y1) / 2, {
      transform: `rotate(-90 16 ${(area.y0 + area.y1) / 2})`,
      "text-anchor": "middle",
    }),
  );
  parts.push(
    text(spec.title ?? "Diversity-multiplexing tradeoff family", area.x0, 22, {
      "font-size": 14,
    }),
  );
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}

function renderOutageSweep(spec: FigureSpec): string {
  const tables: SweepTable[] = spec.inputs.map((p) => readSweepCsv(p));
  const area = plotArea();
  const allPoints = tables.flatMap((t) => t.points);
  if (allPoints.some((p) => p.pHat <= 0)) {
    throw new Error("outage sweep contains zero-outage points; cannot take logs");
  }
  const dbs = allPoints.map((p) => p.snrDb);
  const yVals = tables.flatMap((t) =>
    t.points.flatMap((p) => [-Math.log10(p.pHat), -Math.log10(p.ciLow || p.pHat)]),
  );
  const x = scaleLinear()
    .domain([Math.min(...dbs), Math.max(...dbs)])
    .range([area.x0, area.x1]);
  const y = scaleLinear()
    .domain([0, Math.max(...yVals) * 1.08])
    .range([area.y0, area.y1]);

  const parts: string[] = [];
  const makeLine = line<{ db: number; v: number }>()
    .x((p) => x(p.db))
    .y((p) => y(p.v));

  tables.forEach((table, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = table.points
      .map((p) => ({ db: p.snrDb, v: -Math.log10(p.pHat) }))
      .sort((a, b) => a.db - b.db);
    parts.push(
      el("path", { d: makeLine(pts) ?? "", fill: "none", stroke: color, "stroke-width": 2 }),
    );
    for (const p of table.points) {
      const px = x(p.snrDb);
      // Wilson interval rendered as -log10 band (upper CI -> smaller ordinate)
      const lo = -Math.log10(p.ciHigh);
      const hi = -Math.log10(p.ciLow || p.pHat);
      parts.push(
        el("line", { x1: px, y1: y(lo), x2: px, y2: y(hi), stroke: color, "stroke-width": 1 }),
      );
      parts.push(el("circle", { cx: px, cy: y(-Math.log10(p.pHat)), r: 2.5, fill: color }));
    }
    const ly = MARGIN.top + 32 * idx;
    parts.push(
      el("line", {
        x1: area.x1 + 10, y1: ly, x2: area.x1 + 34, y2: ly,
        stroke: color, "stroke-width": 2,
      }),
    );
    parts.push(text(table.summary.scenario, area.x1 + 40, ly + 4));
    // annotation carries the summary-row slope text verbatim
    parts.push(
      text(`fitted slope ${table.summary.slopeText}`, area.x1 + 40, ly + 17, {
        "font-size": 10,
        fill: "#555",
      }),
    );
  });

  spec.referenceSlopes.forEach((slope, i) => {
    // dashed guide anchored at the last point of the matching (or first) curve
    const table = tables[Math.min(i, tables.length - 1)];
    const anchor = table.points[table.points.length - 1];
    const ax = anchor.snrDb;
    const ay = -Math.log10(anchor.pHat);
    const [d0, d1] = x.domain();
    const pts = [
      { db: d0, v: ay - (slope * (ax - d0)) / 10 },
      { db: d1, v: ay + (slope * (d1 - ax)) / 10 },
    ];
    parts.push(
      el("path", {
        d: makeLine(pts) ?? "",
        fill: "none",
        stroke: "#444",
        "stroke-width": 1,
        "stroke-dasharray": "6 4",
      }),
    );
    parts.push(
      text(`slope ${slope}`, x(d1) - 4, y(pts[1].v) - 6, {
        "text-anchor": "end",
        "font-size": 10,
        fill: "#444",
      }),
    );
  });

  parts.push(xAxis(x, x.ticks(6), area.y0, (v) => String(v)));
  parts.push(yAxis(y, y.ticks(8), area.x0, (v) => String(v)));
  parts.push(
    text("SNR (dB)", (area.x0 + area.x1) / 2, HEIGHT - 12, { "text-anchor": "middle" }),
  );
  parts.push(
    text("-log10 outage probability", 16, (area.y0 + area.y1) / 2, {
      transform: `rotate(-90 16 ${(area.y0 + area.y1) / 2})`,
      "text-anchor": "middle",
    }),
  );
  parts.push(
    text(spec.title ?? "Outage probability vs SNR", area.x0, 22, { "font-size": 14 }),
  );
  return svgDocument(WIDTH, HEIGHT, parts.join("\n"));
}
