/**
 * Figure renderers: running-risk curves for both orders of play (with dotted
 * equilibrium reference lines) and preference-sweep delta panels.
 */

import { readFileSync, writeFileSync } from "fs";
import path from "path";

import { Annotation, buildChart, RefLine, Series } from "./chart.js";
import { parseSweepCsv, sweptColumn, SweepTable } from "./csv.js";
import { FigureInputs, loadFigureInputs } from "./results.js";

const ORDER_COLORS: Record<string, string> = {
  proactive: "#4361ee",
  reactive: "#e63946",
};

const ORDER_LABELS: Record<string, string> = {
  proactive: "decision-maker leads",
  reactive: "agents lead",
};

export interface RenderedFigure {
  path: string;
  svg: string;
  warnings: string[];
}

function runningRiskChart(
  inputs: FigureInputs,
  player: "L" | "R",
): { svg: string; warnings: string[] } {
  const warnings: string[] = [...inputs.warnings];
  const column = player === "L" ? "running_avg_L" : "running_avg_R";

  const horizon = Math.min(...inputs.runs.map((r) => r.trace.epochs.length));
  if (inputs.runs.some((r) => r.trace.epochs.length !== horizon)) {
    warnings.push(`traces have different horizons; overlaying up to epoch ${horizon}`);
  }
  if (horizon === 0) throw new Error("no epochs to plot");

  const series: Series[] = [];
  const annotations: Annotation[] = [];
  for (const run of inputs.runs) {
    const ys = run.trace.columns.get(column)!.slice(0, horizon);
    const xs = run.trace.epochs.slice(0, horizon);
    const color = ORDER_COLORS[run.order] ?? "#2d6a4f";
    series.push({
      x: xs,
      y: ys,
      label: ORDER_LABELS[run.order] ?? run.order,
      color,
      markersOnly: horizon === 1,
    });
    annotations.push({
      x: xs[horizon - 1],
      y: ys[horizon - 1],
      value: run.trace.raw.get(column)![horizon - 1],
      series: `${run.order}:${column}`,
    });
  }

  const refLines: RefLine[] = [];
  if (inputs.dmLeads && inputs.agentsLead) {
    const dmv = player === "L" ? inputs.dmLeads.risk_L : inputs.dmLeads.risk_R;
    const agv = player === "L" ? inputs.agentsLead.risk_L : inputs.agentsLead.risk_R;
    refLines.push({ value: dmv, label: "equilibrium (DM leads)", color: "#4361ee" });
    refLines.push({ value: agv, label: "equilibrium (agents lead)", color: "#e63946" });
  }

  const who = player === "L" ? "decision-maker" : "agents";
  const svg = buildChart({
    title: `${inputs.name}: ${who} average running risk`,
    xLabel: "epoch",
    yLabel: player === "L" ? "running average L" : "running average R",
    series,
    refLines,
    annotations,
  });
  return { svg, warnings };
}

/** Render the running-risk figure pair (decision-maker and agents) for one results document. */
export function renderRunningRisk(resultsPath: string, outDir: string): RenderedFigure[] {
  const inputs = loadFigureInputs(resultsPath); // validates every input up front
  const out: RenderedFigure[] = [];
  for (const player of ["L", "R"] as const) {
    const { svg, warnings } = runningRiskChart(inputs, player);
    const file = path.join(outDir, `${inputs.name}-risk-${player}.svg`);
    writeFileSync(file, svg);
    out.push({ path: file, svg, warnings });
  }
  return out;
}

function sweepPanel(table: SweepTable, column: "delta_L" | "delta_R", xCol: string): string {
  const xs = table.rows.map((r, i) => (xCol === "row" ? i : parseFloat(r.values.get(xCol)!)));
  const ys = table.rows.map((r) => parseFloat(r.values.get(column)!));
  const annotations: Annotation[] = table.rows.map((r, i) => ({
    x: xs[i],
    y: ys[i],
    value: r.values.get(column)!,
    series: `${column}@${xCol}=${r.values.get(xCol) ?? i}`,
  }));
  const who = column === "delta_L" ? "decision-maker" : "agents";
  return buildChart({
    title: `${who} risk difference between equilibria (DM-leads minus agents-lead)`,
    xLabel: xCol,
    yLabel: column,
    series: [
      {
        x: xs,
        y: ys,
        label: column,
        color: column === "delta_L" ? "#4361ee" : "#e63946",
        markersOnly: table.rows.length === 1,
      },
    ],
    refLines: [{ value: 0, label: "no preference", color: "#888" }],
    annotations,
  });
}

/** Render the preference-sweep figure pair from an exported table CSV. */
export function renderPreferenceSweep(csvPath: string, outDir: string): RenderedFigure[] {
  const table = parseSweepCsv(readFileSync(csvPath, "utf-8"));
  const warnings = table.failures.map(
    (r) => `row ${r.index + 1} skipped: oracle failure "${r.values.get("error")}"`,
  );
  if (table.rows.length === 0) {
    throw new Error(`${csvPath}: no plottable rows (header-only or all failures)`);
  }
  const xCol = sweptColumn(table);
  const base = path.basename(csvPath).replace(/\.csv$/, "");
  const out: RenderedFigure[] = [];
  for (const column of ["delta_L", "delta_R"] as const) {
    const svg = sweepPanel(table, column, xCol);
    const file = path.join(outDir, `${base}-${column}.svg`);
    writeFileSync(file, svg);
    out.push({ path: file, svg, warnings });
  }
  return out;
}
