/** Loader for results documents and the figure inputs they reference. */

import { readFileSync } from "fs";
import path from "path";

import { parseTraceCsv, TraceData } from "./csv.js";

export interface EquilibriumRisks {
  risk_L: number;
  risk_R: number;
}

export interface RunEntry {
  order: string;
  trace_file: string;
  trace: TraceData;
}

export interface FigureInputs {
  name: string;
  runs: RunEntry[];
  dmLeads: EquilibriumRisks | null;
  agentsLead: EquilibriumRisks | null;
  warnings: string[];
}

/**
 * Load a results document and every trace it references.
 *
 * Everything is read and parsed up front: a missing or malformed input aborts
 * before any figure is written.
 */
export function loadFigureInputs(resultsPath: string): FigureInputs {
  const text = readFileSync(resultsPath, "utf-8");
  const doc = JSON.parse(text);
  if (!doc || !Array.isArray(doc.runs) || doc.runs.length === 0) {
    throw new Error(`${resultsPath}: results document has no runs`);
  }
  const dir = path.dirname(resultsPath);
  const warnings: string[] = [];
  const runs: RunEntry[] = doc.runs.map((run: any) => {
    const tracePath = path.resolve(dir, run.trace_file);
    const trace = parseTraceCsv(readFileSync(tracePath, "utf-8"));
    if (trace.abortedAt !== null) {
      warnings.push(`${run.trace_file}: aborted at epoch ${trace.abortedAt}, plotting partial trace`);
    }
    return { order: run.order, trace_file: run.trace_file, trace };
  });

  let dmLeads: EquilibriumRisks | null = null;
  let agentsLead: EquilibriumRisks | null = null;
  if (doc.equilibria && doc.equilibria.dm_leads && doc.equilibria.agents_lead) {
    dmLeads = { risk_L: doc.equilibria.dm_leads.risk_L, risk_R: doc.equilibria.dm_leads.risk_R };
    agentsLead = {
      risk_L: doc.equilibria.agents_lead.risk_L,
      risk_R: doc.equilibria.agents_lead.risk_R,
    };
  } else {
    warnings.push(`${resultsPath}: no equilibrium reports; rendering without reference lines`);
  }
  return { name: doc.name ?? path.basename(resultsPath, ".results.json"), runs, dmLeads, agentsLead, warnings };
}
