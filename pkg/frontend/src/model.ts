/**
 * Client-side view state: pure data derived from API payloads.
 *
 * The client never evaluates game rules; everything displayed comes from
 * a server response, and every action re-fetches the session summary.
 * This module holds the pure parts (selection, provenance tree shaping,
 * schedule walking plans, transcript scrubbing) so they can be tested
 * without a DOM.
 */

import type { ConfigPayload, SessionSummary } from "./api.js";

export interface SessionView {
  summary: SessionSummary;
  selected: string | null;
  highlightValue: number | null;
  pinned: string[];
}

export function emptyView(summary: SessionSummary): SessionView {
  return { summary, selected: null, highlightValue: null, pinned: [] };
}

export function withSummary(view: SessionView, summary: SessionSummary): SessionView {
  const known = new Set([
    ...summary.aSet.map((c) => c.configKey),
    ...summary.aPrime.map((c) => c.configKey),
  ]);
  return {
    ...view,
    summary,
    selected: view.selected && known.has(view.selected) ? view.selected : null,
  };
}

export function findConfig(view: SessionView, key: string): ConfigPayload | undefined {
  return (
    view.summary.aSet.find((c) => c.configKey === key) ??
    view.summary.aPrime.find((c) => c.configKey === key)
  );
}

export function activePids(conf: ConfigPayload): number[] {
  return conf.states.filter((s) => s.active).map((s) => s.pid);
}

/** Provenance tree: reached configurations grouped under their origins. */
export interface ProvenanceNode {
  config: ConfigPayload;
  schedule: number[];
  children: ProvenanceNode[];
}

export function provenanceForest(summary: SessionSummary): ProvenanceNode[] {
  const roots: ProvenanceNode[] = summary.aSet.map((c) => ({
    config: c,
    schedule: [],
    children: [],
  }));
  const reached = [...summary.aPrime].sort(
    (a, b) => (a.provenance?.length ?? 0) - (b.provenance?.length ?? 0),
  );
  const nodes = new Map<string, ProvenanceNode>();
  for (const r of roots) nodes.set(r.config.configKey, r);
  const byPath = new Map<string, ProvenanceNode>();
  for (const r of roots) byPath.set(r.config.configKey + "|", r);
  for (const c of reached) {
    const sched = c.provenance ?? [];
    const node: ProvenanceNode = { config: c, schedule: sched, children: [] };
    nodes.set(c.configKey, node);
    // parent: longest recorded strict prefix of the schedule from an aSet
    // origin; fall back to the origin root
    let parent: ProvenanceNode | undefined;
    for (let cut = sched.length - 1; cut >= 0 && !parent; cut--) {
      for (const cand of nodes.values()) {
        if (
          cand !== node &&
          cand.schedule.length === cut &&
          cand.schedule.every((p, i) => p === sched[i])
        ) {
          parent = cand;
          break;
        }
      }
    }
    (parent ?? roots[0]).children.push(node);
  }
  return roots;
}

/** Group starting configurations by their input vectors for display. */
export function groupByInputs(confs: ConfigPayload[]): Map<string, ConfigPayload[]> {
  const out = new Map<string, ConfigPayload[]>();
  for (const c of confs) {
    const label = c.states.map((s) => s.input).join(",");
    const bucket = out.get(label) ?? [];
    bucket.push(c);
    out.set(label, bucket);
  }
  return out;
}

/**
 * A plan for walking a returned schedule as a chain of step queries:
 * the i-th step is issued against the configuration reached so far.
 */
export interface WalkPlan {
  startKey: string;
  steps: number[];
}

export function walkPlan(startKey: string, schedule: number[]): WalkPlan {
  return { startKey, steps: [...schedule] };
}

/** Fixed palette: values 0..k get distinct hues; shading reuses the hue. */
export const VALUE_HUES = [210, 25, 130, 275, 55, 0];

export function valueColor(value: number, alpha = 1): string {
  const hue = VALUE_HUES[value % VALUE_HUES.length];
  return `hsla(${hue}, 75%, 45%, ${alpha})`;
}

// ---------------------------------------------------------------------
// transcript scrubbing

export interface TranscriptEvent {
  seq: number;
  kind: string;
  request: Record<string, unknown>;
  response: unknown;
  tAfter: number;
  invariantDigest: string;
}

export function parseTranscript(text: string): TranscriptEvent[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as TranscriptEvent);
}

export interface ScrubState {
  events: number;
  level: number;
  stepQueries: number;
  outputQueries: number;
  noneAnswers: number;
  grants: number;
  finalized: boolean;
  lastDigest: string | null;
}

/** The interaction state after the first `upto` events. */
export function scrubTo(events: TranscriptEvent[], upto: number): ScrubState {
  const state: ScrubState = {
    events: 0,
    level: 1,
    stepQueries: 0,
    outputQueries: 0,
    noneAnswers: 0,
    grants: 0,
    finalized: false,
    lastDigest: null,
  };
  for (const e of events.slice(0, Math.max(0, upto))) {
    state.events += 1;
    state.level = e.tAfter;
    state.lastDigest = e.invariantDigest;
    if (e.kind === "step") state.stepQueries += 1;
    if (e.kind === "output") {
      state.outputQueries += 1;
      if (e.response === null) state.noneAnswers += 1;
      else state.grants += 1;
    }
    if (e.kind === "finalize") state.finalized = true;
  }
  return state;
}

/** Serialize events exactly as the server does (sorted keys, one per line). */
export function serializeTranscript(events: TranscriptEvent[]): string {
  // Mirrors json.dumps(..., sort_keys=True): ", " and ": " separators.
  const canonical = (value: unknown): string => {
    if (value === null || typeof value !== "object") return JSON.stringify(value);
    if (Array.isArray(value)) return `[${value.map(canonical).join(", ")}]`;
    const obj = value as Record<string, unknown>;
    const keys = Object.keys(obj).sort();
    return `{${keys.map((k) => `${JSON.stringify(k)}: ${canonical(obj[k])}`).join(", ")}}`;
  };
  return events.map((e) => canonical(e)).join("\n");
}
