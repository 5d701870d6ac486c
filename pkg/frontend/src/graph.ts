/**
 * Graph panel data: neighborhood extraction and a small deterministic
 * layout for the level graph around the selected configuration.
 *
 * Full level graphs are visually intractable past the second level, so
 * the panel renders the ego graph of radius 2 around the selected
 * configuration's states.  Terminated states are never dropped: any
 * terminated state adjacent to the neighborhood is kept even when the
 * vertex cap trims continuing ones.
 */

import type { GraphPayload, GraphVertex } from "./api.js";

export interface RenderVertex {
  key: string;
  pid: number;
  status: string;
  output: number | null;
  seen: number[];
  x: number;
  y: number;
  focus: boolean;
}

export interface RenderEdge {
  a: string;
  b: string;
}

export interface RenderSpec {
  vertices: RenderVertex[];
  edges: RenderEdge[];
  truncated: boolean;
}

export function adjacency(graph: GraphPayload): Map<string, Set<string>> {
  const adj = new Map<string, Set<string>>();
  for (const v of graph.vertices) adj.set(v.key, new Set());
  for (const clique of graph.cliques) {
    for (const a of clique) {
      for (const b of clique) {
        if (a !== b) adj.get(a)?.add(b);
      }
    }
  }
  return adj;
}

export function egoKeys(
  graph: GraphPayload,
  centers: string[],
  radius: number,
): Set<string> {
  const adj = adjacency(graph);
  let frontier = new Set(centers.filter((k) => adj.has(k)));
  const seen = new Set(frontier);
  for (let hop = 0; hop < radius; hop++) {
    const next = new Set<string>();
    for (const k of frontier) {
      for (const u of adj.get(k) ?? []) {
        if (!seen.has(u)) {
          seen.add(u);
          next.add(u);
        }
      }
    }
    frontier = next;
  }
  return seen;
}

function parseOutput(status: string): number | null {
  const m = /^out=(\d+)$/.exec(status);
  return m ? Number(m[1]) : null;
}

/**
 * Build the render spec: ego graph around the centers, capped; beyond
 * the cap only continuing states are trimmed.
 */
export function renderSpec(
  graph: GraphPayload,
  centers: string[],
  maxVertices = 80,
  radius = 2,
): RenderSpec {
  const within = centers.length
    ? egoKeys(graph, centers, radius)
    : new Set(graph.vertices.map((v) => v.key));
  const byKey = new Map(graph.vertices.map((v) => [v.key, v]));
  let chosen = [...within].sort();
  let truncated = false;
  if (chosen.length > maxVertices) {
    truncated = true;
    const terminated = chosen.filter(
      (k) => parseOutput(byKey.get(k)?.status ?? "") !== null,
    );
    const focus = new Set([...centers, ...terminated]);
    const rest = chosen.filter((k) => !focus.has(k));
    chosen = [...focus, ...rest.slice(0, Math.max(0, maxVertices - focus.size))].sort();
  }
  const keep = new Set(chosen);
  const centerSet = new Set(centers);
  const vertices: RenderVertex[] = [];
  // deterministic ring layout grouped by pid
  const byPid = new Map<number, string[]>();
  for (const k of chosen) {
    const v = byKey.get(k);
    if (!v) continue;
    const bucket = byPid.get(v.id) ?? [];
    bucket.push(k);
    byPid.set(v.id, bucket);
  }
  const pids = [...byPid.keys()].sort((a, b) => a - b);
  for (const pid of pids) {
    const ring = byPid.get(pid) ?? [];
    ring.forEach((key, i) => {
      const v = byKey.get(key)!;
      const angle =
        (2 * Math.PI * (i + 0.5)) / ring.length + (pid - 1) * ((2 * Math.PI) / 3 / pids.length);
      const r = 90 + 65 * (pids.indexOf(pid) % pids.length);
      vertices.push({
        key,
        pid,
        status: v.status,
        output: parseOutput(v.status),
        seen: v.seen ?? [],
        x: 260 + r * Math.cos(angle),
        y: 220 + r * Math.sin(angle),
        focus: centerSet.has(key),
      });
    });
  }
  const edges: RenderEdge[] = [];
  const done = new Set<string>();
  for (const clique of graph.cliques) {
    for (const a of clique) {
      for (const b of clique) {
        if (a < b && keep.has(a) && keep.has(b)) {
          const id = `${a}|${b}`;
          if (!done.has(id)) {
            done.add(id);
            edges.push({ a, b });
          }
        }
      }
    }
  }
  return { vertices, edges, truncated };
}
