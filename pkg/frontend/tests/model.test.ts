import { describe, expect, it } from "vitest";

import type { ConfigPayload, SessionSummary } from "../src/api.js";
import {
  activePids,
  emptyView,
  findConfig,
  groupByInputs,
  parseTranscript,
  provenanceForest,
  scrubTo,
  serializeTranscript,
  valueColor,
  walkPlan,
  withSummary,
} from "../src/model.js";

function conf(key: string, inputs: number[], provenance?: number[]): ConfigPayload {
  return {
    configKey: key,
    provenance,
    states: inputs.map((input, i) => ({
      pid: i + 1,
      level: 0,
      stage: "to_update",
      active: true,
      output: null,
      input,
      vertexKey: `v${key}${i}`,
    })),
  };
}

function summary(partial: Partial<SessionSummary> = {}): SessionSummary {
  return {
    sessionId: "s",
    n: 3,
    k: 2,
    phase: 1,
    alpha: [],
    status: "running",
    winReason: "",
    queries: 0,
    level: 1,
    finalized: false,
    aSet: [conf("a", [0, 0, 0]), conf("b", [0, 0, 1])],
    aPrime: [],
    terminated: { "0": [], "1": [], "2": [] },
    ...partial,
  };
}

describe("view state", () => {
  it("keeps the selection only while the configuration is known", () => {
    let view = emptyView(summary());
    view = { ...view, selected: "b" };
    view = withSummary(view, summary());
    expect(view.selected).toBe("b");
    view = withSummary(view, summary({ aSet: [conf("c", [1, 1, 1])] }));
    expect(view.selected).toBeNull();
  });

  it("finds configurations in either pool", () => {
    const s = summary({ aPrime: [conf("r", [0, 0, 0], [1])] });
    const view = emptyView(s);
    expect(findConfig(view, "r")?.configKey).toBe("r");
    expect(findConfig(view, "a")?.configKey).toBe("a");
    expect(findConfig(view, "zz")).toBeUndefined();
  });

  it("lists active processes", () => {
    const c = conf("a", [0, 1, 2]);
    c.states[1] = { ...c.states[1], active: false, output: 1 };
    expect(activePids(c)).toEqual([1, 3]);
  });
});

describe("provenance forest", () => {
  it("nests reached configurations under their longest recorded prefix", () => {
    const s = summary({
      aPrime: [
        conf("r1", [0, 0, 0], [1]),
        conf("r2", [0, 0, 0], [1, 1]),
        conf("r3", [0, 0, 0], [1, 1, 2]),
        conf("q1", [0, 0, 0], [2]),
      ],
    });
    const forest = provenanceForest(s);
    const rootA = forest[0];
    expect(rootA.children.map((c) => c.config.configKey)).toEqual(["r1", "q1"]);
    expect(rootA.children[0].children[0].config.configKey).toBe("r2");
    expect(rootA.children[0].children[0].children[0].config.configKey).toBe("r3");
  });

  it("groups starting configurations by inputs", () => {
    const groups = groupByInputs([conf("a", [0, 0, 0]), conf("b", [0, 0, 1])]);
    expect([...groups.keys()]).toEqual(["0,0,0", "0,0,1"]);
  });
});

describe("walk plans and palette", () => {
  it("copies schedules defensively", () => {
    const sched = [1, 1, 2];
    const plan = walkPlan("a", sched);
    sched.push(9);
    expect(plan.steps).toEqual([1, 1, 2]);
  });

  it("gives distinct colors per value", () => {
    const colors = new Set([valueColor(0), valueColor(1), valueColor(2)]);
    expect(colors.size).toBe(3);
    expect(valueColor(1, 0.2)).toContain("0.2");
  });
});

describe("transcript scrubbing", () => {
  const lines = [
    { seq: 0, kind: "step", request: {}, response: "x", tAfter: 1, invariantDigest: "d0" },
    { seq: 1, kind: "output", request: {}, response: null, tAfter: 1, invariantDigest: "d1" },
    { seq: 2, kind: "output", request: {}, response: [1, 1], tAfter: 2, invariantDigest: "d2" },
    { seq: 3, kind: "finalize", request: {}, response: {}, tAfter: 3, invariantDigest: "d3" },
  ];
  const text = lines.map((l) => JSON.stringify(l)).join("\n");

  it("parses and scrubs to a prefix", () => {
    const events = parseTranscript(text);
    expect(events).toHaveLength(4);
    const mid = scrubTo(events, 2);
    expect(mid).toMatchObject({
      events: 2,
      level: 1,
      stepQueries: 1,
      outputQueries: 1,
      noneAnswers: 1,
      grants: 0,
      finalized: false,
      lastDigest: "d1",
    });
    const end = scrubTo(events, 99);
    expect(end.finalized).toBe(true);
    expect(end.level).toBe(3);
    expect(scrubTo(events, 0).lastDigest).toBeNull();
  });

  it("serializes exactly like the server", () => {
    const events = parseTranscript(text);
    const expected = [
      '{"invariantDigest": "d0", "kind": "step", "request": {}, "response": "x", "seq": 0, "tAfter": 1}',
      '{"invariantDigest": "d1", "kind": "output", "request": {}, "response": null, "seq": 1, "tAfter": 1}',
      '{"invariantDigest": "d2", "kind": "output", "request": {}, "response": [1, 1], "seq": 2, "tAfter": 2}',
      '{"invariantDigest": "d3", "kind": "finalize", "request": {}, "response": {}, "seq": 3, "tAfter": 3}',
    ].join("\n");
    expect(serializeTranscript(events)).toBe(expected);
  });
});
