/**
 * Scripted session against a live service: query, output-query, walk the
 * returned schedule, commit; displayed state always equals the API
 * payloads, and the exported transcript is byte-identical to the
 * server's.
 */

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ArenaClient } from "../src/api.js";
import {
  emptyView,
  findConfig,
  parseTranscript,
  serializeTranscript,
  withSummary,
} from "../src/model.js";

const PORT = 8377;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForHealth(client: ArenaClient, tries = 60): Promise<void> {
  for (let i = 0; i < tries; i++) {
    try {
      const h = await client.health();
      if (h.status === "ok") return;
    } catch {
      await new Promise((r) => setTimeout(r, 500));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "nisarena.cli", "serve", "--port", String(PORT)],
    { cwd: "..", stdio: "ignore" },
  );
  await waitForHealth(new ArenaClient(BASE));
}, 40000);

afterAll(() => {
  server?.kill();
});

describe("live session", () => {
  const client = new ArenaClient(BASE);

  it("plays a full round trip and exports a byte-identical transcript", async () => {
    const { sessionId: sid } = await client.newSession(3, 2);
    let summary = await client.summary(sid);
    let view = emptyView(summary);
    expect(summary.aSet).toHaveLength(27);
    expect(summary.phase).toBe(1);

    // pick a starting configuration with mixed inputs
    const start = summary.aSet.find(
      (c) => new Set(c.states.map((s) => s.input)).size === 3,
    )!;
    view = { ...view, selected: start.configKey };

    // step query: the view reflects exactly the API's payload
    const child = await client.stepQuery(sid, start.configKey, 1);
    summary = await client.summary(sid);
    view = withSummary(view, summary);
    const mirrored = findConfig(view, child.configKey);
    expect(mirrored).toBeDefined();
    expect(mirrored!.states).toEqual(child.states);

    // output query, then walk the returned schedule step by step
    const ask = await client.outputQuery(
      sid,
      start.configKey,
      [1, 2, 3],
      start.states[0].input,
    );
    expect(ask.schedule).not.toBeNull();
    let cur = start.configKey;
    let last = null;
    for (const pid of ask.schedule!) {
      last = await client.stepQuery(sid, cur, pid);
      cur = last.configKey;
    }
    expect(
      last!.states.some((s) => s.output === start.states[0].input),
    ).toBe(true);

    // a NONE answer for a value nobody can see from an all-same start
    const allSame = summary.aSet.find(
      (c) => new Set(c.states.map((s) => s.input)).size === 1,
    )!;
    const y = (allSame.states[0].input + 1) % 3;
    const none = await client.outputQuery(sid, allSame.configKey, [1, 2, 3], y);
    expect(none.schedule).toBeNull();

    // commit one write of the first process
    const committed = await client.commit(sid, start.configKey, [1]);
    expect(committed.phase).toBe(2);
    summary = await client.summary(sid);
    view = withSummary(view, summary);
    expect(view.selected).toBeNull(); // selection does not survive the phase
    expect(summary.finalized).toBe(true);
    expect(summary.aSet).toHaveLength(9);

    // the exported transcript equals the server's bytes exactly
    const text = await client.transcript(sid);
    const events = parseTranscript(text);
    expect(events.length).toBeGreaterThanOrEqual(ask.schedule!.length + 4);
    expect(serializeTranscript(events)).toBe(text);

    // scrubbed event counts match the session's recorded queries
    const steps = events.filter((e) => e.kind === "step").length;
    const asks = events.filter((e) => e.kind === "output").length;
    expect(steps).toBe(1 + ask.schedule!.length);
    expect(asks).toBe(2);
  }, 60000);

  it("rejects illegal actions with structured errors", async () => {
    const { sessionId: sid } = await client.newSession(2, 2);
    const summary = await client.summary(sid);
    const conf = summary.aSet[0];
    await expect(
      client.stepQuery(sid, conf.configKey, 5),
    ).rejects.toMatchObject({ status: 409 });
    await expect(client.summary("nonesuch")).rejects.toMatchObject({
      status: 404,
    });
  }, 20000);
});
