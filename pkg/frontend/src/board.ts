/**
 * DOM wiring: provenance tree, process cards, graph panel, action forms,
 * and the transcript browser.  All state lives in the view model; every
 * action round-trips through the API and re-fetches the summary.
 */

import { ApiError, ArenaClient, ConfigPayload, SessionSummary } from "./api.js";
import { renderSpec } from "./graph.js";
import {
  SessionView,
  TranscriptEvent,
  activePids,
  emptyView,
  findConfig,
  groupByInputs,
  parseTranscript,
  provenanceForest,
  scrubTo,
  valueColor,
  withSummary,
} from "./model.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class Board {
  view: SessionView | null = null;
  sid: string | null = null;
  transcript: TranscriptEvent[] = [];
  scrubAt = 0;
  note = "";

  constructor(
    readonly client: ArenaClient,
    readonly root: HTMLElement,
  ) {}

  async start(n: number, k: number) {
    const { sessionId } = await this.client.newSession(n, k);
    this.sid = sessionId;
    await this.refresh();
  }

  async refresh() {
    if (!this.sid) return;
    const summary = await this.client.summary(this.sid);
    this.view = this.view ? withSummary(this.view, summary) : emptyView(summary);
    const text = await this.client.transcript(this.sid);
    this.transcript = parseTranscript(text);
    this.scrubAt = this.transcript.length;
    await this.render();
  }

  async act(run: () => Promise<unknown>) {
    this.note = "";
    try {
      await run();
    } catch (err) {
      this.note = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
    }
    await this.refresh();
  }

  async walkSchedule(startKey: string, schedule: number[]) {
    if (!this.sid) return;
    let cur = startKey;
    for (const pid of schedule) {
      const resp = await this.client.stepQuery(this.sid, cur, pid);
      cur = resp.configKey;
    }
  }

  private configCard(conf: ConfigPayload, view: SessionView): HTMLElement {
    const box = el("div", "config" + (view.selected === conf.configKey ? " selected" : ""));
    const head = el("div", "config-head", conf.configKey.slice(0, 10));
    box.appendChild(head);
    const cards = el("div", "cards");
    for (const s of conf.states) {
      const card = el(
        "div",
        "card " + (s.active ? "active" : "done"),
        `p${s.pid} in=${s.input} lvl=${s.level}` +
          (s.active ? ` (${s.stage})` : ` out=${s.output}`),
      );
      if (!s.active && s.output !== null) {
        card.style.borderColor = valueColor(s.output);
      }
      cards.appendChild(card);
    }
    box.appendChild(cards);
    box.addEventListener("click", () => {
      if (this.view) {
        this.view = { ...this.view, selected: conf.configKey };
        void this.render();
      }
    });
    return box;
  }

  async render() {
    const view = this.view;
    const root = this.root;
    root.textContent = "";
    if (!view || !this.sid) {
      root.appendChild(el("div", "note", "no session"));
      return;
    }
    const s = view.summary;
    const header = el("div", "header");
    header.appendChild(
      el(
        "span",
        "title",
        `phase ${s.phase} | level ${s.level} | queries ${s.queries} | ${s.status}` +
          (s.winReason ? ` (${s.winReason})` : ""),
      ),
    );
    root.appendChild(header);
    if (this.note) root.appendChild(el("div", "note error", this.note));

    const columns = el("div", "columns");
    root.appendChild(columns);

    // left: starting configurations grouped by inputs, then reached tree
    const left = el("div", "col tree");
    left.appendChild(el("h3", undefined, `starting configurations (${s.aSet.length})`));
    for (const [label, confs] of groupByInputs(s.aSet)) {
      const group = el("div", "group");
      group.appendChild(el("div", "group-label", `inputs ${label}`));
      for (const c of confs) group.appendChild(this.configCard(c, view));
      left.appendChild(group);
    }
    left.appendChild(el("h3", undefined, `reached this phase (${s.aPrime.length})`));
    const renderNode = (node: ReturnType<typeof provenanceForest>[number], depth: number, into: HTMLElement) => {
      if (depth > 0) {
        const wrap = el("div", "tree-node");
        wrap.style.marginLeft = `${depth * 14}px`;
        wrap.appendChild(this.configCard(node.config, view));
        into.appendChild(wrap);
      }
      for (const child of node.children) renderNode(child, depth + 1, into);
    };
    for (const rootNode of provenanceForest(s)) renderNode(rootNode, 0, left);
    columns.appendChild(left);

    // middle: actions on the selected configuration
    const mid = el("div", "col actions");
    const selected = view.selected ? findConfig(view, view.selected) : undefined;
    mid.appendChild(el("h3", undefined, "actions"));
    if (!selected) {
      mid.appendChild(el("div", "note", "select a configuration"));
    } else {
      mid.appendChild(el("div", "note", `selected ${selected.configKey.slice(0, 10)}`));
      const act = activePids(selected);
      const stepRow = el("div", "row");
      for (const pid of act) {
        const b = el("button", undefined, `step p${pid}`);
        b.addEventListener("click", () =>
          this.act(() => this.client.stepQuery(this.sid!, selected.configKey, pid)),
        );
        stepRow.appendChild(b);
      }
      mid.appendChild(stepRow);

      const outRow = el("div", "row");
      for (let value = 0; value <= s.k; value++) {
        const b = el("button", undefined, `ask ${value}?`);
        b.style.background = valueColor(value, 0.25);
        b.addEventListener("click", () =>
          this.act(async () => {
            const res = await this.client.outputQuery(
              this.sid!,
              selected.configKey,
              act,
              value,
            );
            if (res.schedule === null) {
              this.note = `NONE for value ${value} over {${act.join(",")}}`;
            } else {
              const walk = el("button", undefined, `walk ${JSON.stringify(res.schedule)}`);
              this.note = `schedule ${JSON.stringify(res.schedule)}`;
              walk.addEventListener("click", () =>
                this.act(() => this.walkSchedule(selected.configKey, res.schedule!)),
              );
              this.root.querySelector(".actions")?.appendChild(walk);
            }
          }),
        );
        outRow.appendChild(b);
      }
      mid.appendChild(outRow);

      const commitRow = el("div", "row");
      const input = el("input") as HTMLInputElement;
      input.placeholder = "suffix e.g. 1,1,2";
      const commitBtn = el("button", undefined, "commit");
      commitBtn.addEventListener("click", () =>
        this.act(() =>
          this.client.commit(
            this.sid!,
            selected.configKey,
            input.value
              .split(",")
              .map((x) => Number(x.trim()))
              .filter((x) => Number.isFinite(x) && x > 0),
          ),
        ),
      );
      commitRow.appendChild(input);
      commitRow.appendChild(commitBtn);
      mid.appendChild(commitRow);
    }
    // value legend with terminated counts
    const legend = el("div", "legend");
    for (let value = 0; value <= s.k; value++) {
      const badge = el(
        "span",
        "badge",
        `value ${value}: ${s.terminated[String(value)]?.length ?? 0} done`,
      );
      badge.style.background = valueColor(value, 0.3);
      if (view.highlightValue === value) badge.classList.add("selected");
      badge.addEventListener("click", () => {
        this.view = {
          ...view,
          highlightValue: view.highlightValue === value ? null : value,
        };
        void this.render();
      });
      legend.appendChild(badge);
    }
    mid.appendChild(legend);
    columns.appendChild(mid);

    // right: graph neighborhood + transcript browser
    const right = el("div", "col graph");
    right.appendChild(el("h3", undefined, `level graph ${s.level}`));
    const svgHost = el("div", "svg-host");
    right.appendChild(svgHost);
    void this.renderGraph(svgHost, view, selected);

    right.appendChild(el("h3", undefined, `transcript (${this.transcript.length})`));
    const scrub = el("input") as HTMLInputElement;
    scrub.type = "range";
    scrub.min = "0";
    scrub.max = String(this.transcript.length);
    scrub.value = String(this.scrubAt);
    const state = scrubTo(this.transcript, this.scrubAt);
    const stateLine = el(
      "div",
      "note",
      `after ${state.events} events: level ${state.level}, ` +
        `${state.stepQueries} steps, ${state.outputQueries} asks ` +
        `(${state.noneAnswers} none), finalized=${state.finalized}`,
    );
    scrub.addEventListener("input", () => {
      this.scrubAt = Number(scrub.value);
      void this.render();
    });
    const download = el("button", undefined, "download transcript");
    download.addEventListener("click", async () => {
      const text = await this.client.transcript(this.sid!);
      const blob = new Blob([text], { type: "application/jsonl" });
      const a = el("a") as HTMLAnchorElement;
      a.href = URL.createObjectURL(blob);
      a.download = `transcript-${this.sid}.jsonl`;
      a.click();
    });
    right.appendChild(scrub);
    right.appendChild(stateLine);
    right.appendChild(download);
    columns.appendChild(right);
  }

  private async renderGraph(
    host: HTMLElement,
    view: SessionView,
    selected: ConfigPayload | undefined,
  ) {
    if (!this.sid) return;
    const level = view.summary.level;
    let payload;
    try {
      payload = await this.client.graph(this.sid, Math.min(level, 2));
    } catch (err) {
      host.appendChild(
        el("div", "note", err instanceof ApiError ? err.message : String(err)),
      );
      return;
    }
    const centers = selected
      ? selected.states.map((st) => st.vertexKey).filter((k) =>
          payload.vertices.some((v) => v.key === k),
        )
      : [];
    const spec = renderSpec(payload, centers);
    const ns = "http://www.w3.org/2000/svg";
    const svg = document.createElementNS(ns, "svg");
    svg.setAttribute("viewBox", "0 0 520 440");
    const pos = new Map(spec.vertices.map((v) => [v.key, v]));
    for (const e of spec.edges) {
      const a = pos.get(e.a)!;
      const b = pos.get(e.b)!;
      const line = document.createElementNS(ns, "line");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("class", "edge");
      svg.appendChild(line);
    }
    for (const v of spec.vertices) {
      const circle = document.createElementNS(ns, "circle");
      circle.setAttribute("cx", String(v.x));
      circle.setAttribute("cy", String(v.y));
      circle.setAttribute("r", v.focus ? "9" : "6");
      let fill = "#ccc";
      if (v.output !== null) fill = valueColor(v.output);
      else if (
        view.highlightValue !== null &&
        !v.seen.includes(view.highlightValue)
      ) {
        // the no-witness region for the highlighted value, shaded
        fill = valueColor(view.highlightValue, 0.18);
      }
      circle.setAttribute("fill", fill);
      circle.setAttribute("class", "vertex" + (v.focus ? " focus" : ""));
      const title = document.createElementNS(ns, "title");
      title.textContent = `p${v.pid} ${v.status} ${v.key.slice(0, 10)}`;
      circle.appendChild(title);
      svg.appendChild(circle);
    }
    if (spec.truncated) {
      host.appendChild(el("div", "note", "neighborhood view (graph truncated)"));
    }
    host.appendChild(svg);
  }
}
