"""Command-line front door: prover campaigns, graph exports, checks, service.

Exit codes for `run`: 0 when the protocol survived consistently, 1 when a
prover won (possible only against intentionally broken protocols), 2 on
an internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import Adversary, InternalInvariantError
from .checker import (
    audit_invariants,
    replay_transcript,
    run_lemma_suite,
)
from .core import TaskSpec
from .harness import (
    Budgets,
    ChainProver,
    ExhaustiveProver,
    MockBadProtocol,
    RandomProver,
    STRATEGIES,
    ScriptedProver,
    ValencyProver,
    run_strategy,
)
from .levelgraph import Caps, CapExceeded, initial_graph, subdivide_graph, to_dot, to_json
from .states import DeltaMap


def _add_task_args(p):
    p.add_argument("--n", type=int, default=3, help="process count")
    p.add_argument("--k", type=int, default=2, help="agreement parameter")


def _make_strategy(name: str, args):
    if name == "random":
        return RandomProver(warmup=args.warmup)
    if name == "chain":
        return ChainProver()
    if name == "valency":
        return ValencyProver()
    if name == "exhaustive":
        return ExhaustiveProver(depth=args.depth)
    if name == "scripted":
        with open(args.script) as fh:
            script = [json.loads(line) for line in fh if line.strip()]
        return ScriptedProver(script)
    raise SystemExit(f"unknown strategy {name!r}")


def cmd_run(args) -> int:
    try:
        task = TaskSpec(args.n, args.k)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    protocol = (
        MockBadProtocol(task) if args.mock_protocol else Adversary(task, paranoid=not args.relaxed)
    )
    strategy = _make_strategy(args.strategy, args)
    budgets = Budgets(
        max_queries=args.max_queries,
        max_phases=args.max_phases,
        max_chain=args.max_chain,
    )
    try:
        report = run_strategy(strategy, task, protocol=protocol, budgets=budgets, seed=args.seed)
    except InternalInvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        if args.out:
            _dump_artifacts(args.out, protocol, None)
        return 2
    if args.out:
        _dump_artifacts(args.out, protocol, report)
    print(report.to_json())
    if report.status == "prover-wins":
        return 1
    return 0


def _dump_artifacts(out: str, protocol, report):
    base = Path(out)
    base.mkdir(parents=True, exist_ok=True)
    if report is not None:
        (base / "report.json").write_text(report.to_json() + "\n")
    transcript = getattr(protocol, "transcript", [])
    with (base / "transcript.jsonl").open("w") as fh:
        for event in transcript:
            fh.write(json.dumps(event, sort_keys=True) + "\n")


def cmd_export(args) -> int:
    try:
        task = TaskSpec(args.n, args.k)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    if args.level < 0:
        print("usage error: level must be nonnegative", file=sys.stderr)
        return 64
    graph = initial_graph(task)
    delta = DeltaMap({v: None for v in graph.vertices})
    caps = Caps(max_level=args.max_level, max_cliques=args.max_cliques)
    try:
        for _ in range(args.level):
            graph = subdivide_graph(graph, delta, caps)
            for v in graph.vertices:
                if not delta.defined(v):
                    delta.set_continue(v)
    except CapExceeded as exc:
        print(f"export too large: {exc}", file=sys.stderr)
        return 2
    text = to_dot(graph, delta) if args.format == "dot" else to_json(graph, delta) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(args) -> int:
    task = TaskSpec(args.n, args.k)
    if args.what == "lemmas":
        failures = run_lemma_suite(task, instances=args.instances, seed=args.seed)
        for name, i, detail in failures:
            print(f"FAIL {name}[{i}]: {detail}")
        print(f"{'OK' if not failures else 'FAILED'}: lemma suite over {args.instances} instances")
        return 0 if not failures else 2
    if args.what == "invariants":
        adv = Adversary(task)
        report = run_strategy(
            RandomProver(warmup=args.max_queries // 2),
            task,
            protocol=adv,
            budgets=Budgets(max_queries=args.max_queries),
            seed=args.seed,
        )
        print(report.to_json())
        try:
            literal = audit_invariants(adv)
        except CapExceeded:
            print("literal audit skipped: graph beyond materialization caps")
            return 0 if report.status != "prover-wins" else 1
        print(literal.summary())
        return 0 if literal.ok and report.status != "prover-wins" else 2
    if args.what == "replay":
        with open(args.file) as fh:
            script = [json.loads(line) for line in fh if line.strip()]
        adv = Adversary(task)
        report = run_strategy(
            ScriptedProver(script),
            task,
            protocol=adv,
            budgets=Budgets(max_queries=10**9),
            seed=0,
        )
        issues = replay_transcript(adv)
        for issue in issues:
            print(f"INCONSISTENT at seq {issue.seq}: {issue.detail}")
        print(f"{'OK' if not issues else 'FAILED'}: replay of {len(adv.transcript)} events")
        return 0 if not issues else 2
    print(f"unknown check {args.what!r}", file=sys.stderr)
    return 64


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nisarena",
        description="Iterated-snapshot set-agreement arena",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a prover campaign")
    _add_task_args(p)
    p.add_argument("--strategy", choices=sorted(STRATEGIES) + ["scripted"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-queries", type=int, default=1000)
    p.add_argument("--max-phases", type=int, default=64)
    p.add_argument("--max-chain", type=int, default=10000)
    p.add_argument("--warmup", type=int, default=400, help="queries before random commits")
    p.add_argument("--depth", type=int, default=2, help="exhaustive prover depth")
    p.add_argument("--script", help="action file for the scripted prover")
    p.add_argument("--mock-protocol", action="store_true", help="run against the broken fixed protocol")
    p.add_argument("--relaxed", action="store_true", help="disable per-response audits")
    p.add_argument("--out", help="directory for report and transcript artifacts")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export", help="export a level graph")
    _add_task_args(p)
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--format", choices=["dot", "json"], default="json")
    p.add_argument("--max-level", type=int, default=6)
    p.add_argument("--max-cliques", type=int, default=500000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("check", help="verification suites")
    p.add_argument("what", choices=["lemmas", "invariants", "replay"])
    _add_task_args(p)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-queries", type=int, default=300)
    p.add_argument("--file", help="action file for replay")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="serve the HTTP API and UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--static-dir", help="built browser client assets")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
