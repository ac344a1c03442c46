"""Command-line entry points: simulate, explore, replay, check, attack, export-dag.

Exit codes: 0 success (including violations a non-fault-tolerant execution is
allowed to show), 1 unexpected violation or replay divergence, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .dag import to_dot
from .harness import (
    TraceFormatError,
    explore,
    minimize,
    read_trace,
    replay,
    run_scenario,
)
from .invariants import check_all
from .model import ConfigurationError
from .scenario import STRATEGIES, Scenario, load_scenario
from .serialize import event_to_json, dumps
from .transition import DisabledEventError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def bundled_scenarios() -> list:
    root = resources.files("dagbft") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config(name: str) -> Scenario:
    """A file path, or the name of a bundled scenario such as ``anchor-example``."""
    path = Path(name)
    if not path.exists() and name in bundled_scenarios():
        with resources.as_file(resources.files("dagbft") / "scenarios" / f"{name}.json") as p:
            return load_scenario(p)
    return load_scenario(path)


def _override(sc: Scenario, args) -> Scenario:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "events", None) is not None:
        changes["max_events"] = args.events
    if getattr(args, "strategy", None) is not None:
        changes["adversary"] = args.strategy
    return sc.replace(**changes) if changes else sc


def _notice(violated: list) -> str:
    names = ", ".join(sorted(set(violated)))
    return f"non-FT execution; {names} violated as permitted"


def _report_trace(trace, out=None) -> int:
    """Summarize a finished run; returns the exit status."""
    out = out or sys.stdout
    params = trace.scenario.params
    final = check_all(trace.final_state, params, trace.ft_throughout)
    failures = [v for _, v in trace.failures] + final.failures
    expected = sorted({v.invariant for _, v in trace.expected} | {v.invariant for v in final.expected})
    commits = sum(1 for st in trace.steps if st.event.kind == "commit")
    print(f"{trace.scenario.name or 'scenario'} seed={trace.scenario.seed}: "
          f"{len(trace.steps)} events, {commits} commits, ft={str(trace.ft_throughout).lower()}", file=out)
    if failures:
        first = failures[0]
        print(f"VIOLATION {first.invariant}: {first.detail}", file=out)
        print(json.dumps(first.to_json()), file=out)
        small, reproduced = minimize(trace, first)
        if reproduced:
            print(f"minimized witness ({len(small.steps)} events):", file=out)
            for e in small.events:
                print("  " + dumps(event_to_json(e)), file=out)
        return EXIT_VIOLATION
    if expected:
        print(_notice(expected), file=out)
    else:
        print(final.summary(), file=out)
    return EXIT_OK


def _simulate_one(job):
    sc, check_every, out = job
    trace = run_scenario(sc, check_every=check_every)
    if out is not None:
        trace.write(out)
    return trace


def cmd_simulate(args) -> int:
    sc = _override(resolve_config(args.config), args)
    if args.runs < 1 or args.jobs < 1:
        raise UsageError("--runs and --jobs must be positive")
    if args.runs == 1:
        jobs = [(sc, args.check_every, args.out)]
    else:
        outdir = None
        if args.out is not None:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
        jobs = []
        for k in range(args.runs):
            one = sc.with_seed(sc.seed + k)
            path = None if outdir is None else outdir / f"{sc.name or 'trace'}-seed{one.seed}.jsonl"
            jobs.append((one, args.check_every, path))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            traces = list(pool.map(_simulate_one, jobs))
    else:
        traces = [_simulate_one(j) for j in jobs]
    status = EXIT_OK
    for trace in traces:
        status = max(status, _report_trace(trace))
    return status


def cmd_explore(args) -> int:
    sc = _override(resolve_config(args.config), args)
    if args.depth < 0:
        raise UsageError("--depth must be non-negative")
    report = explore(sc, args.depth, budget=args.budget)
    if report.truncated:
        print(f"truncated: state budget of {args.budget} reached")
    noun = "state" if report.visited == 1 else "states"
    print(f"{report.visited} {noun} visited (depth {args.depth}, frontier {report.frontier})")
    print("per depth: " + " ".join(str(n) for n in report.per_depth))
    for inv, expected, path in report.violations:
        tag = "permitted (non-FT)" if expected else "VIOLATION"
        print(f"{tag} {inv} after {len(path)} events:")
        for e in path:
            print("  " + dumps(event_to_json(e)))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _load_trace(path):
    try:
        return read_trace(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc
    except (TraceFormatError, ConfigurationError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_replay(args) -> int:
    trace = _load_trace(args.trace)
    result = replay(trace)
    if result.ok:
        print(f"replay ok: {len(trace.steps)} steps reproduced")
        return EXIT_OK
    print(f"divergence at step {result.step}: {result.component}: {result.detail}")
    return EXIT_VIOLATION


def cmd_check(args) -> int:
    trace = _load_trace(args.trace)
    report = check_all(trace.final_state, trace.scenario.params, trace.ft_throughout)
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    for inv, status in report.status().items():
        print(f"{inv:32s} {status}")
    if not report.ok:
        return EXIT_VIOLATION
    if report.expected:
        print(_notice([v.invariant for v in report.expected]))
    else:
        print(report.summary())
    return EXIT_OK


def cmd_attack(args) -> int:
    config = args.config or "fork-attack"
    sc = _override(resolve_config(config), args)
    trace = run_scenario(sc, check_every=1)
    if args.out is not None:
        trace.write(args.out)
    status = _report_trace(trace)
    heads = {a: [b.round for b in v.blockchain] for a, v in trace.final_state.validators.items()}
    print("blockchain rounds: " + json.dumps(heads, sort_keys=True))
    return status


def cmd_export_dag(args) -> int:
    trace = _load_trace(args.trace)
    validators = trace.final_state.validators
    if args.validator not in validators:
        raise UsageError(f"unknown validator {args.validator!r}; choose from {sorted(validators)}")
    text = to_dot(validators[args.validator].dag, name=args.validator.replace("-", "_"))
    if args.out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise UsageError(f"{args.out}: {exc.strerror}") from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagbft", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="scenario JSON file, or a bundled name: " + ", ".join(bundled_scenarios()))
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--events", type=int, help="override max_events")
        p.add_argument("--strategy", choices=STRATEGIES, help="override the adversary strategy")

    p = sub.add_parser("simulate", help="seeded random run (or the scenario's script)")
    scenario_flags(p)
    p.add_argument("--out", help="trace file; a directory when --runs > 1")
    p.add_argument("--check-every", type=int, default=1, help="check invariants every k events (0: final only)")
    p.add_argument("--runs", type=int, default=1, help="consecutive seeds to run")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --runs > 1")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("explore", help="bounded breadth-first exploration")
    scenario_flags(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--budget", type=int, default=500_000, help="maximum distinct states")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("replay", help="recompute a trace and compare digests")
    p.add_argument("trace")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("check", help="check all invariants on a trace's final state")
    p.add_argument("trace")
    p.add_argument("--json", action="store_true", help="also print the structured report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("attack", help="run an adversarial scenario (default: the over-stake fork)")
    scenario_flags(p, config_required=False)
    p.add_argument("--out", help="trace file")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("export-dag", help="write one validator's DAG from a trace as Graphviz DOT")
    p.add_argument("trace")
    p.add_argument("--validator", required=True)
    p.add_argument("--out", help="DOT file (default: stdout)")
    p.set_defaults(func=cmd_export_dag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DisabledEventError as exc:
        print(f"error: scripted event {exc.index} is not enabled: {exc.result.premise}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
