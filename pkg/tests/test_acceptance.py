"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines go straight to the terminal) or directly with
``python3 tests/test_acceptance.py``.
"""
import random
import sys
import tempfile
import time
from pathlib import Path

import pytest

from dagbft.anchor import collect_all_anchors, extend_blockchain
from dagbft.catalog import (
    anchor_example_scenario,
    committee_schedule_example,
    exhaustive_scenario,
    fork_attack_scenario,
    ft_random_scenario,
)
from dagbft.cli import bundled_scenarios, main as cli_main, resolve_config
from dagbft.committee import active_committee_at, max_faulty_stake, quorum_stake
from dagbft.harness import enabled_events, explore, replay, run_random, run_scenario, run_script
from dagbft.invariants import check_all, check_invariant, is_fault_tolerant
from dagbft.model import initial_state
from dagbft.transition import event_next

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402

RUNS = 1000
FULL_CHECK_RUNS = 100
RUN_BUDGET_S = 300.0
PAIRS_WANTED = 100_000
EXPLORE_DEPTH = 8
EXPLORE_VISITED = 277
EXPLORE_PER_DEPTH = [1, 4, 10, 18, 27, 36, 47, 60, 74]
EXPLORE_BUDGET_S = 120.0
STAKE_SAMPLES = 1_000_000
STAKE_BUDGET_S = 10.0


def _line(n, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"


def committee_schedule():
    t0 = time.perf_counter()
    params, chain, named = committee_schedule_example()
    got = {}
    for r in range(1, 17):
        w = active_committee_at(r, chain, params)
        got[r] = next((k for k, c in named.items() if c == w), None)
    want = {r: "G" if r <= 6 else "A" if r <= 8 else "B" if r <= 14 else "C" for r in range(1, 17)}
    dt = time.perf_counter() - t0
    ok = got == want and dt < 1.0
    return ok, f"committee schedule G 1-6, A 7-8, B 9-14, C 15-16 ({dt * 1000:.1f} ms)"


def anchor_commitment():
    t0 = time.perf_counter()
    sc = anchor_example_scenario()
    trace = run_script(sc)
    states = [initial_state(sc.correct_validators)]
    for e in trace.events:
        states.append(event_next(e, states[-1], sc.params))
    seen = []
    for i, a, anchors in trace.commits("v1"):
        v_before, v_after = states[i].validators[a], states[i + 1].validators[a]
        seen.append((v_before.round, anchors, v_after.last))
    skipped = {r for _, _, anchors in trace.commits() for _, r in anchors} & {6, 8}
    dt = time.perf_counter() - t0
    want = [(3, [("v3", 2)], 2), (11, [("v2", 4), ("v2", 10)], 10)]
    ok = seen == want and not skipped and dt < 1.0
    return ok, f"v1 commits {seen}, rounds 6 and 8 skipped ({dt * 1000:.1f} ms)"


_C3_FINALS = []


def invariant_suite():
    t0 = time.perf_counter()
    failures, checks, ft_all = 0, 0, True
    _C3_FINALS.clear()
    for seed in range(RUNS):
        sc = ft_random_scenario(seed)
        trace = run_random(sc, check_every=1 if seed < FULL_CHECK_RUNS else 10)
        failures += len(trace.failures) + len(trace.expected)
        checks += trace.checks
        ft_all = ft_all and trace.ft_throughout
        _C3_FINALS.append((sc, trace.final_state))
    dt = time.perf_counter() - t0
    ok = failures == 0 and ft_all and dt < RUN_BUDGET_S
    return ok, f"{RUNS} runs, {checks} checked states, {failures} violations ({dt:.0f} s)"


def preservation():
    t0 = time.perf_counter()
    pairs, bad, seed = 0, [], 0
    while pairs < PAIRS_WANTED:
        sc = ft_random_scenario(10_000 + seed)
        seed += 1
        params = sc.params
        trace = run_random(sc)
        s = initial_state(sc.correct_validators)
        for step in trace.steps:
            if is_fault_tolerant(s, params) and check_all(s, params, True).ok:
                for e in enabled_events(s, sc):
                    s2 = event_next(e, s, params, check=False)
                    pairs += 1
                    rep = check_all(s2, params, is_fault_tolerant(s2, params))
                    if not rep.ok:
                        bad.append((sc.seed, e, rep.failures[0].invariant))
            s = event_next(step.event, s, params, check=False)
    dt = time.perf_counter() - t0
    return not bad, f"{pairs} (state, event) pairs from {seed} runs, {len(bad)} counterexamples ({dt:.0f} s)"


def exhaustive():
    t0 = time.perf_counter()
    report = explore(exhaustive_scenario(), EXPLORE_DEPTH)
    dt = time.perf_counter() - t0
    ok = (
        report.visited == EXPLORE_VISITED
        and report.per_depth == EXPLORE_PER_DEPTH
        and not report.violations
        and not report.truncated
        and dt < EXPLORE_BUDGET_S
    )
    return ok, f"depth {EXPLORE_DEPTH}: {report.visited} states, per depth {report.per_depth}, {len(report.violations)} violations ({dt:.1f} s)"


def negative_witness():
    sc = fork_attack_scenario()
    trace = run_script(sc, check_every=1)
    final = trace.final_state
    eq = check_invariant("dag-nonequivocation", final, sc.params)
    holders = set()
    for v in eq:
        for _, who in v.witnesses:
            holders |= set(who)
    b1, b2 = final.validators["v1"].blockchain, final.validators["v2"].blockchain
    forked = b1[: len(b2)] != b2[: len(b1)]
    again = run_script(sc)
    ok = (
        not is_fault_tolerant(initial_state(sc.correct_validators), sc.params)
        and {"v1", "v2"} <= holders
        and forked
        and replay(trace).ok
        and again.to_lines() == trace.to_lines()
    )
    return ok, f"dag-nonequivocation across {sorted(holders)}, blockchains fork: {forked}, replay ok"


def redundancy():
    if not _C3_FINALS:
        invariant_suite()
    mismatches = 0
    checked = 0
    for sc, s in _C3_FINALS:
        for v in s.validators.values():
            checked += 1
            got = extend_blockchain(collect_all_anchors(v, sc.params), v.dag, (), frozenset())
            if got != (v.blockchain, v.committed):
                mismatches += 1
    return mismatches == 0, f"{checked} final validator states, {mismatches} mismatches"


def stake_arithmetic():
    rng = random.Random(20240607)
    t0 = time.perf_counter()
    bad = 0
    cases = [0, 1, 2, 3, 4, 2**63 - 1]
    cases += [rng.randrange(2**63) for _ in range(STAKE_SAMPLES - len(cases))]
    for n in cases:
        f = max_faulty_stake(n)
        q = quorum_stake(n)
        if n == 0:
            bad += f != 0 or q != 0
            continue
        if not (oracles.is_max_below_third(f, n) and f == -(-n // 3) - 1 == (n - 1) // 3
                and q == n - f and q > 2 * f):
            bad += 1
    dt = time.perf_counter() - t0
    return bad == 0 and dt < STAKE_BUDGET_S, f"{len(cases)} totals, {bad} mismatches ({dt:.1f} s)"


def determinism():
    names = bundled_scenarios()
    scenarios = [resolve_config(n) for n in names] + [ft_random_scenario(s) for s in range(5)]
    differing, replay_fail = 0, 0
    with tempfile.TemporaryDirectory() as tmp:
        for i, sc in enumerate(scenarios):
            a, b = Path(tmp) / f"{i}a.jsonl", Path(tmp) / f"{i}b.jsonl"
            run_scenario(sc).write(a)
            run_scenario(sc).write(b)
            differing += a.read_bytes() != b.read_bytes()
            replay_fail += cli_main(["replay", str(a)]) != 0
    ok = differing == 0 and replay_fail == 0
    return ok, f"{len(scenarios)} scenarios, {differing} differing traces, {replay_fail} replay failures"


CRITERIA = [
    (1, committee_schedule),
    (2, anchor_commitment),
    (3, invariant_suite),
    (4, preservation),
    (5, exhaustive),
    (6, negative_witness),
    (7, redundancy),
    (8, stake_arithmetic),
    (9, determinism),
]


@pytest.mark.slow
@pytest.mark.parametrize("number, criterion", CRITERIA, ids=[f"criterion_{n}" for n, _ in CRITERIA])
def test_criterion(number, criterion, capsys):
    ok, detail = criterion()
    with capsys.disabled():
        print("\n" + _line(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n, fn in CRITERIA:
        ok, detail = fn()
        print(_line(n, ok, detail), flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
