"""Execution generation: enabled-event families, adversaries, seeded runs, traces,
replay, trace minimization and bounded breadth-first exploration."""
from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .anchor import leader_at
from .committee import active_committee_at, is_quorum, quorum_stake
from .dag import is_closed, is_new
from .invariants import (
    INVARIANTS,
    Report,
    Violation,
    check_all,
    check_invariant,
    is_fault_tolerant,
    signer_records_strong_gaps,
)
from .model import (
    Accept,
    Advance,
    Bond,
    Certificate,
    Commit,
    Create,
    EVENT_KINDS,
    Other,
    SystemState,
    Unbond,
    initial_state,
)
from .scenario import Scenario
from .serialize import (
    dumps,
    event_from_json,
    event_to_json,
    state_digest,
    state_from_json,
    state_to_json,
)
from .transition import (
    DisabledEventError,
    accept_possible,
    commit_anchor,
    create_possible,
    event_next,
    event_possible,
)


def _stable_int(*parts) -> int:
    text = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


# create-event families

def transaction_batch(scenario: Scenario, author: str, r: int) -> tuple:
    """A fresh payload, plus a bond or unbond at the scenario's bond rate.

    Only correct validators gain stake, and only validators outside the
    genesis committee are ever unbonded, so every committee reachable this
    way keeps the genesis members with at least their genesis stake.
    """
    txs = [Other(f"{author}@{r}")]
    if scenario.bond_rate > 0:
        h = _stable_int(scenario.seed, "tx", author, r)
        if (h % 10_000) < scenario.bond_rate * 10_000:
            correct = scenario.correct_validators
            target = correct[(h >> 16) % len(correct)]
            if target not in scenario.genesis_committee and (h >> 32) % 2:
                txs.append(Unbond(target))
            else:
                txs.append(Bond(target, 1 + (h >> 40) % 2))
    return tuple(txs)


def _previous_layer(v, r: int) -> frozenset:
    if r == 1:
        return frozenset()
    return frozenset(c.author for c in v.dag.at_round(r - 1))


def _endorser_ok(q_state, author: str, r: int, prev: frozenset, params) -> bool:
    if not is_new(author, r, q_state):
        return False
    if r == 1:
        return True
    return is_closed(prev, r - 1, q_state.dag) and is_quorum(prev, r - 1, q_state.blockchain, params)


def correct_create_candidates(s: SystemState, scenario: Scenario) -> list:
    """One candidate per correct validator able to propose at its round.

    Endorsers are taken by descending stake, with ties broken by a seeded
    hash, until the signers reach a quorum of the author's active committee.
    """
    params = scenario.params
    out = []
    vals = s.validators
    for a, v in vals.items():
        r = v.round
        if v.dag.has(a, r):
            continue
        w = active_committee_at(r, v.blockchain, params)
        if w is None or a not in w:
            continue
        prev = _previous_layer(v, r)
        if r != 1 and not is_quorum(prev, r - 1, v.blockchain, params):
            continue
        eligible = []
        for q in w:
            if q == a:
                continue
            vq = vals.get(q)
            if vq is not None and not _endorser_ok(vq, a, r, prev, params):
                continue
            eligible.append(q)
        eligible.sort(key=lambda q: (-w[q], _stable_int(scenario.seed, "endorse", a, r, q), q))
        need = quorum_stake(w) - w[a]
        chosen = []
        acc = 0
        for q in eligible:
            if acc >= need:
                break
            chosen.append(q)
            acc += w[q]
        if acc < need:
            continue
        out.append(Create(Certificate(a, r, transaction_batch(scenario, a, r), prev, frozenset(chosen))))
    return out


def _faulty_targets(s: SystemState, scenario: Scenario) -> list:
    """(faulty member, round, committee) triples worth proposing for."""
    params = scenario.params
    seen = {}
    for v in s.validators.values():
        w = active_committee_at(v.round, v.blockchain, params)
        if not w:
            continue
        for f in w:
            if f not in s.validators:
                seen.setdefault((f, v.round), w)
    return [(f, r, seen[(f, r)]) for f, r in sorted(seen)]


def adversary_propose(strategy: str, s: SystemState, scenario: Scenario, _known=None) -> list:
    if strategy == "none":
        return []
    if strategy not in ("equivocate", "under-quorum"):
        raise ValueError(f"unknown adversary strategy {strategy!r}")
    params = scenario.params
    vals = s.validators
    proposals = []
    for f, r, w in _faulty_targets(s, scenario):
        co_signers = frozenset(x for x in w if x not in vals and x != f)
        if strategy == "under-quorum":
            prev = frozenset()
            if r != 1:
                layers = [_previous_layer(v, r) for v in vals.values() if v.round == r]
                prev = min(layers, key=lambda p: (len(p), sorted(p))) if layers else frozenset()
                if not prev:
                    continue
            proposals.append(Certificate(f, r, (Other(f"{f}@{r}/under"),), prev, frozenset()))
            continue
        # equivocate: one certificate per disjoint group of correct endorsers
        eligible = []
        for q in w:
            vq = vals.get(q)
            if vq is None:
                continue
            prev = _previous_layer(vq, r)
            if r != 1 and not prev:
                continue
            if _endorser_ok(vq, f, r, prev, params):
                eligible.append((q, prev))
        groups = [[x] for x in eligible]
        need = quorum_stake(w) - w[f] - sum(w[x] for x in co_signers)
        if len(eligible) > 1 and need > 0:
            acc, group = 0, []
            for x in sorted(eligible, key=lambda e: (-w[e[0]], e[0])):
                group.append(x)
                acc += w[x[0]]
                if acc >= need:
                    break
            if acc >= need and len(group) > 1:
                groups.append(group)
        for group in groups:
            members = sorted(q for q, _ in group)
            prev = frozenset.intersection(*(p for _, p in group))
            if r != 1 and not prev:
                continue
            tag = "+".join(members)
            proposals.append(
                Certificate(f, r, (Other(f"{f}@{r}/{tag}"),), prev, co_signers | frozenset(members))
            )
    known = _known if _known is not None else _certs_in_system(s)
    out = []
    for c in proposals:
        if c in known:
            continue
        if create_possible(c, s, params):
            out.append(Create(c))
    return out


def _certs_in_system(s: SystemState) -> set:
    out = set()
    for v in s.validators.values():
        out |= v.dag.certs
    out.update(m.certificate for m in s.network)
    return out


def enabled_events(s: SystemState, scenario: Scenario) -> list:
    """A finite, deterministic, sound family of enabled events, grouped by kind."""
    params = scenario.params
    events = correct_create_candidates(s, scenario)
    events += adversary_propose(scenario.adversary, s, scenario)
    for m in sorted(s.network, key=lambda m: (m.certificate.sort_key(), m.destination)):
        if accept_possible(m, s, params):
            events.append(Accept(m))
    for a, v in s.validators.items():
        if v.round < scenario.max_round:
            events.append(Advance(a))
    for a, v in s.validators.items():
        if commit_anchor(v, params)[0] is not None:
            events.append(Commit(a))
    return events


# random runs and traces

@dataclass
class Step:
    event: object
    state_digest: str
    ft_flag: bool
    anchors: Optional[list] = None

    def to_json(self):
        d = {"event": event_to_json(self.event), "state_digest": self.state_digest, "ft_flag": self.ft_flag}
        if self.anchors is not None:
            d["anchors"] = self.anchors
        return d


@dataclass
class Trace:
    scenario: Scenario
    steps: list
    final_state: SystemState
    ft_throughout: bool
    checks: int = 0
    failures: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def events(self) -> list:
        return [st.event for st in self.steps]

    def commits(self, validator: Optional[str] = None) -> list:
        """(step index, validator, [(author, round), ...]) for each commit."""
        out = []
        for i, st in enumerate(self.steps):
            if isinstance(st.event, Commit) and (validator is None or st.event.validator == validator):
                out.append((i, st.event.validator, [tuple(x) for x in st.anchors]))
        return out

    def to_lines(self) -> list:
        lines = [dumps({"scenario": self.scenario.to_json()})]
        lines += [dumps(st.to_json()) for st in self.steps]
        lines.append(dumps({"final_state": state_to_json(self.final_state), "ft_throughout": self.ft_throughout}))
        return lines

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


class TraceFormatError(ValueError):
    pass


def read_trace(path) -> Trace:
    with open(path, encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    return parse_trace(lines)


def parse_trace(lines: list) -> Trace:
    if len(lines) < 2:
        raise TraceFormatError("a trace needs a scenario line and a final-state line")
    try:
        head = json.loads(lines[0])
        tail = json.loads(lines[-1])
        scenario = Scenario.from_json(head["scenario"])
        steps = []
        for ln in lines[1:-1]:
            d = json.loads(ln)
            steps.append(Step(event_from_json(d["event"]), d["state_digest"], bool(d["ft_flag"]), d.get("anchors")))
        final = state_from_json(tail["final_state"])
        ft = bool(tail["ft_throughout"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"malformed trace: {exc!r}") from exc
    return Trace(scenario, steps, final, ft)


def _apply(e, s: SystemState, scenario: Scenario):
    anchors = None
    if isinstance(e, Commit):
        from .transition import committed_anchors

        anchors = [[c.author, c.round] for c in committed_anchors(e.validator, s, scenario.params)]
    return event_next(e, s, scenario.params, check=False), anchors


class _Checker:
    def __init__(self, scenario: Scenario, check_every: int, trace: Trace):
        self.scenario = scenario
        self.every = check_every
        self.trace = trace

    def __call__(self, i: int, s: SystemState, ft: bool, force: bool = False):
        if self.every <= 0 and not force:
            return
        if not force and i % self.every != 0:
            return
        rep = check_all(s, self.scenario.params, ft)
        self.trace.checks += 1
        for v in rep.failures:
            self.trace.failures.append((i, v))
        for v in rep.expected:
            self.trace.expected.append((i, v))
        gaps = signer_records_strong_gaps(s)
        if gaps:
            self.trace.stats["strong_signer_record_gaps"] = self.trace.stats.get("strong_signer_record_gaps", 0) + gaps


def _choose(rng: random.Random, events: list, s: SystemState, scenario: Scenario):
    by_kind = {k: [] for k in EVENT_KINDS}
    for e in events:
        by_kind[e.kind].append(e)
    # readiness is applied before the kind draw so that unready advances only
    # win when nothing else can happen (or the coin says so)
    if by_kind["advance"] and scenario.advance_readiness > 0:
        if rng.random() < scenario.advance_readiness:
            committing = {e.validator for e in by_kind["commit"]}
            ready = [
                e for e in by_kind["advance"]
                if e.validator not in committing and _ready_to_advance(e.validator, s, scenario)
            ]
            others = any(by_kind[k] for k in EVENT_KINDS if k != "advance" and scenario.weights[k] > 0)
            if ready or others:
                by_kind["advance"] = ready
    kinds = [k for k, w in scenario.scheduler_weights if w > 0 and by_kind[k]]
    if not kinds:
        return None
    weights = [scenario.weights[k] for k in kinds]
    kind = rng.choices(kinds, weights)[0]
    pool = by_kind[kind]
    if kind == "accept" and scenario.delivery_bias > 0:
        if rng.random() < scenario.delivery_bias:
            low = min(e.message.certificate.round for e in pool)
            pool = [e for e in pool if e.message.certificate.round == low]
    return pool[rng.randrange(len(pool))]


def _ready_to_advance(a: str, s: SystemState, scenario: Scenario) -> bool:
    """The validator has proposed (or cannot) and holds a quorum of its round.

    Callers also hold back validators with a pending commit: skipping it can
    leave the next round's committee undefined for good.
    """
    v = s.validators[a]
    params = scenario.params
    w = active_committee_at(v.round, v.blockchain, params)
    if w is None:
        return True
    if a in w and not v.dag.has(a, v.round):
        return False
    authors = frozenset(c.author for c in v.dag.at_round(v.round))
    if not is_quorum(authors, v.round, v.blockchain, params):
        return False
    if v.round % 2 == 0:
        # wait for a correct leader's anchor, as deployments do before a timeout
        leader = leader_at(w, v.round, params)
        if leader in s.validators and leader not in authors:
            return False
    return True


def run_random(scenario: Scenario, check_every: int = 0) -> Trace:
    """Seeded random execution; ``check_every`` = k checks every k-th state (0: none)."""
    rng = random.Random(scenario.seed)
    s = initial_state(scenario.correct_validators)
    ft = is_fault_tolerant(s, scenario.params)
    trace = Trace(scenario, [], s, ft)
    check = _Checker(scenario, check_every, trace)
    check(0, s, ft)
    for i in range(1, scenario.max_events + 1):
        events = enabled_events(s, scenario)
        e = _choose(rng, events, s, scenario)
        if e is None:
            break
        s, anchors = _apply(e, s, scenario)
        ft = ft and is_fault_tolerant(s, scenario.params)
        trace.steps.append(Step(e, state_digest(s), ft, anchors))
        check(i, s, ft)
    trace.final_state = s
    trace.ft_throughout = ft
    if check_every > 0 and len(trace.steps) % check_every != 0:
        check(len(trace.steps), s, ft, force=True)
    return trace


def run_script(scenario: Scenario, events: Optional[Iterable] = None, check_every: int = 0) -> Trace:
    """Execute a fixed event list; raises DisabledEventError on a disabled event."""
    events = scenario.script if events is None else events
    if events is None:
        raise ValueError("scenario has no script")
    s = initial_state(scenario.correct_validators)
    ft = is_fault_tolerant(s, scenario.params)
    trace = Trace(scenario, [], s, ft)
    check = _Checker(scenario, check_every, trace)
    check(0, s, ft)
    for i, e in enumerate(events):
        res = event_possible(e, s, scenario.params)
        if not res:
            raise DisabledEventError(i, e, res)
        s, anchors = _apply(e, s, scenario)
        ft = ft and is_fault_tolerant(s, scenario.params)
        trace.steps.append(Step(e, state_digest(s), ft, anchors))
        check(i + 1, s, ft)
    trace.final_state = s
    trace.ft_throughout = ft
    if check_every > 0 and len(trace.steps) % check_every != 0:
        check(len(trace.steps), s, ft, force=True)
    return trace


def run_scenario(scenario: Scenario, check_every: int = 0) -> Trace:
    if scenario.script is not None:
        return run_script(scenario, check_every=check_every)
    return run_random(scenario, check_every=check_every)


# replay

@dataclass
class ReplayResult:
    ok: bool
    step: Optional[int] = None
    component: str = ""
    detail: str = ""


def _first_difference(a: dict, b: dict, path: str = "") -> str:
    if type(a) != type(b):
        return path or "<root>"
    if isinstance(a, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                return f"{path}/{k}"
            if a[k] != b[k]:
                return _first_difference(a[k], b[k], f"{path}/{k}")
        return path
    if isinstance(a, list):
        if len(a) != len(b):
            return f"{path}[len]"
        for i, (x, y) in enumerate(zip(a, b)):
            if x != y:
                return _first_difference(x, y, f"{path}[{i}]")
        return path
    return path or "<root>"


def replay(trace: Trace) -> ReplayResult:
    scenario = trace.scenario
    s = initial_state(scenario.correct_validators)
    ft = is_fault_tolerant(s, scenario.params)
    for i, st in enumerate(trace.steps):
        res = event_possible(st.event, s, scenario.params)
        if not res:
            return ReplayResult(False, i, "event", f"event disabled: {res.premise}: {res.detail}")
        s, anchors = _apply(st.event, s, scenario)
        ft = ft and is_fault_tolerant(s, scenario.params)
        digest = state_digest(s)
        if digest != st.state_digest:
            return ReplayResult(False, i, "state_digest", f"expected {st.state_digest}, recomputed {digest}")
        if ft != st.ft_flag:
            return ReplayResult(False, i, "ft_flag", f"expected {st.ft_flag}, recomputed {ft}")
        if st.anchors is not None and anchors != [list(x) for x in st.anchors]:
            return ReplayResult(False, i, "anchors", f"expected {st.anchors}, recomputed {anchors}")
    want, got = state_to_json(trace.final_state), state_to_json(s)
    if want != got:
        return ReplayResult(False, len(trace.steps), "final_state" + _first_difference(want, got), "final state differs")
    if ft != trace.ft_throughout:
        return ReplayResult(False, len(trace.steps), "ft_throughout", "fault-tolerance flag differs")
    return ReplayResult(True)


# minimization

def _violates(events: list, scenario: Scenario, invariant: str) -> bool:
    s = initial_state(scenario.correct_validators)
    params = scenario.params
    for e in events:
        if not event_possible(e, s, params):
            return False
        s = event_next(e, s, params, check=False)
    return bool(check_invariant(invariant, s, params))


def minimize(trace: Trace, violation: Violation) -> tuple:
    """Greedy chunk deletion keeping only executions that still violate.

    Returns ``(trace, reproduced)``; an unreproducible violation yields the
    input unchanged with ``reproduced`` false.
    """
    scenario = trace.scenario
    inv = violation.invariant
    events = trace.events
    if not _violates(events, scenario, inv):
        return trace, False
    chunk = max(1, len(events) // 2)
    while chunk >= 1:
        i = 0
        changed = False
        while i < len(events):
            candidate = events[:i] + events[i + chunk:]
            if _violates(candidate, scenario, inv):
                events = candidate
                changed = True
            else:
                i += chunk
        if not changed:
            chunk //= 2
    minimized = run_script(scenario.replace(script=None), events)
    minimized.scenario = scenario
    return minimized, True


# exploration

@dataclass
class ExplorationReport:
    visited: int
    frontier: int
    depth: int
    truncated: bool
    violations: list = field(default_factory=list)  # (invariant, expected?, event path)
    per_depth: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(not expected for _, expected, _ in self.violations)


def _path_to(node: str, parents: dict) -> list:
    path = []
    while parents[node] is not None:
        node, e = parents[node]
        path.append(e)
    path.reverse()
    return path


def explore(scenario: Scenario, depth: int, budget: int = 500_000, check: bool = True) -> ExplorationReport:
    """Breadth-first enumeration over ``enabled_events``, deduplicating by digest."""
    params = scenario.params
    s0 = initial_state(scenario.correct_validators)
    d0 = state_digest(s0)
    parents = {d0: None}
    ft0 = is_fault_tolerant(s0, params)
    level = [(s0, d0, ft0)]
    report = ExplorationReport(visited=1, frontier=0, depth=depth, truncated=False)
    seen_violation = set()

    def inspect(s, d, ft):
        if not check:
            return
        rep = check_all(s, params, ft)
        for v in rep.failures + rep.expected:
            key = (v.invariant, v in rep.expected)
            if key in seen_violation:
                continue
            seen_violation.add(key)
            report.violations.append((v.invariant, v in rep.expected, _path_to(d, parents)))

    inspect(s0, d0, ft0)
    report.per_depth.append(1)
    for k in range(depth):
        nxt = []
        for s, d, ft in level:
            for e in enabled_events(s, scenario):
                s2 = event_next(e, s, params, check=False)
                d2 = state_digest(s2)
                if d2 in parents:
                    continue
                if len(parents) >= budget:
                    report.truncated = True
                    break
                parents[d2] = (d, e)
                ft2 = ft and is_fault_tolerant(s2, params)
                inspect(s2, d2, ft2)
                nxt.append((s2, d2, ft2))
            if report.truncated:
                break
        report.per_depth.append(len(nxt))
        level = nxt
        if report.truncated or not level:
            break
    report.visited = len(parents)
    report.frontier = len(level)
    return report


__all__ = [
    "ExplorationReport",
    "INVARIANTS",
    "ReplayResult",
    "Report",
    "Step",
    "Trace",
    "adversary_propose",
    "correct_create_candidates",
    "enabled_events",
    "explore",
    "minimize",
    "parse_trace",
    "read_trace",
    "replay",
    "run_random",
    "run_scenario",
    "run_script",
]
