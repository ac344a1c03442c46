import pytest
from hypothesis import given, settings, strategies as st

import dagbft.anchor
from dagbft.catalog import (
    equivocation_scenario,
    exhaustive_scenario,
    fork_attack_scenario,
    ft_random_scenario,
)
from dagbft.committee import Committee
from dagbft.harness import (
    Step,
    adversary_propose,
    enabled_events,
    explore,
    minimize,
    parse_trace,
    replay,
    run_random,
    run_script,
)
from dagbft.invariants import Violation, check_invariant
from dagbft.model import Advance, Commit, Create, initial_state
from dagbft.scenario import Scenario
from dagbft.transition import event_possible

FOUR = ("v1", "v2", "v3", "v4")


def four(**kw):
    kw.setdefault("advance_readiness", 0.99)
    return Scenario(FOUR, Committee({a: 1 for a in FOUR}), **kw)


def test_initial_enabled_family():
    events = enabled_events(initial_state(FOUR), four())
    kinds = sorted(e.kind for e in events)
    assert kinds == ["advance"] * 4 + ["create"] * 4
    assert {e.certificate.author for e in events if isinstance(e, Create)} == set(FOUR)
    assert events == enabled_events(initial_state(FOUR), four())


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_enabled_family_is_sound(seed):
    sc = ft_random_scenario(seed, max_events=80)
    t = run_random(sc)
    s = t.final_state
    for e in enabled_events(s, sc):
        assert event_possible(e, s, sc.params)


def test_adversary_proposals():
    sc = equivocation_scenario()
    s = initial_state(sc.correct_validators)
    eq = adversary_propose("equivocate", s, sc)
    assert len({e.certificate for e in eq}) >= 2
    assert len({(e.certificate.author, e.certificate.round) for e in eq}) == 1
    under = adversary_propose("under-quorum", s, sc)
    assert under and all(not e.certificate.endorsers for e in under)
    assert adversary_propose("none", s, sc) == []
    with pytest.raises(ValueError):
        adversary_propose("bribe", s, sc)


def test_adversary_is_silent_without_faulty_members():
    assert adversary_propose("equivocate", initial_state(FOUR), four()) == []


def test_random_run_is_deterministic():
    sc = four(seed=5, max_events=150, bond_rate=0.2)
    a, b = run_random(sc), run_random(sc)
    assert a.to_lines() == b.to_lines()
    assert run_random(sc.with_seed(6)).to_lines() != a.to_lines()


def test_replay_and_parse_round_trip():
    t = run_random(four(seed=2, max_events=200))
    assert replay(t).ok
    back = parse_trace(t.to_lines())
    assert back.to_lines() == t.to_lines()
    assert replay(back).ok


def test_replay_detects_tampered_digest():
    t = run_random(four(seed=2, max_events=60))
    st_ = t.steps[17]
    t.steps[17] = Step(st_.event, "0" * 32, st_.ft_flag, st_.anchors)
    res = replay(t)
    assert not res.ok and res.step == 17 and res.component == "state_digest"


def test_replay_detects_changed_leader_function(monkeypatch):
    t = run_random(four(seed=1, max_events=300, bond_rate=0.2, delivery_bias=0.5))
    commits = t.commits()
    assert commits
    monkeypatch.setattr(dagbft.anchor, "mix64", lambda x: 0)
    res = replay(t)
    assert not res.ok
    assert isinstance(t.steps[res.step].event, Commit)
    assert res.step <= commits[0][0] or res.component != "state_digest"


def test_ft_run_has_no_failures():
    t = run_random(four(seed=0, max_events=200), check_every=1)
    assert t.ft_throughout
    assert t.failures == [] and t.expected == []
    assert t.checks == len(t.steps) + 1


def test_weights_can_forbid_advances():
    sc = four(seed=0, max_events=100, scheduler_weights=(("advance", 0.0), ("create", 1.0), ("accept", 1.0)))
    t = run_random(sc)
    assert not any(isinstance(e, Advance) for e in t.events)
    assert all(v.round == 1 for v in t.final_state.validators.values())


def test_max_round_caps_advances():
    t = run_random(four(seed=0, max_events=400, max_round=4))
    assert max(v.round for v in t.final_state.validators.values()) <= 4


def test_fork_attack_trace_and_minimization():
    sc = fork_attack_scenario()
    t = run_script(sc, check_every=1)
    assert not t.ft_throughout and t.failures == []
    found = {v.invariant for _, v in t.expected}
    assert {"dag-nonequivocation", "blockchain-nonforking"} <= found
    v = next(v for _, v in t.expected if v.invariant == "blockchain-nonforking")
    small, ok = minimize(t, v)
    assert ok and len(small.steps) <= len(t.steps)
    assert check_invariant("blockchain-nonforking", small.final_state, sc.params)
    assert replay(small).ok


def test_minimization_drops_padding():
    sc = fork_attack_scenario()
    base = list(sc.script)
    padded = base + [Advance("v1"), Advance("v2"), Advance("v1")]
    t = run_script(sc, padded)
    v = check_invariant("dag-nonequivocation", t.final_state, sc.params)[0]
    small, ok = minimize(t, v)
    assert ok and len(small.steps) < len(base)
    again, ok2 = minimize(small, v)
    assert ok2 and again.events == small.events


def test_minimization_of_unreproducible_violation():
    t = run_random(four(seed=0, max_events=30))
    fake = Violation("blockchain-nonforking", ("v1", "v2", 0))
    out, ok = minimize(t, fake)
    assert not ok and out is t


def test_explore_depth_zero_and_monotone():
    sc = exhaustive_scenario()
    r0 = explore(sc, 0)
    assert (r0.visited, r0.per_depth, r0.ok) == (1, [1], True)
    counts = [explore(sc, d).visited for d in range(5)]
    assert counts == sorted(counts)
    assert counts[:3] == [1, 5, 15]


def test_explore_budget_truncates():
    r = explore(exhaustive_scenario(), 6, budget=20)
    assert r.truncated and r.visited == 20


def test_explore_finds_equivocation_path():
    sc = equivocation_scenario()
    r = explore(sc.replace(lookback=1), 4, budget=50_000)
    hits = [(inv, exp, path) for inv, exp, path in r.violations if inv == "dag-nonequivocation"]
    assert hits
    inv, exp, path = hits[0]
    t = run_script(sc.replace(lookback=1), path)
    assert check_invariant(inv, t.final_state, sc.params)
