"""Ready-made scenarios: the scripted worked examples, the over-stake fork attack,
and the seeded family of fault-tolerant random scenarios."""
from __future__ import annotations

import random

from .committee import Committee, ProtocolParams
from .model import (
    Accept,
    Advance,
    Block,
    Blockchain,
    Bond,
    Certificate,
    Commit,
    Create,
    Message,
    Other,
    Unbond,
)
from .scenario import Scenario

FOUR = ("v1", "v2", "v3", "v4")


# committee schedule example

def committee_schedule_example():
    """Genesis G and a chain whose blocks at rounds 2, 4 and 10 install A, B and C.

    Returns ``(params, chain, {"G": G, "A": A, "B": B, "C": C})``.
    """
    G = Committee({"v1": 1, "v2": 1, "v3": 1, "v4": 1})
    A = Committee({"v1": 1, "v2": 1, "v3": 1, "v4": 1, "v5": 2})
    B = Committee({"v2": 1, "v3": 1, "v4": 1, "v5": 2})
    C = Committee({"v2": 3, "v3": 1, "v4": 1, "v5": 2, "v6": 1})
    chain = Blockchain(
        (
            Block(2, (Other("a"), Bond("v5", 2))),
            Block(4, (Unbond("v1"), Other("b"))),
            Block(10, (Bond("v2", 2), Bond("v6", 1))),
        )
    )
    return ProtocolParams(G, lookback=4), chain, {"G": G, "A": A, "B": B, "C": C}


# worked anchor example: which certificates exist, and what each references

ANCHOR_EXAMPLE_PRESENT = {
    1: (1, 3, 4),
    2: (1, 2, 3, 4),
    3: (1, 2, 3),
    4: (1, 2, 3, 4),
    5: (1, 2, 4),
    6: (1, 2, 3),
    7: (1, 2, 3),
    8: (1, 2, 3, 4),
    9: (1, 2, 3, 4),
    10: (2, 3, 4),
    11: (1, 3),
}

ANCHOR_EXAMPLE_PREVIOUS = {
    (2, 1): (1, 3, 4), (2, 2): (1, 3, 4), (2, 3): (1, 3, 4), (2, 4): (1, 3, 4),
    (3, 1): (1, 2, 4), (3, 2): (1, 2, 3), (3, 3): (2, 3, 4),
    (4, 1): (1, 2, 3), (4, 2): (1, 2, 3), (4, 3): (1, 2, 3), (4, 4): (1, 2, 3),
    (5, 1): (1, 2, 3), (5, 2): (1, 3, 4), (5, 4): (1, 3, 4),
    (6, 1): (1, 2, 4), (6, 2): (1, 2, 4), (6, 3): (1, 2, 4),
    (7, 1): (1, 2, 3), (7, 2): (1, 2, 3), (7, 3): (1, 2, 3),
    (8, 1): (1, 2, 3), (8, 2): (1, 2, 3), (8, 3): (1, 2, 3), (8, 4): (1, 2, 3),
    (9, 1): (1, 2, 3), (9, 2): (2, 3, 4), (9, 3): (2, 3, 4), (9, 4): (2, 3, 4),
    (10, 2): (2, 3, 4), (10, 3): (1, 2, 3), (10, 4): (2, 3, 4),
    (11, 1): (2, 3, 4), (11, 3): (2, 3, 4),
}

ANCHOR_EXAMPLE_LEADERS = {2: "v3", 4: "v2", 6: "v4", 8: "v1", 10: "v2"}

# validator rounds at which every validator commits in the scripted run
ANCHOR_EXAMPLE_COMMIT_ROUNDS = (3, 11)


def _v(i: int) -> str:
    return f"v{i}"


def anchor_example_certificate(r: int, i: int) -> Certificate:
    author = _v(i)
    prev = frozenset(_v(j) for j in ANCHOR_EXAMPLE_PREVIOUS.get((r, i), ()))
    others = [a for a in FOUR if a != author]
    return Certificate(author, r, (Other(f"{author}@{r}"),), prev, frozenset(others[:2]))


def anchor_example_events() -> list:
    """All four validators share one DAG: in each round the present authors
    create, everyone accepts everything, commits happen at rounds 3 and 11,
    then everyone advances."""
    events = []
    last_round = max(ANCHOR_EXAMPLE_PRESENT)
    for r in range(1, last_round + 1):
        certs = [anchor_example_certificate(r, i) for i in ANCHOR_EXAMPLE_PRESENT[r]]
        events += [Create(c) for c in certs]
        for c in certs:
            events += [Accept(Message(c, a)) for a in FOUR if a != c.author]
        if r in ANCHOR_EXAMPLE_COMMIT_ROUNDS:
            events += [Commit(a) for a in FOUR]
        if r != last_round:
            events += [Advance(a) for a in FOUR]
    return events


def anchor_example_scenario() -> Scenario:
    # a long lookback keeps every round's committee computable from the
    # committed prefix, even though rounds 6 and 8 are never committed
    return Scenario(
        correct_validators=FOUR,
        genesis_committee=Committee({a: 1 for a in FOUR}),
        lookback=16,
        max_events=len(anchor_example_events()),
        leader_overrides=tuple(sorted(ANCHOR_EXAMPLE_LEADERS.items())),
        script=tuple(anchor_example_events()),
        name="anchor-example",
    )


def committee_example_scenario() -> Scenario:
    """A scripted run on the schedule example's genesis: round-1 certificates only."""
    params, _, _ = committee_schedule_example()
    events = []
    for i, a in enumerate(FOUR):
        others = [b for b in FOUR if b != a]
        c = Certificate(a, 1, (Other(f"{a}@1"),), frozenset(), frozenset(others[:2]))
        events.append(Create(c))
        events += [Accept(Message(c, b)) for b in others]
    return Scenario(
        correct_validators=FOUR,
        genesis_committee=params.genesis,
        lookback=params.lookback,
        max_events=len(events),
        script=tuple(events),
        name="committee-example",
    )


# over-stake fork attack

FORK_GENESIS = {"v1": 1, "v2": 1, "f3": 4}


def fork_attack_events() -> list:
    """A faulty member holding more than a third of the stake splits v1 and v2.

    f3 signs two different round-1 certificates, one endorsed by each correct
    validator; each validator accepts only its own. Everything later is
    shared, so both commit the same round-2 anchor, but its causal histories
    differ and so do the resulting blocks.
    """
    x1 = Certificate("f3", 1, (Other("x"),), frozenset(), frozenset({"v1"}))
    x2 = Certificate("f3", 1, (Other("y"),), frozenset(), frozenset({"v2"}))
    d1 = Certificate("v1", 1, (Other("v1@1"),), frozenset(), frozenset({"f3"}))
    d2 = Certificate("v2", 1, (Other("v2@1"),), frozenset(), frozenset({"f3"}))
    everyone = frozenset({"v1", "v2", "f3"})
    e1 = Certificate("v1", 2, (Other("v1@2"),), everyone, frozenset({"f3"}))
    e2 = Certificate("v2", 2, (Other("v2@2"),), everyone, frozenset({"f3"}))
    e3 = Certificate("f3", 2, (Other("f3@2"),), everyone, frozenset({"v1"}))
    g3 = Certificate("f3", 3, (Other("f3@3"),), everyone, frozenset({"v1"}))
    g1 = Certificate("v1", 3, (Other("v1@3"),), everyone, frozenset({"f3"}))
    g2 = Certificate("v2", 3, (Other("v2@3"),), everyone, frozenset({"f3"}))
    ev = [
        Create(x1), Create(x2),
        Accept(Message(x1, "v1")), Accept(Message(x2, "v2")),
        Create(d1), Create(d2),
        Accept(Message(d1, "v2")), Accept(Message(d2, "v1")),
        Advance("v1"), Advance("v2"),
        Create(e1), Create(e2), Create(e3),
        Accept(Message(e1, "v2")), Accept(Message(e2, "v1")),
        Accept(Message(e3, "v1")), Accept(Message(e3, "v2")),
        Advance("v1"), Advance("v2"),
        Create(g3), Create(g1), Create(g2),
        Accept(Message(g3, "v1")), Accept(Message(g3, "v2")),
        Accept(Message(g1, "v2")), Accept(Message(g2, "v1")),
        Commit("v1"), Commit("v2"),
    ]
    return ev


def fork_attack_scenario(seed: int = 0) -> Scenario:
    events = fork_attack_events()
    return Scenario(
        correct_validators=("v1", "v2"),
        genesis_committee=Committee(FORK_GENESIS),
        lookback=4,
        max_events=len(events),
        adversary="equivocate",
        seed=seed,
        script=tuple(events),
        name="fork-attack",
    )


def equivocation_scenario(seed: int = 0, max_events: int = 60) -> Scenario:
    """Random runs on the over-stake genesis with the equivocating adversary."""
    return Scenario(
        correct_validators=("v1", "v2"),
        genesis_committee=Committee(FORK_GENESIS),
        lookback=4,
        max_events=max_events,
        scheduler_weights=(("create", 6.0), ("accept", 6.0), ("advance", 1.0), ("commit", 8.0)),
        adversary="equivocate",
        seed=seed,
        advance_readiness=0.9,
        name="equivocation",
    )


# fault-tolerant random family

def ft_random_scenario(seed: int, max_events: int = 300) -> Scenario:
    """3 or 4 correct validators, optional faulty stake within the tolerated
    bound, bonding and unbonding at a random rate, lookback 1, 2 or 4."""
    rng = random.Random(seed)
    n = rng.choice((3, 4))
    correct = tuple(f"v{i}" for i in range(1, n + 1))
    members = correct if n == 3 or rng.random() < 0.6 else correct[:-1]
    genesis = {a: rng.choice((1, 1, 1, 2, 3)) for a in members}
    adversary = "none"
    if rng.random() < 0.5:
        honest = sum(genesis.values())
        budget = (honest - 1) // 2  # faulty F <= (honest + F - 1) // 3
        if budget >= 1:
            genesis["f9"] = rng.randint(1, budget)
            adversary = rng.choice(("none", "equivocate", "under-quorum"))
    return Scenario(
        correct_validators=correct,
        genesis_committee=Committee(genesis),
        lookback=rng.choice((1, 2, 4)),
        max_events=max_events,
        adversary=adversary,
        seed=seed,
        bond_rate=rng.choice((0.0, 0.1, 0.3)),
        advance_readiness=rng.choice((0.95, 0.99, 1.0)),
        delivery_bias=rng.choice((0.0, 0.5)),
        name=f"ft-random-{seed}",
    )


def exhaustive_scenario(max_round: int = 1000) -> Scenario:
    """Two correct validators with stake 1 each, no adversary."""
    return Scenario(
        correct_validators=("v1", "v2"),
        genesis_committee=Committee({"v1": 1, "v2": 1}),
        lookback=4,
        max_events=1000,
        max_round=max_round,
        name="exhaustive-two",
    )


__all__ = [
    "ANCHOR_EXAMPLE_COMMIT_ROUNDS",
    "ANCHOR_EXAMPLE_LEADERS",
    "ANCHOR_EXAMPLE_PRESENT",
    "ANCHOR_EXAMPLE_PREVIOUS",
    "anchor_example_certificate",
    "anchor_example_events",
    "anchor_example_scenario",
    "committee_example_scenario",
    "committee_schedule_example",
    "equivocation_scenario",
    "exhaustive_scenario",
    "fork_attack_events",
    "fork_attack_scenario",
    "ft_random_scenario",
]
