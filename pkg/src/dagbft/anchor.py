"""Leader selection, anchors, elections, anchor collection and block generation."""
from __future__ import annotations

from typing import Iterable, Optional

from .committee import (
    Committee,
    ProtocolParams,
    active_committee_at,
    max_faulty_stake,
)
from .dag import as_dag, causal_history, has_path, voters_for
from .model import Block, Blockchain, Certificate, ValidatorState

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a fixed public 64-bit integer mixer."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def leader_at(w: Committee, r: int, params: Optional[ProtocolParams] = None) -> str:
    if len(w) == 0:
        raise ValueError("leader of an empty committee")
    if params is not None and params.leader_overrides:
        pinned = params.pinned_leader(r)
        if pinned is not None and pinned in w:
            return pinned
    members = sorted(w.members)
    return members[mix64(r) % len(members)]


def round_leader(r: int, chain: tuple, params: ProtocolParams) -> Optional[str]:
    w = active_committee_at(r, chain, params)
    if not w:
        return None
    return leader_at(w, r, params)


def is_anchor(c: Certificate, dag, chain: tuple, params: ProtocolParams) -> bool:
    if c not in as_dag(dag):
        return False
    return round_leader(c.round, chain, params) == c.author


def anchors_at(r: int, dag, chain: tuple, params: ProtocolParams) -> list:
    """All anchors at round r, least first (more than one only under equivocation)."""
    leader = round_leader(r, chain, params)
    if leader is None:
        return []
    return sorted(as_dag(dag).at(leader, r), key=Certificate.sort_key)


def is_elected(c: Certificate, dag, chain: tuple, params: ProtocolParams) -> bool:
    w = active_committee_at(c.round + 1, chain, params)
    if w is None:
        return False
    voters = voters_for(c, dag)
    if not w.members.issuperset(voters):
        return False
    return sum(w[a] for a in voters) > max_faulty_stake(w)


def previous_anchor(c: Certificate, dag, chain: tuple, params: ProtocolParams) -> Optional[Certificate]:
    dag = as_dag(dag)
    if not is_anchor(c, dag, chain, params):
        raise ValueError(f"{c!r} is not an anchor")
    for r in range(c.round - 2, 0, -2):
        for cand in anchors_at(r, dag, chain, params):
            if has_path(c, cand, dag):
                return cand
    return None


def collect_anchors(c: Certificate, cutoff: int, dag, chain: tuple, params: ProtocolParams) -> list:
    dag = as_dag(dag)
    seq = [c]
    cur = c
    while True:
        prev = previous_anchor(cur, dag, chain, params)
        if prev is None or prev.round <= cutoff:
            break
        seq.append(prev)
        cur = prev
    seq.reverse()
    return seq


def order_certs(certs: Iterable[Certificate]) -> list:
    return sorted(set(certs), key=Certificate.sort_key)


def collect_transactions(certs: Iterable[Certificate]) -> list:
    out = []
    for c in certs:
        out.extend(c.transactions)
    return out


def extend_blockchain(anchors, dag, chain: tuple, committed: frozenset) -> tuple:
    dag = as_dag(dag)
    blocks = list(chain)
    committed = frozenset(committed)
    for c in anchors:
        history = causal_history(c, dag)
        fresh = order_certs(history - committed)
        blocks.append(Block(c.round, tuple(collect_transactions(fresh))))
        committed = history
    return Blockchain(blocks), committed


def last_anchor_candidates(v: ValidatorState, params: ProtocolParams) -> list:
    if v.last == 0:
        return []
    return anchors_at(v.last, v.dag, v.blockchain, params)


def last_anchor(v: ValidatorState, params: ProtocolParams) -> Optional[Certificate]:
    found = last_anchor_candidates(v, params)
    return found[0] if found else None


def collect_all_anchors(v: ValidatorState, params: ProtocolParams) -> list:
    c = last_anchor(v, params)
    if c is None:
        return []
    return collect_anchors(c, 0, v.dag, v.blockchain, params)
