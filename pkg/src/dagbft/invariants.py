"""Fault tolerance and the nineteen state invariants, as executable checkers.

Each checker returns every violation it finds. Checkers that only hold under
fault tolerance are listed in ``FT_ONLY``; ``check_all`` reports their
violations as expected when the execution is not known to be fault tolerant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

from .anchor import (
    collect_all_anchors,
    extend_blockchain,
    is_elected,
    last_anchor_candidates,
)
from .committee import (
    Committee,
    ProtocolParams,
    active_committee_at,
    is_quorum,
    last_block_round,
    max_faulty_stake,
)
from .dag import causal_history, descendants_of
from .model import Certificate, EndorsedPair, SystemState, ValidatorState

INVARIANTS = (
    "last-block-round",
    "ordered-block-rounds",
    "even-block-rounds",
    "backward-closure",
    "signer-quorum",
    "signer-records",
    "no-self-endorsement",
    "signed-nonequivocation",
    "dag-nonequivocation",
    "signed-previous-quorum",
    "dag-previous-quorum",
    "last-anchor-presence",
    "last-anchor-voters",
    "anchor-paths",
    "anchor-nonforking",
    "committed-redundancy",
    "blockchain-redundancy",
    "blockchain-nonforking",
    "committee-agreement",
)

FT_ONLY = frozenset(
    {
        "dag-nonequivocation",
        "dag-previous-quorum",
        "anchor-paths",
        "anchor-nonforking",
        "committed-redundancy",
        "blockchain-redundancy",
        "blockchain-nonforking",
        "committee-agreement",
    }
)


@dataclass(frozen=True)
class Violation:
    invariant: str
    witnesses: tuple
    detail: str = ""

    def to_json(self):
        return {
            "invariant": self.invariant,
            "witnesses": [_witness_json(w) for w in self.witnesses],
            "detail": self.detail,
        }


def _witness_json(w):
    if isinstance(w, Certificate):
        return f"{w.author}@{w.round}"
    if isinstance(w, tuple):
        return [_witness_json(x) for x in w]
    return w


# fault tolerance

def faulty_members(w: Committee, s: SystemState) -> frozenset:
    return w.members - s.correct


def _bft_window(v: ValidatorState, params: ProtocolParams) -> range:
    return range(1, last_block_round(v.blockchain) + 3 + params.lookback)


def is_fault_tolerant(s: SystemState, params: ProtocolParams) -> bool:
    correct = s.correct
    seen = set()
    for v in s.validators.values():
        for r in _bft_window(v, params):
            w = active_committee_at(r, v.blockchain, params)
            if w is None or w in seen:
                continue
            seen.add(w)
            bad = sum(k for a, k in w.items() if a not in correct)
            if bad > max_faulty_stake(w):
                return False
    return True


# auxiliary sets

def all_certs(s: SystemState) -> frozenset:
    out = set()
    for v in s.validators.values():
        out |= v.dag.certs
    for m in s.network:
        out.add(m.certificate)
    return frozenset(out)


def signed_certs(a: str, s: SystemState, certs: Optional[frozenset] = None) -> frozenset:
    certs = all_certs(s) if certs is None else certs
    return frozenset(c for c in certs if c.author == a or a in c.endorsers)


class _Context:
    def __init__(self, s: SystemState, params: ProtocolParams):
        self.s = s
        self.params = params
        self._all = None
        self._signed = None

    @property
    def all(self):
        if self._all is None:
            self._all = all_certs(self.s)
        return self._all

    def signed(self, a):
        if self._signed is None:
            idx = {q: [] for q in self.s.validators}
            for c in self.all:
                if c.author in idx:
                    idx[c.author].append(c)
                for e in c.endorsers:
                    if e in idx and e != c.author:
                        idx[e].append(c)
            self._signed = idx
        return self._signed[a]


def _cached(v: ValidatorState, params: ProtocolParams, name: str, fn):
    try:
        cache = v._checks
    except AttributeError:
        cache = {}
        object.__setattr__(v, "_checks", cache)
    key = (name, params)
    hit = cache.get(key)
    if hit is None:
        hit = tuple(fn(v, params))
        cache[key] = hit
    return hit


def _per_validator(name: str, fn):
    """Lift a check over one validator state to the whole system, with caching."""

    def check(ctx: _Context):
        out = []
        for a, v in ctx.s.validators.items():
            for witnesses, detail in _cached(v, ctx.params, name, fn):
                out.append(Violation(name, (a,) + witnesses, detail))
        return out

    return check


# per-validator predicates: yield (witnesses, detail)

def _last_block_round(v, params):
    if v.last != last_block_round(v.blockchain):
        yield (), f"last={v.last} but newest block round is {last_block_round(v.blockchain)}"


def _ordered_block_rounds(v, params):
    chain = v.blockchain
    for i in range(len(chain) - 1):
        if not chain[i].round < chain[i + 1].round:
            yield (i, i + 1), f"block rounds {chain[i].round} then {chain[i + 1].round}"


def _even_block_rounds(v, params):
    for i, b in enumerate(v.blockchain):
        if b.round % 2 != 0:
            yield (i,), f"block {i} has odd round {b.round}"


def _backward_closure(v, params):
    dag = v.dag
    for c in dag:
        for p in sorted(c.previous):
            if not dag.has(p, c.round - 1):
                yield (c, p), f"{c.author}@{c.round} references missing {p}@{c.round - 1}"


def _signer_quorum(v, params):
    for c in v.dag:
        if not is_quorum(c.signers, c.round, v.blockchain, params):
            yield (c,), f"signers of {c.author}@{c.round} are not a quorum"


def _previous_ok(c: Certificate, chain, params) -> bool:
    if c.round == 1:
        return not c.previous
    return bool(c.previous) and is_quorum(c.previous, c.round - 1, chain, params)


def _dag_previous_quorum(v, params):
    for c in v.dag:
        if not _previous_ok(c, v.blockchain, params):
            yield (c,), f"previous of {c.author}@{c.round} is not a valid quorum"


def _last_anchor_presence(v, params):
    if v.last != 0 and not last_anchor_candidates(v, params):
        yield (), f"no anchor at last committed round {v.last}"


def _last_anchor_voters(v, params):
    for c in last_anchor_candidates(v, params):
        if not is_elected(c, v.dag, v.blockchain, params):
            yield (c,), f"last anchor {c.author}@{c.round} is not elected"


def _committed_redundancy(v, params):
    cands = last_anchor_candidates(v, params)
    if not cands:
        if v.committed:
            yield (), "committed set is non-empty without a last anchor"
        return
    if not any(v.committed == causal_history(c, v.dag) for c in cands):
        yield (cands[0],), "committed set differs from the last anchor's causal history"


def _blockchain_redundancy(v, params):
    chain, _ = extend_blockchain(collect_all_anchors(v, params), v.dag, (), frozenset())
    if chain != v.blockchain:
        yield (), "blockchain differs from the one rebuilt from committed anchors"


# system-wide predicates

def _no_self(ctx):
    out = []
    for a, v in ctx.s.validators.items():
        for p in sorted(v.endorsed):
            if p.author == a:
                out.append(Violation("no-self-endorsement", (a, p.round), f"{a} endorsed itself at round {p.round}"))
    return out


def _signer_records(ctx):
    out = []
    for a, v in ctx.s.validators.items():
        for c in ctx.signed(a):
            if not v.dag.has(c.author, c.round) and EndorsedPair(c.author, c.round) not in v.endorsed:
                out.append(Violation("signer-records", (a, c), f"{a} has no record of {c.author}@{c.round}"))
    return out


def signer_records_strong_gaps(s: SystemState) -> int:
    """Pairs (a, c) with c signed by a where c itself is absent from a's DAG
    and its (author, round) is not endorsed: the strengthened record form."""
    ctx = _Context(s, None)
    n = 0
    for a, v in s.validators.items():
        for c in ctx.signed(a):
            if c not in v.dag and EndorsedPair(c.author, c.round) not in v.endorsed:
                n += 1
    return n


def _equivocations(certs):
    groups = {}
    for c in certs:
        groups.setdefault((c.author, c.round), []).append(c)
    return [sorted(g, key=Certificate.sort_key) for _, g in sorted(groups.items()) if len(g) > 1]


def _signed_nonequivocation(ctx):
    out = []
    for a in ctx.s.validators:
        for group in _equivocations(ctx.signed(a)):
            out.append(Violation("signed-nonequivocation", (a,) + tuple(group), f"{a} signed equivocating certificates"))
    return out


def _dag_nonequivocation(ctx):
    holders = {}
    for a, v in ctx.s.validators.items():
        for c in v.dag:
            holders.setdefault(c, []).append(a)
    out = []
    for group in _equivocations(holders):
        wit = tuple((c, tuple(sorted(holders[c]))) for c in group)
        out.append(Violation("dag-nonequivocation", wit, f"DAGs disagree on {group[0].author}@{group[0].round}"))
    return out


def _signed_previous_quorum(ctx):
    out = []
    for a, v in ctx.s.validators.items():
        for c in ctx.signed(a):
            if not _previous_ok(c, v.blockchain, ctx.params):
                out.append(Violation("signed-previous-quorum", (a, c), f"previous of {c.author}@{c.round} is not a valid quorum for {a}"))
    return out


def _anchor_paths(ctx):
    out = []
    vals = ctx.s.validators
    for a, v in vals.items():
        for c in last_anchor_candidates(v, ctx.params):
            for a2, v2 in vals.items():
                reach = None
                for r in v2.dag.rounds():
                    if r < c.round + 2:
                        continue
                    if reach is None:
                        reach = descendants_of(c, v2.dag)
                    for c2 in v2.dag.at_round(r):
                        if c2 not in reach:
                            out.append(Violation("anchor-paths", (a, a2, c, c2), f"{c2.author}@{c2.round} in {a2} has no path to {c.author}@{c.round}"))
    return out


def _is_prefix(xs, ys) -> bool:
    return len(xs) <= len(ys) and tuple(ys[: len(xs)]) == tuple(xs)


def _anchor_nonforking(ctx):
    seqs = {a: _cached(v, ctx.params, "_all_anchors", lambda v, p: collect_all_anchors(v, p)) for a, v in ctx.s.validators.items()}
    out = []
    for a1, a2 in combinations(sorted(seqs), 2):
        s1, s2 = seqs[a1], seqs[a2]
        if not (_is_prefix(s1, s2) or _is_prefix(s2, s1)):
            out.append(Violation("anchor-nonforking", (a1, a2), "committed anchor sequences fork"))
    return out


def _blockchain_nonforking(ctx):
    out = []
    vals = ctx.s.validators
    for a1, a2 in combinations(sorted(vals), 2):
        b1, b2 = vals[a1].blockchain, vals[a2].blockchain
        if not (_is_prefix(b1, b2) or _is_prefix(b2, b1)):
            i = next(i for i, (x, y) in enumerate(zip(b1, b2)) if x != y)
            out.append(Violation("blockchain-nonforking", (a1, a2, i), f"blockchains differ at block {i}"))
    return out


def _committee_agreement(ctx):
    vals = ctx.s.validators
    params = ctx.params
    out = []
    for a1, a2 in combinations(sorted(vals), 2):
        c1, c2 = vals[a1].blockchain, vals[a2].blockchain
        if c1 == c2:
            continue
        top = min(last_block_round(c1), last_block_round(c2)) + 3 + params.lookback
        for r in range(1, top):
            w1 = active_committee_at(r, c1, params)
            w2 = active_committee_at(r, c2, params)
            if w1 is not None and w2 is not None and w1 != w2:
                out.append(Violation("committee-agreement", (a1, a2, r), f"committees differ at round {r}"))
                break
    return out


CHECKERS: dict = {
    "last-block-round": _per_validator("last-block-round", _last_block_round),
    "ordered-block-rounds": _per_validator("ordered-block-rounds", _ordered_block_rounds),
    "even-block-rounds": _per_validator("even-block-rounds", _even_block_rounds),
    "backward-closure": _per_validator("backward-closure", _backward_closure),
    "signer-quorum": _per_validator("signer-quorum", _signer_quorum),
    "signer-records": _signer_records,
    "no-self-endorsement": _no_self,
    "signed-nonequivocation": _signed_nonequivocation,
    "dag-nonequivocation": _dag_nonequivocation,
    "signed-previous-quorum": _signed_previous_quorum,
    "dag-previous-quorum": _per_validator("dag-previous-quorum", _dag_previous_quorum),
    "last-anchor-presence": _per_validator("last-anchor-presence", _last_anchor_presence),
    "last-anchor-voters": _per_validator("last-anchor-voters", _last_anchor_voters),
    "anchor-paths": _anchor_paths,
    "anchor-nonforking": _anchor_nonforking,
    "committed-redundancy": _per_validator("committed-redundancy", _committed_redundancy),
    "blockchain-redundancy": _per_validator("blockchain-redundancy", _blockchain_redundancy),
    "blockchain-nonforking": _blockchain_nonforking,
    "committee-agreement": _committee_agreement,
}


def check_invariant(inv: str, s: SystemState, params: ProtocolParams, _ctx=None) -> list:
    if inv not in CHECKERS:
        raise KeyError(f"unknown invariant {inv!r}")
    return CHECKERS[inv](_ctx or _Context(s, params))


@dataclass
class Report:
    failures: list = field(default_factory=list)
    expected: list = field(default_factory=list)
    ft_known: bool = True

    @property
    def ok(self) -> bool:
        return not self.failures

    def violated(self) -> set:
        return {v.invariant for v in self.failures + self.expected}

    def status(self) -> dict:
        bad = {v.invariant for v in self.failures}
        tolerated = {v.invariant for v in self.expected}
        return {
            inv: ("fail" if inv in bad else "expected" if inv in tolerated else "hold")
            for inv in INVARIANTS
        }

    def to_json(self):
        return {
            "ok": self.ok,
            "ft_known": self.ft_known,
            "status": self.status(),
            "failures": [v.to_json() for v in self.failures],
            "expected": [v.to_json() for v in self.expected],
        }

    def summary(self) -> str:
        held = sum(1 for st in self.status().values() if st == "hold")
        return f"{held}/{len(INVARIANTS)} invariants hold"


def check_all(s: SystemState, params: ProtocolParams, ft_known: bool,
              only: Optional[Callable[[str], bool]] = None) -> Report:
    ctx = _Context(s, params)
    report = Report(ft_known=ft_known)
    for inv in INVARIANTS:
        if only is not None and not only(inv):
            continue
        found = CHECKERS[inv](ctx)
        if not found:
            continue
        if inv in FT_ONLY and not ft_known:
            report.expected.extend(found)
        else:
            report.failures.extend(found)
    return report
