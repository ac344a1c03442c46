"""The transition relation: enabledness checks and successor states for each event kind.

Premises are evaluated in a fixed order so a disabled event always reports
the same failing premise.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .anchor import anchors_at, collect_anchors, extend_blockchain, is_elected
from .committee import ProtocolParams, is_quorum
from .dag import is_closed, is_new
from .model import (
    Accept,
    Advance,
    Certificate,
    Commit,
    Create,
    EndorsedPair,
    Message,
    SystemState,
    ValidatorState,
)


@dataclass(frozen=True)
class EnabledResult:
    enabled: bool
    premise: Optional[str] = None
    detail: str = ""

    def __bool__(self):
        return self.enabled


ENABLED = EnabledResult(True)


def _fail(premise: str, detail: str) -> EnabledResult:
    return EnabledResult(False, premise, detail)


class ContractViolation(RuntimeError):
    """A successor was requested for an event that is not enabled."""


class DisabledEventError(ContractViolation):
    def __init__(self, index: int, event, result: EnabledResult):
        super().__init__(f"event {index} ({event!r}) is disabled: {result.premise}: {result.detail}")
        self.index = index
        self.event = event
        self.result = result


# certificate creation

def _endorser_checks(c: Certificate, s: SystemState, params: ProtocolParams) -> EnabledResult:
    vals = s.validators
    for q in sorted(c.endorsers):
        vq = vals.get(q)
        if vq is None:
            continue
        if not is_new(c.author, c.round, vq):
            return _fail("endorser-new", f"{q} already has or endorsed {c.author}@{c.round}")
        if c.round != 1:
            if not is_closed(c.previous, c.round - 1, vq.dag):
                return _fail("endorser-closure", f"{q} lacks some previous certificate of round {c.round - 1}")
            if not is_quorum(c.previous, c.round - 1, vq.blockchain, params):
                return _fail("endorser-previous-quorum", f"previous authors are not a quorum for {q}")
    return ENABLED


def create_possible(c: Certificate, s: SystemState, params: ProtocolParams) -> EnabledResult:
    v = s.validators.get(c.author)
    if v is None:
        if any(q in s.validators for q in c.endorsers):
            if (c.round == 1) != (not c.previous):
                return _fail("round-one-iff-no-previous", "previous set must be empty exactly at round 1")
        return _endorser_checks(c, s, params)
    if v.round != c.round:
        return _fail("round-match", f"{c.author} is at round {v.round}, certificate is for round {c.round}")
    if (c.round == 1) != (not c.previous):
        return _fail("round-one-iff-no-previous", "previous set must be empty exactly at round 1")
    if v.dag.has(c.author, c.round):
        return _fail("author-new", f"{c.author} already has a certificate at round {c.round}")
    if c.round != 1:
        if not is_closed(c.previous, c.round - 1, v.dag):
            return _fail("author-closure", f"{c.author} lacks some previous certificate of round {c.round - 1}")
        if not is_quorum(c.previous, c.round - 1, v.blockchain, params):
            return _fail("author-previous-quorum", "previous authors are not a quorum")
    if c.author in c.endorsers:
        return _fail("no-self-endorsement", f"{c.author} endorses its own certificate")
    if not is_quorum(c.signers, c.round, v.blockchain, params):
        return _fail("signer-quorum", f"signers of {c.author}@{c.round} are not a quorum")
    return _endorser_checks(c, s, params)


def _endorse(c: Certificate, vals: dict) -> None:
    pair = EndorsedPair(c.author, c.round)
    for q in c.endorsers:
        vq = vals.get(q)
        if vq is not None:
            vals[q] = replace(vq, endorsed=vq.endorsed | {pair})


def create_next(c: Certificate, s: SystemState, params: ProtocolParams, check: bool = True) -> SystemState:
    if check:
        _require(create_possible(c, s, params), Create(c))
    vals = dict(s.validators)
    v = vals.get(c.author)
    if v is not None:
        vals[c.author] = replace(v, dag=v.dag.insert(c))
    _endorse(c, vals)
    msgs = frozenset(Message(c, a) for a in s.validators if a != c.author)
    return SystemState(vals, s.network | msgs)


# certificate acceptance

def accept_possible(m: Message, s: SystemState, params: ProtocolParams) -> EnabledResult:
    if m not in s.network:
        return _fail("in-network", "message is not in the network")
    v = s.validators.get(m.destination)
    if v is None:
        return _fail("destination-correct", f"{m.destination} is not a correct validator")
    c = m.certificate
    if c.round != 1 and not is_closed(c.previous, c.round - 1, v.dag):
        return _fail("closure", f"{m.destination} lacks some previous certificate of round {c.round - 1}")
    if c.author in c.endorsers:
        return _fail("no-self-endorsement", f"{c.author} endorses its own certificate")
    if not is_quorum(c.signers, c.round, v.blockchain, params):
        return _fail("signer-quorum", f"signers of {c.author}@{c.round} are not a quorum for {m.destination}")
    return ENABLED


def accept_next(m: Message, s: SystemState, params: ProtocolParams, check: bool = True) -> SystemState:
    if check:
        _require(accept_possible(m, s, params), Accept(m))
    v = s.validators[m.destination]
    c = m.certificate
    v2 = replace(
        v,
        dag=v.dag.insert(c),
        endorsed=v.endorsed - {EndorsedPair(c.author, c.round)},
    )
    return s.replace_validator(m.destination, v2, s.network - {m})


# round advancement

def advance_possible(a: str, s: SystemState) -> EnabledResult:
    if a not in s.validators:
        return _fail("correct-validator", f"{a} is not a correct validator")
    return ENABLED


def advance_next(a: str, s: SystemState, check: bool = True) -> SystemState:
    if check:
        _require(advance_possible(a, s), Advance(a))
    v = s.validators[a]
    return s.replace_validator(a, replace(v, round=v.round + 1))


# anchor commitment

def commit_anchor(v: ValidatorState, params: ProtocolParams) -> tuple:
    """The anchor a commit by this validator would use, or (None, failure)."""
    if v.round % 2 == 0 or v.round == 1:
        return None, _fail("odd-round", f"round {v.round} is not odd and greater than 1")
    r = v.round - 1
    if v.last >= r:
        return None, _fail("not-committed", f"last committed round {v.last} is not below {r}")
    candidates = anchors_at(r, v.dag, v.blockchain, params)
    if not candidates:
        return None, _fail("anchor", f"no anchor at round {r}")
    for c in candidates:
        if is_elected(c, v.dag, v.blockchain, params):
            return c, ENABLED
    return None, _fail("election", f"anchor {candidates[0].author}@{r} lacks enough votes")


def commit_possible(a: str, s: SystemState, params: ProtocolParams) -> EnabledResult:
    v = s.validators.get(a)
    if v is None:
        return _fail("correct-validator", f"{a} is not a correct validator")
    return commit_anchor(v, params)[1]


def commit_next(a: str, s: SystemState, params: ProtocolParams, check: bool = True) -> SystemState:
    v = s.validators.get(a)
    anchor = None
    if v is not None:
        anchor, res = commit_anchor(v, params)
    else:
        res = commit_possible(a, s, params)
    _require(res, Commit(a))
    anchors = collect_anchors(anchor, v.last, v.dag, v.blockchain, params)
    chain, committed = extend_blockchain(anchors, v.dag, v.blockchain, v.committed)
    v2 = replace(v, last=anchor.round, blockchain=chain, committed=committed)
    return s.replace_validator(a, v2)


def committed_anchors(a: str, s: SystemState, params: ProtocolParams) -> list:
    """The anchor sequence a commit by ``a`` would append, without applying it."""
    v = s.validators[a]
    anchor, res = commit_anchor(v, params)
    if anchor is None:
        return []
    return collect_anchors(anchor, v.last, v.dag, v.blockchain, params)


# dispatch

def event_possible(e, s: SystemState, params: ProtocolParams) -> EnabledResult:
    if isinstance(e, Create):
        return create_possible(e.certificate, s, params)
    if isinstance(e, Accept):
        return accept_possible(e.message, s, params)
    if isinstance(e, Advance):
        return advance_possible(e.validator, s)
    if isinstance(e, Commit):
        return commit_possible(e.validator, s, params)
    raise TypeError(f"not an event: {e!r}")


def event_next(e, s: SystemState, params: ProtocolParams, check: bool = True) -> SystemState:
    if isinstance(e, Create):
        return create_next(e.certificate, s, params, check)
    if isinstance(e, Accept):
        return accept_next(e.message, s, params, check)
    if isinstance(e, Advance):
        return advance_next(e.validator, s, check)
    if isinstance(e, Commit):
        return commit_next(e.validator, s, params, check)
    raise TypeError(f"not an event: {e!r}")


def run_events(s0: SystemState, events: Sequence, params: ProtocolParams) -> list:
    """All states s0..sn; raises DisabledEventError at the first disabled event."""
    states = [s0]
    s = s0
    for i, e in enumerate(events):
        res = event_possible(e, s, params)
        if not res:
            raise DisabledEventError(i, e, res)
        s = event_next(e, s, params, check=False)
        states.append(s)
    return states


def _require(res: EnabledResult, event) -> None:
    if not res:
        raise ContractViolation(f"{event!r} is not enabled: {res.premise}: {res.detail}")
