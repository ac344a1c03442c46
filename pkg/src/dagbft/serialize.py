"""Canonical JSON encoding of model values and 128-bit state digests.

Sets are written as sorted lists, so equal values always produce identical
text. Digests are Merkle-style: a DAG digest hashes its sorted certificate
digests, and both are cached on the (immutable) objects.
"""
from __future__ import annotations

import hashlib
import json

from .committee import Committee
from .dag import Dag
from .model import (
    Accept,
    Advance,
    Block,
    Bond,
    Certificate,
    Commit,
    Create,
    EndorsedPair,
    Message,
    Other,
    SystemState,
    Unbond,
    ValidatorState,
)


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def tx_to_json(x):
    if isinstance(x, Bond):
        return {"bond": x.validator, "stake": x.stake}
    if isinstance(x, Unbond):
        return {"unbond": x.validator}
    if isinstance(x, Other):
        return {"other": x.payload}
    raise TypeError(f"not a transaction: {x!r}")


def tx_from_json(d):
    if "bond" in d:
        return Bond(d["bond"], int(d["stake"]))
    if "unbond" in d:
        return Unbond(d["unbond"])
    if "other" in d:
        return Other(d["other"])
    raise ValueError(f"unknown transaction {d!r}")


def block_to_json(b: Block):
    return {"round": b.round, "transactions": [tx_to_json(x) for x in b.transactions]}


def block_from_json(d) -> Block:
    return Block(int(d["round"]), tuple(tx_from_json(x) for x in d["transactions"]))


def cert_to_json(c: Certificate):
    return {
        "author": c.author,
        "round": c.round,
        "transactions": [tx_to_json(x) for x in c.transactions],
        "previous": sorted(c.previous),
        "endorsers": sorted(c.endorsers),
    }


def cert_from_json(d) -> Certificate:
    return Certificate(
        d["author"],
        int(d["round"]),
        tuple(tx_from_json(x) for x in d["transactions"]),
        frozenset(d["previous"]),
        frozenset(d["endorsers"]),
    )


def canonical_text(c: Certificate) -> str:
    return dumps(cert_to_json(c))


def sorted_certs(certs):
    return sorted(certs, key=Certificate.sort_key)


def message_to_json(m: Message):
    return {"certificate": cert_to_json(m.certificate), "destination": m.destination}


def message_from_json(d) -> Message:
    return Message(cert_from_json(d["certificate"]), d["destination"])


def _message_order(m: Message):
    return (m.certificate.sort_key(), m.destination)


def validator_to_json(v: ValidatorState):
    return {
        "round": v.round,
        "dag": [cert_to_json(c) for c in sorted_certs(v.dag)],
        "endorsed": [[p.author, p.round] for p in sorted(v.endorsed)],
        "last": v.last,
        "blockchain": [block_to_json(b) for b in v.blockchain],
        "committed": [cert_to_json(c) for c in sorted_certs(v.committed)],
    }


def validator_from_json(d) -> ValidatorState:
    return ValidatorState(
        round=int(d["round"]),
        dag=Dag(cert_from_json(c) for c in d["dag"]),
        endorsed=frozenset(EndorsedPair(a, int(r)) for a, r in d["endorsed"]),
        last=int(d["last"]),
        blockchain=tuple(block_from_json(b) for b in d["blockchain"]),
        committed=frozenset(cert_from_json(c) for c in d["committed"]),
    )


def state_to_json(s: SystemState):
    return {
        "validators": {a: validator_to_json(v) for a, v in sorted(s.validators.items())},
        "network": [message_to_json(m) for m in sorted(s.network, key=_message_order)],
    }


def state_from_json(d) -> SystemState:
    return SystemState(
        {a: validator_from_json(v) for a, v in d["validators"].items()},
        frozenset(message_from_json(m) for m in d["network"]),
    )


def event_to_json(e):
    if isinstance(e, Create):
        return {"kind": "create", "certificate": cert_to_json(e.certificate)}
    if isinstance(e, Accept):
        return {"kind": "accept", "message": message_to_json(e.message)}
    if isinstance(e, Advance):
        return {"kind": "advance", "validator": e.validator}
    if isinstance(e, Commit):
        return {"kind": "commit", "validator": e.validator}
    raise TypeError(f"not an event: {e!r}")


def event_from_json(d):
    kind = d.get("kind")
    if kind == "create":
        return Create(cert_from_json(d["certificate"]))
    if kind == "accept":
        return Accept(message_from_json(d["message"]))
    if kind == "advance":
        return Advance(d["validator"])
    if kind == "commit":
        return Commit(d["validator"])
    raise ValueError(f"unknown event kind {kind!r}")


def committee_to_json(w: Committee):
    return {a: k for a, k in w.items()}


def committee_from_json(d) -> Committee:
    return Committee({a: int(k) for a, k in d.items()})


# digests

def _h(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=16).digest()


def cert_digest(c: Certificate) -> bytes:
    try:
        return c._digest
    except AttributeError:
        d = _h(canonical_text(c).encode())
        object.__setattr__(c, "_digest", d)
        return d


def dag_digest(dag: Dag) -> bytes:
    if dag._digest is None:
        dag._digest = _h(b"".join(sorted(cert_digest(c) for c in dag)))
    return dag._digest


def _cert_set_digest(certs) -> bytes:
    return _h(b"".join(sorted(cert_digest(c) for c in certs)))


def validator_digest(v: ValidatorState) -> bytes:
    try:
        return v._digest
    except AttributeError:
        head = dumps(
            {
                "round": v.round,
                "endorsed": [[p.author, p.round] for p in sorted(v.endorsed)],
                "last": v.last,
                "blockchain": [block_to_json(b) for b in v.blockchain],
            }
        ).encode()
        d = _h(head + dag_digest(v.dag) + _cert_set_digest(v.committed))
        object.__setattr__(v, "_digest", d)
        return d


def state_digest(s: SystemState) -> str:
    parts = [_h(a.encode() + b"\0" + validator_digest(v)) for a, v in sorted(s.validators.items())]
    net = sorted(_h(cert_digest(m.certificate) + m.destination.encode()) for m in s.network)
    return _h(b"".join(parts) + b"|" + b"".join(net)).hex()
