"""Certificate DAGs and the path, closure and newness queries over them."""
from __future__ import annotations

from typing import Iterable, Iterator, Optional

from .model import Address, Certificate, EndorsedPair, ValidatorState


class Dag:
    """An immutable set of certificates with derived lookup indexes.

    When nothing already present points at a new certificate, insertion
    leaves old paths alone and the child DAG inherits the causal-history memo.
    """

    __slots__ = ("certs", "_hash", "_by_round", "_by_key", "_history", "_digest")

    EMPTY: "Dag"

    def __init__(self, certs: Iterable[Certificate] = ()):
        self.certs = certs if isinstance(certs, frozenset) else frozenset(certs)
        self._hash = None
        self._by_round = None
        self._by_key = None
        self._history = {}
        self._digest = None

    def _index(self):
        by_round: dict = {}
        by_key: dict = {}
        for c in self.certs:
            by_round.setdefault(c.round, []).append(c)
            by_key.setdefault((c.author, c.round), []).append(c)
        self._by_round = by_round
        self._by_key = by_key

    def insert(self, c: Certificate) -> "Dag":
        if c in self.certs:
            return self
        new = Dag(self.certs | {c})
        if self._by_round is not None:
            by_round = dict(self._by_round)
            by_round[c.round] = by_round.get(c.round, []) + [c]
            by_key = dict(self._by_key)
            k = (c.author, c.round)
            by_key[k] = by_key.get(k, []) + [c]
            new._by_round = by_round
            new._by_key = by_key
        # a certificate that some existing one already points at (a dangling
        # reference, or an equivocating twin) changes old histories
        if not any(c.author in y.previous for y in self.at_round(c.round + 1)):
            new._history = dict(self._history)
        return new

    def __contains__(self, c) -> bool:
        return c in self.certs

    def __iter__(self) -> Iterator[Certificate]:
        return iter(self.certs)

    def __len__(self) -> int:
        return len(self.certs)

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, Dag):
            return self.certs == other.certs
        if isinstance(other, (set, frozenset)):
            return self.certs == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.certs)
        return self._hash

    def __repr__(self):
        return f"Dag({sorted((c.round, c.author) for c in self.certs)})"

    def at_round(self, r: int) -> list:
        if self._by_round is None:
            self._index()
        return self._by_round.get(r, [])

    def at(self, a: Address, r: int) -> list:
        if self._by_key is None:
            self._index()
        return self._by_key.get((a, r), [])

    def has(self, a: Address, r: int) -> bool:
        return bool(self.at(a, r))

    def rounds(self) -> list:
        if self._by_round is None:
            self._index()
        return sorted(self._by_round)


Dag.EMPTY = Dag()


def as_dag(dag) -> Dag:
    return dag if isinstance(dag, Dag) else Dag(dag)


def certs_with_round(r: int, dag) -> frozenset:
    return frozenset(as_dag(dag).at_round(r))


def cert_with_author_round(a: Address, r: int, dag) -> tuple:
    """The certificate with this author and round, or None.

    Returns ``(certificate, ambiguous)``; when several match, which only
    happens in equivocating states, the least in certificate order is chosen.
    """
    found = as_dag(dag).at(a, r)
    if not found:
        return None, False
    if len(found) == 1:
        return found[0], False
    return min(found, key=Certificate.sort_key), True


def is_edge(c: Certificate, c2: Certificate, dag) -> bool:
    dag = as_dag(dag)
    return (
        c in dag
        and c2 in dag
        and c.round == c2.round + 1
        and c2.author in c.previous
    )


def predecessors(c: Certificate, dag: Dag) -> list:
    """Certificates c2 with an edge from c to c2."""
    if c.round == 1:
        return []
    r = c.round - 1
    out = []
    for p in c.previous:
        out.extend(dag.at(p, r))
    return out


def causal_history(c: Certificate, dag) -> frozenset:
    dag = as_dag(dag)
    if c not in dag:
        raise ValueError(f"{c!r} is not in the dag")
    memo = dag._history
    hit = memo.get(c)
    if hit is not None:
        return hit
    # iterative post-order so deep DAGs do not hit the recursion limit
    stack = [c]
    while stack:
        top = stack[-1]
        if top in memo:
            stack.pop()
            continue
        preds = predecessors(top, dag)
        pending = [p for p in preds if p not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        acc = {top}
        for p in preds:
            acc |= memo[p]
        memo[top] = frozenset(acc)
    return memo[c]


def has_path(c: Certificate, c2: Certificate, dag) -> bool:
    dag = as_dag(dag)
    if c not in dag or c2 not in dag:
        return False
    if c2.round > c.round:
        return False
    return c2 in causal_history(c, dag)


def is_closed(prevs: Iterable[Address], r: int, dag) -> bool:
    dag = as_dag(dag)
    return all(dag.has(p, r) for p in prevs)


def is_new(a: Address, r: int, v: ValidatorState) -> bool:
    return not v.dag.has(a, r) and EndorsedPair(a, r) not in v.endorsed


def voters_for(c: Certificate, dag) -> frozenset:
    dag = as_dag(dag)
    if c not in dag:
        return frozenset()
    return frozenset(c2.author for c2 in dag.at_round(c.round + 1) if c.author in c2.previous)


def descendants_of(c: Certificate, dag: Dag) -> set:
    """Certificates with a path to c (including c), by forward search."""
    if c not in dag:
        return set()
    seen = {c}
    frontier = [c]
    while frontier:
        nxt = []
        for x in frontier:
            for y in dag.at_round(x.round + 1):
                if x.author in y.previous and y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def to_dot(dag, name: str = "dag") -> str:
    """Graphviz text: one same-rank group per round, edges to predecessors."""
    dag = as_dag(dag)
    order = sorted(dag, key=Certificate.sort_key)
    ids = {c: f"n{i}" for i, c in enumerate(order)}
    lines = [f"digraph {name} {{", "  rankdir=RL;"]
    for r in dag.rounds():
        members = " ".join(f"{ids[c]};" for c in order if c.round == r)
        lines.append(f"  subgraph round_{r} {{ rank=same; {members} }}")
    for c in order:
        lines.append(f'  {ids[c]} [label="{c.author}@{c.round}"];')
    for c in order:
        for c2 in sorted(predecessors(c, dag), key=Certificate.sort_key):
            lines.append(f"  {ids[c]} -> {ids[c2]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
