"""Stake-weighted committees, their evolution through blocks, and the stake thresholds."""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import Address, Block, Blockchain, Bond, Transaction, Unbond, as_chain


class Committee(Mapping):
    """Immutable address -> stake map, iterated in address order."""

    __slots__ = ("_stakes", "_hash", "_total", "_members", "fstk", "qstk")

    def __init__(self, stakes=None):
        items = dict(stakes or {})
        for a, k in items.items():
            if not isinstance(k, int) or k < 1:
                raise ValueError(f"stake of {a!r} must be a positive integer, got {k!r}")
        self._stakes = {a: items[a] for a in sorted(items)}
        self._hash = hash(frozenset(self._stakes.items()))
        self._total = sum(self._stakes.values())
        self._members = frozenset(self._stakes)
        self.fstk = 0 if self._total == 0 else (self._total - 1) // 3
        self.qstk = self._total - self.fstk

    def __getitem__(self, a):
        return self._stakes[a]

    def __iter__(self):
        return iter(self._stakes)

    def __len__(self):
        return len(self._stakes)

    def __contains__(self, a):
        return a in self._stakes

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Committee):
            return self._hash == other._hash and self._stakes == other._stakes
        if isinstance(other, Mapping):
            return self._stakes == dict(other)
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{a}:{k}" for a, k in self._stakes.items())
        return f"Committee({{{inner}}})"

    @property
    def members(self) -> frozenset:
        return self._members

    @property
    def total(self) -> int:
        return self._total


EMPTY_COMMITTEE = Committee()


@dataclass(frozen=True, eq=False)
class ProtocolParams:
    """Genesis committee, lookback distance, and optional pinned leaders.

    ``leader_overrides`` maps rounds to addresses; a pinned address is used
    whenever it belongs to the committee active at that round.
    """

    genesis: Committee
    lookback: int = 4
    leader_overrides: tuple = ()

    def __post_init__(self):
        if not isinstance(self.genesis, Committee):
            object.__setattr__(self, "genesis", Committee(self.genesis))
        if self.lookback < 1:
            raise ValueError(f"lookback must be at least 1, got {self.lookback}")
        if isinstance(self.leader_overrides, Mapping):
            pairs = self.leader_overrides.items()
        else:
            pairs = self.leader_overrides
        object.__setattr__(
            self, "leader_overrides", tuple(sorted((int(r), a) for r, a in pairs))
        )

        object.__setattr__(self, "_hash", hash((self.genesis, self.lookback, self.leader_overrides)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, ProtocolParams):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.lookback == other.lookback
            and self.genesis == other.genesis
            and self.leader_overrides == other.leader_overrides
        )

    def pinned_leader(self, r: int) -> Optional[Address]:
        for rr, a in self.leader_overrides:
            if rr == r:
                return a
        return None


def last_block_round(chain) -> int:
    return chain[-1].round if chain else 0


def apply_transaction(w: Committee, x: Transaction) -> Committee:
    if isinstance(x, Bond):
        stakes = dict(w)
        stakes[x.validator] = stakes.get(x.validator, 0) + x.stake
        return Committee(stakes)
    if isinstance(x, Unbond):
        if x.validator not in w:
            return w
        stakes = dict(w)
        del stakes[x.validator]
        return Committee(stakes)
    return w


def _apply_transactions(w: Committee, txs: Iterable[Transaction]) -> Committee:
    stakes = None
    for x in txs:
        if isinstance(x, Bond):
            if stakes is None:
                stakes = dict(w)
            stakes[x.validator] = stakes.get(x.validator, 0) + x.stake
        elif isinstance(x, Unbond):
            if stakes is None:
                stakes = dict(w)
            stakes.pop(x.validator, None)
    return w if stakes is None else Committee(stakes)


def apply_blocks(w: Committee, blocks: Iterable[Block]) -> Committee:
    for b in blocks:
        w = _apply_transactions(w, b.transactions)
    return w


def _prefix_committees(chain: Blockchain, genesis: Committee) -> tuple:
    """Committee after each prefix of the chain: entry i covers the first i blocks."""
    memo = chain.memo(genesis)
    hit = memo.get("prefixes")
    if hit is None:
        out = [genesis]
        w = genesis
        for b in chain:
            w = _apply_transactions(w, b.transactions)
            out.append(w)
        hit = memo["prefixes"] = tuple(out)
    return hit


def bonded_committee_at(r: int, chain, params: ProtocolParams) -> Optional[Committee]:
    chain = as_chain(chain)
    if r > last_block_round(chain) + 2:
        return None
    n = 0
    for b in chain:
        if b.round >= r:
            break
        n += 1
    return _prefix_committees(chain, params.genesis)[n]


_UNDEFINED = object()


def active_committee_at(r: int, chain, params: ProtocolParams) -> Optional[Committee]:
    if r <= params.lookback:
        return params.genesis
    chain = as_chain(chain)
    memo = chain.memo(params)
    w = memo.get(r, _UNDEFINED)
    if w is _UNDEFINED:
        w = memo[r] = bonded_committee_at(r - params.lookback, chain, params)
    return w


def total_stake(w: Committee) -> int:
    return w.total


def max_faulty_stake(w) -> int:
    """Largest stake strictly below a third of the total; accepts a committee or a total."""
    if isinstance(w, Committee):
        return w.fstk
    n = int(w)
    return 0 if n == 0 else (n - 1) // 3


def quorum_stake(w) -> int:
    if isinstance(w, Committee):
        return w.qstk
    n = int(w)
    return n - max_faulty_stake(n)


class MembershipError(KeyError):
    pass


def members_stake(addrs: Iterable[Address], w: Committee) -> int:
    total = 0
    for a in addrs:
        if a not in w:
            raise MembershipError(a)
        total += w[a]
    return total


def _stake_if_members(addrs, w: Committee) -> Optional[int]:
    stakes = w._stakes
    total = 0
    for a in addrs:
        k = stakes.get(a)
        if k is None:
            return None
        total += k
    return total


def is_quorum(addrs, r: int, chain, params: ProtocolParams) -> bool:
    chain = as_chain(chain)
    memo = chain.memo(params)
    addrs = addrs if isinstance(addrs, frozenset) else frozenset(addrs)
    key = (addrs, r)
    hit = memo.get(key)
    if hit is None:
        w = active_committee_at(r, chain, params)
        if w is None:
            hit = False
        else:
            stake = _stake_if_members(addrs, w)
            hit = stake is not None and stake >= w.qstk
        memo[key] = hit
    return hit
