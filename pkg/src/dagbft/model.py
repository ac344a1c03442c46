"""Domain values: transactions, blocks, certificates, validator and system states, events.

Every value is immutable. Certificates, blocks and messages cache their hash
because they are hashed constantly while sets and DAG indexes are rebuilt.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Union

Address = str


def compare_addresses(a: Address, b: Address) -> int:
    """Three-way lexicographic comparison: -1, 0 or 1."""
    return (a > b) - (a < b)


@dataclass(frozen=True)
class Bond:
    validator: Address
    stake: int

    def __post_init__(self):
        if self.stake < 1:
            raise ValueError(f"bond stake must be positive, got {self.stake}")


@dataclass(frozen=True)
class Unbond:
    validator: Address


@dataclass(frozen=True)
class Other:
    payload: str


Transaction = Union[Bond, Unbond, Other]


def _frozen_hash(obj, parts) -> None:
    object.__setattr__(obj, "_hash", hash(parts))


@dataclass(frozen=True, eq=False)
class Block:
    round: int
    transactions: tuple = ()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.transactions, tuple):
            object.__setattr__(self, "transactions", tuple(self.transactions))
        _frozen_hash(self, (self.round, self.transactions))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Block):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.round == other.round
            and self.transactions == other.transactions
        )


class Blockchain(tuple):
    """Blocks, oldest first. Carries a memo of committee lookups per params."""

    def memo(self, params) -> dict:
        try:
            table = self._memo
        except AttributeError:
            table = self._memo = {}
        m = table.get(params)
        if m is None:
            m = table[params] = {}
        return m


EMPTY_CHAIN = Blockchain()


def as_chain(blocks) -> Blockchain:
    return blocks if type(blocks) is Blockchain else Blockchain(blocks)


@dataclass(frozen=True, eq=False)
class Certificate:
    author: Address
    round: int
    transactions: tuple = ()
    previous: frozenset = frozenset()
    endorsers: frozenset = frozenset()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.round < 1:
            raise ValueError(f"certificate round must be positive, got {self.round}")
        if not isinstance(self.transactions, tuple):
            object.__setattr__(self, "transactions", tuple(self.transactions))
        if not isinstance(self.previous, frozenset):
            object.__setattr__(self, "previous", frozenset(self.previous))
        if not isinstance(self.endorsers, frozenset):
            object.__setattr__(self, "endorsers", frozenset(self.endorsers))
        _frozen_hash(
            self,
            (self.author, self.round, self.transactions, self.previous, self.endorsers),
        )

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Certificate):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.author == other.author
            and self.round == other.round
            and self.transactions == other.transactions
            and self.previous == other.previous
            and self.endorsers == other.endorsers
        )

    @property
    def signers(self) -> frozenset:
        return self.endorsers | {self.author}

    @property
    def key(self) -> "EndorsedPair":
        return EndorsedPair(self.author, self.round)

    def sort_key(self):
        """Total order: round, then author, then the remaining fields."""
        try:
            return self._sort_key
        except AttributeError:
            from .serialize import canonical_text

            k = (self.round, self.author, canonical_text(self))
            object.__setattr__(self, "_sort_key", k)
            return k

    def __repr__(self):
        return f"cert({self.author}@{self.round})"


class EndorsedPair(NamedTuple):
    author: Address
    round: int


@dataclass(frozen=True, eq=False)
class Message:
    certificate: Certificate
    destination: Address
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _frozen_hash(self, (self.certificate._hash, self.destination))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Message):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.destination == other.destination
            and self.certificate == other.certificate
        )

    def __repr__(self):
        return f"msg({self.certificate!r} -> {self.destination})"


@dataclass(frozen=True)
class ValidatorState:
    round: int = 1
    dag: "Dag" = None  # type: ignore[assignment]
    endorsed: frozenset = frozenset()
    last: int = 0
    blockchain: Blockchain = EMPTY_CHAIN
    committed: frozenset = frozenset()

    def __post_init__(self):
        if type(self.blockchain) is not Blockchain:
            object.__setattr__(self, "blockchain", Blockchain(self.blockchain))
        if self.dag is None:
            from .dag import Dag

            object.__setattr__(self, "dag", Dag.EMPTY)


@dataclass(frozen=True)
class SystemState:
    validators: Mapping[Address, ValidatorState]
    network: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.validators, MappingProxyType):
            ordered = {a: self.validators[a] for a in sorted(self.validators)}
            object.__setattr__(self, "validators", MappingProxyType(ordered))

    __hash__ = None  # type: ignore[assignment]

    def __reduce__(self):
        # mapping proxies do not pickle; worker processes need states
        return (SystemState, (dict(self.validators), self.network))

    def __eq__(self, other):
        if not isinstance(other, SystemState):
            return NotImplemented
        return dict(self.validators) == dict(other.validators) and self.network == other.network

    @property
    def correct(self) -> frozenset:
        try:
            return self._correct
        except AttributeError:
            c = frozenset(self.validators)
            object.__setattr__(self, "_correct", c)
            return c

    def replace_validator(self, a: Address, v: ValidatorState, network=None) -> "SystemState":
        vals = dict(self.validators)
        vals[a] = v
        s = SystemState(MappingProxyType(vals), self.network if network is None else network)
        object.__setattr__(s, "_correct", self.correct)
        return s

    def with_network(self, network: frozenset) -> "SystemState":
        s = SystemState(self.validators, network)
        object.__setattr__(s, "_correct", self.correct)
        return s


class ConfigurationError(ValueError):
    pass


def initial_state(correct: Iterable[Address]) -> SystemState:
    addrs = sorted(set(correct))
    if not addrs:
        raise ConfigurationError("at least one correct validator is required")
    for a in addrs:
        if not isinstance(a, str) or not a:
            raise ConfigurationError(f"invalid address {a!r}")
    fresh = ValidatorState()
    return SystemState({a: fresh for a in addrs})


@dataclass(frozen=True)
class Create:
    certificate: Certificate
    kind = "create"


@dataclass(frozen=True)
class Accept:
    message: Message
    kind = "accept"


@dataclass(frozen=True)
class Advance:
    validator: Address
    kind = "advance"


@dataclass(frozen=True)
class Commit:
    validator: Address
    kind = "commit"


Event = Union[Create, Accept, Advance, Commit]
EVENT_KINDS = ("create", "accept", "advance", "commit")
