"""Scenario configuration: who is correct, the genesis committee, and scheduling knobs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace as _replace
from pathlib import Path
from typing import Optional

from .committee import Committee, ProtocolParams
from .model import ConfigurationError
from .serialize import committee_from_json, committee_to_json, event_from_json, event_to_json

DEFAULT_WEIGHTS = (("create", 4.0), ("accept", 8.0), ("advance", 1.0), ("commit", 8.0))
STRATEGIES = ("none", "equivocate", "under-quorum")


@dataclass(frozen=True)
class Scenario:
    correct_validators: tuple
    genesis_committee: Committee
    lookback: int = 4
    max_events: int = 300
    max_round: int = 1000
    scheduler_weights: tuple = DEFAULT_WEIGHTS
    adversary: str = "none"
    seed: int = 0
    bond_rate: float = 0.0
    advance_readiness: float = 0.0
    delivery_bias: float = 0.0
    leader_overrides: tuple = ()
    script: Optional[tuple] = None
    name: str = ""
    params: ProtocolParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        correct = tuple(sorted(set(self.correct_validators)))
        object.__setattr__(self, "correct_validators", correct)
        if not correct:
            raise ConfigurationError("correct_validators must not be empty")
        if not isinstance(self.genesis_committee, Committee):
            object.__setattr__(self, "genesis_committee", Committee(self.genesis_committee))
        weights = dict(self.scheduler_weights)
        unknown = set(weights) - {k for k, _ in DEFAULT_WEIGHTS}
        if unknown:
            raise ConfigurationError(f"unknown event kinds in scheduler_weights: {sorted(unknown)}")
        full = tuple((k, float(weights.get(k, 0.0))) for k, _ in DEFAULT_WEIGHTS)
        if any(w < 0 for _, w in full) or not any(w > 0 for _, w in full):
            raise ConfigurationError("scheduler weights must be non-negative and not all zero")
        object.__setattr__(self, "scheduler_weights", full)
        if self.adversary not in STRATEGIES:
            raise ConfigurationError(f"unknown adversary strategy {self.adversary!r}")
        if self.lookback < 1:
            raise ConfigurationError("lookback must be at least 1")
        if self.max_events < 0 or self.max_round < 1:
            raise ConfigurationError("max_events must be >= 0 and max_round >= 1")
        for knob in ("bond_rate", "advance_readiness", "delivery_bias"):
            if not 0.0 <= getattr(self, knob) <= 1.0:
                raise ConfigurationError(f"{knob} must lie in [0, 1]")
        if self.script is not None and not isinstance(self.script, tuple):
            object.__setattr__(self, "script", tuple(self.script))
        params = ProtocolParams(self.genesis_committee, self.lookback, self.leader_overrides)
        object.__setattr__(self, "leader_overrides", params.leader_overrides)
        object.__setattr__(self, "params", params)

    @property
    def faulty_validators(self) -> tuple:
        return tuple(a for a in self.genesis_committee if a not in self.correct_validators)

    @property
    def weights(self) -> dict:
        return dict(self.scheduler_weights)

    def with_seed(self, seed: int) -> "Scenario":
        return _replace(self, seed=seed)

    def replace(self, **changes) -> "Scenario":
        return _replace(self, **changes)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "correct_validators": list(self.correct_validators),
            "faulty_validators": list(self.faulty_validators),
            "genesis_committee": committee_to_json(self.genesis_committee),
            "lookback": self.lookback,
            "max_events": self.max_events,
            "max_round": self.max_round,
            "scheduler_weights": dict(self.scheduler_weights),
            "adversary": {"strategy": self.adversary},
            "seed": self.seed,
            "bond_rate": self.bond_rate,
            "advance_readiness": self.advance_readiness,
            "delivery_bias": self.delivery_bias,
            "leader_overrides": {str(r): a for r, a in self.leader_overrides},
        }
        if self.script is not None:
            out["script"] = [event_to_json(e) for e in self.script]
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigurationError("scenario must be a JSON object")
        try:
            adversary = d.get("adversary", "none")
            if isinstance(adversary, dict):
                adversary = adversary.get("strategy", "none")
            script = d.get("script")
            sc = cls(
                correct_validators=tuple(d["correct_validators"]),
                genesis_committee=committee_from_json(d["genesis_committee"]),
                lookback=int(d.get("lookback", 4)),
                max_events=int(d.get("max_events", 300)),
                max_round=int(d.get("max_round", 1000)),
                scheduler_weights=tuple(d.get("scheduler_weights", dict(DEFAULT_WEIGHTS)).items()),
                adversary=adversary,
                seed=int(d.get("seed", 0)),
                bond_rate=float(d.get("bond_rate", 0.0)),
                advance_readiness=float(d.get("advance_readiness", 0.0)),
                delivery_bias=float(d.get("delivery_bias", 0.0)),
                leader_overrides=tuple((int(r), a) for r, a in d.get("leader_overrides", {}).items()),
                script=None if script is None else tuple(event_from_json(e) for e in script),
                name=str(d.get("name", "")),
            )
        except ConfigurationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed scenario: {exc!r}") from exc
        declared = d.get("faulty_validators")
        if declared is not None and sorted(declared) != sorted(sc.faulty_validators):
            raise ConfigurationError(
                f"faulty_validators {sorted(declared)} do not match genesis members outside the correct set {list(sc.faulty_validators)}"
            )
        return sc


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{p}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return Scenario.from_json(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{p}: {exc}") from exc


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(sc.to_json(), indent=2) + "\n")
