"""Executable model of a DAG-based BFT consensus protocol with dynamic stake."""
from .committee import Committee, ProtocolParams
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
    initial_state,
)
from .dag import Dag

__all__ = [
    "Accept",
    "Advance",
    "Block",
    "Bond",
    "Certificate",
    "Commit",
    "Committee",
    "Create",
    "Dag",
    "EndorsedPair",
    "Message",
    "Other",
    "ProtocolParams",
    "SystemState",
    "Unbond",
    "ValidatorState",
    "initial_state",
]
