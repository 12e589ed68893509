"""Layered agent-interoperability stack with a deterministic session simulator.

Layers, bottom to top: canonical JSON + hashing/signing primitives
(:mod:`agora.canon`, :mod:`agora.crypto`), signed asynchronous messaging
(:mod:`agora.envelope`), a simulated settlement ledger with escrow
(:mod:`agora.ledger`), capability discovery and request validation
(:mod:`agora.capability`), 402-style payment challenges and receipt
verification (:mod:`agora.settlement`), signed execution provenance
(:mod:`agora.provenance`), content-addressed delivery (:mod:`agora.store`),
the pay-per-request session engine (:mod:`agora.session`), and the
benchmark harness plus offline audit (:mod:`agora.bench`,
:mod:`agora.audit`).
"""

from .canon import canonical_str, canonicalize
from .crypto import AgentIdentity, derive_address, sha256, verify
from .session import Mode, SessionState, WorkloadKind, WorkloadSpec, World, run_session

__all__ = [
    "canonicalize",
    "canonical_str",
    "sha256",
    "derive_address",
    "verify",
    "AgentIdentity",
    "Mode",
    "SessionState",
    "WorkloadKind",
    "WorkloadSpec",
    "World",
    "run_session",
]

__version__ = "0.1.0"
