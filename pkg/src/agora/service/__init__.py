"""HTTP service exposing the simulator: sessions, benchmarks, audits, vectors."""

from .app import create_app

__all__ = ["create_app"]
