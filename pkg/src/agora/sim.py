"""Discrete-event scheduler on a virtual millisecond clock.

Processes are generators: the first ``t = yield`` receives the process
start time, and every subsequent ``t = yield resume_at`` suspends until
``resume_at`` (an absolute sim time) and receives the clock on resume.
No wall-clock sleeps anywhere; the scheduler is the only advancer of time,
and event order is deterministic (time, then spawn/resume sequence).
"""

from __future__ import annotations

import heapq
from typing import Generator

__all__ = ["Process", "Scheduler"]

Process = Generator[int, int, None]


class Scheduler:
    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Process]] = []
        self._seq = 0
        self.now_ms = 0

    def spawn(self, process: Process, at_ms: int) -> None:
        try:
            next(process)  # run to the first yield
        except StopIteration:
            return
        self._push(at_ms, process)

    def _push(self, t: int, process: Process) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, process))

    def run(self, until_ms: int | None = None) -> None:
        """Run events in order; stop after the last event at ``until_ms``."""
        while self._heap:
            t, _seq, process = heapq.heappop(self._heap)
            if until_ms is not None and t > until_ms:
                self._push(t, process)
                self.now_ms = until_ms
                return
            self.now_ms = max(self.now_ms, t)
            try:
                resume_at = process.send(t)
            except StopIteration:
                continue
            if resume_at < t:
                raise RuntimeError(f"process tried to travel back in time: {resume_at} < {t}")
            self._push(resume_at, process)
