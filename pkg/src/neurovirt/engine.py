"""Deterministic discrete-event core.

One :class:`Engine` owns one simulation: an integer-nanosecond virtual
clock, a totally ordered event queue, and a family of seeded random
streams. Events with equal fire times are processed in insertion order,
so a run is a pure function of (seed, schedule calls).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SchedulingInPast(Exception):
    """An event was scheduled before the current virtual time."""


def round_half_up(value: float) -> int:
    """Tick-rounding convention used by every model formula."""
    return math.floor(value + 0.5)


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _stream_key(seed: int, stream_id: str) -> int:
    h = 0xCBF29CE484222325  # fnv-1a over the stream name
    for byte in stream_id.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return _mix64((seed * _GOLDEN) ^ h)


class RandomStreams:
    """Counter-based uniform streams: value = f(seed, stream id, call index).

    Streams are independent by construction, so consuming more values on
    one stream never perturbs another.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._keys: dict[str, int] = {}
        self._index: dict[str, int] = {}

    def next(self, stream_id: str) -> float:
        """Uniform value in [0, 1)."""
        key = self._keys.get(stream_id)
        if key is None:
            key = _stream_key(self.seed, stream_id)
            self._keys[stream_id] = key
            self._index[stream_id] = 0
        idx = self._index[stream_id]
        self._index[stream_id] = idx + 1
        return self.value_at(stream_id, idx)

    def value_at(self, stream_id: str, index: int) -> float:
        key = self._keys.get(stream_id)
        if key is None:
            key = _stream_key(self.seed, stream_id)
            self._keys[stream_id] = key
            self._index.setdefault(stream_id, 0)
        bits = _mix64(key + (index + 1) * _GOLDEN)
        return (bits >> 11) / float(1 << 53)

    def randint(self, stream_id: str, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + int(self.next(stream_id) * (hi - lo + 1))


@dataclass
class SimEvent:
    """A queued simulation event.

    ``(fire_at, seq)`` is unique per run and defines the total processing
    order. ``vm`` tags events that belong to one virtual machine so
    reconfiguration stalls can postpone exactly that machine's progress.
    """

    fire_at: int
    seq: int
    kind: str
    detail: str = ""
    fn: Callable[[], None] | None = None
    vm: str | None = None
    stallable: bool = True


class Engine:
    """Single-threaded event loop over integer-nanosecond virtual time."""

    def __init__(self, seed: int = 0):
        self._now = 0
        self._next_seq = 0
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._cancelled: set[int] = set()
        self._processed = 0
        self.rng = RandomStreams(seed)
        self.trace: list[str] = []

    def now(self) -> int:
        return self._now

    @property
    def processed_count(self) -> int:
        return self._processed

    def schedule(
        self,
        at: int,
        kind: str,
        fn: Callable[[], None] | None = None,
        detail: str = "",
        vm: str | None = None,
        stallable: bool = True,
    ) -> int:
        """Queue an event at absolute time ``at``; returns a stable event id."""
        if at < self._now:
            raise SchedulingInPast(f"schedule at {at} < now {self._now}")
        seq = self._next_seq
        self._next_seq = seq + 1
        event = SimEvent(at, seq, kind, detail, fn, vm, stallable)
        heapq.heappush(self._heap, (at, seq, event))
        return seq

    def schedule_in(self, delay: int, kind: str, **kwargs) -> int:
        return self.schedule(self._now + delay, kind, **kwargs)

    def cancel(self, event_id: int) -> None:
        self._cancelled.add(event_id)

    def run_until(self, t_end: int) -> int:
        """Process every event with fire_at <= t_end; clock ends at t_end."""
        processed = 0
        while self._heap and self._heap[0][0] <= t_end:
            fire_at, seq, event = heapq.heappop(self._heap)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            self._now = fire_at
            self.trace.append(f"{fire_at},{seq},{event.kind},{event.detail}")
            processed += 1
            self._processed += 1
            if event.fn is not None:
                event.fn()
        if t_end > self._now:
            self._now = t_end
        return processed

    def run(self) -> int:
        """Drain the queue completely; clock ends at the last fire time."""
        processed = 0
        while self._heap:
            fire_at, seq, event = heapq.heappop(self._heap)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            self._now = fire_at
            self.trace.append(f"{fire_at},{seq},{event.kind},{event.detail}")
            processed += 1
            self._processed += 1
            if event.fn is not None:
                event.fn()
        return processed

    def pending(self) -> list[SimEvent]:
        """Live queued events in processing order (diagnostic snapshot)."""
        live = [ev for t, s, ev in self._heap if s not in self._cancelled]
        return sorted(live, key=lambda ev: (ev.fire_at, ev.seq))

    def postpone_pending(
        self, delta: int, match: Callable[[SimEvent], bool] | None = None
    ) -> int:
        """Shift matching pending events ``delta`` ns into the future.

        Relative order among shifted events is preserved because they all
        move by the same amount and keep their sequence numbers. Used to
        model reconfiguration stalls.
        """
        if delta < 0:
            raise ValueError("delta must be non-negative")
        shifted = 0
        rebuilt: list[tuple[int, int, SimEvent]] = []
        for fire_at, seq, event in self._heap:
            if seq in self._cancelled:
                continue
            if match is None or match(event):
                event.fire_at = fire_at + delta
                shifted += 1
            rebuilt.append((event.fire_at, seq, event))
        self._cancelled.clear()
        heapq.heapify(rebuilt)
        self._heap = rebuilt
        return shifted

    def write_trace(self, fh) -> None:
        """Dump the processed-event log, one ``tick,seq,kind,detail`` line each."""
        for line in self.trace:
            fh.write(line + "\n")
