"""Virtual-clock discrete-event channel.

All times are virtual milliseconds. Nothing here sleeps or reads the wall
clock, so a simulation is a pure function of its inputs and seed.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional

from .errors import EmptyQueue


class VirtualClock:
    """A monotone time cursor. Endpoints and the KME pair each hold one."""

    def __init__(self, now: float = 0.0):
        self.now = float(now)

    def advance(self, ms: float) -> float:
        if ms < 0:
            raise ValueError("cannot advance by a negative amount")
        self.now += ms
        return self.now

    def sync(self, t: float) -> float:
        """Move forward to ``t`` if it lies ahead; never moves backwards."""
        if t > self.now:
            self.now = float(t)
        return self.now

    def __repr__(self) -> str:
        return f"VirtualClock(now={self.now})"


@dataclass(order=True)
class Event:
    time: float
    seq: int
    action: Optional[Callable[[], Any]] = field(default=None, compare=False)
    label: str = field(default="", compare=False)
    cancelled: bool = field(default=False, compare=False)

    def cancel(self) -> None:
        self.cancelled = True


class EventQueue:
    """Priority queue ordered by (time, insertion sequence)."""

    def __init__(self, start: float = 0.0):
        self.now = float(start)
        self._heap: List[Event] = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: float, action: Optional[Callable[[], Any]] = None, label: str = "") -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before now={self.now}")
        ev = Event(float(time), next(self._seq), action, label)
        heapq.heappush(self._heap, ev)
        return ev

    def advance(self) -> Event:
        if not self._heap:
            raise EmptyQueue("no pending events")
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def run(self, until: Optional[Callable[[], bool]] = None) -> None:
        """Pop and execute events until empty or ``until()`` turns true."""
        while self._heap:
            if until is not None and until():
                return
            ev = self.advance()
            if ev.cancelled or ev.action is None:
                continue
            ev.action()


@dataclass(frozen=True)
class NetworkProfile:
    one_way_delay: float = 0.0
    jitter: float = 0.0
    loss_probability: float = 0.0
    seed: int = 0
    label: str = "default"

    def __post_init__(self):
        if self.one_way_delay < 0:
            raise ValueError("one_way_delay must be >= 0")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")
        if not 0.0 <= self.loss_probability < 1.0:
            raise ValueError("loss_probability must lie in [0, 1)")

    def with_seed(self, seed: int) -> "NetworkProfile":
        return NetworkProfile(self.one_way_delay, self.jitter, self.loss_probability, seed, self.label)


class Channel:
    """Per-fragment delay/jitter/loss between the two IKE endpoints.

    Only tunnel traffic goes through a Channel; KME calls never do.
    Every fragment draws loss first, then jitter (when enabled), whatever
    the outcome, so the random stream stays aligned across runs.
    """

    def __init__(self, profile: NetworkProfile, queue: EventQueue):
        self.profile = profile
        self.queue = queue
        self._rng = random.Random(profile.seed)
        self.sent = 0
        self.dropped = 0

    def delivery_time(self, send_time: float) -> Optional[float]:
        p = self.profile
        lost = self._rng.random() < p.loss_probability
        offset = self._rng.uniform(-p.jitter, p.jitter) if p.jitter else 0.0
        self.sent += 1
        if lost:
            self.dropped += 1
            return None
        return send_time + max(0.0, p.one_way_delay + offset)

    def send(self, fragment: Any, send_time: float, deliver: Optional[Callable[[Any], Any]] = None) -> Optional[Event]:
        """Schedule delivery of one fragment; returns None when it is dropped."""
        at = self.delivery_time(send_time)
        if at is None:
            return None
        action = (lambda: deliver(fragment)) if deliver is not None else None
        return self.queue.schedule(at, action, label="fragment")
