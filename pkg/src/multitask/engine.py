"""Deterministic discrete-event simulation kernel.

Virtual clock plus a binary-heap event queue ordered by (fire_at, insertion
seq), so simultaneous events fire in the order they were scheduled. Agent
behavior is written as generators that yield waitables (Timeout, Request,
Signal); the engine resumes a generator when its waitable is ready. The whole
simulation is single-threaded and bit-deterministic given its inputs.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque
from typing import Callable, Iterator


class SimError(Exception):
    """Misuse of the simulation kernel (bad delay, unheld token, ...)."""


class ProcessFailure(SimError):
    """A process raised; carries the failing process name."""

    def __init__(self, process_name: str, cause: BaseException):
        super().__init__(f"process {process_name!r} failed: {cause}")
        self.process_name = process_name
        self.cause = cause


class Timeout:
    """Waitable: resume the yielding process after a fixed delay."""

    __slots__ = ("delay",)

    def __init__(self, delay: float):
        if delay < 0:
            raise SimError(f"negative delay: {delay}")
        self.delay = delay


class Request:
    """Waitable: resume with a Token once the resource grants a slot."""

    __slots__ = ("resource",)

    def __init__(self, resource: "Resource"):
        self.resource = resource


class Signal:
    """One-shot waitable; trigger(value) resumes all waiters in FIFO order."""

    __slots__ = ("sim", "fired", "value", "_waiters")

    def __init__(self, sim: "Simulation"):
        self.sim = sim
        self.fired = False
        self.value = None
        self._waiters: deque = deque()

    def trigger(self, value=None):
        if self.fired:
            raise SimError("signal already triggered")
        self.fired = True
        self.value = value
        while self._waiters:
            proc = self._waiters.popleft()
            self.sim.schedule(lambda p=proc: self.sim._step(p, self.value), 0.0, kind=f"signal:{proc.name}")


class Token:
    """Proof of holding one capacity slot of a resource."""

    __slots__ = ("resource",)

    def __init__(self, resource: "Resource"):
        self.resource = resource


class Resource:
    """Capacity-limited resource with a FIFO queue of pending requests."""

    def __init__(self, sim: "Simulation", capacity: int = 1, name: str = "resource"):
        if capacity < 1:
            raise SimError(f"capacity must be positive, got {capacity}")
        self.sim = sim
        self.capacity = capacity
        self.name = name
        self.in_use = 0
        self.acquired_total = 0
        self.released_total = 0
        self._waiters: deque = deque()
        self._held: set[Token] = set()

    def request(self) -> Request:
        return Request(self)

    def release(self, token: Token):
        if not isinstance(token, Token) or token not in self._held:
            raise SimError(f"release of a token not held on {self.name!r}")
        self._held.discard(token)
        self.in_use -= 1
        self.released_total += 1
        self._grant_next()

    def _enqueue(self, process: "_Process"):
        self._waiters.append(process)
        self._grant_next()

    def _grant_next(self):
        while self.in_use < self.capacity and self._waiters:
            proc = self._waiters.popleft()
            self.in_use += 1
            self.acquired_total += 1
            token = Token(self)
            self._held.add(token)
            self.sim.schedule(lambda p=proc, t=token: self.sim._step(p, t), 0.0, kind=f"grant:{self.name}")


class _Process:
    __slots__ = ("gen", "name", "done")

    def __init__(self, gen: Iterator, name: str):
        self.gen = gen
        self.name = name
        self.done = False


class Simulation:
    """Event queue, virtual clock, and process runner."""

    def __init__(self, trace: bool = True):
        self.now = 0.0
        self._heap: list[tuple[float, int, str, Callable[[], None]]] = []
        self._seq = 0
        self.trace_enabled = trace
        self.trace_lines: list[str] = []

    def schedule(self, action: Callable[[], None], delay: float, kind: str = "event"):
        """Fire action at now+delay; equal-time events fire in insertion order."""
        if delay < 0:
            raise SimError(f"negative delay: {delay}")
        self._seq += 1
        heapq.heappush(self._heap, (self.now + delay, self._seq, kind, action))

    def timeout(self, delay: float) -> Timeout:
        return Timeout(delay)

    def signal(self) -> Signal:
        return Signal(self)

    def start_process(self, gen: Iterator, name: str) -> _Process:
        proc = _Process(gen, name)
        self.schedule(lambda: self._step(proc, None), 0.0, kind=f"start:{name}")
        return proc

    def _step(self, proc: _Process, value):
        try:
            waitable = proc.gen.send(value)
        except StopIteration:
            proc.done = True
            return
        except SimError:
            raise
        except Exception as exc:
            raise ProcessFailure(proc.name, exc) from exc
        if isinstance(waitable, Timeout):
            self.schedule(lambda: self._step(proc, None), waitable.delay, kind=f"timeout:{proc.name}")
        elif isinstance(waitable, Request):
            waitable.resource._enqueue(proc)
        elif isinstance(waitable, Signal):
            if waitable.fired:
                self.schedule(lambda: self._step(proc, waitable.value), 0.0, kind=f"signal:{proc.name}")
            else:
                waitable._waiters.append(proc)
        else:
            raise SimError(f"process {proc.name!r} yielded a non-waitable: {waitable!r}")

    def run_until_idle(self) -> float:
        """Process every pending event; returns the final clock value."""
        while self._heap:
            fire_at, seq, kind, action = heapq.heappop(self._heap)
            if fire_at < self.now:
                raise SimError(f"event {seq} scheduled into the past ({fire_at} < {self.now})")
            self.now = fire_at
            if self.trace_enabled:
                self.trace_lines.append(f"t={fire_at!r} seq={seq} kind={kind}")
            action()
        return self.now

    def trace_hash(self) -> str:
        digest = hashlib.sha256("\n".join(self.trace_lines).encode()).hexdigest()
        return digest
