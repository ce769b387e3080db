"""The simulated physical facility.

Instruments are capacity-limited resources with FIFO queues; the sample
repository lends samples like a library (one sample per composition,
checked out for measurement and returned); the data repository is the shared
table through which agents exchange measurements, posteriors, and
acquisition fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .domain import (
    CHECKED_OUT,
    IN_REPOSITORY,
    Composition,
    CompositionGrid,
    PropertyMeasurement,
    Sample,
)
from .engine import Resource, SimError, Simulation, Timeout
from .groundtruth import ChallengeSpec, gen_raman, observe_d33, true_phase

SYNTHESIS = "synthesis"
RAMAN = "raman"
D33 = "d33"
MEASUREMENT_KINDS = (RAMAN, D33)


class OutOfConsumables(RuntimeError):
    """Synthesis stock exhausted; campaign-visible."""


class LabError(SimError):
    """Protocol misuse: bad status, unknown sample, malformed key."""


@dataclass(frozen=True)
class InstrumentSpec:
    kind: str
    capacity: int = 1
    service_time: float = 1.0
    stock: int | None = None  # None = unlimited consumables

    def __post_init__(self):
        if self.kind not in (SYNTHESIS, RAMAN, D33):
            raise ValueError(f"unknown instrument kind {self.kind!r}")
        if self.capacity < 1 or self.service_time < 0:
            raise ValueError("capacity must be >= 1 and service_time >= 0")
        if self.stock is not None and self.stock < 0:
            raise ValueError("stock must be nonnegative")


class Instrument:
    """One physical instrument: a queued resource plus an RNG for observations."""

    def __init__(self, sim: Simulation, spec: InstrumentSpec, name: str, rng: np.random.Generator | None = None):
        self.spec = spec
        self.name = name
        self.resource = Resource(sim, spec.capacity, name=name)
        self.rng = rng
        self.stock = spec.stock


@dataclass
class RepositoryRow:
    agent_id: str
    iteration: int
    modality: str
    payload: Any
    written_at: float
    write_seq: int


class DataRepository:
    """Append/update table keyed by (agent_id, iteration, modality)."""

    MODALITIES = (RAMAN, D33, "posterior", "acquisition")

    def __init__(self, sim: Simulation):
        self._sim = sim
        self._rows: dict[tuple[str, int, str], RepositoryRow] = {}
        self._write_seq = 0

    def put(self, agent_id: str, iteration: int, modality: str, payload: Any):
        if not isinstance(agent_id, str) or not agent_id:
            raise LabError("agent_id must be a nonempty string")
        if not isinstance(iteration, int) or iteration < 0:
            raise LabError("iteration must be a nonnegative integer")
        if modality not in self.MODALITIES:
            raise LabError(f"unknown modality {modality!r}")
        self._write_seq += 1
        self._rows[(agent_id, iteration, modality)] = RepositoryRow(
            agent_id, iteration, modality, payload, self._sim.now, self._write_seq
        )

    def get(self, agent_id=None, iteration=None, modality=None, agent_ids=None) -> list[RepositoryRow]:
        """Rows matching every provided key field, sorted by (written_at, key)."""
        rows = [
            r
            for r in self._rows.values()
            if (agent_id is None or r.agent_id == agent_id)
            and (agent_ids is None or r.agent_id in agent_ids)
            and (iteration is None or r.iteration == iteration)
            and (modality is None or r.modality == modality)
        ]
        rows.sort(key=lambda r: (r.written_at, r.agent_id, r.iteration, r.modality))
        return rows

    def dump_rows(self) -> list[tuple[str, int, str, float, str]]:
        """(agent_id, iteration, modality, sim_time, payload_ref) rows for CSV."""
        out = []
        for r in self.get():
            out.append((r.agent_id, r.iteration, r.modality, r.written_at, payload_ref(r.payload)))
        return out


def payload_ref(payload: Any) -> str:
    """Short deterministic reference string for a repository payload."""
    name = type(payload).__name__
    ident = getattr(payload, "sample_id", None)
    if ident is not None:
        return f"{name}:sample={ident}"
    kind = getattr(payload, "kind", None)
    if kind is not None:
        return f"{name}:{kind}"
    return name


class SampleRepository:
    """Lending library of samples: one per composition, FIFO checkout queues."""

    def __init__(self, sim: Simulation, grid: CompositionGrid, transport_delay: float = 0.0):
        self._sim = sim
        self._grid = grid
        self.transport_delay = transport_delay
        self._samples: dict[int, Sample] = {}
        self._by_comp_idx: dict[int, int] = {}
        self._locks: dict[int, Resource] = {}
        self._next_id = 1

    def lookup(self, composition: Composition) -> int | None:
        return self._by_comp_idx.get(self._grid.index_of(composition))

    def register(self, composition: Composition, now: float) -> int:
        idx = self._grid.index_of(composition)
        if idx in self._by_comp_idx:
            raise LabError(f"sample already exists at composition {composition}")
        sample_id = self._next_id
        self._next_id += 1
        self._samples[sample_id] = Sample(sample_id, float(composition), IN_REPOSITORY, now)
        self._by_comp_idx[idx] = sample_id
        self._locks[sample_id] = Resource(self._sim, 1, name=f"sample:{sample_id}")
        return sample_id

    def sample(self, sample_id: int) -> Sample:
        try:
            return self._samples[sample_id]
        except KeyError:
            raise LabError(f"unknown sample id {sample_id}") from None

    def checkout(self, sample_id: int, agent_id: str):
        """Process generator: waits for the sample lock, then transport delay."""
        sample = self.sample(sample_id)
        token = yield self._locks[sample_id].request()
        if self.transport_delay > 0:
            yield Timeout(self.transport_delay)
        sample.status = CHECKED_OUT
        sample.checked_out_by = agent_id
        sample._lock_token = token
        return sample

    def return_sample(self, sample_id: int, agent_id: str):
        sample = self.sample(sample_id)
        if sample.status != CHECKED_OUT or sample.checked_out_by != agent_id:
            raise LabError(f"sample {sample_id} is not checked out by {agent_id!r}")
        sample.status = IN_REPOSITORY
        sample.checked_out_by = None
        token = sample._lock_token
        sample._lock_token = None
        self._locks[sample_id].release(token)

    @property
    def count(self) -> int:
        return len(self._samples)

    def compositions(self) -> list[float]:
        return sorted(s.composition for s in self._samples.values())


class Lab:
    """Plate-replicated instruments plus the two shared repositories."""

    def __init__(
        self,
        sim: Simulation,
        grid: CompositionGrid,
        challenge: ChallengeSpec,
        n_plates: int,
        instrument_specs: dict[str, InstrumentSpec],
        rng_for_instrument,
        transport_delay: float = 0.0,
    ):
        self.sim = sim
        self.grid = grid
        self.challenge = challenge
        self.samples = SampleRepository(sim, grid, transport_delay)
        self.data = DataRepository(sim)
        self.plates: list[dict[str, Instrument]] = []
        for p in range(n_plates):
            plate = {}
            for kind in (SYNTHESIS, RAMAN, D33):
                spec = instrument_specs[kind]
                rng = rng_for_instrument(kind, p) if kind in MEASUREMENT_KINDS else None
                plate[kind] = Instrument(sim, spec, name=f"{kind}_{p}", rng=rng)
            self.plates.append(plate)
        # one consumable pool for the whole facility, shared by the plate copies
        self.synthesis_stock = instrument_specs[SYNTHESIS].stock
        # composition index -> completion signal, for concurrent synthesis requests
        self._pending_synthesis: dict[int, Any] = {}

    def synthesize(self, composition: Composition, plate: int):
        """Process generator: returns the sample id, synthesizing only if needed."""
        existing = self.samples.lookup(composition)
        if existing is not None:
            return existing
        comp_idx = self.grid.index_of(composition)
        pending = self._pending_synthesis.get(comp_idx)
        if pending is not None:
            outcome = yield pending
            if isinstance(outcome, OutOfConsumables):
                raise outcome
            return outcome
        done = self.sim.signal()
        self._pending_synthesis[comp_idx] = done
        instrument = self.plates[plate][SYNTHESIS]
        token = yield instrument.resource.request()
        try:
            if self.synthesis_stock is not None:
                if self.synthesis_stock < 1:
                    raise OutOfConsumables("out of consumables")
                self.synthesis_stock -= 1
            yield Timeout(instrument.spec.service_time)
            sample_id = self.samples.register(composition, self.sim.now)
        except OutOfConsumables as exc:
            del self._pending_synthesis[comp_idx]
            done.trigger(exc)
            raise
        finally:
            instrument.resource.release(token)
        del self._pending_synthesis[comp_idx]
        done.trigger(sample_id)
        return sample_id

    def measure(self, sample: Sample, kind: str, plate: int, agent_id: str):
        """Process generator: one queued measurement of a checked-out sample."""
        if kind not in MEASUREMENT_KINDS:
            raise LabError(f"unknown measurement kind {kind!r}")
        if sample.status != CHECKED_OUT or sample.checked_out_by != agent_id:
            raise LabError(f"sample {sample.sample_id} must be checked out by {agent_id!r} to measure")
        instrument = self.plates[plate][kind]
        token = yield instrument.resource.request()
        yield Timeout(instrument.spec.service_time)
        instrument.resource.release(token)
        if kind == RAMAN:
            region = true_phase(sample.composition, self.challenge)
            return gen_raman(region, instrument.rng, self.challenge, sample.sample_id)
        value = observe_d33(sample.composition, self.challenge, instrument.rng)
        return PropertyMeasurement(sample.sample_id, value, self.sim.now)
