import numpy as np
import pytest

from multitask.domain import CompositionGrid, PropertyMeasurement, RamanSpectrum
from multitask.engine import Simulation
from multitask.groundtruth import ChallengeSpec, raman_template, true_property
from multitask.lab import (
    D33,
    RAMAN,
    SYNTHESIS,
    DataRepository,
    InstrumentSpec,
    Lab,
    LabError,
    OutOfConsumables,
)
from multitask.seeding import rng_stream


def make_lab(sim, challenge=None, stock=None, capacity=1, transport_delay=0.0, n_plates=1):
    challenge = challenge or ChallengeSpec.for_challenge(2, d33_sd=0.0, raman_sd=0.0)
    specs = {
        SYNTHESIS: InstrumentSpec(SYNTHESIS, capacity, 1.0, stock),
        RAMAN: InstrumentSpec(RAMAN, capacity, 1.0),
        D33: InstrumentSpec(D33, capacity, 1.0),
    }
    return Lab(
        sim,
        CompositionGrid.default(),
        challenge,
        n_plates=n_plates,
        instrument_specs=specs,
        rng_for_instrument=lambda kind, plate: rng_stream(0, kind, plate),
        transport_delay=transport_delay,
    )


def run_proc(sim, gen, name="p"):
    result = {}

    def wrapper():
        result["value"] = yield from gen
        result["at"] = sim.now

    sim.start_process(wrapper(), name)
    sim.run_until_idle()
    return result


class TestSynthesize:
    def test_new_composition_takes_one_unit(self):
        sim = Simulation()
        lab = make_lab(sim)
        out = run_proc(sim, lab.synthesize(40.0, 0))
        assert out["at"] == 1.0
        assert lab.samples.sample(out["value"]).composition == 40.0

    def test_existing_composition_reused_instantly(self):
        sim = Simulation()
        lab = make_lab(sim)
        first = run_proc(sim, lab.synthesize(40.0, 0))
        second = run_proc(sim, lab.synthesize(40.0, 0))
        assert second["value"] == first["value"]
        assert second["at"] == sim.now  # no extra delay after the first build

    def test_fifo_serialization_on_capacity_one(self):
        sim = Simulation()
        lab = make_lab(sim)
        done = []

        def requester(comp):
            sid = yield from lab.synthesize(comp, 0)
            done.append((comp, sim.now, sid))

        sim.start_process(requester(10.0), "a")
        sim.start_process(requester(20.0), "b")
        sim.run_until_idle()
        assert [(c, t) for c, t, _ in done] == [(10.0, 1.0), (20.0, 2.0)]

    def test_concurrent_same_composition_builds_once(self):
        sim = Simulation()
        lab = make_lab(sim)
        got = []

        def requester():
            sid = yield from lab.synthesize(33.0, 0)
            got.append((sid, sim.now))

        sim.start_process(requester(), "a")
        sim.start_process(requester(), "b")
        sim.run_until_idle()
        assert got[0][0] == got[1][0]
        assert lab.samples.count == 1

    def test_stock_exhaustion(self):
        sim = Simulation()
        lab = make_lab(sim, stock=2)
        errors = []

        def requester(comp):
            try:
                yield from lab.synthesize(comp, 0)
            except OutOfConsumables as exc:
                errors.append(str(exc))

        for i, comp in enumerate((10.0, 20.0, 30.0, 40.0)):
            sim.start_process(requester(comp), f"p{i}")
        sim.run_until_idle()
        assert len(errors) == 2
        assert "out of consumables" in errors[0]
        assert lab.samples.count == 2  # at most stock distinct compositions


class TestCheckout:
    def test_roundtrip(self):
        sim = Simulation()
        lab = make_lab(sim)

        def flow():
            sid = yield from lab.synthesize(10.0, 0)
            sample = yield from lab.samples.checkout(sid, "A")
            assert sample.status == "checked-out"
            lab.samples.return_sample(sid, "A")
            assert lab.samples.sample(sid).status == "in-repository"
            return sid

        run_proc(sim, flow())

    def test_lending_blocks_second_agent(self):
        sim = Simulation()
        lab = make_lab(sim)
        events = []

        def first(sid):
            sample = yield from lab.samples.checkout(sid, "A")
            yield sim.timeout(2.0)
            lab.samples.return_sample(sid, "A")
            events.append(("A-returned", sim.now))

        def second(sid):
            yield from lab.samples.checkout(sid, "B")
            events.append(("B-got", sim.now))

        sid = lab.samples.register(10.0, 0.0)
        sim.start_process(first(sid), "A")
        sim.start_process(second(sid), "B")
        sim.run_until_idle()
        assert events == [("A-returned", 2.0), ("B-got", 2.0)]

    def test_transport_delay(self):
        sim = Simulation()
        lab = make_lab(sim, transport_delay=0.5)
        sid = lab.samples.register(10.0, 0.0)
        out = run_proc(sim, lab.samples.checkout(sid, "A"))
        assert out["at"] == 0.5

    def test_return_of_unchecked_sample_rejected(self):
        sim = Simulation()
        lab = make_lab(sim)
        sid = lab.samples.register(10.0, 0.0)
        with pytest.raises(LabError):
            lab.samples.return_sample(sid, "A")


class TestMeasure:
    def _checked_out(self, sim, lab, comp, agent="A"):
        holder = {}

        def flow():
            sid = yield from lab.synthesize(comp, 0)
            holder["sample"] = yield from lab.samples.checkout(sid, agent)

        sim.start_process(flow(), "setup")
        sim.run_until_idle()
        return holder["sample"]

    def test_d33_zero_noise_equals_truth(self, challenge2):
        sim = Simulation()
        spec = ChallengeSpec.for_challenge(2, d33_sd=0.0)
        lab = make_lab(sim, challenge=spec)
        sample = self._checked_out(sim, lab, 65.0)
        out = run_proc(sim, lab.measure(sample, D33, 0, "A"))
        assert isinstance(out["value"], PropertyMeasurement)
        assert out["value"].value == pytest.approx(true_property(65.0, spec))

    def test_raman_matches_region_template(self):
        sim = Simulation()
        spec = ChallengeSpec.for_challenge(2)  # default noise
        lab = make_lab(sim, challenge=spec)
        sample = self._checked_out(sim, lab, 10.0)
        out = run_proc(sim, lab.measure(sample, RAMAN, 0, "A"))
        spectrum = out["value"]
        assert isinstance(spectrum, RamanSpectrum)
        template = raman_template(0)
        cos = spectrum.intensities @ template / (
            np.linalg.norm(spectrum.intensities) * np.linalg.norm(template)
        )
        assert cos > 0.99

    def test_queued_measurements_serialize(self):
        sim = Simulation()
        lab = make_lab(sim)
        s1 = self._checked_out(sim, lab, 10.0, "A")
        s2 = self._checked_out(sim, lab, 20.0, "B")
        start = sim.now
        done = []

        def measurer(sample, agent):
            yield from lab.measure(sample, D33, 0, agent)
            done.append(sim.now)

        sim.start_process(measurer(s1, "A"), "A")
        sim.start_process(measurer(s2, "B"), "B")
        sim.run_until_idle()
        assert done == [start + 1.0, start + 2.0]

    def test_measuring_unchecked_sample_rejected(self):
        sim = Simulation()
        lab = make_lab(sim)
        sid = lab.samples.register(10.0, 0.0)
        sample = lab.samples.sample(sid)
        with pytest.raises(LabError):
            run_proc(sim, lab.measure(sample, D33, 0, "A"))


class TestDataRepository:
    def test_put_get_roundtrip(self):
        sim = Simulation()
        repo = DataRepository(sim)
        payload = PropertyMeasurement(1, 2.5, 0.0)
        repo.put("FP1", 3, D33, payload)
        rows = repo.get(agent_id="FP1", iteration=3, modality=D33)
        assert len(rows) == 1 and rows[0].payload is payload

    def test_agent_filter(self):
        sim = Simulation()
        repo = DataRepository(sim)
        repo.put("FP1", 1, D33, PropertyMeasurement(1, 1.0, 0.0))
        repo.put("FP2", 1, D33, PropertyMeasurement(2, 2.0, 0.0))
        assert {r.agent_id for r in repo.get(agent_id="FP1")} == {"FP1"}

    def test_modality_filter_spans_agents(self):
        sim = Simulation()
        repo = DataRepository(sim)
        repo.put("PM1", 1, "acquisition", "a1")
        repo.put("PM2", 1, "acquisition", "a2")
        repo.put("FP1", 1, D33, PropertyMeasurement(1, 1.0, 0.0))
        rows = repo.get(modality="acquisition")
        assert [r.payload for r in rows] == ["a1", "a2"]

    def test_overwrite_same_key(self):
        sim = Simulation()
        repo = DataRepository(sim)
        repo.put("PM1", 1, "posterior", "old")
        repo.put("PM1", 1, "posterior", "new")
        rows = repo.get(agent_id="PM1")
        assert len(rows) == 1 and rows[0].payload == "new"

    def test_malformed_keys_rejected(self):
        sim = Simulation()
        repo = DataRepository(sim)
        with pytest.raises(LabError):
            repo.put("", 0, D33, None)
        with pytest.raises(LabError):
            repo.put("FP1", -1, D33, None)
        with pytest.raises(LabError):
            repo.put("FP1", 0, "sonar", None)

    def test_one_sample_per_composition_bijection(self):
        sim = Simulation()
        lab = make_lab(sim)
        for comp in (10.0, 20.0, 10.0, 30.0, 20.0):
            run_proc(sim, lab.synthesize(comp, 0))
        assert lab.samples.count == 3
        comps = lab.samples.compositions()
        assert len(comps) == len(set(comps))
