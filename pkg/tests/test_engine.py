import pytest

from multitask.engine import ProcessFailure, Resource, SimError, Simulation, Timeout


def test_same_time_fires_in_insertion_order():
    sim = Simulation()
    order = []
    sim.schedule(lambda: order.append("A"), 0.0)
    sim.schedule(lambda: order.append("B"), 0.0)
    sim.run_until_idle()
    assert order == ["A", "B"]


def test_delay_fires_at_absolute_time():
    sim = Simulation()
    seen = []
    sim.schedule(lambda: seen.append(sim.now), 2.0)
    assert sim.run_until_idle() == 2.0
    assert seen == [2.0]


def test_time_ordering_beats_insertion_ordering():
    sim = Simulation()
    order = []
    sim.schedule(lambda: order.append("A"), 1.0)
    sim.schedule(lambda: order.append("B"), 0.5)
    sim.run_until_idle()
    assert order == ["B", "A"]


def test_negative_delay_rejected():
    sim = Simulation()
    with pytest.raises(SimError):
        sim.schedule(lambda: None, -1.0)
    with pytest.raises(SimError):
        Timeout(-0.5)


def test_empty_queue_returns_zero():
    assert Simulation().run_until_idle() == 0.0


def test_single_event_returns_its_time():
    sim = Simulation()
    sim.schedule(lambda: None, 5.0)
    assert sim.run_until_idle() == 5.0


def _holder(sim, resource, hold, completions, name):
    token = yield resource.request()
    yield Timeout(hold)
    resource.release(token)
    completions.append((name, sim.now))


def test_capacity_one_serializes():
    sim = Simulation()
    res = Resource(sim, capacity=1)
    done = []
    sim.start_process(_holder(sim, res, 1.0, done, "a"), "a")
    sim.start_process(_holder(sim, res, 1.0, done, "b"), "b")
    sim.run_until_idle()
    assert done == [("a", 1.0), ("b", 2.0)]


def test_capacity_two_runs_in_parallel():
    sim = Simulation()
    res = Resource(sim, capacity=2)
    done = []
    sim.start_process(_holder(sim, res, 1.0, done, "a"), "a")
    sim.start_process(_holder(sim, res, 1.0, done, "b"), "b")
    sim.run_until_idle()
    assert [t for _, t in done] == [1.0, 1.0]


def test_fifo_order_among_three_waiters():
    sim = Simulation()
    res = Resource(sim, capacity=1)
    done = []
    for name in ("a", "b", "c"):
        sim.start_process(_holder(sim, res, 1.0, done, name), name)
    sim.run_until_idle()
    assert done == [("a", 1.0), ("b", 2.0), ("c", 3.0)]


def test_release_of_unheld_token_rejected():
    sim = Simulation()
    res = Resource(sim, capacity=1)
    with pytest.raises(SimError):
        res.release(object())


def test_resource_conservation():
    sim = Simulation()
    res = Resource(sim, capacity=2)
    done = []
    for name in "abcde":
        sim.start_process(_holder(sim, res, 0.5, done, name), name)
    sim.run_until_idle()
    assert res.acquired_total == res.released_total == 5
    assert res.in_use == 0


def test_clock_never_decreases_and_trace_is_recorded():
    sim = Simulation()
    times = []
    for delay in (3.0, 1.0, 2.0, 1.0):
        sim.schedule(lambda: times.append(sim.now), delay)
    sim.run_until_idle()
    assert times == sorted(times)
    assert len(sim.trace_lines) == 4
    assert all(line.startswith("t=") and "seq=" in line and "kind=" in line for line in sim.trace_lines)


def test_identical_sims_have_identical_trace_hashes():
    def build():
        sim = Simulation()
        res = Resource(sim, capacity=1, name="instr")
        done = []
        for name in ("a", "b"):
            sim.start_process(_holder(sim, res, 1.0, done, name), name)
        sim.run_until_idle()
        return sim.trace_hash()

    assert build() == build()


def test_process_failure_carries_name():
    sim = Simulation()

    def boom():
        raise RuntimeError("broken")
        yield  # pragma: no cover

    sim.start_process(boom(), "agent-x")
    with pytest.raises(ProcessFailure) as err:
        sim.run_until_idle()
    assert err.value.process_name == "agent-x"
