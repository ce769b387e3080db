"""Agents, the campaign loop, facility wiring, and topology emission.

Each agent is a cooperative simulation process repeating: read visible data,
fit its model, compute an acquisition field, select the next composition,
then synthesize / check out / measure / return through the queued lab, and
publish measurement, posterior, and acquisition rows to the data repository.

Architectures differ only in wiring: Independent agents see their own rows;
DataSharing agents read pooled measurements; DataSharingJointDM additionally
lets FP agents blend the PM agents' latest acquisition fields into their own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acquisition import (
    AcquisitionField,
    SearchSpaceExhausted,
    combine_acq,
    entropy_acq,
    select_next,
    ucb_acq,
)
from .domain import CompositionGrid, PhaseLabelSet, PropertyMeasurement, RamanSpectrum
from .engine import Simulation
from .groundtruth import ChallengeSpec, gen_raman, observe_d33, true_phase
from .inference import (
    InferenceParams,
    coregional_infer,
    gp_fit,
    gp_predict,
    phase_map_infer,
    spectral_cluster,
)
from .inference.clustering import align_labels
from .lab import D33, RAMAN, SYNTHESIS, InstrumentSpec, Lab, OutOfConsumables
from .metrics import fowlkes_mallows, percent_min_regret
from .seeding import rng_stream

ARCHITECTURES = ("Independent", "DataSharing", "DataSharingJointDM")

PM = "PM"
FP = "FP"


class ConfigError(ValueError):
    """Invalid facility configuration; message names the offending field."""


@dataclass(frozen=True)
class FacilityConfig:
    """Everything one simulation run needs."""

    architecture: str = "Independent"
    challenge: ChallengeSpec = field(default_factory=ChallengeSpec)
    pm_count: int = 2
    fp_count: int = 2
    iterations: int = 10
    seed: int = 1
    inference: InferenceParams = field(default_factory=InferenceParams)
    ucb_lambda: float = 0.1
    ucb_parenthesization: str = "log"
    pm_uses_coregionalization: bool = False
    instrument_capacity: int = 1
    service_time: float = 1.0
    synthesis_stock: int | None = None
    transport_delay: float = 0.0
    grid_points: int = 101

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture: {self.architecture!r} not one of {ARCHITECTURES}")
        if self.pm_count < 1:
            raise ConfigError("pm_count: must be >= 1")
        if self.fp_count < 1:
            raise ConfigError("fp_count: must be >= 1")
        if self.iterations < 1:
            raise ConfigError("iterations: must be >= 1")
        if self.ucb_lambda <= 0:
            raise ConfigError("ucb_lambda: must be positive")
        if self.ucb_parenthesization not in ("log", "divide", "multiply"):
            raise ConfigError("ucb_parenthesization: must be 'log', 'divide' or 'multiply'")
        if self.instrument_capacity < 1:
            raise ConfigError("instrument_capacity: must be >= 1")
        if self.service_time < 0:
            raise ConfigError("service_time: must be nonnegative")
        if self.synthesis_stock is not None and self.synthesis_stock < 0:
            raise ConfigError("synthesis_stock: must be nonnegative")
        if self.transport_delay < 0:
            raise ConfigError("transport_delay: must be nonnegative")
        if self.grid_points < 3:
            raise ConfigError("grid_points: must be >= 3")

    @property
    def pooled(self) -> bool:
        return self.architecture in ("DataSharing", "DataSharingJointDM")

    @property
    def joint(self) -> bool:
        return self.architecture == "DataSharingJointDM"


@dataclass
class Agent:
    agent_id: str
    kind: str
    plate: int
    pooled: bool
    joint: bool
    iterations: int
    model_rng: np.random.Generator
    iteration: int = 0
    halted: str | None = None
    # (iteration, composition) pairs, seed measurement at iteration 0
    measured: list = field(default_factory=list)

    @property
    def modality(self) -> str:
        return RAMAN if self.kind == PM else D33


@dataclass(frozen=True)
class PosteriorSnapshot:
    """What an agent believed when it chose its next experiment."""

    membership: object = None
    change_points: object = None
    property_posterior: object = None
    kind: str = "posterior"


@dataclass
class RunResult:
    config: FacilityConfig
    final_time: float
    trace_hash: str
    campaign_rows: list
    repo_rows: list
    posterior_rows: list
    acquisition_rows: list
    agent_regret: dict
    run_regret: np.ndarray
    agent_fm: dict
    run_fm: list
    halted: dict


def build_facility(config: FacilityConfig) -> "Facility":
    """Instantiate and seed a facility; validation happens in the config."""
    return Facility(config)


class Facility:
    def __init__(self, config: FacilityConfig):
        self.config = config
        self.grid = CompositionGrid.default(config.grid_points)
        self.challenge = config.challenge
        self.sim = Simulation(trace=True)
        specs = {
            SYNTHESIS: InstrumentSpec(SYNTHESIS, config.instrument_capacity, config.service_time,
                                      config.synthesis_stock),
            RAMAN: InstrumentSpec(RAMAN, config.instrument_capacity, config.service_time),
            D33: InstrumentSpec(D33, config.instrument_capacity, config.service_time),
        }
        self.lab = Lab(
            self.sim,
            self.grid,
            self.challenge,
            n_plates=config.pm_count,
            instrument_specs=specs,
            rng_for_instrument=lambda kind, plate: rng_stream(config.seed, "instr", kind, plate),
            transport_delay=config.transport_delay,
        )
        self.agents: list[Agent] = []
        for i in range(config.pm_count):
            self.agents.append(self._make_agent(PM, i))
        for i in range(config.fp_count):
            self.agents.append(self._make_agent(FP, i))
        # modality -> {grid index: sim time of the selection commit}
        self._commits: dict[str, dict[int, float]] = {RAMAN: {}, D33: {}}
        self._campaign_rows: list[tuple] = []
        self._seed_agents()

    def _make_agent(self, kind: str, index: int) -> Agent:
        cfg = self.config
        agent_id = f"{kind}{index + 1}"
        return Agent(
            agent_id=agent_id,
            kind=kind,
            plate=index % cfg.pm_count,
            pooled=cfg.pooled,
            joint=cfg.joint and kind == FP,
            iterations=cfg.iterations,
            model_rng=rng_stream(cfg.seed, "agent", agent_id, "model"),
        )

    def _seed_agents(self):
        """One initial random grid measurement per agent, written at t=0."""
        for agent in self.agents:
            rng = rng_stream(self.config.seed, "agent", agent.agent_id, "seed")
            comp = float(self.grid.points[int(rng.integers(self.grid.size))])
            sample_id = self.lab.samples.lookup(comp)
            if sample_id is None:
                sample_id = self.lab.samples.register(comp, 0.0)
            if agent.kind == PM:
                payload = gen_raman(true_phase(comp, self.challenge), rng, self.challenge, sample_id)
            else:
                payload = PropertyMeasurement(sample_id, observe_d33(comp, self.challenge, rng), 0.0)
            self.lab.data.put(agent.agent_id, 0, agent.modality, payload)
            agent.measured.append((0, comp))
            self._record_campaign(agent, 0, comp, payload)

    def _record_campaign(self, agent: Agent, iteration: int, comp: float, payload):
        if isinstance(payload, RamanSpectrum):
            value = float(np.sum(payload.intensities))
        else:
            value = float(payload.value)
        self._campaign_rows.append((self.sim.now, agent.agent_id, iteration, comp, agent.modality, value))

    # -- data visibility -------------------------------------------------

    def visible_rows(self, agent: Agent, modality: str):
        if agent.pooled:
            return self.lab.data.get(modality=modality)
        return self.lab.data.get(agent_id=agent.agent_id, modality=modality)

    def _composition_of(self, payload) -> float:
        return self.lab.samples.sample(payload.sample_id).composition

    def visible_measurements(self, agent: Agent):
        """((composition, spectrum) raman rows, (composition, value) d33 rows)."""
        raman = [(self._composition_of(r.payload), r.payload) for r in self.visible_rows(agent, RAMAN)]
        d33 = [(self._composition_of(r.payload), r.payload.value) for r in self.visible_rows(agent, D33)]
        return raman, d33

    # -- modeling --------------------------------------------------------

    def _labels_from_raman(self, raman_data, rng) -> PhaseLabelSet:
        """Cluster visible spectra into aligned region labels.

        Below k spectra, clustering is undefined: fall back to all-one-region
        labels.
        """
        xs = np.asarray([c for c, _ in raman_data])
        if len(raman_data) < 3:
            return PhaseLabelSet.one_hot(xs, np.zeros(xs.size, dtype=int))
        spectra = [s.intensities for _, s in raman_data]
        hard = spectral_cluster(spectra, k=3, rng=rng)
        return align_labels(hard, xs)

    def _latest_pm_acquisitions(self) -> list[AcquisitionField]:
        pm_ids = {a.agent_id for a in self.agents if a.kind == PM}
        latest: dict[str, AcquisitionField] = {}
        for row in self.lab.data.get(modality="acquisition"):
            if row.agent_id in pm_ids:
                latest[row.agent_id] = row.payload  # rows sorted by written_at: last wins
        return [latest[aid] for aid in sorted(latest)]

    def fit_and_acquire(self, agent: Agent, iteration: int):
        """Steps 1-3 of an iteration: read, fit, and score the grid."""
        cfg = self.config
        raman_data, d33_data = self.visible_measurements(agent)
        if agent.kind == PM:
            labels = self._labels_from_raman(raman_data, agent.model_rng)
            if cfg.pm_uses_coregionalization and agent.pooled:
                xf = [c for c, _ in d33_data]
                yf = [v for _, v in d33_data]
                pm, cp, py = coregional_infer(labels, xf, yf, self.grid, cfg.inference, agent.model_rng)
            else:
                pm, cp = phase_map_infer(labels, self.grid, cfg.inference, agent.model_rng)
                py = None
            return entropy_acq(pm), PosteriorSnapshot(pm, cp, py)
        # FP agent
        xf = [c for c, _ in d33_data]
        yf = [v for _, v in d33_data]
        if agent.pooled:
            labels = self._labels_from_raman(raman_data, agent.model_rng)
            pm, cp, py = coregional_infer(labels, xf, yf, self.grid, cfg.inference, agent.model_rng)
            ucb = ucb_acq(py, iteration, cfg.ucb_lambda, cfg.ucb_parenthesization)
            alpha = ucb
            if agent.joint:
                pm_fields = self._latest_pm_acquisitions()
                if pm_fields:
                    alpha = combine_acq(ucb, pm_fields, cp.sds)
            return alpha, PosteriorSnapshot(pm, cp, py)
        model = gp_fit(xf, yf, "matern52", cfg.inference)
        py = gp_predict(model, self.grid, cfg.inference)
        return ucb_acq(py, iteration, cfg.ucb_lambda, cfg.ucb_parenthesization), PosteriorSnapshot(None, None, py)

    def excluded_for(self, agent: Agent) -> set[float]:
        """Own-modality compositions already measured, plus same-instant commits."""
        raman_data, d33_data = self.visible_measurements(agent)
        own = raman_data if agent.kind == PM else d33_data
        excluded = {c for c, _ in own}
        now = self.sim.now
        for idx, t in self._commits[agent.modality].items():
            if t == now:
                excluded.add(float(self.grid.points[idx]))
        return excluded

    def _commit_selection(self, agent: Agent, comp: float):
        self._commits[agent.modality][self.grid.index_of(comp)] = self.sim.now

    # -- campaign process ------------------------------------------------

    def _campaign(self, agent: Agent):
        for iteration in range(1, agent.iterations + 1):
            agent.iteration = iteration
            alpha, snapshot = self.fit_and_acquire(agent, iteration)
            try:
                comp = select_next(alpha, self.excluded_for(agent))
            except SearchSpaceExhausted:
                agent.halted = "search space exhausted"
                return
            self._commit_selection(agent, comp)
            try:
                sample_id = yield from self.lab.synthesize(comp, agent.plate)
            except OutOfConsumables:
                agent.halted = "out of consumables"
                return
            sample = yield from self.lab.samples.checkout(sample_id, agent.agent_id)
            payload = yield from self.lab.measure(sample, agent.modality, agent.plate, agent.agent_id)
            self.lab.samples.return_sample(sample_id, agent.agent_id)
            self.lab.data.put(agent.agent_id, iteration, agent.modality, payload)
            self.lab.data.put(agent.agent_id, iteration, "posterior", snapshot)
            self.lab.data.put(agent.agent_id, iteration, "acquisition", alpha)
            agent.measured.append((iteration, comp))
            self._record_campaign(agent, iteration, comp, payload)

    def run(self) -> RunResult:
        for agent in self.agents:
            self.sim.start_process(self._campaign(agent), name=agent.agent_id)
        final_time = self.sim.run_until_idle()
        return self._collect(final_time)

    # -- result assembly -------------------------------------------------

    def _collect(self, final_time: float) -> RunResult:
        agent_regret = {}
        fp_agents = [a for a in self.agents if a.kind == FP]
        for agent in fp_agents:
            comps = [c for _, c in sorted(agent.measured)]
            agent_regret[agent.agent_id] = percent_min_regret(comps, self.challenge, self.grid)
        run_regret = self._pooled_regret(fp_agents)
        agent_fm, run_fm = self._fm_traces()
        posterior_rows = [
            (r.agent_id, r.iteration, r.payload) for r in self.lab.data.get(modality="posterior")
        ]
        acquisition_rows = [
            (r.agent_id, r.iteration, r.payload) for r in self.lab.data.get(modality="acquisition")
        ]
        return RunResult(
            config=self.config,
            final_time=final_time,
            trace_hash=self.sim.trace_hash(),
            campaign_rows=list(self._campaign_rows),
            repo_rows=self.lab.data.dump_rows(),
            posterior_rows=posterior_rows,
            acquisition_rows=acquisition_rows,
            agent_regret=agent_regret,
            run_regret=run_regret,
            agent_fm=agent_fm,
            run_fm=run_fm,
            halted={a.agent_id: a.halted for a in self.agents if a.halted},
        )

    def _pooled_regret(self, fp_agents) -> np.ndarray:
        """Facility-level best-so-far regret indexed by iteration (0 = seeds)."""
        ordered = sorted(
            (it, a.agent_id, comp) for a in fp_agents for it, comp in a.measured
        )
        comps = [comp for _, _, comp in ordered]
        marks = [it for it, _, _ in ordered]
        trace = percent_min_regret(comps, self.challenge, self.grid)
        out = np.empty(self.config.iterations + 1)
        for t in range(self.config.iterations + 1):
            idx = [i for i, m in enumerate(marks) if m <= t]
            out[t] = trace[max(idx)] if idx else 100.0
        return out

    def _fm_traces(self):
        truth = np.asarray(true_phase(self.grid.points, self.challenge))
        agent_fm: dict[str, dict[int, float]] = {}
        for agent_id, iteration, snapshot in [
            (r.agent_id, r.iteration, r.payload) for r in self.lab.data.get(modality="posterior")
        ]:
            if snapshot.membership is None:
                continue
            pred = np.argmax(snapshot.membership.probs, axis=1)
            agent_fm.setdefault(agent_id, {})[iteration] = fowlkes_mallows(pred, truth)
        run_fm = []
        for t in range(1, self.config.iterations + 1):
            vals = [trace[t] for trace in agent_fm.values() if t in trace]
            run_fm.append(float(np.mean(vals)) if vals else float("nan"))
        return agent_fm, run_fm


def emit_topology(config: FacilityConfig) -> str:
    """DOT graph of the facility wiring for the configured architecture."""
    lines = ["digraph facility {", '  rankdir=LR;']
    lines.append('  "sample_repo" [shape=hexagon];')
    lines.append('  "data_repo" [shape=hexagon];')
    for p in range(config.pm_count):
        for kind in (SYNTHESIS, RAMAN, D33):
            lines.append(f'  "{kind}_{p}" [shape=box];')
    agents = [f"PM{i + 1}" for i in range(config.pm_count)] + [f"FP{i + 1}" for i in range(config.fp_count)]
    for name in agents:
        lines.append(f'  "{name}" [shape=ellipse];')
    for p in range(config.pm_count):
        lines.append(f'  "{SYNTHESIS}_{p}" -> "sample_repo" [label="sample"];')
        lines.append(f'  "sample_repo" -> "{RAMAN}_{p}" [label="sample"];')
        lines.append(f'  "sample_repo" -> "{D33}_{p}" [label="sample"];')
    for name in agents:
        lines.append(f'  "{name}" -> "data_repo" [label="data", dir=both];')
    if config.joint:
        for i in range(config.pm_count):
            for j in range(config.fp_count):
                lines.append(f'  "PM{i + 1}" -> "FP{j + 1}" [label="acq"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def make_config(architecture: str, challenge_id: int, seed: int, **overrides) -> FacilityConfig:
    challenge = overrides.pop("challenge_spec", None) or ChallengeSpec.for_challenge(challenge_id)
    return FacilityConfig(architecture=architecture, challenge=challenge, seed=seed, **overrides)
