"""Campaign runner: executes sweeps and writes every file output."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .agents import Facility, FacilityConfig, RunResult, emit_topology
from .config import RunConfig
from .engine import ProcessFailure
from .metrics import ci95

THREADS_ENV = "MULTITASK_THREADS"


class RunFailure(RuntimeError):
    def __init__(self, architecture: str, run_index: int, agent_id: str, iteration: int, cause: BaseException):
        super().__init__(
            f"run {run_index} ({architecture}) failed in agent {agent_id} at iteration {iteration}: {cause}"
        )
        self.architecture = architecture
        self.run_index = run_index
        self.agent_id = agent_id
        self.iteration = iteration


def _fmt(value) -> str:
    """Deterministic cell formatting: shortest round-trip float repr."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def execute_run(fconfig: FacilityConfig, architecture: str, run_index: int) -> RunResult:
    facility = Facility(fconfig)
    try:
        return facility.run()
    except ProcessFailure as exc:
        agent = next((a for a in facility.agents if a.agent_id == exc.process_name), None)
        iteration = agent.iteration if agent else -1
        raise RunFailure(architecture, run_index, exc.process_name, iteration, exc.cause) from exc


def write_run_dir(run_dir: Path, result: RunResult) -> None:
    _write_csv(
        run_dir / "campaign.csv",
        ["sim_time", "agent_id", "iteration", "composition", "modality", "value"],
        result.campaign_rows,
    )
    _write_csv(
        run_dir / "repository.csv",
        ["agent_id", "iteration", "modality", "sim_time", "payload_ref"],
        result.repo_rows,
    )
    trace_rows = []
    for t, value in enumerate(result.run_regret):
        trace_rows.append(("regret", "RUN", t, value))
    for agent_id in sorted(result.agent_regret):
        for t, value in enumerate(result.agent_regret[agent_id]):
            trace_rows.append(("regret", agent_id, t, float(value)))
    for t, value in enumerate(result.run_fm, start=1):
        trace_rows.append(("fm", "RUN", t, value))
    for agent_id in sorted(result.agent_fm):
        for t in sorted(result.agent_fm[agent_id]):
            trace_rows.append(("fm", agent_id, t, result.agent_fm[agent_id][t]))
    _write_csv(run_dir / "traces.csv", ["metric", "agent_id", "iteration", "value"], trace_rows)

    grid_points = None
    for agent_id, iteration, snap in result.posterior_rows:
        rows = []
        pm, py = snap.membership, snap.property_posterior
        grid = (pm or py).grid
        grid_points = grid.points
        for i, x in enumerate(grid_points):
            pm_cells = list(pm.probs[i]) if pm is not None else [None, None, None]
            py_cells = [py.mean[i], py.sd[i]] if py is not None else [None, None]
            rows.append([float(x), *pm_cells, *py_cells])
        _write_csv(
            run_dir / "posteriors" / f"a{agent_id}_i{iteration:03d}.csv",
            ["x", "pm_r0", "pm_r1", "pm_r2", "py_mean", "py_sd"],
            rows,
        )
    for agent_id, iteration, alpha in result.acquisition_rows:
        rows = [[float(x), float(v)] for x, v in zip(alpha.grid.points, alpha.values)]
        _write_csv(run_dir / "acquisitions" / f"a{agent_id}_i{iteration:03d}.csv", ["x", "alpha"], rows)


def summarize_architecture(
    architecture: str, challenge_id: int, iterations: int, regret_traces: list, fm_traces: list
) -> list[list]:
    """summary.csv rows: mean regret / FM with t-interval half-widths per iteration."""
    rows = []
    n_runs = len(regret_traces)
    for t in range(iterations + 1):
        regrets = [trace[t] for trace in regret_traces]
        if n_runs >= 2:
            mean_r, half_r = ci95(regrets)
        else:
            mean_r, half_r = float(regrets[0]), None
        if t >= 1:
            fms = [100.0 * trace[t - 1] for trace in fm_traces if not math.isnan(trace[t - 1])]
        else:
            fms = []
        if len(fms) >= 2:
            mean_f, half_f = ci95(fms)
        elif len(fms) == 1:
            mean_f, half_f = fms[0], None
        else:
            mean_f, half_f = None, None
        rows.append([architecture, challenge_id, t, mean_r, half_r, mean_f, half_f])
    return rows


SUMMARY_HEADER = ["architecture", "challenge", "iteration", "mean_regret", "ci_half", "mean_fm", "fm_ci_half"]


def _worker(args):
    fconfig, architecture, run_index, run_dir = args
    result = execute_run(fconfig, architecture, run_index)
    write_run_dir(Path(run_dir), result)
    return (
        run_index,
        result.trace_hash,
        result.final_time,
        [float(v) for v in result.run_regret],
        [float(v) for v in result.run_fm],
    )


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_architecture(config: RunConfig, architecture: str, out_dir: Path) -> dict:
    """All runs of one architecture; returns the manifest mapping."""
    arch_dir = out_dir / architecture
    arch_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for run_index in range(config.n_runs):
        fconfig = config.facility_config(architecture, run_index)
        jobs.append((fconfig, architecture, run_index, str(arch_dir / f"run_{run_index:03d}")))
    workers = min(max_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_worker, jobs))
    else:
        outcomes = [_worker(job) for job in jobs]
    outcomes.sort(key=lambda o: o[0])

    regret_traces = [np.asarray(o[3]) for o in outcomes]
    fm_traces = [np.asarray(o[4]) for o in outcomes]
    rows = summarize_architecture(architecture, config.challenge, config.iterations, regret_traces, fm_traces)
    _write_csv(arch_dir / "summary.csv", SUMMARY_HEADER, rows)
    (arch_dir / "topology.dot").write_text(emit_topology(config.facility_config(architecture, 0)))

    manifest = {
        "version": __version__,
        "architecture": architecture,
        "config": config.to_dict(),
        "runs": [
            {"run": o[0], "seed": config.base_seed + o[0], "trace_hash": o[1], "final_time": o[2]}
            for o in outcomes
        ],
    }
    (arch_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def run_sweep(config: RunConfig, out_dir: str | Path | None = None) -> list[dict]:
    out = Path(out_dir if out_dir is not None else config.output_dir)
    return [run_architecture(config, arch, out) for arch in config.architectures()]


def _load_arch_dir(path: Path):
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{path} has no manifest.json; not a completed architecture directory")
    manifest = json.loads(manifest_path.read_text())
    iterations = manifest["config"]["iterations"]
    regret_traces, fm_traces = [], []
    for entry in manifest["runs"]:
        run_dir = path / f"run_{entry['run']:03d}"
        regret: dict[int, float] = {}
        fm: dict[int, float] = {}
        with open(run_dir / "traces.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                if row["agent_id"] != "RUN" or row["value"] == "":
                    continue
                if row["metric"] == "regret":
                    regret[int(row["iteration"])] = float(row["value"])
                elif row["metric"] == "fm":
                    fm[int(row["iteration"])] = float(row["value"])
        regret_traces.append(np.asarray([regret.get(t, math.nan) for t in range(iterations + 1)]))
        fm_traces.append(np.asarray([fm.get(t, math.nan) for t in range(1, iterations + 1)]))
    return manifest, regret_traces, fm_traces


def report(arch_dirs: list[str | Path], out_dir: str | Path) -> Path:
    """Aggregate completed architecture directories into plot-ready trace data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loaded = [(_load_arch_dir(Path(d)), Path(d)) for d in arch_dirs]
    challenges = {entry[0][0]["config"]["challenge"] for entry in loaded}
    if len(challenges) > 1:
        raise ValueError(f"mixed challenges across run directories: {sorted(challenges)}")
    all_rows = []
    for (manifest, regret_traces, fm_traces), path in loaded:
        architecture = manifest["architecture"]
        iterations = manifest["config"]["iterations"]
        rows = summarize_architecture(
            architecture, manifest["config"]["challenge"], iterations, regret_traces, fm_traces
        )
        all_rows.extend(rows)
        _write_csv(
            out / f"plotdata_{architecture}.csv",
            ["iteration", "mean_regret", "regret_ci_half", "mean_fm", "fm_ci_half"],
            [[r[2], r[3], r[4], r[5], r[6]] for r in rows],
        )
    _write_csv(out / "report_summary.csv", SUMMARY_HEADER, all_rows)
    return out
