"""Run configuration: TOML schema, validation, and round-tripping."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .agents import ARCHITECTURES, ConfigError, FacilityConfig
from .groundtruth import CHALLENGE_PEAKS, ChallengeSpec
from .inference import InferenceParams

ARCH_CHOICES = ARCHITECTURES + ("all",)

_TOP_KEYS = {
    "architecture",
    "challenge",
    "pm_count",
    "fp_count",
    "iterations",
    "n_runs",
    "base_seed",
    "ucb_lambda",
    "ucb_parenthesization",
    "pm_uses_coregionalization",
    "output_dir",
    "grid_points",
    "inference",
    "ground_truth",
    "instruments",
}
_INFERENCE_KEYS = {
    "n_prior_samples",
    "n_resampled",
    "subsamples_per_draw",
    "jitter",
    "gp_restarts",
    "length_scale_bounds",
    "signal_sd_bounds",
    "noise_sd_bounds",
    "gp_tol",
    "ess_warn_threshold",
}
_GROUND_TRUTH_KEYS = {"change_points", "d33_sd", "raman_sd", "peaks"}
_INSTRUMENT_KEYS = {"capacity", "service_time", "synthesis_stock", "transport_delay"}


@dataclass(frozen=True)
class RunConfig:
    """Validated sweep configuration; one FacilityConfig per (architecture, run)."""

    architecture: str = "Independent"
    challenge: int = 2
    pm_count: int = 2
    fp_count: int = 2
    iterations: int = 10
    n_runs: int = 10
    base_seed: int = 11
    ucb_lambda: float = 0.1
    ucb_parenthesization: str = "log"
    pm_uses_coregionalization: bool = False
    output_dir: str = "out"
    grid_points: int = 101
    inference: InferenceParams = field(default_factory=InferenceParams)
    ground_truth: dict = field(default_factory=dict)
    instrument_capacity: int = 1
    service_time: float = 1.0
    synthesis_stock: int | None = None
    transport_delay: float = 0.0

    def __post_init__(self):
        if self.architecture not in ARCH_CHOICES:
            raise ConfigError(f"architecture: {self.architecture!r} not one of {ARCH_CHOICES}")
        if self.challenge not in CHALLENGE_PEAKS:
            raise ConfigError(f"challenge: must be one of {sorted(CHALLENGE_PEAKS)}")
        if self.n_runs < 1:
            raise ConfigError("n_runs: must be >= 1")

    def architectures(self) -> tuple[str, ...]:
        return ARCHITECTURES if self.architecture == "all" else (self.architecture,)

    def challenge_spec(self) -> ChallengeSpec:
        overrides = dict(self.ground_truth)
        if "change_points" in overrides:
            overrides["change_points"] = tuple(float(v) for v in overrides["change_points"])
        if "peaks" in overrides:
            overrides["peaks"] = tuple(tuple(float(v) for v in p) for p in overrides["peaks"])
        return ChallengeSpec.for_challenge(self.challenge, **overrides)

    def facility_config(self, architecture: str, run_index: int) -> FacilityConfig:
        return FacilityConfig(
            architecture=architecture,
            challenge=self.challenge_spec(),
            pm_count=self.pm_count,
            fp_count=self.fp_count,
            iterations=self.iterations,
            seed=self.base_seed + run_index,
            inference=self.inference,
            ucb_lambda=self.ucb_lambda,
            ucb_parenthesization=self.ucb_parenthesization,
            pm_uses_coregionalization=self.pm_uses_coregionalization,
            instrument_capacity=self.instrument_capacity,
            service_time=self.service_time,
            synthesis_stock=self.synthesis_stock,
            transport_delay=self.transport_delay,
            grid_points=self.grid_points,
        )

    def to_dict(self) -> dict:
        inf = self.inference
        out = {
            "architecture": self.architecture,
            "challenge": self.challenge,
            "pm_count": self.pm_count,
            "fp_count": self.fp_count,
            "iterations": self.iterations,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "ucb_lambda": self.ucb_lambda,
            "ucb_parenthesization": self.ucb_parenthesization,
            "pm_uses_coregionalization": self.pm_uses_coregionalization,
            "output_dir": self.output_dir,
            "grid_points": self.grid_points,
            "inference": {
                "n_prior_samples": inf.n_prior_samples,
                "n_resampled": inf.n_resampled,
                "subsamples_per_draw": inf.subsamples_per_draw,
                "jitter": inf.jitter,
                "gp_restarts": inf.gp_restarts,
                "length_scale_bounds": list(inf.length_scale_bounds),
                "signal_sd_bounds": list(inf.signal_sd_bounds),
                "noise_sd_bounds": list(inf.noise_sd_bounds),
                "gp_tol": inf.gp_tol,
                "ess_warn_threshold": inf.ess_warn_threshold,
            },
            "ground_truth": {
                k: (list(v) if isinstance(v, (tuple, list)) else v) for k, v in sorted(self.ground_truth.items())
            },
            "instruments": {
                "capacity": self.instrument_capacity,
                "service_time": self.service_time,
                "transport_delay": self.transport_delay,
            },
        }
        if self.synthesis_stock is not None:
            out["instruments"]["synthesis_stock"] = self.synthesis_stock
        return out

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


def _reject_unknown(mapping: dict, allowed: set, prefix: str, errors: list[str]):
    for key in mapping:
        if key not in allowed:
            errors.append(f"{prefix}{key}: unknown key")


def from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a parsed mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a table at the top level")
    errors: list[str] = []
    _reject_unknown(data, _TOP_KEYS, "", errors)
    inf_raw = data.get("inference", {})
    gt_raw = data.get("ground_truth", {})
    instr_raw = data.get("instruments", {})
    for raw, allowed, prefix in (
        (inf_raw, _INFERENCE_KEYS, "inference."),
        (gt_raw, _GROUND_TRUTH_KEYS, "ground_truth."),
        (instr_raw, _INSTRUMENT_KEYS, "instruments."),
    ):
        if not isinstance(raw, dict):
            errors.append(f"{prefix.rstrip('.')}: expected a table")
        else:
            _reject_unknown(raw, allowed, prefix, errors)
    if errors:
        raise ConfigError("; ".join(errors))

    inference_kwargs = dict(inf_raw)
    for bounds_key in ("length_scale_bounds", "signal_sd_bounds", "noise_sd_bounds"):
        if bounds_key in inference_kwargs:
            inference_kwargs[bounds_key] = tuple(float(v) for v in inference_kwargs[bounds_key])
    try:
        inference = InferenceParams(**inference_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"inference: {exc}") from exc

    kwargs = {k: v for k, v in data.items() if k not in ("inference", "ground_truth", "instruments")}
    kwargs["inference"] = inference
    kwargs["ground_truth"] = dict(gt_raw)
    if "capacity" in instr_raw:
        kwargs["instrument_capacity"] = instr_raw["capacity"]
    if "service_time" in instr_raw:
        kwargs["service_time"] = instr_raw["service_time"]
    if "synthesis_stock" in instr_raw:
        kwargs["synthesis_stock"] = instr_raw["synthesis_stock"]
    if "transport_delay" in instr_raw:
        kwargs["transport_delay"] = instr_raw["transport_delay"]
    try:
        config = RunConfig(**kwargs)
        config.challenge_spec()  # surfaces bad ground-truth overrides now
        for arch in config.architectures():
            config.facility_config(arch, 0)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return config


def load_config(path: str | Path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
    return from_dict(data)
