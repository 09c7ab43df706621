"""Experiment configuration: defaults, TOML loading, CLI overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..dynamics import get_system
from ..pipeline import METHODS

# sigma grid for unit-amplitude systems; 3-D systems scale it by their noise_scale
BASE_NOISE_GRID = (0.0, 0.01, 0.02, 0.05, 0.08, 0.10, 0.12)

# noise level at which cannibalization severity is measured, per system
REFERENCE_SIGMA = {
    "duffing": 0.02,
    "vanderpol": 0.02,
    "lorenz": 0.2,
    "rossler": 0.2,
    "lotka_volterra": 0.0,
    "cubic": 0.01,
}

DIAGNOSTIC_COMBOS = (
    ("duffing", "zz2"), ("duffing", "iqp"), ("duffing", "reupload"),
    ("vanderpol", "zz2"), ("vanderpol", "iqp"), ("vanderpol", "reupload"),
    ("lorenz", "zz3"), ("lotka_volterra", "zz2"), ("cubic", "zz2"), ("rossler", "zz3"),
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    systems: list[str] = field(default_factory=lambda: ["duffing", "vanderpol", "lorenz"])
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    # None: zz2 for 2-D systems, zz3 for 3-D systems
    feature_map: str | None = None
    # None: BASE_NOISE_GRID times each system's noise scale
    noise_levels: list[float] | None = None
    n_trials: int = 5
    base_seed: int = 0
    depolarizing_p: float = 0.0
    output_dir: str = "results"
    smooth_window: int = 5
    jobs: int = 1
    # rbf method inside sweeps
    rbf_landmarks: int = 12
    rbf_gamma_multiplier: float = 1.0
    # rbf-grid
    rbf_system: str = "duffing"
    rbf_sigma: float = 0.05
    gamma_multipliers: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    landmark_counts: list[int] = field(default_factory=lambda: [3, 6, 12, 24])
    # hw-noise
    hw_system: str = "duffing"
    hw_sigma: float = 0.02
    hw_p_grid: list[float] = field(default_factory=lambda: [0.0, 0.005, 0.01, 0.015, 0.02])
    # diagnose
    combos: list[tuple[str, str]] = field(default_factory=lambda: [tuple(c) for c in DIAGNOSTIC_COMBOS])
    reference_sigma: dict[str, float] = field(default_factory=lambda: dict(REFERENCE_SIGMA))
    # burgers
    burgers_nu: float = 0.1
    burgers_nx: int = 256
    burgers_nt: int = 201
    burgers_t_final: float = 2.0
    burgers_threshold: float = 0.05
    burgers_sigma: float = 0.0
    # verify: empty means every diagnostic combo
    verify_pairs: list[tuple[str, str]] = field(default_factory=list)
    corrupt_q: float = 0.0

    def validate(self) -> "ExperimentConfig":
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        for s in self.systems:
            try:
                get_system(s)
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
        if self.noise_levels is not None:
            lv = list(self.noise_levels)
            if any(s < 0 for s in lv) or lv != sorted(lv):
                raise ConfigError("noise_levels must be non-negative and sorted")
        if not 0 <= self.depolarizing_p <= 1:
            raise ConfigError("depolarizing_p must lie in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def noise_grid(self, system: str) -> list[float]:
        if self.noise_levels is not None:
            return [float(s) for s in self.noise_levels]
        scale = get_system(system).noise_scale
        return [round(s * scale, 12) for s in BASE_NOISE_GRID]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Build a config from an optional TOML file plus non-None overrides.

    Top-level keys and keys inside any table are merged (later tables win), so
    a file may group settings as ``[sweep]``, ``[rbf_grid]`` etc.
    """
    data: dict = {}
    if path is not None:
        try:
            with open(Path(path), "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for key, val in raw.items():
            if isinstance(val, dict) and key not in _FIELDS:
                data.update(val)
            else:
                data[key] = val
    data.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("combos", "verify_pairs"):
        if key in data:
            data[key] = [tuple(c) for c in data[key]]
    return ExperimentConfig(**data).validate()
