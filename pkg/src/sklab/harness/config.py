"""Experiment configuration: defaults, validation and loading."""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import tomli

from sklab.errors import ConfigError, DomainError
from sklab.models import MovingMaximaModel, NormingMode

EXPERIMENTS = ("e1", "e2", "e3", "e4", "e5", "e6", "ei")

# replica count at which the distributional thresholds take their base value
REFERENCE_REPS = 10_000
MIN_REPS = 100
SEED_ENV = "SKLAB_SEED"


@dataclass
class ExperimentConfig:
    """Settings shared by all experiments; unused fields are ignored by each one."""

    experiment: str
    alpha: float = 0.5
    coefficients: tuple = (1.0, 1.0)
    n: int = 10_000
    reps: int = 10_000
    seed: int = 42
    norming: NormingMode = NormingMode.MARGINAL
    threads: int = 1
    r_n: int = 100
    # e2/e3: limit oracle
    truncation: int = 10_000
    limit_reps: int = 100_000
    t_grid: tuple = (0.5, 1.0)
    # e1-e3 base thresholds (scaled by reps, see threshold())
    ks_one_sample: float = 0.02
    ks_two_sample: float = 0.03
    grid_sup: float = 0.03
    # e4
    eps: float = 1.0
    u_values: tuple = (0.1, 0.25, 0.5, 1.0)
    karamata_n: tuple = (10_000, 1_000_000)
    karamata_alphas: tuple = (0.3, 0.5, 0.8)
    karamata_rel_tol: float = 0.03
    # e5
    n_ladder: tuple = (1_000, 10_000, 100_000)
    # ei
    coefficient_sets: tuple = ((1.0,), (1.0, 1.0), (1.0, 1.0, 1.0))
    ei_tolerance: float = 0.05
    ei_exceedance_blocks: int = 20
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.norming = NormingMode.parse(self.norming)
        self.coefficients = tuple(float(c) for c in self.coefficients)
        for name in ("t_grid", "u_values", "karamata_alphas"):
            setattr(self, name, tuple(float(v) for v in getattr(self, name)))
        for name in ("karamata_n", "n_ladder"):
            setattr(self, name, tuple(int(v) for v in getattr(self, name)))
        self.coefficient_sets = tuple(tuple(float(c) for c in cs) for cs in self.coefficient_sets)

    @property
    def model(self) -> MovingMaximaModel:
        try:
            return MovingMaximaModel(self.alpha, self.coefficients)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def insufficient_sample(self) -> bool:
        return self.reps < MIN_REPS

    def threshold(self, base: float) -> float:
        """``base * sqrt(max(REFERENCE_REPS / reps, 1))``."""
        return base * math.sqrt(max(REFERENCE_REPS / self.reps, 1.0))

    threshold_formula = "base * sqrt(max(10000 / reps, 1))"

    def validate(self) -> ExperimentConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.experiment != "e6":
            self.model  # noqa: B018  (raises ConfigError)
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        sizes = {
            "e1": [self.n],
            "e2": [self.n],
            "e3": [self.n],
            "e4": [self.n, *self.karamata_n],
            "e5": list(self.n_ladder),
            "e6": [],
            "ei": [self.n],
        }[self.experiment]
        for n in sizes:
            if n < 1000:
                raise ConfigError(f"n = {n} is below the minimum 1000")
        if self.experiment == "ei":
            if self.r_n < 1 or self.r_n > math.isqrt(self.n):
                raise ConfigError("r_n must satisfy 1 <= r_n <= sqrt(n)")
        if self.experiment in ("e2", "e3"):
            if self.truncation < 1 or self.limit_reps < 1:
                raise ConfigError("truncation and limit_reps must be positive")
            if any(not 0 < t <= 1 for t in self.t_grid):
                raise ConfigError("t_grid entries must lie in (0, 1]")
        if self.experiment in ("e4", "e5") and not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.experiment in ("e4", "e6") and any(not u > 0 for u in self.u_values):
            raise ConfigError("u values must be positive")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["norming"] = self.norming.value
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d


_EXPERIMENT_DEFAULTS = {
    "e1": {},
    "e2": {},
    "e3": {},
    "e4": {"n": 100_000, "reps": 1_000},
    "e5": {"reps": 100_000, "eps": 100.0, "norming": "innovation", "n": 100_000},
    "e6": {"u_values": (1.0, 2.0)},
    "ei": {"n": 1_000_000, "reps": 1},
}

_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"experiment", "extra"}


def default_config(experiment: str) -> dict:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return dict(_EXPERIMENT_DEFAULTS[experiment])


def load_file(path: str) -> dict:
    """Settings from a TOML file; keys may sit at top level or under ``[experiment]``."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if "experiment" in data and isinstance(data["experiment"], dict):
        data = data["experiment"]
    return data


def build_config(experiment: str, file_settings: dict | None = None, flags: dict | None = None,
                 environ=None) -> ExperimentConfig:
    """Merge defaults, file settings and flags (later wins); ``SKLAB_SEED`` overrides the seed."""
    merged = default_config(experiment)
    for source in (file_settings or {}, flags or {}):
        for k, v in source.items():
            if v is None:
                continue
            if k not in _FIELDS:
                raise ConfigError(f"unknown setting {k!r}")
            merged[k] = v
    env = os.environ if environ is None else environ
    if env.get(SEED_ENV):
        try:
            merged["seed"] = int(env[SEED_ENV], 0)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} is not an integer") from exc
    try:
        cfg = ExperimentConfig(experiment=experiment, **merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
