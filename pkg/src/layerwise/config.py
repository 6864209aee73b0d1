"""Experiment configuration: a TOML file, defaults matching the d=10 experiments.

Every key is optional. Top-level keys::

    kind = "sweep"            # sweep | transfer | diagnose | csq | validate
    d = 10
    p = 4                     # degree of the He_p term in the source target
    m = 100
    sigma = 1.0               # label noise: y = f(x) + sigma * Rademacher
    master_seed = 0
    seeds = 10                # number of seeds, or an explicit list
    n_test = 100000
    methods = ["algorithm1", "rf", "ntk"]
    n_exponents = [0.0, 0.25, ..., 4.0]   # n = round(d ** e)
    workers = 1
    out = "results/sweep.csv"

    [target]                  # source target for sweep / transfer
    kind = "experiment"       # experiment: He_2/2 + He_p/sqrt(2 p!) along e_1
                              # hermite:    He_p/sqrt(p!) along e_1
                              # custom:     directions + coeffs below
    directions = [[1, 0, ...]]            # custom only, r x d
    coeffs = [[0, 0, 0.5, 0, 0.144]]      # custom only, one list per direction

    [train]
    eta1 = 1.58               # omit for the default sqrt(d)/2
    eta = 0.01                # head GD step; omit for 1/smoothness
    lambda_grid = [0.0, 1e-6, ...]
    T = 200000
    tol = 1e-12
    holdout_n = 10000         # omit for min(1e5, 10 n)
    use_gd = false
    resample_stage2 = false

    [transfer]
    target_p = 3
    pretrain_exponents = [0, 1, 2, 3]
    N_exponents = [0, 0.5, 1, 1.5, 2, 2.5, 3]
    affine = true

    [diagnose]
    dims = [50, 100, 200]
    n_mc = 1000000
    trials = 20
    alignment_d = 10
    alignment_exponents = [3, 4, 5]
    vk_draws = 1000000

    [csq]
    d = 200
    M = 200
    epsilon = 0.35
    p = 4
    taus = [0.5]
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .hermite import HermiteSeries
from .targets import TargetFunction, experiment_target, hermite_target, make_target
from .trainer import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("sweep", "transfer", "diagnose", "csq", "validate")
METHODS = ("algorithm1", "rf", "ntk")


def _grid(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


@dataclass
class TransferSettings:
    target_p: int = 3
    pretrain_exponents: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0])
    N_exponents: list = field(default_factory=lambda: _grid(0.0, 3.0, 0.5))
    affine: bool = True


@dataclass
class DiagnoseSettings:
    dims: list = field(default_factory=lambda: [50, 100, 200])
    n_mc: int = 1_000_000
    trials: int = 20
    alignment_d: int = 10
    alignment_exponents: list = field(default_factory=lambda: [3.0, 4.0, 5.0])
    vk_draws: int = 1_000_000


@dataclass
class CsqSettings:
    d: int = 200
    M: int = 200
    epsilon: float = 0.35
    p: int = 4
    taus: list = field(default_factory=lambda: [0.5])
    max_restarts: int = 20


@dataclass
class ExperimentConfig:
    kind: str = "sweep"
    d: int = 10
    p: int = 4
    m: int = 100
    sigma: float = 1.0
    master_seed: int = 0
    seeds: list = field(default_factory=lambda: list(range(10)))
    n_test: int = 100_000
    methods: list = field(default_factory=lambda: list(METHODS))
    n_exponents: list = field(default_factory=lambda: _grid(0.0, 4.0, 0.25))
    workers: int = 1
    out: str | None = None
    target: dict = field(default_factory=lambda: {"kind": "experiment"})
    train: TrainConfig = field(default_factory=TrainConfig)
    transfer: TransferSettings = field(default_factory=TransferSettings)
    diagnose: DiagnoseSettings = field(default_factory=DiagnoseSettings)
    csq: CsqSettings = field(default_factory=CsqSettings)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if isinstance(self.seeds, int):
            self.seeds = list(range(self.seeds))
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}")
        if any(e < 0 for e in self.n_exponents):
            raise ValueError("n exponents must be nonnegative")

    @property
    def r(self) -> int:
        return len(self.target.get("directions", [[0]]))

    def n_values(self, exponents=None) -> list[int]:
        exps = self.n_exponents if exponents is None else exponents
        return sorted({max(1, int(round(self.d**e))) for e in exps})

    def source_target(self) -> TargetFunction:
        return build_target(self.target, self.d, self.p)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["train"]["lambda_grid"] = list(self.train.lambda_grid)
        return out


def build_target(spec: dict, d: int, p: int) -> TargetFunction:
    kind = spec.get("kind", "experiment")
    if kind == "experiment":
        return experiment_target(d, spec.get("p", p))
    if kind == "hermite":
        return hermite_target(d, spec.get("p", p))
    if kind == "custom":
        U = np.asarray(spec["directions"], dtype=float)
        comps = [HermiteSeries(c) for c in spec["coeffs"]]
        return make_target(U, comps)
    raise ValueError(f"unknown target kind {kind!r}")


def _from_section(cls, data: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    data = dict(data)
    kw: dict[str, Any] = {}
    if "train" in data:
        kw["train"] = _from_section(TrainConfig, data.pop("train"))
    if "transfer" in data:
        kw["transfer"] = _from_section(TransferSettings, data.pop("transfer"))
    if "diagnose" in data:
        kw["diagnose"] = _from_section(DiagnoseSettings, data.pop("diagnose"))
    if "csq" in data:
        kw["csq"] = _from_section(CsqSettings, data.pop("csq"))
    exps = data.get("n_exponents")
    if isinstance(exps, dict):
        data["n_exponents"] = _grid(exps["start"], exps["stop"], exps["step"])
    kw.update(data)
    return _from_section(ExperimentConfig, kw)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


def apply_profile(cfg: ExperimentConfig, profile: str) -> ExperimentConfig:
    """``fast`` shrinks test sets to 1e4 and seeds to 3."""
    if profile == "full":
        return cfg
    if profile != "fast":
        raise ValueError(f"unknown profile {profile!r}")
    cfg.n_test = min(cfg.n_test, 10_000)
    cfg.seeds = cfg.seeds[:3]
    return cfg


def default_eta1_doc() -> str:
    return f"sqrt(d)/2 (={math.sqrt(10) / 2:.3f} at d=10)"
