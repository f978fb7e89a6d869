"""End-to-end workflow: data -> noise -> surrogate training -> inversion -> comparison.

Layout under ``out_dir``::

    data/     clean_q<rate>.csv, noisy_q<rate>.csv, manifest.json
    models/   <approach>.json, <approach>_loss.csv
    chains/   <approach>_q<rate>_n<n>.csv (trace) and .json (posterior)
    report/   report.json, cells.csv, approaches.csv, *.svg

Every stage reads only files written by earlier stages, so stages can be
rerun independently and reproduce their outputs exactly.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataIOError
from .forward import ForwardParams, generate_dataset, synth_displacement
from .mcmc import Chain, McmcConfig, posterior_json, run_chain, summarize
from .rom import RomModel, RomSurrogate, TrainConfig, train
from .series import (
    NoiseModel,
    TimeSeries,
    add_noise,
    read_series_csv,
    write_series_csv,
)
from .vtk import SnapshotSet, build_series

log = logging.getLogger(__name__)

ROM_APPROACHES = ("nonoverlapping", "sliding")
EXACT = "exact"


def _default_train() -> dict:
    return {"nonoverlapping": TrainConfig.nonoverlapping(), "sliding": TrainConfig.sliding()}


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: Path = Path("run")
    rates: tuple = (100.0, 200.0, 300.0, 400.0)
    # "synthetic" uses forward_params; "vtk" reads vtk_dirs (rate -> snapshot directory)
    source: str = "synthetic"
    forward_params: ForwardParams = field(default_factory=ForwardParams)
    n_points: int | None = 115
    vtk_dirs: dict = field(default_factory=dict)
    vtk_vector: str = "displacement"
    vtk_dt: float = 1.0
    # absolute noise std (m); when None, noise_rel times each series' range
    noise_sigma: float | None = None
    noise_rel: float = 0.01
    noise_seed: int = 11
    train: dict = field(default_factory=_default_train)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    sweep: tuple = (1000, 5000, 10000)
    approaches: tuple = ROM_APPROACHES

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "rates", tuple(float(q) for q in self.rates))
        object.__setattr__(self, "sweep", tuple(int(n) for n in self.sweep))
        object.__setattr__(self, "approaches", tuple(self.approaches))
        if not self.rates:
            raise ConfigError("rate grid is empty")
        if len(set(self.rates)) != len(self.rates):
            raise ConfigError(f"duplicate rates in {self.rates}")
        if not self.sweep:
            raise ConfigError("sample-count sweep is empty")
        if self.source not in ("synthetic", "vtk"):
            raise ConfigError(f"unknown data source {self.source!r}")
        for a in self.approaches:
            if a not in ROM_APPROACHES and a != EXACT:
                raise ConfigError(f"unknown approach {a!r}")
            if a in ROM_APPROACHES and a not in self.train:
                raise ConfigError(f"no training config for approach {a!r}")
        for n in self.sweep:
            if n < self.mcmc.m0:
                raise ConfigError(f"sample count {n} is below adaptation interval {self.mcmc.m0}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ConfigError("noise sigma must be non-negative")
        if self.source == "vtk":
            missing = [q for q in self.rates if q not in self.vtk_dirs]
            if missing:
                raise ConfigError(f"no VTK directory configured for rates {missing}")

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "out_dir": str(self.out_dir),
            "rates": list(self.rates),
            "source": self.source,
            "forward_params": self.forward_params.to_dict(),
            "n_points": self.n_points,
            "vtk_dirs": {f"{q:g}": str(d) for q, d in self.vtk_dirs.items()},
            "vtk_vector": self.vtk_vector,
            "vtk_dt": self.vtk_dt,
            "noise_sigma": self.noise_sigma,
            "noise_rel": self.noise_rel,
            "noise_seed": self.noise_seed,
            "train": {a: c.to_dict() for a, c in self.train.items()},
            "mcmc": self.mcmc.to_dict(),
            "sweep": list(self.sweep),
            "approaches": list(self.approaches),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown pipeline settings: {sorted(unknown)}")
        try:
            if "forward_params" in d:
                d["forward_params"] = ForwardParams(**d["forward_params"])
            if "train" in d:
                train_cfg = _default_train()
                for a, c in d["train"].items():
                    base = train_cfg.get(a, TrainConfig())
                    train_cfg[a] = TrainConfig.from_dict({**base.to_dict(), **c})
                d["train"] = train_cfg
            if "mcmc" in d:
                d["mcmc"] = McmcConfig.from_dict({**McmcConfig().to_dict(), **d["mcmc"]})
            if "vtk_dirs" in d:
                d["vtk_dirs"] = {float(q): Path(p) for q, p in d["vtk_dirs"].items()}
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid pipeline config: {exc}") from None

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise DataIOError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None

    # -- paths ----------------------------------------------------------------

    @property
    def data_dir(self) -> Path:
        return self.out_dir / "data"

    @property
    def model_dir(self) -> Path:
        return self.out_dir / "models"

    @property
    def chain_dir(self) -> Path:
        return self.out_dir / "chains"

    @property
    def report_dir(self) -> Path:
        return self.out_dir / "report"

    def clean_path(self, q: float) -> Path:
        return self.data_dir / f"clean_q{q:g}.csv"

    def noisy_path(self, q: float) -> Path:
        return self.data_dir / f"noisy_q{q:g}.csv"

    def model_path(self, approach: str) -> Path:
        return self.model_dir / f"{approach}.json"

    def cell_stem(self, q: float, approach: str, n: int) -> Path:
        return self.chain_dir / f"{approach}_q{q:g}_n{n}"

    def cells(self):
        return [(q, a, n) for q in self.rates for a in self.approaches for n in self.sweep]


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def noise_for(cfg: PipelineConfig, q: float, clean: TimeSeries) -> NoiseModel:
    sigma = cfg.noise_sigma
    if sigma is None:
        sigma = cfg.noise_rel * float(np.ptp(clean.values))
    return NoiseModel(sigma, cfg.noise_seed + cfg.rates.index(q))


# -- stages --------------------------------------------------------------------


def cmd_generate(cfg: PipelineConfig) -> list:
    """Write clean and noisy series for every rate, plus a provenance manifest."""
    if cfg.source == "synthetic":
        clean = generate_dataset(cfg.rates, cfg.forward_params, cfg.n_points)
    else:
        clean = {}
        for q in cfg.rates:
            snaps = SnapshotSet.from_directory(cfg.vtk_dirs[q], cfg.vtk_vector, cfg.vtk_dt)
            series = build_series(snaps, label=f"q={q:g}")
            if cfg.n_points is not None:
                series = series.with_values(series.values[:cfg.n_points])
            clean[q] = series
    written = []
    noise = {}
    for q, series in clean.items():
        nm = noise_for(cfg, q, series)
        noise[f"{q:g}"] = {"sigma": nm.sigma, "seed": nm.seed}
        written.append(write_series_csv(series, cfg.clean_path(q)))
        written.append(write_series_csv(add_noise(series, nm), cfg.noisy_path(q)))
    manifest = {
        "source": cfg.source,
        "forward_params": cfg.forward_params.to_dict() if cfg.source == "synthetic" else None,
        "rates": list(cfg.rates),
        "n_points": cfg.n_points,
        "noise": noise,
        "config": cfg.to_dict(),
    }
    written.append(_write_json(cfg.data_dir / "manifest.json", manifest))
    log.info("wrote %d data files to %s", len(written), cfg.data_dir)
    return written


def load_clean(cfg: PipelineConfig) -> dict:
    return {q: read_series_csv(cfg.clean_path(q), label=f"q={q:g}") for q in cfg.rates}


def cmd_train(cfg: PipelineConfig, approach: str) -> Path:
    if approach not in ROM_APPROACHES:
        raise ConfigError(f"cannot train approach {approach!r}")
    model = train(load_clean(cfg), cfg.train[approach])
    path = model.save(cfg.model_path(approach))
    lines = ["epoch,loss"] + [f"{k},{loss!r}" for k, loss in enumerate(model.loss_history)]
    (cfg.model_dir / f"{approach}_loss.csv").write_text("\n".join(lines) + "\n")
    log.info("trained %s model: loss %.3g -> %.3g", approach, model.loss_history[0], model.loss_history[-1])
    return path


class ExactSurrogate:
    """The synthetic generator itself, bypassing any learned model."""

    def __init__(self, params: ForwardParams, times):
        self.params = params
        self.times = np.asarray(times, dtype=np.float64)

    def __call__(self, q: float) -> np.ndarray:
        return synth_displacement(self.times, q, self.params)


def make_surrogate(cfg: PipelineConfig, approach: str, times):
    if approach == EXACT:
        if cfg.source != "synthetic":
            raise ConfigError("exact-surrogate mode needs the synthetic data source")
        return ExactSurrogate(cfg.forward_params, times)
    return RomSurrogate(RomModel.load(cfg.model_path(approach)), times, warn=False)


def invert(surrogate, data: TimeSeries, mcmc: McmcConfig, q_true: float | None = None):
    chain = run_chain(mcmc, surrogate, data)
    post = summarize(chain, mcmc.burn_in_fraction)
    extra = {"n": mcmc.n, "seed": mcmc.seed}
    if q_true is not None:
        extra["q_true"] = q_true
        extra["rel_error"] = abs(post.mean - q_true) / q_true
    return chain, post, extra


def write_cell(stem: Path, chain: Chain, post, extra: dict) -> tuple:
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")
    csv_path.write_text(chain.to_csv())
    json_path.write_text(posterior_json(post, **extra))
    return csv_path, json_path


def cmd_invert(cfg: PipelineConfig, rate: float, approach: str, n: int) -> tuple:
    data = read_series_csv(cfg.noisy_path(rate))
    surrogate = make_surrogate(cfg, approach, data.times)
    mcmc = replace(cfg.mcmc, n=int(n))
    chain, post, extra = invert(surrogate, data, mcmc, q_true=rate)
    extra["approach"] = approach
    log.info("%s q=%g n=%d: mean %.4g (rel err %.3g)", approach, rate, n, post.mean, extra["rel_error"])
    return write_cell(cfg.cell_stem(rate, approach, n), chain, post, extra)


def _invert_cell(args):
    cfg, q, a, n = args
    return cmd_invert(cfg, q, a, n)


def cmd_invert_all(cfg: PipelineConfig, jobs: int = 1) -> list:
    """Run every (rate, approach, n) cell; cells are independent so they may run in parallel."""
    tasks = [(cfg, q, a, n) for q, a, n in cfg.cells()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_invert_cell, tasks))
    return [_invert_cell(t) for t in tasks]


def cmd_run(cfg: PipelineConfig, jobs: int = 1):
    cmd_generate(cfg)
    for a in cfg.approaches:
        if a in ROM_APPROACHES:
            cmd_train(cfg, a)
    cmd_invert_all(cfg, jobs)
    from .report import cmd_compare

    return cmd_compare(cfg)
