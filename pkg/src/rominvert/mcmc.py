"""Adaptive Metropolis sampling of a scalar injection rate.

Each iteration proposes a Gaussian random-walk step. Proposals outside the
open box (q_l, q_u) are rejected without touching the forward model. Inside
the box a noise variance is drawn from its inverse-gamma conditional given
the proposal's misfit, and the Metropolis ratio of Gaussian likelihoods at
that variance decides acceptance. The proposal variance is re-estimated from
the last ``m0`` states every ``m0`` iterations.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BadParameters,
    ConfigError,
    EmptyPostBurnIn,
    LengthMismatch,
    NonPositiveVariance,
    NumericError,
    ShortHistory,
)
from .series import TimeSeries, make_rng

# optimal 1-d random-walk scaling 2.38^2 / d
SCALE_1D = 2.38 ** 2
REG_FRACTION = 1e-10

Surrogate = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class McmcConfig:
    q0: float = 1.0
    bounds: tuple = (1.0, 500.0)
    n: int = 10000
    m0: int = 100
    burn_in_fraction: float = 0.5
    ig_shape: float = 0.01
    ig_scale: float = 0.01
    seed: int = 7
    # None samples sigma^2 each iteration; a number pins it (flat-likelihood checks)
    fixed_sigma2: Optional[float] = None
    # optional Gaussian prior (mean, std) on top of the box; off by default
    gaussian_prior: Optional[tuple] = None

    def __post_init__(self):
        ql, qu = (float(b) for b in self.bounds)
        object.__setattr__(self, "bounds", (ql, qu))
        if not ql < qu:
            raise ConfigError(f"bounds must satisfy q_l < q_u, got {self.bounds}")
        if not ql <= self.q0 <= qu:
            raise ConfigError(f"q0 = {self.q0} lies outside bounds {self.bounds}")
        if self.m0 < 2:
            raise ConfigError(f"adaptation interval m0 must be >= 2, got {self.m0}")
        if self.n < self.m0:
            raise ConfigError(f"iteration count n = {self.n} is below adaptation interval m0 = {self.m0}")
        if not 0 < self.burn_in_fraction < 1:
            raise ConfigError("burn-in fraction must lie in (0, 1)")
        if not (self.ig_shape > 0 and self.ig_scale > 0):
            raise ConfigError("inverse-gamma hyperparameters must be positive")
        if self.fixed_sigma2 is not None and not self.fixed_sigma2 > 0:
            raise ConfigError("fixed_sigma2 must be positive")
        if self.gaussian_prior is not None:
            mu, sd = self.gaussian_prior
            if not sd > 0:
                raise ConfigError("gaussian prior std must be positive")
            object.__setattr__(self, "gaussian_prior", (float(mu), float(sd)))

    @property
    def initial_variance(self) -> float:
        return (0.1 * max(self.q0, 1.0)) ** 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        if self.gaussian_prior is not None:
            d["gaussian_prior"] = list(self.gaussian_prior)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "McmcConfig":
        d = dict(d)
        if "bounds" in d:
            d["bounds"] = tuple(d["bounds"])
        if d.get("gaussian_prior") is not None:
            d["gaussian_prior"] = tuple(d["gaussian_prior"])
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown MCMC settings: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Chain:
    samples: np.ndarray
    sigma2s: np.ndarray
    accepted: np.ndarray
    cov_trace: list = field(default_factory=list)  # [(iteration, variance), ...]

    def __len__(self):
        return self.samples.size

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self) else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,q,sigma2,accepted\n")
        for k, (q, s2, a) in enumerate(zip(self.samples, self.sigma2s, self.accepted), start=1):
            buf.write(f"{k},{float(q)!r},{float(s2)!r},{int(a)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Chain":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            np.array([float(r["q"]) for r in rows]),
            np.array([float(r["sigma2"]) for r in rows]),
            np.array([r["accepted"] == "1" for r in rows]),
        )


@dataclass(frozen=True)
class Posterior:
    mean: float
    std: float
    median: float
    q05: float
    q95: float
    acceptance_rate: float
    n_samples: int
    n_burn: int

    def to_dict(self) -> dict:
        return asdict(self)


def log_likelihood(data, predicted, sigma2: float) -> float:
    """Gaussian log-likelihood of i.i.d. residuals with variance ``sigma2``."""
    data = np.asarray(data, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if data.shape != predicted.shape or data.size == 0:
        raise LengthMismatch(f"data {data.shape} and prediction {predicted.shape} differ or are empty")
    if not sigma2 > 0:
        raise NonPositiveVariance(f"noise variance must be positive, got {sigma2}")
    sse = float(np.sum((data - predicted) ** 2))
    return _loglik(data.size, sse, sigma2)


def _loglik(n: int, sse: float, sigma2: float) -> float:
    return -0.5 * n * math.log(2.0 * math.pi * sigma2) - sse / (2.0 * sigma2)


def sample_gamma(shape: float, rng: np.random.Generator) -> float:
    """Unit-scale gamma draw (Marsaglia-Tsang squeeze; shape < 1 via the
    U**(1/shape) boost of a shape + 1 draw)."""
    if not shape > 0:
        raise BadParameters(f"gamma shape must be positive, got {shape}")
    if shape < 1.0:
        return sample_gamma(shape + 1.0, rng) * rng.random() ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = rng.standard_normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.random()
        if u < 1.0 - 0.0331 * x ** 4:
            return d * v
        if u > 0.0 and math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v


def sample_inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    if not (shape > 0 and scale > 0):
        raise BadParameters(f"inverse-gamma needs positive shape and scale, got ({shape}, {scale})")
    while True:
        g = sample_gamma(shape, rng)
        if g > 0.0:
            return scale / g


def propose(q_m: float, cov: float, rng: np.random.Generator) -> float:
    if cov < 0:
        raise ValueError("proposal variance must be non-negative")
    return q_m + math.sqrt(cov) * rng.standard_normal()


def update_covariance(history, bounds: tuple = (1.0, 500.0)) -> float:
    """Scaled sample variance of the recent states plus a small floor."""
    history = np.asarray(history, dtype=np.float64)
    if history.size < 2:
        raise ShortHistory(f"need at least 2 states to estimate a variance, got {history.size}")
    eps_reg = REG_FRACTION * (bounds[1] - bounds[0]) ** 2
    return SCALE_1D * (float(np.var(history, ddof=1)) + eps_reg)


def run_chain(cfg: McmcConfig, surrogate: Surrogate, data) -> Chain:
    """Run ``cfg.n`` adaptive Metropolis iterations against ``data``.

    ``surrogate(q)`` must return the predicted series at the data's time
    stamps and be deterministic in ``q``.
    """
    values = data.values if isinstance(data, TimeSeries) else np.asarray(data, dtype=np.float64)
    n_data = values.size
    ql, qu = cfg.bounds
    rng = make_rng(cfg.seed)

    def sse(q):
        try:
            pred = np.asarray(surrogate(q), dtype=np.float64)
        except Exception as exc:
            raise type(exc)(f"surrogate failed at q = {q!r}: {exc}") from exc
        if pred.shape != values.shape:
            raise LengthMismatch(f"surrogate returned {pred.shape} for data of shape {values.shape}")
        out = float(np.sum((values - pred) ** 2))
        if not math.isfinite(out):
            raise NumericError(f"non-finite misfit at q = {q!r}")
        return out

    def log_prior(q):
        if cfg.gaussian_prior is None:
            return 0.0
        mu, sd = cfg.gaussian_prior
        return -0.5 * ((q - mu) / sd) ** 2

    shape = cfg.ig_shape + 0.5 * n_data

    def draw_sigma2(sse_q):
        if cfg.fixed_sigma2 is not None:
            return float(cfg.fixed_sigma2)
        return sample_inverse_gamma(shape, cfg.ig_scale + 0.5 * sse_q, rng)

    q = float(cfg.q0)
    sse_q = sse(q)
    sigma2 = draw_sigma2(sse_q)
    V = cfg.initial_variance

    samples = np.empty(cfg.n)
    sigma2s = np.empty(cfg.n)
    accepted = np.zeros(cfg.n, dtype=bool)
    cov_trace = []
    for m in range(cfg.n):
        q_star = propose(q, V, rng)
        if ql < q_star < qu:
            sse_star = sse(q_star)
            sigma2 = draw_sigma2(sse_star)
            delta = (sse_q - sse_star) / (2.0 * sigma2) + log_prior(q_star) - log_prior(q)
            if delta >= 0.0 or math.log(rng.random()) < delta:
                q, sse_q = q_star, sse_star
                accepted[m] = True
        samples[m] = q
        sigma2s[m] = sigma2
        if (m + 1) % cfg.m0 == 0:
            V = update_covariance(samples[m + 1 - cfg.m0:m + 1], cfg.bounds)
            cov_trace.append((m + 1, V))
    return Chain(samples, sigma2s, accepted, cov_trace)


def summarize(chain: Chain, burn_in_fraction: float = 0.5) -> Posterior:
    if not 0 < burn_in_fraction < 1:
        raise ValueError("burn-in fraction must lie in (0, 1)")
    n = len(chain)
    start = math.ceil(burn_in_fraction * n)
    post = chain.samples[start:]
    if post.size == 0:
        raise EmptyPostBurnIn(f"no samples left after discarding {start} of {n}")
    q05, med, q95 = np.quantile(post, [0.05, 0.5, 0.95])
    return Posterior(
        mean=float(np.mean(post)),
        std=float(np.std(post)),
        median=float(med),
        q05=float(q05),
        q95=float(q95),
        acceptance_rate=chain.acceptance_rate,
        n_samples=int(post.size),
        n_burn=int(start),
    )


def posterior_json(post: Posterior, **extra) -> str:
    return json.dumps({**post.to_dict(), **extra}, indent=2, sort_keys=True) + "\n"
