"""Parametric displacement generator standing in for the coupled flow/geomechanics
simulator, plus slip-weakening friction and Mohr-Coulomb fault strength."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DuplicateRate, NonUnitNormal
from .series import TimeSeries


@dataclass(frozen=True)
class ForwardParams:
    """Shape parameters of the synthetic displacement curve.

    Rates are in MSCF/day, amplitudes in meters, times in days. The defaults
    give 115 daily samples and keep the curve monotone in the rate.
    """

    q_ref: float = 100.0
    amp_lin: float = 0.01
    amp_quad: float = 0.005
    amp_osc: float = 0.002
    tau: float = 20.0
    period: float = 30.0
    horizon: float = 114.0
    dt: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"ForwardParams.{name} must be positive, got {value}")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ValueError("horizon / dt must be an integer step count")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def to_dict(self) -> dict:
        return asdict(self)


def synth_displacement(t, q, p: ForwardParams = ForwardParams()):
    """u(t; q) = lin*(q/qr)*(1 - exp(-t/tau)) + quad*(q/qr)^2*(t/horizon) + osc*(q/qr)*sin(2 pi t/period)."""
    t = np.asarray(t, dtype=np.float64)
    r = q / p.q_ref
    u = (
        p.amp_lin * r * -np.expm1(-t / p.tau)
        + p.amp_quad * r * r * (t / p.horizon)
        + p.amp_osc * r * np.sin(2.0 * np.pi * t / p.period)
    )
    return float(u) if u.ndim == 0 else u


def generate_dataset(rates, p: ForwardParams = ForwardParams(), n_points: int | None = None) -> dict:
    """One clean series per rate, keyed by rate, in the order given.

    ``n_points`` truncates every series (e.g. to 115 samples).
    """
    rates = [float(q) for q in rates]
    if len(set(rates)) != len(rates):
        raise DuplicateRate(f"duplicate injection rates in {rates}")
    if any(not q > 0 for q in rates):
        raise ValueError("injection rates must be positive")
    t = p.times
    if n_points is not None:
        t = t[:n_points]
    return {q: TimeSeries(0.0, p.dt, synth_displacement(t, q, p), label=f"q={q:g}") for q in rates}


@dataclass(frozen=True)
class FrictionLaw:
    mu_s: float = 0.5
    mu_d: float = 0.2
    d_c: float = 5e-3
    tau_c: float = 0.0

    def __post_init__(self):
        if not (self.mu_s >= self.mu_d >= 0):
            raise ValueError("friction law needs mu_s >= mu_d >= 0")
        if not self.d_c > 0:
            raise ValueError("critical slip distance must be positive")
        if not self.tau_c >= 0:
            raise ValueError("cohesive strength must be non-negative")


def friction_coefficient(slip_mag: float, law: FrictionLaw = FrictionLaw()) -> float:
    """Linear slip-weakening from mu_s at zero slip to mu_d at d_c and beyond."""
    if slip_mag < 0:
        raise ValueError("slip magnitude must be non-negative")
    if slip_mag <= law.d_c:
        return law.mu_s - (law.mu_s - law.mu_d) * slip_mag / law.d_c
    return law.mu_d


def fault_strength(traction, normal, law: FrictionLaw, mu_f: float) -> tuple[float, float]:
    """Shear stress tau and frictional strength tau_f on a fault with unit normal.

    Compression (l.n < 0) adds mu_f * |l.n| to the cohesion; otherwise only
    cohesion resists.
    """
    l = np.asarray(traction, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    if abs(float(np.linalg.norm(n)) - 1.0) > 1e-12:
        raise NonUnitNormal(f"fault normal {n.tolist()} is not a unit vector")
    ln = float(l @ n)
    tau = float(np.linalg.norm(l - ln * n))
    tau_f = law.tau_c - mu_f * ln if ln < 0 else law.tau_c
    return tau, float(tau_f)
