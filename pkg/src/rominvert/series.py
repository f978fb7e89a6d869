"""Time-series container, windowing, overlap-average reassembly, scaling and noise."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataIOError, NonDivisible, ParseError, ShapeMismatch, WindowTooLong


class Regime(str, enum.Enum):
    NONOVERLAPPING = "nonoverlapping"
    SLIDING = "sliding"


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar series; time in days, values in meters."""

    t0: float
    dt: float
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if values.size == 0:
            raise ValueError("series must be non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    def with_values(self, values, label=None) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, values, self.label if label is None else label)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.t0 == other.t0
            and self.dt == other.dt
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class WindowSpec:
    length: int
    stride: int
    regime: Regime

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.length < 1 or self.stride < 1:
            raise ValueError("window length and stride must be positive")
        if self.regime is Regime.NONOVERLAPPING and self.stride != self.length:
            raise ValueError("nonoverlapping windows require stride == length")

    @classmethod
    def nonoverlapping(cls, length: int = 23) -> "WindowSpec":
        return cls(length, length, Regime.NONOVERLAPPING)

    @classmethod
    def sliding(cls, length: int = 10, stride: int = 1) -> "WindowSpec":
        return cls(length, stride, Regime.SLIDING)

    @property
    def nonstandard(self) -> bool:
        return self.regime is Regime.SLIDING and self.stride != 1

    def count(self, source_len: int) -> int:
        return (source_len - self.length) // self.stride + 1

    def starts(self, source_len: int) -> np.ndarray:
        return np.arange(self.count(source_len)) * self.stride

    def check(self, source_len: int) -> None:
        if self.length > source_len:
            raise WindowTooLong(f"window length {self.length} exceeds series length {source_len}")
        if self.regime is Regime.NONOVERLAPPING and source_len % self.length:
            raise NonDivisible(
                f"series length {source_len} is not divisible by window length {self.length}"
            )

    def to_dict(self) -> dict:
        return {"length": self.length, "stride": self.stride, "regime": self.regime.value}

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        return cls(int(d["length"]), int(d["stride"]), Regime(d["regime"]))


@dataclass(frozen=True)
class WindowedDataset:
    spec: WindowSpec
    source_len: int
    windows: np.ndarray  # (count, length)

    def __len__(self):
        return self.windows.shape[0]


def window_index(spec: WindowSpec, source_len: int) -> np.ndarray:
    """(count, length) array of source indices covered by each window."""
    spec.check(source_len)
    return spec.starts(source_len)[:, None] + np.arange(spec.length)[None, :]


def make_windows(series, spec: WindowSpec) -> WindowedDataset:
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    idx = window_index(spec, values.size)
    return WindowedDataset(spec, values.size, values[idx])


def reassemble(dataset: WindowedDataset, window_outputs) -> np.ndarray:
    """Average every window prediction covering each source index.

    For nonoverlapping windows this is plain concatenation.
    """
    outputs = np.asarray(window_outputs, dtype=np.float64)
    expected = (len(dataset), dataset.spec.length)
    if outputs.shape != expected:
        raise ShapeMismatch(f"window outputs have shape {outputs.shape}, expected {expected}")
    idx = dataset.spec.starts(dataset.source_len)[:, None] + np.arange(dataset.spec.length)
    total = np.zeros(dataset.source_len)
    cover = np.zeros(dataset.source_len)
    np.add.at(total, idx, outputs)
    np.add.at(cover, idx, 1.0)
    if np.any(cover == 0):
        raise ShapeMismatch("windows do not cover every source index")
    return total / cover


@dataclass(frozen=True)
class Affine:
    """Min-max map from [vmin, vmax] onto [lo, hi]."""

    vmin: float
    vmax: float
    lo: float = 0.0
    hi: float = 1.0

    @property
    def degenerate(self) -> bool:
        return self.vmax == self.vmin

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.degenerate:
            return np.full_like(x, self.lo)
        return self.lo + (x - self.vmin) * (self.hi - self.lo) / (self.vmax - self.vmin)

    def invert(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.degenerate:
            return np.full_like(y, self.vmin)
        return self.vmin + (y - self.lo) * (self.vmax - self.vmin) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"vmin": self.vmin, "vmax": self.vmax, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "Affine":
        return cls(float(d["vmin"]), float(d["vmax"]), float(d["lo"]), float(d["hi"]))


def normalize(values, lo: float = 0.0, hi: float = 1.0):
    """Scale ``values`` so min -> lo and max -> hi.

    A constant input is the degenerate-range case: every entry maps to ``lo``
    and the returned constants remember the constant so it can be restored.
    """
    if not hi > lo:
        raise ValueError("normalize requires hi > lo")
    values = np.asarray(values, dtype=np.float64)
    scale = Affine(float(values.min()), float(values.max()), float(lo), float(hi))
    return scale.apply(values), scale


def denormalize(scaled, scale: Affine) -> np.ndarray:
    return scale.invert(scaled)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be non-negative, got {self.sigma}")


def make_rng(seed) -> np.random.Generator:
    """The one RNG used throughout: numpy's PCG64 bit generator."""
    return np.random.Generator(np.random.PCG64(seed))


def add_noise(series: TimeSeries, noise: NoiseModel) -> TimeSeries:
    if noise.sigma == 0:
        return series.with_values(series.values.copy(), label=f"{series.label}+noise(0)")
    rng = make_rng(noise.seed)
    eps = rng.standard_normal(len(series)) * noise.sigma
    return series.with_values(series.values + eps, label=f"{series.label}+noise({noise.sigma!r})")


def boundary_jump(values, window_length: int) -> float:
    """Mean |u[k*w] - u[k*w - 1]| over interior window boundaries."""
    values = np.asarray(values, dtype=np.float64)
    ks = np.arange(window_length, values.size, window_length)
    if ks.size == 0:
        return 0.0
    return float(np.mean(np.abs(values[ks] - values[ks - 1])))


# -- CSV -------------------------------------------------------------------


def series_to_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    buf.write("t,value\n")
    for t, v in zip(series.times, series.values):
        buf.write(f"{float(t)!r},{float(v)!r}\n")
    return buf.getvalue()


def write_series_csv(series: TimeSeries, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(series_to_csv(series))
    return path


def parse_series_csv(text: str, label: str = "") -> TimeSeries:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ParseError("series CSV must start with header 't,value'")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed series CSV row: {exc}") from None
    if data.shape[0] == 0:
        raise ParseError("series CSV has no rows")
    t = data[:, 0]
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    if t.size > 1 and not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ParseError("series CSV times are not uniformly spaced")
    if not np.all(np.isfinite(data)):
        raise ParseError("series CSV contains non-finite values")
    try:
        return TimeSeries(float(t[0]), dt, data[:, 1], label)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_series_csv(path, label: str | None = None) -> TimeSeries:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataIOError(f"cannot read series CSV {path}: {exc.strerror}") from None
    try:
        return parse_series_csv(text, label=path.stem if label is None else label)
    except ParseError as exc:
        raise type(exc)(f"{path}: {exc}") from None
