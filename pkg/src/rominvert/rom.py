"""Reduced-order surrogate: train the LSTM autoencoder on per-rate displacement
series and evaluate it as a deterministic function of injection rate."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adam import AdamState, adam_step
from .errors import ConfigError, DataIOError, NonFiniteLoss, ParseError
from .lstm import PARAM_NAMES, LstmWeights, loss_and_grad, param_shapes, predict
from .series import Affine, TimeSeries, WindowedDataset, WindowSpec, make_rng, reassemble, window_index

FORMAT = "rominvert-rom"
FORMAT_VERSION = 1

EXTRAPOLATION_TOL = 1e-9


class ExtrapolationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrainConfig:
    window: WindowSpec = field(default_factory=WindowSpec.sliding)
    epochs: int = 10
    lr: float = 3e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    teacher_forcing: bool = True
    hidden: int = 5
    # windows per Adam step; 0 means the whole training set in one step
    batch_size: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")
        b1, b2 = self.betas
        if not (0 < b1 < 1 and 0 < b2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if not self.eps > 0:
            raise ConfigError("Adam epsilon must be positive")
        if self.hidden < 1:
            raise ConfigError("hidden size must be >= 1")
        if self.batch_size < 0:
            raise ConfigError("batch size must be >= 0")
        object.__setattr__(self, "betas", (float(b1), float(b2)))

    @classmethod
    def nonoverlapping(cls, **kw) -> "TrainConfig":
        return cls(window=WindowSpec.nonoverlapping(23), **kw)

    @classmethod
    def sliding(cls, **kw) -> "TrainConfig":
        return cls(window=WindowSpec.sliding(10, 1), **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = self.window.to_dict()
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown training settings: {sorted(unknown)}")
        if "window" in d and not isinstance(d["window"], WindowSpec):
            d["window"] = WindowSpec.from_dict(d["window"])
        if "betas" in d:
            d["betas"] = tuple(d["betas"])
        return cls(**d)


@dataclass
class RomModel:
    weights: LstmWeights
    window: WindowSpec
    t_scale: Affine
    q_scale: Affine
    u_scale: Affine
    rates: tuple
    config: TrainConfig
    loss_history: list = field(default_factory=list)

    @property
    def approach(self) -> str:
        return self.window.regime.value

    def __eq__(self, other):
        if not isinstance(other, RomModel):
            return NotImplemented
        return (
            self.weights == other.weights
            and self.window == other.window
            and (self.t_scale, self.q_scale, self.u_scale) == (other.t_scale, other.q_scale, other.u_scale)
            and tuple(self.rates) == tuple(other.rates)
            and self.config == other.config
            and list(self.loss_history) == list(other.loss_history)
        )

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "hidden": self.weights.hidden,
            "window": self.window.to_dict(),
            "normalization": {
                "t": self.t_scale.to_dict(),
                "q": self.q_scale.to_dict(),
                "u": self.u_scale.to_dict(),
            },
            "rates": [float(q) for q in self.rates],
            "train_config": self.config.to_dict(),
            "param_order": list(PARAM_NAMES),
            "shapes": {n: list(s) for n, s in param_shapes(self.weights.hidden).items()},
            "weights": {n: [float(x) for x in self.weights[n].ravel()] for n in PARAM_NAMES},
            "loss_history": [float(x) for x in self.loss_history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RomModel":
        if d.get("format") != FORMAT:
            raise ParseError(f"not a {FORMAT} document")
        if d.get("version") != FORMAT_VERSION:
            raise ParseError(f"unsupported model version {d.get('version')!r}")
        try:
            hidden = int(d["hidden"])
            if list(d["param_order"]) != list(PARAM_NAMES):
                raise ParseError("parameter order does not match this reader")
            shapes = param_shapes(hidden)
            params = {
                n: np.array(d["weights"][n], dtype=np.float64).reshape(shapes[n]) for n in PARAM_NAMES
            }
            norm = d["normalization"]
            return cls(
                weights=LstmWeights(hidden, params),
                window=WindowSpec.from_dict(d["window"]),
                t_scale=Affine.from_dict(norm["t"]),
                q_scale=Affine.from_dict(norm["q"]),
                u_scale=Affine.from_dict(norm["u"]),
                rates=tuple(float(q) for q in d["rates"]),
                config=TrainConfig.from_dict(d["train_config"]),
                loss_history=[float(x) for x in d.get("loss_history", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed model document: {exc}") from None

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "RomModel":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise DataIOError(f"cannot read model {path}: {exc.strerror}") from None
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from None


def _features(times, q, t_scale: Affine, q_scale: Affine, idx) -> np.ndarray:
    tn = t_scale.apply(np.asarray(times, dtype=np.float64)[idx])
    qn = np.full_like(tn, float(q_scale.apply(q)))
    return np.stack([tn, qn], axis=-1)


def _check_dataset(dataset: dict) -> list:
    if not dataset:
        raise ConfigError("training dataset is empty")
    series = list(dataset.values())
    ref = series[0]
    for s in series[1:]:
        if len(s) != len(ref) or s.t0 != ref.t0 or s.dt != ref.dt:
            raise ConfigError("all training series must share the same time grid")
    return series


def train(dataset: dict, cfg: TrainConfig) -> RomModel:
    """Fit encoder/decoder weights to every window of every rate's series.

    Windows from all rates are pooled; each epoch visits them in a seeded
    random order, taking one Adam step per ``cfg.batch_size`` windows.
    """
    series = _check_dataset(dataset)
    rates = tuple(float(q) for q in dataset)
    times = series[0].times
    idx = window_index(cfg.window, times.size)

    t_scale = Affine(float(times.min()), float(times.max()))
    q_scale = Affine(min(rates), max(rates))
    all_u = np.concatenate([s.values for s in series])
    u_scale = Affine(float(all_u.min()), float(all_u.max()))

    X = np.concatenate([_features(times, q, t_scale, q_scale, idx) for q in rates])
    Y = np.concatenate([u_scale.apply(s.values)[idx] for s in series])

    rng = make_rng(cfg.seed)
    w = LstmWeights.init(cfg.hidden, rng)
    params = w.params
    state = AdamState.zeros_like(params)
    b1, b2 = cfg.betas
    n_win = X.shape[0]
    bs = n_win if cfg.batch_size == 0 else min(cfg.batch_size, n_win)

    def full_loss(p):
        loss, _ = loss_and_grad(LstmWeights(cfg.hidden, p), X, Y, cfg.teacher_forcing)
        if not math.isfinite(loss):
            raise NonFiniteLoss("training loss became non-finite")
        return loss

    history = [full_loss(params)]
    for _ in range(cfg.epochs):
        order = rng.permutation(n_win)
        for start in range(0, n_win, bs):
            batch = order[start:start + bs]
            _, grads = loss_and_grad(LstmWeights(cfg.hidden, params), X[batch], Y[batch],
                                     cfg.teacher_forcing)
            params, state = adam_step(params, grads, state, cfg.lr, b1, b2, cfg.eps)
        history.append(full_loss(params))

    return RomModel(LstmWeights(cfg.hidden, params), cfg.window, t_scale, q_scale, u_scale,
                    rates, cfg, history)


class RomSurrogate:
    """Callable q -> predicted displacement at fixed time stamps.

    Window indices and time features are built once; each call only swaps
    in the rate feature. Read-only after construction.
    """

    def __init__(self, model: RomModel, times, warn: bool = True):
        times = np.asarray(times, dtype=np.float64)
        if times.size > 1 and not np.allclose(np.diff(times), times[1] - times[0], rtol=1e-9):
            raise ConfigError("reconstruction times must be uniformly spaced")
        self.model = model
        self.times = times
        self.warn = warn
        self._idx = window_index(model.window, times.size)
        self._tn = model.t_scale.apply(times[self._idx])
        self._frame = WindowedDataset(model.window, times.size, np.empty(self._idx.shape))

    def __call__(self, q: float) -> np.ndarray:
        m = self.model
        qn = float(m.q_scale.apply(q))
        if self.warn and not (-EXTRAPOLATION_TOL <= qn <= 1.0 + EXTRAPOLATION_TOL):
            warnings.warn(
                f"rate {q!r} lies outside the training grid [{min(m.rates)}, {max(m.rates)}]",
                ExtrapolationWarning,
                stacklevel=2,
            )
        X = np.stack([self._tn, np.full_like(self._tn, qn)], axis=-1)
        out = predict(X, m.weights)
        return m.u_scale.invert(reassemble(self._frame, out))


def reconstruct(model: RomModel, q: float, times) -> TimeSeries:
    """Encode/decode every window at rate ``q`` and stitch the pieces back together."""
    times = np.asarray(times, dtype=np.float64)
    values = RomSurrogate(model, times)(q)
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    return TimeSeries(float(times[0]), dt, values, label=f"rom[{model.approach}] q={q:g}")


def rom_evaluate(model: RomModel, q: float, times) -> np.ndarray:
    """Surrogate prediction used inside the likelihood; identical to ``reconstruct``."""
    return reconstruct(model, q, times).values
