"""Single-layer LSTM encoder-decoder in numpy with hand-written backprop through time.

The encoder reads a window of (normalized time, normalized rate) pairs; its final
hidden and cell states seed a decoder that emits one normalized displacement per
step through a linear head. Gates are stacked in the order input, forget, cell,
output along the last axis of every weight tensor. Everything is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

ENC_FEATURES = 2
DEC_FEATURES = 1

# declared order for flattening, persistence and gradient checks
PARAM_NAMES = ("enc_Wx", "enc_Wh", "enc_b", "dec_Wx", "dec_Wh", "dec_b", "head_W", "head_b")


def param_shapes(hidden: int) -> dict:
    H = hidden
    return {
        "enc_Wx": (ENC_FEATURES, 4 * H),
        "enc_Wh": (H, 4 * H),
        "enc_b": (4 * H,),
        "dec_Wx": (DEC_FEATURES, 4 * H),
        "dec_Wh": (H, 4 * H),
        "dec_b": (4 * H,),
        "head_W": (H,),
        "head_b": (),
    }


@dataclass
class LstmWeights:
    hidden: int
    params: dict

    def __post_init__(self):
        shapes = param_shapes(self.hidden)
        if set(self.params) != set(shapes):
            raise DimensionMismatch(f"expected parameters {PARAM_NAMES}, got {sorted(self.params)}")
        for name, shape in shapes.items():
            arr = np.asarray(self.params[name], dtype=np.float64)
            if arr.shape != shape:
                raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            self.params[name] = arr

    def __getitem__(self, name):
        return self.params[name]

    @classmethod
    def init(cls, hidden: int, rng: np.random.Generator) -> "LstmWeights":
        """Uniform(-1/sqrt(H), 1/sqrt(H)) for every tensor, drawn in declared order."""
        bound = 1.0 / np.sqrt(hidden)
        shapes = param_shapes(hidden)
        return cls(hidden, {n: rng.uniform(-bound, bound, size=shapes[n]) for n in PARAM_NAMES})

    @classmethod
    def zeros(cls, hidden: int) -> "LstmWeights":
        return cls(hidden, {n: np.zeros(s) for n, s in param_shapes(hidden).items()})

    def copy(self) -> "LstmWeights":
        return LstmWeights(self.hidden, {n: a.copy() for n, a in self.params.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[n].ravel() for n in PARAM_NAMES])

    @classmethod
    def from_flat(cls, hidden: int, flat) -> "LstmWeights":
        flat = np.asarray(flat, dtype=np.float64)
        shapes = param_shapes(hidden)
        sizes = [int(np.prod(shapes[n], dtype=int)) for n in PARAM_NAMES]
        if flat.size != sum(sizes):
            raise DimensionMismatch(f"flat weight vector has {flat.size} entries, expected {sum(sizes)}")
        out, pos = {}, 0
        for n, size in zip(PARAM_NAMES, sizes):
            out[n] = flat[pos:pos + size].reshape(shapes[n]).copy()
            pos += size
        return cls(hidden, out)

    def __eq__(self, other):
        if not isinstance(other, LstmWeights):
            return NotImplemented
        return self.hidden == other.hidden and all(
            np.array_equal(self.params[n], other.params[n]) for n in PARAM_NAMES
        )


def _sigmoid(z):
    # tanh form never overflows
    return 0.5 + 0.5 * np.tanh(0.5 * z)


def _gates(x, h, Wx, Wh, b):
    H = Wh.shape[0]
    if x.shape[-1] != Wx.shape[0] or h.shape[-1] != H:
        raise DimensionMismatch(
            f"input width {x.shape[-1]} / hidden width {h.shape[-1]} do not match weights "
            f"({Wx.shape[0]}, {H})"
        )
    a = x @ Wx + h @ Wh + b
    i = _sigmoid(a[..., :H])
    f = _sigmoid(a[..., H:2 * H])
    g = np.tanh(a[..., 2 * H:3 * H])
    o = _sigmoid(a[..., 3 * H:])
    return i, f, g, o


def lstm_cell(x, h, c, Wx, Wh, b):
    """One LSTM step. Works on single vectors or on a leading batch axis."""
    x, h, c = (np.asarray(v, dtype=np.float64) for v in (x, h, c))
    if c.shape != h.shape:
        raise DimensionMismatch(f"cell state shape {c.shape} differs from hidden {h.shape}")
    i, f, g, o = _gates(x, h, Wx, Wh, b)
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def encode(inputs, w: LstmWeights):
    """Final (h, c) after reading ``inputs`` of shape (T, 2) or (B, T, 2)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim not in (2, 3) or inputs.shape[-1] != ENC_FEATURES:
        raise DimensionMismatch(f"encoder inputs must be (T, 2) or (B, T, 2), got {inputs.shape}")
    batch = inputs.shape[:-2]
    h = np.zeros(batch + (w.hidden,))
    c = np.zeros_like(h)
    for k in range(inputs.shape[-2]):
        h, c = lstm_cell(inputs[..., k, :], h, c, w["enc_Wx"], w["enc_Wh"], w["enc_b"])
    return h, c


def decode(h, c, steps: int, w: LstmWeights, first_input: float = 0.0, targets=None,
           return_inputs: bool = False):
    """Unroll the decoder for ``steps`` steps from the encoder states.

    Step inputs are the previous step's output (free running) unless
    ``targets`` is given, in which case the previous ground-truth target is
    fed instead (teacher forcing). The first input is ``first_input``.
    """
    if steps < 1:
        raise ValueError("decode needs at least one step")
    h = np.asarray(h, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    batch = h.shape[:-1]
    if targets is not None:
        targets = np.asarray(targets, dtype=np.float64).reshape(batch + (steps,))
    out = np.empty(batch + (steps,))
    fed = np.empty(batch + (steps,))
    prev = np.full(batch, float(first_input))
    for k in range(steps):
        fed[..., k] = prev
        h, c = lstm_cell(prev[..., None], h, c, w["dec_Wx"], w["dec_Wh"], w["dec_b"])
        out[..., k] = h @ w["head_W"] + w["head_b"]
        prev = targets[..., k] if targets is not None else out[..., k]
    if return_inputs:
        return out, fed
    return out


def predict(inputs, w: LstmWeights, first_input: float = 0.0):
    """Free-running reconstruction of each window: (B, T, 2) -> (B, T)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    h, c = encode(inputs, w)
    return decode(h, c, inputs.shape[-2], w, first_input)


def loss_and_grad(w: LstmWeights, inputs, targets, teacher_forcing: bool = True,
                  first_input: float = 0.0):
    """Mean squared error over every (window, step) and its gradient for each parameter.

    inputs: (B, T, 2) encoder features; targets: (B, T) normalized displacement.
    """
    X = np.asarray(inputs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 3 or X.shape[-1] != ENC_FEATURES or Y.shape != X.shape[:2]:
        raise DimensionMismatch(f"inputs {X.shape} and targets {Y.shape} are not congruent")
    B, T, _ = X.shape
    H = w.hidden
    P = w.params

    # forward, caching per-step activations
    enc_cache = []
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for k in range(T):
        x = X[:, k, :]
        i, f, g, o = _gates(x, h, P["enc_Wx"], P["enc_Wh"], P["enc_b"])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        enc_cache.append((x, h, c, i, f, g, o, tc))
        h, c = o * tc, c_new

    dec_cache = []
    out = np.empty((B, T))
    prev = np.full(B, float(first_input))
    for k in range(T):
        x = prev[:, None]
        i, f, g, o = _gates(x, h, P["dec_Wx"], P["dec_Wh"], P["dec_b"])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        dec_cache.append((x, h, c, i, f, g, o, tc, h_new))
        h, c = h_new, c_new
        out[:, k] = h @ P["head_W"] + P["head_b"]
        prev = Y[:, k] if teacher_forcing else out[:, k]

    resid = out - Y
    loss = float(np.mean(resid ** 2))
    dout = 2.0 * resid / resid.size

    grads = {n: np.zeros_like(P[n]) for n in PARAM_NAMES}
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    carry = np.zeros(B)  # gradient reaching out[k] through the next step's input
    for k in reversed(range(T)):
        x, h_prev, c_prev, i, f, g, o, tc, h_new = dec_cache[k]
        d_o = dout[:, k] + carry
        grads["head_W"] += h_new.T @ d_o
        grads["head_b"] += d_o.sum()
        dh = dh + d_o[:, None] * P["head_W"]
        da, dc = _cell_backward(dh, dc, c_prev, i, f, g, o, tc)
        grads["dec_Wx"] += x.T @ da
        grads["dec_Wh"] += h_prev.T @ da
        grads["dec_b"] += da.sum(axis=0)
        dh = da @ P["dec_Wh"].T
        carry = np.zeros(B) if teacher_forcing else (da @ P["dec_Wx"].T)[:, 0]

    for k in reversed(range(T)):
        x, h_prev, c_prev, i, f, g, o, tc = enc_cache[k]
        da, dc = _cell_backward(dh, dc, c_prev, i, f, g, o, tc)
        grads["enc_Wx"] += x.T @ da
        grads["enc_Wh"] += h_prev.T @ da
        grads["enc_b"] += da.sum(axis=0)
        dh = da @ P["enc_Wh"].T

    return loss, grads


def _cell_backward(dh, dc, c_prev, i, f, g, o, tc):
    """Gradient w.r.t. stacked pre-activations and the previous cell state."""
    d_o = dh * tc
    dct = dc + dh * o * (1.0 - tc * tc)
    di = dct * g
    dg = dct * i
    df = dct * c_prev
    da = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), d_o * o * (1.0 - o)],
        axis=-1,
    )
    return da, dct * f
