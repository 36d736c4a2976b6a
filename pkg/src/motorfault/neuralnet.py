"""Feedforward sigmoid network trained by per-sample backpropagation."""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import _backend
from ._rng import SplitMix64, derive_seed
from .errors import DivergenceError, ParseError, StructuralError, UsageError

SCHEMA = "motorfault-model"
SCHEMA_VERSION = 1

_SHUFFLE_STREAM = 1


@dataclass(frozen=True)
class NetworkConfig:
    hidden_layers: tuple = (10,)
    input_dim: int = 6
    output_dim: int = 7
    learning_rate: float = 0.1
    max_epochs: int = 2000
    target_loss: float = 1e-3
    seed: int = 0
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if any(w < 1 for w in self.hidden_layers):
            raise UsageError("hidden layer widths must be >= 1")
        if self.input_dim < 1 or self.output_dim < 1:
            raise UsageError("input_dim and output_dim must be >= 1")
        if not self.learning_rate > 0:
            raise UsageError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise UsageError("max_epochs must be >= 1")
        if not self.target_loss >= 0:
            raise UsageError("target_loss must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")

    @property
    def sizes(self):
        return (self.input_dim, *self.hidden_layers, self.output_dim)

    def check_trainable(self):
        # hand-built nets (e.g. a single 1x1 layer) may have no hidden layer; trained ones may not
        if not self.hidden_layers:
            raise UsageError("at least one hidden layer is required")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)


@dataclass
class Network:
    """Layer stack plus the config that built it.

    ``scaler`` is an optional ``(mins, maxs)`` pair fitted on training
    inputs; :meth:`predict` applies it, :func:`forward` does not.
    """

    layers: list
    config: NetworkConfig
    scaler: tuple = None

    def __post_init__(self):
        width = self.config.input_dim
        for idx, layer in enumerate(self.layers):
            w = np.asarray(layer.weights, dtype=np.float64)
            b = np.asarray(layer.bias, dtype=np.float64)
            if w.ndim != 2 or w.shape[1] != width:
                raise StructuralError(f"expected input width {width}, got shape {w.shape}", layer=idx)
            if b.shape != (w.shape[0],):
                raise StructuralError(f"bias shape {b.shape} does not match {w.shape[0]} outputs", layer=idx)
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise StructuralError("non-finite parameter", layer=idx)
            w.flags.writeable = False
            b.flags.writeable = False
            self.layers[idx] = Layer(w, b)
            width = w.shape[0]
        if width != self.config.output_dim:
            raise StructuralError(f"final width {width} != output_dim {self.config.output_dim}")

    @property
    def sizes(self):
        return (self.config.input_dim, *(layer.weights.shape[0] for layer in self.layers))

    def scale(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.scaler is None:
            return x
        lo, hi = self.scaler
        return (x - lo) / (hi - lo)

    def predict(self, x):
        """Output activations for a raw (unscaled) input vector."""
        return forward(self, self.scale(x))[-1]


@dataclass
class TrainReport:
    epochs_run: int
    final_loss: float
    loss_history: list = field(default_factory=list)
    stopped_early: bool = False


def sigmoid(x):
    """Logistic function, saturating inside the open interval (0, 1)."""
    return _backend.python_kernels.sigmoid(float(x))


_vsigmoid = np.frompyfunc(sigmoid, 1, 1)


def _sigmoid_array(z):
    return _vsigmoid(z).astype(np.float64)


def forward(net, x):
    """Activations of every layer, input first, output last."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (net.config.input_dim,):
        raise StructuralError(f"input shape {a.shape}, expected ({net.config.input_dim},)", layer=0)
    if not np.all(np.isfinite(a)):
        raise StructuralError("non-finite input", layer=0)
    acts = [a]
    for layer in net.layers:
        a = _sigmoid_array(layer.weights @ a + layer.bias)
        acts.append(a)
    return acts


def loss_mse(output, target):
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise StructuralError(f"length mismatch {output.shape} vs {target.shape}")
    return float(np.mean((output - target) ** 2))


def backprop_gradients(net, x, target):
    """Gradients of ``loss_mse(forward(net, x)[-1], target)``.

    Returns a list of ``(dW, db)`` pairs, one per layer.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (net.config.output_dim,):
        raise StructuralError(
            f"target shape {target.shape}, expected ({net.config.output_dim},)", layer=len(net.layers) - 1
        )
    acts = forward(net, x)
    out = acts[-1]
    delta = (2.0 / out.size) * (out - target) * out * (1.0 - out)
    grads = [None] * len(net.layers)
    for idx in range(len(net.layers) - 1, -1, -1):
        a_prev = acts[idx]
        grads[idx] = (np.outer(delta, a_prev), delta.copy())
        if idx:
            delta = (net.layers[idx].weights.T @ delta) * a_prev * (1.0 - a_prev)
    return grads


def init_weights(config):
    """Glorot-uniform weights, zero biases, fully determined by ``config.seed``."""
    config.check_trainable()
    rng = SplitMix64(config.seed)
    sizes = config.sizes
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = math.sqrt(6.0 / (fan_in + fan_out))
        w = np.array([rng.uniform_range(-r, r) for _ in range(fan_out * fan_in)]).reshape(fan_out, fan_in)
        layers.append(Layer(w, np.zeros(fan_out)))
    return Network(layers, config)


def _pack(net):
    return np.concatenate([np.concatenate([l.weights.ravel(), l.bias]) for l in net.layers])


def _unpack(params, net):
    layers = []
    off = 0
    for layer in net.layers:
        out, inp = layer.weights.shape
        w = params[off : off + out * inp].reshape(out, inp).copy()
        off += out * inp
        b = params[off : off + out].copy()
        off += out
        layers.append(Layer(w, b))
    return layers


def fit_scaler(X):
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    return lo, hi


def train(config, data, scale=False, backend=None, on_epoch=None):
    """Per-sample SGD until ``max_epochs`` or the epoch mean loss reaches ``target_loss``.

    ``data`` is a :class:`~motorfault.dataset.Dataset` or an ``(X, Y)`` pair of
    arrays. Returns ``(network, TrainReport)``.
    """
    X, Y = _as_arrays(data)
    if len(X) == 0:
        raise UsageError("cannot train on an empty dataset")
    if X.shape[1] != config.input_dim or Y.shape[1] != config.output_dim:
        raise StructuralError(
            f"data widths ({X.shape[1]}, {Y.shape[1]}) do not match config "
            f"({config.input_dim}, {config.output_dim})"
        )
    kern = _backend.get(backend)

    net = init_weights(config)
    scaler = None
    if scale:
        scaler = fit_scaler(X)
        X = (X - scaler[0]) / (scaler[1] - scaler[0])
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)

    params = _pack(net)
    sizes = np.asarray(config.sizes, dtype=np.intp)
    order = np.arange(len(X), dtype=np.intp)
    shuffler = SplitMix64(derive_seed(config.seed, _SHUFFLE_STREAM))

    history = []
    stopped = False
    for epoch in range(1, config.max_epochs + 1):
        if config.shuffle_each_epoch:
            order = np.asarray(shuffler.shuffle(order.tolist()), dtype=np.intp)
        loss = kern.sgd_epoch(params, sizes, X, Y, order, config.learning_rate)
        if not math.isfinite(loss) or not np.all(np.isfinite(params)):
            raise DivergenceError(epoch)
        history.append(loss)
        if on_epoch is not None:
            on_epoch(epoch, loss)
        if loss <= config.target_loss:
            stopped = True
            break

    trained = Network(_unpack(params, net), config, scaler)
    return trained, TrainReport(len(history), history[-1], history, stopped)


def _as_arrays(data):
    if isinstance(data, tuple):
        X, Y = data
        return np.asarray(X, dtype=np.float64), np.asarray(Y, dtype=np.float64)
    return data.arrays()


# -- persistence ------------------------------------------------------------
#
# Line-oriented UTF-8 text, one ``key value...`` record per line:
#
#   motorfault-model 1
#   input_dim 6
#   output_dim 7
#   hidden_layers 10            (space-separated widths)
#   learning_rate 0.1
#   max_epochs 2000
#   target_loss 0.001
#   seed 1
#   shuffle_each_epoch true|false
#   scaler none                 or: scaler <6 mins> <6 maxs>
#   layers 2
#   layer 0 10 6                index, out, in
#   weights <out*in floats, row-major>
#   bias <out floats>
#   ...                         (layer/weights/bias repeated per layer)
#   end
#
# Floats are written with repr(), which round-trips float64 exactly.


def _fmt(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_model(net):
    cfg = net.config
    lines = [
        f"{SCHEMA} {SCHEMA_VERSION}",
        f"input_dim {cfg.input_dim}",
        f"output_dim {cfg.output_dim}",
        "hidden_layers " + " ".join(str(w) for w in cfg.hidden_layers),
        f"learning_rate {cfg.learning_rate!r}",
        f"max_epochs {cfg.max_epochs}",
        f"target_loss {float(cfg.target_loss)!r}",
        f"seed {cfg.seed}",
        f"shuffle_each_epoch {'true' if cfg.shuffle_each_epoch else 'false'}",
        "scaler none" if net.scaler is None else f"scaler {_fmt(net.scaler[0])} {_fmt(net.scaler[1])}",
        f"layers {len(net.layers)}",
    ]
    for idx, layer in enumerate(net.layers):
        out, inp = layer.weights.shape
        lines.append(f"layer {idx} {out} {inp}")
        lines.append(f"weights {_fmt(layer.weights)}")
        lines.append(f"bias {_fmt(layer.bias)}")
    lines.append("end")
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Reader:
    def __init__(self, text):
        self.lines = text.split("\n")
        self.pos = 0

    def record(self, key):
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of input, expected {key!r}", line=self.pos + 1)
        self.pos += 1
        parts = self.lines[self.pos - 1].split()
        if parts[0] != key:
            raise ParseError(f"expected {key!r}, found {parts[0]!r}", line=self.pos)
        return parts[1:]

    def ints(self, key, count=None):
        vals = self.record(key)
        return self._convert(vals, int, key, count)

    def floats(self, key, count=None):
        vals = self.record(key)
        out = self._convert(vals, float, key, count)
        if not all(math.isfinite(v) for v in out):
            raise ParseError(f"non-finite value in {key!r}", line=self.pos)
        return out

    def _convert(self, vals, kind, key, count):
        if count is not None and len(vals) != count:
            raise ParseError(f"{key!r} expects {count} values, found {len(vals)}", line=self.pos)
        try:
            return [kind(v) for v in vals]
        except ValueError:
            raise ParseError(f"bad number in {key!r}", line=self.pos) from None


def load_model(data):
    """Inverse of :func:`save_model`. Raises :class:`ParseError` on bad input."""
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text at byte {exc.start}") from None
    else:
        text = data
    r = _Reader(text)
    header = r.record(SCHEMA)
    if header != [str(SCHEMA_VERSION)]:
        raise ParseError(f"unsupported schema version {' '.join(header)!r}", line=r.pos)
    input_dim = r.ints("input_dim", 1)[0]
    output_dim = r.ints("output_dim", 1)[0]
    hidden = r.ints("hidden_layers")
    lr = r.floats("learning_rate", 1)[0]
    max_epochs = r.ints("max_epochs", 1)[0]
    target_loss = r.record("target_loss")
    try:
        target_loss = float(target_loss[0])
    except (ValueError, IndexError):
        raise ParseError("bad number in 'target_loss'", line=r.pos) from None
    seed = r.ints("seed", 1)[0]
    shuffle = r.record("shuffle_each_epoch")
    if shuffle not in (["true"], ["false"]):
        raise ParseError("shuffle_each_epoch must be true or false", line=r.pos)
    scaler_vals = r.record("scaler")
    if scaler_vals == ["none"]:
        scaler = None
    else:
        r.pos -= 1
        vals = r.floats("scaler", 2 * input_dim)
        scaler = (np.array(vals[:input_dim]), np.array(vals[input_dim:]))
    try:
        config = NetworkConfig(
            hidden_layers=tuple(hidden),
            input_dim=input_dim,
            output_dim=output_dim,
            learning_rate=lr,
            max_epochs=max_epochs,
            target_loss=target_loss,
            seed=seed,
            shuffle_each_epoch=shuffle == ["true"],
        )
    except UsageError as exc:
        raise ParseError(f"invalid config: {exc}", line=r.pos) from None
    n_layers = r.ints("layers", 1)[0]
    if n_layers != len(config.sizes) - 1:
        raise ParseError(f"{n_layers} layers declared but config implies {len(config.sizes) - 1}", line=r.pos)
    layers = []
    for idx in range(n_layers):
        i, out, inp = r.ints("layer", 3)
        if i != idx or (inp, out) != config.sizes[idx : idx + 2]:
            raise ParseError(f"layer header {i} {out} {inp} does not match config", line=r.pos)
        w = np.array(r.floats("weights", out * inp)).reshape(out, inp)
        b = np.array(r.floats("bias", out))
        layers.append(Layer(w, b))
    r.record("end")
    try:
        return Network(layers, config, scaler)
    except StructuralError as exc:
        raise ParseError(str(exc)) from None


def with_weights(net, layers):
    """Copy of ``net`` with replaced layers (used by tests and tools)."""
    return replace(net, layers=[Layer(np.array(w, dtype=float), np.array(b, dtype=float)) for w, b in layers])
