"""Deep autoencoder on patch supervectors.

The network is a stack of fully connected logistic layers, symmetric about
a narrow code layer (``h*l -> 50 -> 18 -> 6 -> 18 -> 50 -> h*l`` by
default). It is trained end to end on mean squared reconstruction error
with plain minibatch backprop.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricTopology,
    DimensionMismatch,
    IoFailure,
    MalformedModelFile,
    NonFiniteLoss,
    ShapeMismatch,
)

__all__ = [
    "DEFAULT_HIDDEN", "AutoencoderModel", "TrainConfig", "TrainLog",
    "init_model", "forward", "loss_and_grad", "train", "encode", "reconstruct",
    "save_model", "load_model", "model_to_text", "model_from_text", "export_weight_windows",
]

DEFAULT_HIDDEN = (50, 18, 6, 18, 50)
MODEL_MAGIC = "PATCHSEP-AE v1"
ACTIVATION = "logistic"


def sigmoid(z):
    # exp(-|z|) never overflows; both branches are exact rewrites of 1/(1+e^-z).
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class AutoencoderModel:
    layer_sizes: tuple
    weights: list
    biases: list
    activation: str = ACTIVATION

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        _check_topology(self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeMismatch("need one weight matrix and bias vector per layer transition")
        for t, (W, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[t + 1], self.layer_sizes[t])
            if W.shape != want or b.shape != (want[0],):
                raise ShapeMismatch(f"transition {t}: W{W.shape} b{b.shape}, expected W{want}")

    @property
    def code_index(self):
        return len(self.layer_sizes) // 2

    @property
    def code_size(self):
        return self.layer_sizes[self.code_index]

    @property
    def input_size(self):
        return self.layer_sizes[0]

    def params(self):
        """Weights then biases, in transition order (the order used by optimizers)."""
        return list(self.weights) + list(self.biases)

    def copy(self):
        return AutoencoderModel(self.layer_sizes, [W.copy() for W in self.weights],
                                [b.copy() for b in self.biases], self.activation)


def _check_topology(sizes):
    if len(sizes) < 3 or len(sizes) % 2 == 0:
        raise AsymmetricTopology(f"need an odd number (>= 3) of layers, got {list(sizes)}")
    if min(sizes) < 1:
        raise AsymmetricTopology(f"layer sizes must be >= 1, got {list(sizes)}")
    if tuple(sizes) != tuple(reversed(sizes)):
        raise AsymmetricTopology(f"layer sizes must be symmetric, got {list(sizes)}")


def init_model(layer_sizes, seed=0):
    """Glorot-uniform weights and zero biases from a seeded PCG64 stream."""
    sizes = tuple(int(s) for s in layer_sizes)
    _check_topology(sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return AutoencoderModel(sizes, weights, biases)


def _as_batch(model, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != model.input_size:
        raise DimensionMismatch(f"model expects vectors of length {model.input_size}, got shape {x.shape}")
    return x2, single


def forward(model, v):
    """Run the network on one supervector or a batch of rows.

    Returns ``(activations, code, output)`` where ``activations[0]`` is the
    input itself.
    """
    a, single = _as_batch(model, v)
    acts = [a]
    for W, b in zip(model.weights, model.biases):
        a = sigmoid(a @ W.T + b)
        acts.append(a)
    if single:
        acts = [x[0] for x in acts]
    return acts, acts[model.code_index], acts[-1]


def loss_and_grad(model, batch):
    """Mean squared reconstruction error and its gradient.

    Gradients come back as ``(grad_weights, grad_biases)`` with the same
    shapes as the model's parameters.
    """
    x, _ = _as_batch(model, batch)
    acts, _, out = forward(model, x)
    diff = out - x
    loss = float(np.mean(diff * diff))
    delta = (2.0 / diff.size) * diff * out * (1.0 - out)
    n_t = len(model.weights)
    gW, gb = [None] * n_t, [None] * n_t
    for t in range(n_t - 1, -1, -1):
        gW[t] = delta.T @ acts[t]
        gb[t] = delta.sum(axis=0)
        if t:
            a = acts[t]
            delta = (delta @ model.weights[t]) * a * (1.0 - a)
    return loss, (gW, gb)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.9
    batch_size: int = 128
    epochs: int = 200
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainLog:
    losses: list = field(default_factory=list)

    def __len__(self):
        return len(self.losses)


class _Adam:
    def __init__(self, params, cfg):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        lr_t = c.learning_rate * np.sqrt(1.0 - c.beta2 ** self.t) / (1.0 - c.beta1 ** self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * (g * g)
            p -= lr_t * m / (np.sqrt(v) + c.eps)


class _Momentum:
    def __init__(self, params, cfg):
        self.cfg = cfg
        self.vel = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, vel in zip(params, grads, self.vel):
            vel *= self.cfg.momentum
            vel -= self.cfg.learning_rate * g
            p += vel


def train(model, patches, cfg=TrainConfig(), on_epoch=None):
    """Minibatch training on patch supervectors.

    ``patches`` is a :class:`~patchsep.patching.PatchSet` or a plain
    ``N x d`` array. The input model is left untouched; a trained copy is
    returned with a :class:`TrainLog` of per-epoch losses, each the
    sample-weighted mean of the minibatch losses seen during that epoch.
    ``on_epoch(epoch, loss)`` is called after every epoch (1-based).
    """
    data = getattr(patches, "vectors", patches)
    data, _ = _as_batch(model, data)
    n = data.shape[0]
    if n == 0:
        raise DimensionMismatch("no training vectors")
    model = model.copy()
    params = model.params()
    opt = (_Adam if cfg.optimizer == "adam" else _Momentum)(params, cfg)
    rng = np.random.default_rng(cfg.seed)
    log = TrainLog()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = data[order[start:start + cfg.batch_size]]
            loss, (gW, gb) = loss_and_grad(model, batch)
            total += loss * batch.shape[0]
            if cfg.learning_rate:
                opt.step(params, gW + gb)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise NonFiniteLoss(epoch, epoch_loss)
        log.losses.append(epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)
    return model, log


def _batched(model, vectors, pick, batch_size):
    x, single = _as_batch(model, getattr(vectors, "vectors", vectors))
    width = model.layer_sizes[model.code_index] if pick == "code" else model.layer_sizes[-1]
    out = np.empty((x.shape[0], width))
    for start in range(0, x.shape[0], batch_size):
        _, code, recon = forward(model, x[start:start + batch_size])
        out[start:start + batch_size] = code if pick == "code" else recon
    return out[0] if single else out


def encode(model, patches, batch_size=8192):
    """Code-layer activations, one row per patch."""
    return _batched(model, patches, "code", batch_size)


def reconstruct(model, patches, batch_size=8192):
    """Network outputs, one row per patch."""
    return _batched(model, patches, "output", batch_size)


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in values)


def model_to_text(model):
    lines = [MODEL_MAGIC, " ".join(str(s) for s in model.layer_sizes), model.activation]
    for W, b in zip(model.weights, model.biases):
        lines.append(f"W {W.shape[0]} {W.shape[1]}")
        lines.extend(_fmt(row) for row in W)
        lines.append(f"b {b.shape[0]}")
        lines.append(_fmt(b))
    return "\n".join(lines) + "\n"


def model_from_text(text):
    lines = text.splitlines()
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise MalformedModelFile("unexpected end of model file")
        pos += 1
        return lines[pos - 1]

    def floats(line, count):
        try:
            vals = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise MalformedModelFile(f"line {pos}: {exc}") from None
        if len(vals) != count:
            raise MalformedModelFile(f"line {pos}: expected {count} values, found {len(vals)}")
        return vals

    if take().strip() != MODEL_MAGIC:
        raise MalformedModelFile(f"missing {MODEL_MAGIC!r} header")
    try:
        sizes = tuple(int(tok) for tok in take().split())
        _check_topology(sizes)
    except (ValueError, AsymmetricTopology) as exc:
        raise MalformedModelFile(f"bad layer sizes: {exc}") from None
    activation = take().strip()
    if activation != ACTIVATION:
        raise MalformedModelFile(f"unsupported activation {activation!r}")
    weights, biases = [], []
    for t in range(len(sizes) - 1):
        rows, cols = sizes[t + 1], sizes[t]
        if take().split() != ["W", str(rows), str(cols)]:
            raise MalformedModelFile(f"line {pos}: expected 'W {rows} {cols}'")
        weights.append(np.array([floats(take(), cols) for _ in range(rows)]).reshape(rows, cols))
        if take().split() != ["b", str(rows)]:
            raise MalformedModelFile(f"line {pos}: expected 'b {rows}'")
        biases.append(np.array(floats(take(), rows)))
    if any(line.strip() for line in lines[pos:]):
        raise MalformedModelFile(f"trailing content after line {pos}")
    return AutoencoderModel(sizes, weights, biases, activation)


def save_model(model, path):
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(model_to_text(model))
    except OSError as exc:
        raise IoFailure(f"cannot write model to {path}: {exc}") from exc


def load_model(path):
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    return model_from_text(text)


def export_weight_windows(model, h, l):
    """Re-roll each column of the last weight matrix into an ``h x l`` window.

    Column ``u`` holds the weights from last-hidden unit ``u`` to every
    output node, so window ``u`` at ``(c, t)`` is ``W[c * l + t, u]``.
    """
    W = model.weights[-1]
    if W.shape[0] != h * l:
        raise ShapeMismatch(f"output layer has {W.shape[0]} nodes, window {h}x{l} needs {h * l}")
    return [W[:, u].reshape(h, l).copy() for u in range(W.shape[1])]
