"""Fixed-architecture MLP autoencoder with hand-derived backpropagation.

The network is 784 -> 128 -> 64 -> 32 -> d -> 32 -> 64 -> 128 -> 784 with
ReLU after every affine layer except the bottleneck (layer 4, linear) and
the output (layer 8, tanh). Weights and biases of a layer with fan-in f
are initialized i.i.d. uniform on [-1/sqrt(f), 1/sqrt(f)].

Backpropagation is written out layer by layer against the mean-squared
reconstruction error; the ReLU derivative is the Heaviside step with
H(0) = 0, and tanh' = 1 - tanh^2. Training is single-threaded and fully
deterministic given (params, dataset, config).

Checkpoint files are little-endian binary: magic b"AESPEC01", then
u32 latent_dim, u32 epoch, u64 seed, then for each of the 8 layers
u32 rows, u32 cols, rows*cols f64 weights (row-major), rows f64 biases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .rng import Stream, derive

ENCODER_WIDTHS = (784, 128, 64, 32)  # then d
DECODER_WIDTHS = (32, 64, 128, 784)  # after d
N_LAYERS = 8
INPUT_DIM = 784

CHECKPOINT_MAGIC = b"AESPEC01"

MIN_LATENT = 2
MAX_LATENT = 20


class CheckpointFormatError(ValueError):
    """Checkpoint bytes do not match the expected versioned format."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


def layer_shapes(d: int) -> list[tuple[int, int]]:
    """(rows, cols) = (fan-out, fan-in) of the 8 affine layers."""
    widths = list(ENCODER_WIDTHS) + [d] + list(DECODER_WIDTHS)
    return [(widths[i + 1], widths[i]) for i in range(N_LAYERS)]


@dataclass
class AutoencoderParams:
    """Weights and biases of the 8 affine layers; weights are (out, in)."""

    latent_dim: int
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        expected = layer_shapes(self.latent_dim)
        if len(self.weights) != N_LAYERS or len(self.biases) != N_LAYERS:
            raise ValueError("expected exactly 8 layers")
        for i, (rows, cols) in enumerate(expected):
            if self.weights[i].shape != (rows, cols):
                raise ValueError(
                    f"layer {i + 1} weight shape {self.weights[i].shape}, "
                    f"expected {(rows, cols)}")
            if self.biases[i].shape != (rows,):
                raise ValueError(f"layer {i + 1} bias shape {self.biases[i].shape}")
        for w, b in zip(self.weights, self.biases):
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("parameters must be finite")

    def copy(self) -> "AutoencoderParams":
        return AutoencoderParams(
            self.latent_dim,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class Gradients:
    """Loss gradients shaped like AutoencoderParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class ActivationCache:
    """Per-layer pre/post activations of one forward pass."""

    x: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]

    @property
    def z(self) -> np.ndarray:
        return self.post[3]

    @property
    def y(self) -> np.ndarray:
        return self.post[7]


@dataclass
class TrainingConfig:
    epochs: int
    seed: int
    checkpoint_epochs: frozenset[int] = frozenset({0})
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # "adam" | "sgd"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        epochs = set(self.checkpoint_epochs) | {0}
        bad = [e for e in epochs if e < 0 or e > self.epochs]
        if bad:
            raise ValueError(f"checkpoint epochs {bad} outside [0, {self.epochs}]")
        object.__setattr__(self, "checkpoint_epochs", frozenset(epochs))
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def init(d: int, seed: int) -> AutoencoderParams:
    """Fresh parameters for latent dimension d, deterministic in (d, seed).

    Every entry of a layer with fan-in f is i.i.d. uniform on
    [-1/sqrt(f), 1/sqrt(f)]. Networks for different latent dimensions at
    the same seed share the underlying unit draws (the d-sized blocks are
    slices of a MAX_LATENT-sized master draw), so across-dimension
    comparisons are not dominated by independent resampling noise.
    """
    if not MIN_LATENT <= d <= MAX_LATENT:
        raise ValueError(f"latent dimension must be in [{MIN_LATENT}, {MAX_LATENT}], got {d}")
    master = layer_shapes(MAX_LATENT)
    weights, biases = [], []
    for i, (rows, cols) in enumerate(layer_shapes(d)):
        mrows, mcols = master[i]
        bound = 1.0 / np.sqrt(cols)
        w = Stream(derive(seed, i, 0)).uniform(mrows * mcols, -1.0, 1.0).reshape(mrows, mcols)
        b = Stream(derive(seed, i, 1)).uniform(mrows, -1.0, 1.0)
        weights.append(np.ascontiguousarray(w[:rows, :cols]) * bound)
        biases.append(b[:rows] * bound)
    return AutoencoderParams(d, weights, biases)


def _forward_batch(params: AutoencoderParams, x: np.ndarray):
    """Forward pass on a (batch, 784) block; returns (pre, post) lists."""
    pre, post = [], []
    h = x
    for i in range(N_LAYERS):
        p = h @ params.weights[i].T + params.biases[i]
        pre.append(p)
        if i == 3:
            h = p  # linear bottleneck
        elif i == 7:
            h = np.tanh(p)
        else:
            h = np.maximum(p, 0.0)
        post.append(h)
    return pre, post


def forward(params: AutoencoderParams, x) -> ActivationCache:
    """Forward pass on a single 784-vector, caching all activations."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (INPUT_DIM,):
        raise ValueError(f"expected a length-{INPUT_DIM} input, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("input must be finite")
    pre, post = _forward_batch(params, x[None, :])
    return ActivationCache(x, [p[0] for p in pre], [q[0] for q in post])


def loss(y, x) -> float:
    """Mean squared reconstruction error over the 784 coordinates."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {x.shape}")
    d = y - x
    return float(np.mean(d * d))


def _backward_batch(params: AutoencoderParams, x, pre, post) -> Gradients:
    """Gradients of the batch-mean MSE loss; hand chain rule per layer."""
    batch = x.shape[0]
    y = post[7]
    gw = [None] * N_LAYERS
    gb = [None] * N_LAYERS
    # d(loss)/dy for loss = mean over batch of (1/784) sum (y - x)^2
    g = (2.0 / (INPUT_DIM * batch)) * (y - x)
    for i in range(N_LAYERS - 1, -1, -1):
        if i == 7:
            dpre = g * (1.0 - y * y)  # tanh' = 1 - tanh^2
        elif i == 3:
            dpre = g  # linear bottleneck
        else:
            dpre = g * (pre[i] > 0.0)  # Heaviside, H(0) = 0
        inputs = x if i == 0 else post[i - 1]
        gw[i] = dpre.T @ inputs
        gb[i] = dpre.sum(axis=0)
        if i > 0:
            g = dpre @ params.weights[i]
    return Gradients(gw, gb)


def backward(params: AutoencoderParams, cache: ActivationCache) -> Gradients:
    """Exact gradients of loss(forward(x).y, x) w.r.t. every parameter."""
    return _backward_batch(
        params,
        cache.x[None, :],
        [p[None, :] for p in cache.pre],
        [q[None, :] for q in cache.post],
    )


class _Adam:
    def __init__(self, params: AutoencoderParams, cfg: TrainingConfig):
        self.cfg = cfg
        self.t = 0
        self.mw = [np.zeros_like(w) for w in params.weights]
        self.vw = [np.zeros_like(w) for w in params.weights]
        self.mb = [np.zeros_like(b) for b in params.biases]
        self.vb = [np.zeros_like(b) for b in params.biases]

    def step(self, params: AutoencoderParams, grads: Gradients):
        c = self.cfg
        self.t += 1
        corr1 = 1.0 - c.adam_beta1 ** self.t
        corr2 = 1.0 - c.adam_beta2 ** self.t
        for i in range(N_LAYERS):
            for p, g, m, v in ((params.weights[i], grads.weights[i], self.mw[i], self.vw[i]),
                               (params.biases[i], grads.biases[i], self.mb[i], self.vb[i])):
                m *= c.adam_beta1
                m += (1.0 - c.adam_beta1) * g
                v *= c.adam_beta2
                v += (1.0 - c.adam_beta2) * g * g
                p -= c.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + c.adam_eps)


class _Sgd:
    def __init__(self, params: AutoencoderParams, cfg: TrainingConfig):
        self.cfg = cfg

    def step(self, params: AutoencoderParams, grads: Gradients):
        lr = self.cfg.learning_rate
        for i in range(N_LAYERS):
            params.weights[i] -= lr * grads.weights[i]
            params.biases[i] -= lr * grads.biases[i]


@dataclass
class TrainResult:
    checkpoints: dict[int, AutoencoderParams]
    epoch_losses: list[float]  # mean loss per epoch, epochs 1..n


def train(params: AutoencoderParams, dataset: np.ndarray, config: TrainingConfig) -> TrainResult:
    """Train in place-free fashion: returns checkpoints, leaves `params` untouched.

    The dataset is a (count, 784) array with entries in [-1, 1]; it is
    reshuffled every epoch with a Fisher-Yates permutation seeded by
    (config.seed, epoch).
    """
    data = np.asarray(dataset, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != INPUT_DIM or data.shape[0] < 1:
        raise ValueError(f"dataset must be (count, {INPUT_DIM}), got {data.shape}")
    if np.abs(data).max() > 1.0:
        raise ValueError("dataset coordinates must lie in [-1, 1]")

    current = params.copy()
    checkpoints: dict[int, AutoencoderParams] = {}
    if 0 in config.checkpoint_epochs:
        checkpoints[0] = current.copy()
    optimizer = _Adam(current, config) if config.optimizer == "adam" else _Sgd(current, config)

    n = data.shape[0]
    epoch_losses = []
    for epoch in range(1, config.epochs + 1):
        order = Stream(derive(config.seed, epoch)).permutation(n)
        shuffled = data[order]
        total = 0.0
        for batch_idx, start in enumerate(range(0, n, config.batch_size)):
            x = shuffled[start:start + config.batch_size]
            pre, post = _forward_batch(current, x)
            batch_loss = loss(post[7], x)
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(epoch, batch_idx)
            total += batch_loss * x.shape[0]
            grads = _backward_batch(current, x, pre, post)
            optimizer.step(current, grads)
        epoch_losses.append(total / n)
        if epoch in config.checkpoint_epochs:
            checkpoints[epoch] = current.copy()
    return TrainResult(checkpoints, epoch_losses)


# ---------------------------------------------------------------------------
# checkpoint serialization

def save_checkpoint(path, params: AutoencoderParams, epoch: int, seed: int) -> None:
    """Write the versioned little-endian checkpoint format; bit-exact."""
    chunks = [CHECKPOINT_MAGIC,
              struct.pack("<IIQ", params.latent_dim, epoch, seed)]
    for w, b in zip(params.weights, params.biases):
        rows, cols = w.shape
        chunks.append(struct.pack("<II", rows, cols))
        chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path) -> tuple[AutoencoderParams, int, int]:
    """Read a checkpoint; returns (params, epoch, seed)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(
            f"bad checkpoint magic {blob[:8]!r}, expected {CHECKPOINT_MAGIC!r}")
    if len(blob) < 24:
        raise CheckpointFormatError("checkpoint header truncated")
    d, epoch, seed = struct.unpack_from("<IIQ", blob, 8)
    off = 24
    weights, biases = [], []
    for rows_expected, cols_expected in layer_shapes(d):
        if off + 8 > len(blob):
            raise CheckpointFormatError("checkpoint layer header truncated")
        rows, cols = struct.unpack_from("<II", blob, off)
        off += 8
        if (rows, cols) != (rows_expected, cols_expected):
            raise CheckpointFormatError(
                f"layer shape {(rows, cols)} does not match d={d} "
                f"(expected {(rows_expected, cols_expected)})")
        need = 8 * rows * (cols + 1)
        if off + need > len(blob):
            raise CheckpointFormatError("checkpoint payload truncated")
        w = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=off)
        off += 8 * rows * cols
        b = np.frombuffer(blob, dtype="<f8", count=rows, offset=off)
        off += 8 * rows
        weights.append(w.reshape(rows, cols).astype(np.float64))
        biases.append(b.astype(np.float64))
    if off != len(blob):
        raise CheckpointFormatError(f"{len(blob) - off} trailing bytes in checkpoint")
    return AutoencoderParams(d, weights, biases), epoch, seed
