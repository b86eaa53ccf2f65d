"""Deep SVDD: conv autoencoder pretraining, center fixing, one-class training.

The encoder maps a d-dimensional embedding, treated as a 1-channel length-d
sequence, to a latent vector; training minimizes squared distance to a fixed
hypersphere center. No layer has a bias term (a biased stack admits the
constant-map collapse). All gradients are hand-derived and checked against
finite differences in the test suite.

Architecture (pinned): conv 1->8 ch, kernel 5, stride 2, pad 2; leaky
rectifier slope 0.1; conv 8->4 ch, kernel 5, stride 2, pad 2; leaky; flatten
position-major; dense to latent_dim. The decoder mirrors it with stride-2
transposed convolutions. Weight init is fan-in-scaled Gaussian from the seed;
fan-in = product of a weight's trailing dims. Init draw order: conv1, conv2,
dense, then decoder dense, convt1, convt2.

RNG streams derived from config.seed: 0 = weight init, 1 = autoencoder epoch
shuffles, 2 = one-class epoch shuffles.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import convops
from .errors import DataError, DivergenceError, NumericError, UsageError
from .numcore import MASK64, SplitMix64

LEAKY_SLOPE = 0.1
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
CENTER_FLOOR = 1e-6
_KERNEL = 5
_STRIDE = 2
_PAD = 2
_CH1 = 8
_CH2 = 4
_SCORE_CHUNK = 4096


@dataclass
class DsvddConfig:
    ae_epochs: int = 2500
    ae_lr: float = 1e-2
    enc_epochs: int = 1000
    enc_lr: float = 1e-3
    weight_decay: float = 1e-6
    batch_size: int = 64
    latent_dim: int = 32
    seed: int = 0

    def validate(self):
        for name in ("ae_epochs", "enc_epochs", "batch_size", "latent_dim"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise UsageError(f"{name} must be an integer >= 1, got {value!r}")
        # Zero rates are allowed so a no-op training run is expressible.
        for name in ("ae_lr", "enc_lr", "weight_decay"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise UsageError(f"{name} must be finite and >= 0, got {value!r}")


class _Leaky:
    def forward(self, z):
        self._pos = z > 0.0
        return np.where(self._pos, z, LEAKY_SLOPE * z)

    def backward(self, g):
        return np.where(self._pos, g, LEAKY_SLOPE * g)


class _Conv:
    def __init__(self, w):
        self.w = w
        self._cols = None
        self._in_len = None

    def forward(self, x):
        self._in_len = x.shape[1]
        out, self._cols = convops.conv1d_fwd(x, self.w, _STRIDE, _PAD)
        return out

    def backward(self, gy, need_input_grad=True):
        co, ci, k = self.w.shape
        gw = convops.unpack_weight_grad(
            convops.conv1d_bwd_weight(self._cols, gy), co, ci, k
        )
        gx = None
        if need_input_grad:
            gx = convops.conv1d_bwd_input(gy, self.w, _STRIDE, _PAD, self._in_len)
        return gx, gw


class _ConvT:
    def __init__(self, w, out_len):
        self.w = w
        self.out_len = out_len
        self._x = None

    def forward(self, x):
        self._x = x
        return convops.convt1d_fwd(x, self.w, _STRIDE, _PAD, self.out_len)

    def backward(self, gy):
        gx, gcols = convops.convt1d_bwd_input(gy, self.w, _STRIDE, _PAD)
        cin, cout, k = self.w.shape
        gw = convops.unpack_weight_grad(
            convops.convt1d_bwd_weight(gcols, self._x), cin, cout, k
        )
        return gx, gw


class _Dense:
    def __init__(self, w):
        self.w = w  # (out, in)
        self._x = None

    def forward(self, x):
        self._x = x
        return x @ self.w.T

    def backward(self, gy, need_input_grad=True):
        gw = gy.T @ self._x
        gx = gy @ self.w if need_input_grad else None
        return gx, gw


def encoder_lengths(dim):
    """(post-conv1 length, post-conv2 length, flattened width) for input dim."""
    l1 = convops.conv_out_len(dim, _KERNEL, _STRIDE, _PAD)
    l2 = convops.conv_out_len(l1, _KERNEL, _STRIDE, _PAD)
    return l1, l2, _CH2 * l2


class EncoderNet:
    """Bias-free conv encoder mapping (B, dim) to (B, latent_dim)."""

    def __init__(self, dim, latent_dim, w_conv1, w_conv2, w_dense):
        l1, l2, flat = encoder_lengths(dim)
        expected = [(_CH1, 1, _KERNEL), (_CH2, _CH1, _KERNEL), (latent_dim, flat)]
        got = [w_conv1.shape, w_conv2.shape, w_dense.shape]
        if got != expected:
            raise DataError(f"encoder weight shapes {got} != expected {expected}")
        self.dim = dim
        self.latent_dim = latent_dim
        self.lengths = (l1, l2, flat)
        self.conv1 = _Conv(w_conv1)
        self.act1 = _Leaky()
        self.conv2 = _Conv(w_conv2)
        self.act2 = _Leaky()
        self.dense = _Dense(w_dense)

    @property
    def weights(self):
        return [self.conv1.w, self.conv2.w, self.dense.w]

    def parameters(self):
        """Full parameter census: (name, array) pairs. Weights only, no biases."""
        return [
            ("conv1.weight", self.conv1.w),
            ("conv2.weight", self.conv2.w),
            ("dense.weight", self.dense.w),
        ]

    def set_weights(self, weights):
        self.conv1.w, self.conv2.w, self.dense.w = weights

    def copy(self):
        return EncoderNet(
            self.dim,
            self.latent_dim,
            self.conv1.w.copy(),
            self.conv2.w.copy(),
            self.dense.w.copy(),
        )

    def forward(self, x):
        b = x.shape[0]
        _, l2, flat = self.lengths
        a1 = self.act1.forward(self.conv1.forward(x.reshape(b, self.dim, 1)))
        a2 = self.act2.forward(self.conv2.forward(a1))
        return self.dense.forward(a2.reshape(b, flat))

    def backward(self, g_latent, need_input_grad=False):
        """Gradients [conv1, conv2, dense] for a latent cotangent."""
        b = g_latent.shape[0]
        _, l2, flat = self.lengths
        g_flat, g_dense = self.dense.backward(g_latent)
        g_a2 = self.act2.backward(g_flat.reshape(b, l2, _CH2))
        g_a1, g_conv2 = self.conv2.backward(g_a2)
        g_z1 = self.act1.backward(g_a1)
        g_x, g_conv1 = self.conv1.backward(g_z1, need_input_grad=need_input_grad)
        if need_input_grad:
            return [g_conv1, g_conv2, g_dense], g_x.reshape(b, self.dim)
        return [g_conv1, g_conv2, g_dense]


class _Decoder:
    """Mirror of EncoderNet with stride-2 transposed convolutions."""

    def __init__(self, dim, latent_dim, w_dense, w_convt1, w_convt2):
        l1, l2, flat = encoder_lengths(dim)
        expected = [(flat, latent_dim), (_CH2, _CH1, _KERNEL), (_CH1, 1, _KERNEL)]
        got = [w_dense.shape, w_convt1.shape, w_convt2.shape]
        if got != expected:
            raise DataError(f"decoder weight shapes {got} != expected {expected}")
        self.dim = dim
        self.lengths = (l1, l2, flat)
        self.dense = _Dense(w_dense)
        self.act0 = _Leaky()
        self.convt1 = _ConvT(w_convt1, l1)
        self.act1 = _Leaky()
        self.convt2 = _ConvT(w_convt2, dim)

    @property
    def weights(self):
        return [self.dense.w, self.convt1.w, self.convt2.w]

    def set_weights(self, weights):
        self.dense.w, self.convt1.w, self.convt2.w = weights

    def forward(self, h):
        b = h.shape[0]
        l1, l2, flat = self.lengths
        a0 = self.act0.forward(self.dense.forward(h))
        a1 = self.act1.forward(self.convt1.forward(a0.reshape(b, l2, _CH2)))
        return self.convt2.forward(a1).reshape(b, self.dim)

    def backward(self, g_out):
        b = g_out.shape[0]
        l1, l2, flat = self.lengths
        g_a1, g_convt2 = self.convt2.backward(g_out.reshape(b, self.dim, 1))
        g_y1 = self.act1.backward(g_a1)
        g_x, g_convt1 = self.convt1.backward(g_y1)
        g_a0 = self.act0.backward(g_x.reshape(b, flat))
        g_h, g_dense = self.dense.backward(g_a0)
        return g_h, [g_dense, g_convt1, g_convt2]


class AutoEncoderNet:
    """Encoder plus mirrored decoder, trained on mean-squared reconstruction."""

    def __init__(self, encoder, decoder):
        self.encoder = encoder
        self.decoder = decoder

    @property
    def weights(self):
        return self.encoder.weights + self.decoder.weights

    def set_weights(self, weights):
        self.encoder.set_weights(weights[:3])
        self.decoder.set_weights(weights[3:])

    def reconstruct(self, x):
        return self.decoder.forward(self.encoder.forward(x))

    def loss(self, x):
        r = self.reconstruct(x) - x
        return float(np.mean(r * r))

    def loss_and_gradients(self, x):
        b, d = x.shape
        r = self.reconstruct(x) - x
        loss = float(np.mean(r * r))
        g_out = (2.0 / (b * d)) * r
        g_latent, dec_grads = self.decoder.backward(g_out)
        enc_grads = self.encoder.backward(g_latent)
        return loss, enc_grads + dec_grads


def _fan_in(shape):
    fan = 1
    for s in shape[1:]:
        fan *= s
    return fan


def _init_weight(rng, shape):
    scale = 1.0 / math.sqrt(_fan_in(shape))
    flat = rng.gaussian_block(int(np.prod(shape))) * scale
    return np.ascontiguousarray(flat.reshape(shape))


def build_autoencoder(dim, config):
    """Freshly initialized autoencoder, a pure function of (dim, config)."""
    config.validate()
    if dim < 1:
        raise DataError(f"input dimension must be >= 1, got {dim}")
    latent = config.latent_dim
    _, _, flat = encoder_lengths(dim)
    rng = SplitMix64(config.seed & MASK64).derive(0)
    shapes = [
        (_CH1, 1, _KERNEL),
        (_CH2, _CH1, _KERNEL),
        (latent, flat),
        (flat, latent),
        (_CH2, _CH1, _KERNEL),
        (_CH1, 1, _KERNEL),
    ]
    w = [_init_weight(rng, s) for s in shapes]
    encoder = EncoderNet(dim, latent, w[0], w[1], w[2])
    decoder = _Decoder(dim, latent, w[3], w[4], w[5])
    return AutoEncoderNet(encoder, decoder)


class Adam:
    """Adaptive-moment SGD with bias correction (β1=0.9, β2=0.999, ε=1e-8)."""

    def __init__(self, shapes, lr):
        self.lr = lr
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, weights, grads):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1 ** self.t
        bc2 = 1.0 - ADAM_BETA2 ** self.t
        for w, g, m, v in zip(weights, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            w -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def _as_matrix(data, what):
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError(f"{what} must be a non-empty (n, d) matrix, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{what} contains non-finite values")
    return x


def _run_epochs(x, epochs, batch_size, shuffle_rng, step_fn, label):
    n = x.shape[0]
    trace = []
    for epoch in range(epochs):
        order = list(range(n))
        shuffle_rng.shuffle(order)
        losses = []
        for start in range(0, n, batch_size):
            losses.append(step_fn(x[order[start : start + batch_size]]))
        epoch_loss = float(np.mean(losses))
        if not math.isfinite(epoch_loss):
            raise DivergenceError(
                f"{label} loss became non-finite at epoch {epoch}", epoch=epoch
            )
        trace.append(epoch_loss)
    return trace


def _audit_finite(weights, label):
    for w in weights:
        if not np.all(np.isfinite(w)):
            raise NumericError(f"{label} produced non-finite weights")


def ae_pretrain(data, config):
    """Train the autoencoder on reconstruction; returns (encoder, loss trace).

    The decoder is discarded. Batches follow a fixed per-epoch shuffle from
    the seed; the last batch may be partial (full-batch when n < batch_size).
    """
    config.validate()
    x = _as_matrix(data, "training data")
    ae = build_autoencoder(x.shape[1], config)
    adam = Adam([w.shape for w in ae.weights], config.ae_lr)
    shuffle_rng = SplitMix64(config.seed & MASK64).derive(1)

    def step(batch):
        loss, grads = ae.loss_and_gradients(batch)
        adam.step(ae.weights, grads)
        return loss

    trace = _run_epochs(
        x, config.ae_epochs, config.batch_size, shuffle_rng, step, "autoencoder"
    )
    _audit_finite(ae.weights, "autoencoder pretraining")
    return ae.encoder, trace


def snap_center(c):
    """Push near-zero center components to ±1e-6 (sign-preserving, 0 -> +)."""
    c = np.array(c, dtype=np.float64)
    small = np.abs(c) < CENTER_FLOOR
    c[small & (c >= 0.0)] = CENTER_FLOOR
    c[small & (c < 0.0)] = -CENTER_FLOOR
    return c


def fix_center(encoder, data):
    """Hypersphere center: mean encoder output over data, snapped off zero.

    Computed once after pretraining; callers must not modify it afterwards
    (the returned array is write-protected).
    """
    x = _as_matrix(data, "center data")
    outputs = [
        encoder.forward(x[s : s + _SCORE_CHUNK])
        for s in range(0, x.shape[0], _SCORE_CHUNK)
    ]
    c = snap_center(np.concatenate(outputs, axis=0).mean(axis=0))
    c.setflags(write=False)
    return c


def _distances(encoder, x, c):
    out = np.empty(x.shape[0], dtype=np.float64)
    for s in range(0, x.shape[0], _SCORE_CHUNK):
        diff = encoder.forward(x[s : s + _SCORE_CHUNK]) - c
        out[s : s + diff.shape[0]] = np.einsum("ij,ij->i", diff, diff)
    return out


def svdd_objective(encoder, x, c, weight_decay):
    """(1/n) Σ ‖φ(xᵢ)−c‖² + (λ/2) Σ ‖W‖²."""
    reg = 0.0
    for w in encoder.weights:
        reg += float(np.sum(w * w))
    return float(np.mean(_distances(encoder, x, c))) + 0.5 * weight_decay * reg


def svdd_loss_and_gradients(encoder, x, c, weight_decay):
    """Batch objective value and gradients w.r.t. every encoder weight."""
    b = x.shape[0]
    diff = encoder.forward(x) - c
    data_term = float(np.mean(np.einsum("ij,ij->i", diff, diff)))
    reg = 0.0
    for w in encoder.weights:
        reg += float(np.sum(w * w))
    loss = data_term + 0.5 * weight_decay * reg
    grads = encoder.backward((2.0 / b) * diff)
    grads = [g + weight_decay * w for g, w in zip(grads, encoder.weights)]
    return loss, grads


@dataclass
class DsvddModel:
    """Trained one-class model: encoder, fixed center, training summary."""

    encoder: EncoderNet
    center: np.ndarray
    config: DsvddConfig
    train_distances: np.ndarray  # sorted squared distances after training
    initial_mean_distance: float
    final_mean_distance: float
    contracted: bool
    normalized: bool = False

    @property
    def dim(self):
        return self.encoder.dim

    @property
    def latent_dim(self):
        return self.encoder.latent_dim


def dsvdd_train(data, encoder, c, config):
    """Minimize the one-class objective; returns the trained model.

    The center is never updated. Post-condition (checked): mean squared
    distance to c over the training data does not exceed its epoch-0 value.
    """
    config.validate()
    x = _as_matrix(data, "training data")
    if x.shape[1] != encoder.dim:
        raise DataError(f"data dimension {x.shape[1]} != encoder dim {encoder.dim}")
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (encoder.latent_dim,):
        raise DataError(f"center shape {c.shape} != ({encoder.latent_dim},)")

    initial_mean = float(np.mean(_distances(encoder, x, c)))
    adam = Adam([w.shape for w in encoder.weights], config.enc_lr)
    shuffle_rng = SplitMix64(config.seed & MASK64).derive(2)

    def step(batch):
        loss, grads = svdd_loss_and_gradients(encoder, batch, c, config.weight_decay)
        adam.step(encoder.weights, grads)
        return loss

    _run_epochs(
        x, config.enc_epochs, config.batch_size, shuffle_rng, step, "one-class"
    )
    _audit_finite(encoder.weights, "one-class training")
    final = _distances(encoder, x, c)
    final_mean = float(np.mean(final))
    if final_mean > initial_mean:
        raise NumericError(
            f"one-class training failed to contract: mean distance went "
            f"{initial_mean:.6g} -> {final_mean:.6g}"
        )
    return DsvddModel(
        encoder=encoder,
        center=c,
        config=replace(config),
        train_distances=np.sort(final),
        initial_mean_distance=initial_mean,
        final_mean_distance=final_mean,
        contracted=True,
    )


def dsvdd_decision(model, x):
    """−‖φ(x)−c‖²; higher = more target-like, always ≤ 0.

    Accepts a single vector (returns float) or an (m, dim) matrix.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise DataError(f"query dimension {arr.shape} does not match {model.dim}")
    scores = -_distances(model.encoder, np.ascontiguousarray(arr), model.center)
    return float(scores[0]) if single else scores


def dsvdd_threshold(model, train_data=None, quantile=0.95):
    """Nearest-rank quantile of training distances ‖φ(xᵢ)−c‖².

    Outlier ⇔ distance > threshold. With train_data omitted, the distances
    persisted in the model are used.
    """
    if not (0.0 < quantile <= 1.0):
        raise UsageError(f"quantile must be in (0, 1], got {quantile}")
    if train_data is not None:
        x = _as_matrix(train_data, "threshold data")
        if x.shape[1] != model.dim:
            raise DataError(
                f"data dimension {x.shape[1]} != encoder dim {model.dim}"
            )
        dists = np.sort(_distances(model.encoder, x, model.center))
    else:
        dists = model.train_distances
    n = dists.shape[0]
    if n == 0:
        raise DataError("no training distances available for the quantile")
    rank = min(max(math.ceil(quantile * n), 1), n)
    return float(dists[rank - 1])
