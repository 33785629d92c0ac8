"""1D convolutional network on raw vibration windows.

Each block is convolution ("same" zero padding, no bias), batch
normalisation, LeakyReLU and max pooling. The flattened output of the last
block feeds one fully-connected LeakyReLU layer and a single sigmoid node.
"""
import dataclasses
import logging
from typing import Any
from typing import ClassVar
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ...errors import ShapeMismatch
from .base import Detector
from .base import bce_with_logits
from .base import leaky_relu
from .base import leaky_relu_grad
from .base import sigmoid
from .optim import Trainable
from .optim import TrainingConfig
from .optim import TrainingHistory
from .optim import fit_minibatch

logger = logging.getLogger(__name__)

MAX_CONV_BLOCKS = 6
INFERENCE_BATCH = 128


@dataclasses.dataclass
class ConvBlock:
    weight: np.ndarray  # (out_channels, in_channels, kernel)
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[2]

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in _BLOCK_ARRAYS}

    @classmethod
    def from_dict(cls, data: dict) -> "ConvBlock":
        return cls(**{name: np.asarray(data[name], dtype=np.float64) for name in _BLOCK_ARRAYS})


_BLOCK_ARRAYS = ("weight", "gamma", "beta", "running_mean", "running_var")


def _same_padding(k: int) -> tuple[int, int]:
    left = (k - 1) // 2
    return left, k - 1 - left


def _conv(x: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns the convolution output (B, out, L) and the padded input."""
    xp = np.pad(x, ((0, 0), (0, 0), _same_padding(weight.shape[2])))
    windows = sliding_window_view(xp, weight.shape[2], axis=2)
    return np.einsum("bclk,ock->bol", windows, weight, optimize=True), xp


def _conv_backward(
    dz: np.ndarray, xp: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    k = weight.shape[2]
    length = dz.shape[2]
    windows = sliding_window_view(xp, k, axis=2)
    d_weight = np.einsum("bol,bclk->ock", dz, windows, optimize=True)
    dxp = np.zeros_like(xp)
    for j in range(k):
        dxp[:, :, j : j + length] += np.einsum("bol,oc->bcl", dz, weight[:, :, j], optimize=True)
    left, _ = _same_padding(k)
    return d_weight, dxp[:, :, left : left + length]


def _max_pool(a: np.ndarray, pool: int) -> tuple[np.ndarray, np.ndarray]:
    b, c, length = a.shape
    out_len = length // pool
    grouped = a[:, :, : out_len * pool].reshape(b, c, out_len, pool)
    idx = grouped.argmax(axis=-1)[..., None]
    return np.take_along_axis(grouped, idx, axis=-1)[..., 0], idx


def _max_pool_backward(
    d_out: np.ndarray, idx: np.ndarray, input_shape: tuple[int, ...], pool: int
) -> np.ndarray:
    b, c, out_len = d_out.shape
    grouped = np.zeros((b, c, out_len, pool))
    np.put_along_axis(grouped, idx, d_out[..., None], axis=-1)
    d_in = np.zeros(input_shape)
    d_in[:, :, : out_len * pool] = grouped.reshape(b, c, out_len * pool)
    return d_in


@dataclasses.dataclass
class Cnn1dModel(Detector, Trainable):
    blocks: list[ConvBlock]
    fc_weight: np.ndarray
    fc_bias: np.ndarray
    out_weight: np.ndarray
    out_bias: np.ndarray  # shape (1,)
    input_length: int
    pool_size: int = 4
    negative_slope: float = 0.01
    momentum: float = 0.1
    bn_eps: float = 1e-5
    history: Optional[TrainingHistory] = None

    kind: ClassVar[str] = "cnn1d"

    def __post_init__(self):
        if self.input_length // self.pool_size ** len(self.blocks) < 1:
            raise ShapeMismatch(
                f"{len(self.blocks)} pooling stages of size {self.pool_size} "
                f"do not fit an input of length {self.input_length}"
            )
        expected = self.blocks[-1].weight.shape[0] * self.output_length
        if self.fc_weight.shape[0] != expected:
            raise ShapeMismatch(
                f"Fully-connected layer expects {self.fc_weight.shape[0]} inputs, "
                f"the last block yields {expected}"
            )

    @property
    def n_conv(self) -> int:
        return len(self.blocks)

    @property
    def output_length(self) -> int:
        length = self.input_length
        for _ in self.blocks:
            length //= self.pool_size
        return length

    def _as_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.input_length,) or x.ndim > 2:
            raise ShapeMismatch(
                f"Expected windows of length {self.input_length}, got shape {x.shape}"
            )
        return np.atleast_2d(x)

    def _forward(self, x: np.ndarray, training: bool, update_stats: bool = False):
        a = x[:, None, :]
        caches = []
        for blk in self.blocks:
            z, xp = _conv(a, blk.weight)
            if training:
                mean = z.mean(axis=(0, 2))
                var = z.var(axis=(0, 2))
                if update_stats:
                    n = z.shape[0] * z.shape[2]
                    unbiased = var * n / (n - 1) if n > 1 else var
                    blk.running_mean *= 1.0 - self.momentum
                    blk.running_mean += self.momentum * mean
                    blk.running_var *= 1.0 - self.momentum
                    blk.running_var += self.momentum * unbiased
            else:
                mean, var = blk.running_mean, blk.running_var
            inv_std = 1.0 / np.sqrt(var + self.bn_eps)
            xhat = (z - mean[:, None]) * inv_std[:, None]
            y = blk.gamma[:, None] * xhat + blk.beta[:, None]
            act = leaky_relu(y, self.negative_slope)
            a, idx = _max_pool(act, self.pool_size)
            caches.append((xp, xhat, inv_std, y, idx, act.shape))
        flat = a.reshape(a.shape[0], -1)
        h_pre = flat @ self.fc_weight + self.fc_bias
        h = leaky_relu(h_pre, self.negative_slope)
        logits = h @ self.out_weight + self.out_bias[0]
        return logits, (caches, a.shape, flat, h_pre, h)

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = self._as_batch(x)
        chunks = [
            self._forward(x[i : i + INFERENCE_BATCH], training=False)[0]
            for i in range(0, len(x), INFERENCE_BATCH)
        ]
        return np.concatenate(chunks) if chunks else np.empty(0)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        p = sigmoid(self.logits(x))
        return p[0] if np.ndim(x) == 1 else p

    def parameters(self) -> list[np.ndarray]:
        params = []
        for blk in self.blocks:
            params += [blk.weight, blk.gamma, blk.beta]
        return params + [self.fc_weight, self.fc_bias, self.out_weight, self.out_bias]

    def state(self) -> list[np.ndarray]:
        buffers = []
        for blk in self.blocks:
            buffers += [blk.running_mean, blk.running_var]
        return [a.copy() for a in self.parameters() + buffers]

    def load_state(self, state: list[np.ndarray]) -> None:
        buffers = []
        for blk in self.blocks:
            buffers += [blk.running_mean, blk.running_var]
        for a, saved in zip(self.parameters() + buffers, state):
            a[...] = saved

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        return bce_with_logits(self.logits(x), np.asarray(y, dtype=np.float64))

    def batch_loss(self, x: np.ndarray, y: np.ndarray) -> float:
        """Training-mode loss (batch statistics) without touching running stats."""
        logits, _ = self._forward(self._as_batch(x), training=True)
        return bce_with_logits(logits, np.asarray(y, dtype=np.float64))

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
        x = self._as_batch(x)
        y = np.asarray(y, dtype=np.float64)
        logits, (caches, pooled_shape, flat, h_pre, h) = self._forward(
            x, training=True, update_stats=True
        )
        loss = bce_with_logits(logits, y)
        slope = self.negative_slope

        d_logits = (sigmoid(logits) - y) / len(y)
        d_out_weight = h.T @ d_logits
        d_out_bias = np.array([d_logits.sum()])
        d_h_pre = np.outer(d_logits, self.out_weight) * leaky_relu_grad(h_pre, slope)
        d_fc_weight = flat.T @ d_h_pre
        d_fc_bias = d_h_pre.sum(axis=0)
        d_a = (d_h_pre @ self.fc_weight.T).reshape(pooled_shape)

        block_grads = []
        for blk, (xp, xhat, inv_std, y_bn, idx, act_shape) in zip(
            reversed(self.blocks), reversed(caches)
        ):
            d_act = _max_pool_backward(d_a, idx, act_shape, self.pool_size)
            d_y = d_act * leaky_relu_grad(y_bn, slope)
            d_gamma = (d_y * xhat).sum(axis=(0, 2))
            d_beta = d_y.sum(axis=(0, 2))
            d_xhat = d_y * blk.gamma[:, None]
            n = d_y.shape[0] * d_y.shape[2]
            d_z = (inv_std[:, None] / n) * (
                n * d_xhat
                - d_xhat.sum(axis=(0, 2))[:, None]
                - xhat * (d_xhat * xhat).sum(axis=(0, 2))[:, None]
            )
            d_weight, d_a = _conv_backward(d_z, xp, blk.weight)
            block_grads = [d_weight, d_gamma, d_beta] + block_grads

        return loss, block_grads + [d_fc_weight, d_fc_bias, d_out_weight, d_out_bias]

    def to_params(self) -> dict[str, Any]:
        return {
            "blocks": [blk.to_dict() for blk in self.blocks],
            "fc_weight": self.fc_weight.tolist(),
            "fc_bias": self.fc_bias.tolist(),
            "out_weight": self.out_weight.tolist(),
            "out_bias": self.out_bias.tolist(),
            "input_length": self.input_length,
            "pool_size": self.pool_size,
            "negative_slope": self.negative_slope,
            "momentum": self.momentum,
            "bn_eps": self.bn_eps,
        }

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "Cnn1dModel":
        return cls(
            blocks=[ConvBlock.from_dict(b) for b in params["blocks"]],
            fc_weight=np.asarray(params["fc_weight"], dtype=np.float64),
            fc_bias=np.asarray(params["fc_bias"], dtype=np.float64),
            out_weight=np.asarray(params["out_weight"], dtype=np.float64),
            out_bias=np.asarray(params["out_bias"], dtype=np.float64),
            input_length=int(params["input_length"]),
            pool_size=int(params["pool_size"]),
            negative_slope=float(params["negative_slope"]),
            momentum=float(params["momentum"]),
            bn_eps=float(params["bn_eps"]),
        )


def cnn_init(
    input_length: int,
    n_conv: int,
    rng: np.random.Generator,
    kernel_size: int = 9,
    base_channels: int = 16,
    pool_size: int = 4,
    fc_width: int = 64,
    negative_slope: float = 0.01,
) -> Cnn1dModel:
    """Uniform fan-in initialisation; channels double with every block."""
    if not 1 <= n_conv <= MAX_CONV_BLOCKS:
        raise ShapeMismatch(f"n_conv must be within 1..{MAX_CONV_BLOCKS}, got {n_conv}")
    blocks = []
    in_channels = 1
    length = input_length
    for i in range(n_conv):
        out_channels = base_channels * 2**i
        bound = 1.0 / np.sqrt(in_channels * kernel_size)
        blocks.append(
            ConvBlock(
                weight=rng.uniform(-bound, bound, size=(out_channels, in_channels, kernel_size)),
                gamma=np.ones(out_channels),
                beta=np.zeros(out_channels),
                running_mean=np.zeros(out_channels),
                running_var=np.ones(out_channels),
            )
        )
        in_channels = out_channels
        length //= pool_size
    flat = in_channels * length
    if flat < 1:
        raise ShapeMismatch(
            f"{n_conv} pooling stages of size {pool_size} do not fit length {input_length}"
        )
    fc_bound = 1.0 / np.sqrt(flat)
    out_bound = 1.0 / np.sqrt(fc_width)
    return Cnn1dModel(
        blocks=blocks,
        fc_weight=rng.uniform(-fc_bound, fc_bound, size=(flat, fc_width)),
        fc_bias=rng.uniform(-fc_bound, fc_bound, size=fc_width),
        out_weight=rng.uniform(-out_bound, out_bound, size=fc_width),
        out_bias=rng.uniform(-out_bound, out_bound, size=1),
        input_length=input_length,
        pool_size=pool_size,
        negative_slope=negative_slope,
    )


def cnn_forward(model: Cnn1dModel, x: np.ndarray):
    """Inference-mode probability; a float for one window, an array for a stack."""
    p = model.predict_proba(x)
    return float(p) if np.ndim(p) == 0 else p


def cnn_train(
    train: tuple[np.ndarray, np.ndarray],
    test: tuple[np.ndarray, np.ndarray],
    n_conv: int,
    seed: int,
    kernel_size: int = 9,
    base_channels: int = 16,
    pool_size: int = 4,
    fc_width: int = 64,
    negative_slope: float = 0.01,
    config: TrainingConfig = TrainingConfig(),
) -> Cnn1dModel:
    """
    Train a CNN with ``n_conv`` blocks on raw windows.

    Raises:
        ShapeMismatch: If inputs and labels do not align
        DivergedLoss: If the loss becomes non-finite
    """
    x_train, y_train = (np.asarray(a, dtype=np.float64) for a in train)
    x_test, y_test = (np.asarray(a, dtype=np.float64) for a in test)
    if x_train.ndim != 2 or len(x_train) != len(y_train) or len(x_test) != len(y_test):
        raise ShapeMismatch(
            f"Training data {x_train.shape}/{y_train.shape} and test data "
            f"{x_test.shape}/{y_test.shape} do not align"
        )
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    model = cnn_init(
        x_train.shape[1],
        n_conv,
        np.random.default_rng(init_seq),
        kernel_size=kernel_size,
        base_channels=base_channels,
        pool_size=pool_size,
        fc_width=fc_width,
        negative_slope=negative_slope,
    )
    logger.info(
        "Training CNN with %d blocks (kernel %d, pool %d) on %d windows",
        n_conv,
        kernel_size,
        pool_size,
        len(x_train),
    )
    model.history = fit_minibatch(
        model, (x_train, y_train), (x_test, y_test), config, np.random.default_rng(shuffle_seq)
    )
    return model
