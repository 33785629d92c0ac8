"""Fully-connected network on scaled FFT magnitudes.

With zero hidden layers the network is exactly a logistic regression.
"""
import dataclasses
import logging
from typing import Any
from typing import ClassVar
from typing import Optional

import numpy as np

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

MAX_HIDDEN_LAYERS = 4
DEFAULT_HIDDEN_WIDTH = 128


@dataclasses.dataclass
class MlpModel(Detector, Trainable):
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    negative_slope: float = 0.01
    history: Optional[TrainingHistory] = None

    kind: ClassVar[str] = "mlp"

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_hidden(self) -> int:
        return len(self.weights) - 1

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1:] != (self.layer_sizes[0],):
            raise ShapeMismatch(
                f"Expected inputs of length {self.layer_sizes[0]}, got shape {x.shape}"
            )
        return x

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
        activations = [x]
        pre_activations = []
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            pre_activations.append(z)
            a = leaky_relu(z, self.negative_slope)
            activations.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        return logits[..., 0], activations, pre_activations

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self._forward(self._check_input(x))[0]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(x))

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        return bce_with_logits(self.logits(x), np.asarray(y, dtype=np.float64))

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
        x = self._check_input(x)
        y = np.asarray(y, dtype=np.float64)
        logits, activations, pre_activations = self._forward(x)
        loss = bce_with_logits(logits, y)

        delta = ((sigmoid(logits) - y) / len(y))[:, None]
        grads_w = [np.empty(0)] * len(self.weights)
        grads_b = [np.empty(0)] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * leaky_relu_grad(
                    pre_activations[layer - 1], self.negative_slope
                )
        return loss, [*grads_w, *grads_b]

    def to_params(self) -> dict[str, Any]:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "negative_slope": self.negative_slope,
        }

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "MlpModel":
        return cls(
            weights=[np.asarray(w, dtype=np.float64) for w in params["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in params["biases"]],
            negative_slope=float(params.get("negative_slope", 0.01)),
        )


def mlp_init(
    layer_sizes: list[int], rng: np.random.Generator, negative_slope: float = 0.01
) -> MlpModel:
    """Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(weights=weights, biases=biases, negative_slope=negative_slope)


def mlp_forward(model: MlpModel, x: np.ndarray):
    """Probability of unbalance; a float for one input, an array for a stack."""
    p = model.predict_proba(x)
    return float(p) if np.ndim(p) == 0 else p


def mlp_train(
    train: tuple[np.ndarray, np.ndarray],
    test: tuple[np.ndarray, np.ndarray],
    n_hidden: int,
    seed: int,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    negative_slope: float = 0.01,
    config: TrainingConfig = TrainingConfig(),
) -> MlpModel:
    """
    Train an MLP with ``n_hidden`` hidden layers of ``hidden_width`` units.

    Returns the parameter snapshot with the lowest test loss; the per-epoch
    losses are attached as ``model.history``.

    Raises:
        ShapeMismatch: If inputs and labels do not align
        DivergedLoss: If the loss becomes non-finite
    """
    if not 0 <= n_hidden <= MAX_HIDDEN_LAYERS:
        raise ShapeMismatch(f"n_hidden must be within 0..{MAX_HIDDEN_LAYERS}, got {n_hidden}")
    x_train, y_train = (np.asarray(a, dtype=np.float64) for a in train)
    x_test, y_test = (np.asarray(a, dtype=np.float64) for a in test)
    if x_train.ndim != 2 or len(x_train) != len(y_train) or len(x_test) != len(y_test):
        raise ShapeMismatch(
            f"Training data {x_train.shape}/{y_train.shape} and test data "
            f"{x_test.shape}/{y_test.shape} do not align"
        )
    init_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(2)
    sizes = [x_train.shape[1]] + [hidden_width] * n_hidden + [1]
    model = mlp_init(sizes, np.random.default_rng(init_seq), negative_slope)
    logger.info("Training MLP %s on %d windows", sizes, len(x_train))
    model.history = fit_minibatch(
        model, (x_train, y_train), (x_test, y_test), config, np.random.default_rng(shuffle_seq)
    )
    return model
