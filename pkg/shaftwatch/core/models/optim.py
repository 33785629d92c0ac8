"""Adam optimiser and the shared mini-batch training loop for the MLP and CNN."""
import dataclasses
import logging
from abc import ABC
from abc import abstractmethod
from typing import Optional

import numpy as np

from ...errors import DivergedLoss

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 100
    patience: Optional[int] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclasses.dataclass
class TrainingHistory:
    train_loss: list[float] = dataclasses.field(default_factory=list)
    test_loss: list[float] = dataclasses.field(default_factory=list)
    best_epoch: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingHistory":
        return cls(
            train_loss=[float(v) for v in data.get("train_loss", [])],
            test_loss=[float(v) for v in data.get("test_loss", [])],
            best_epoch=int(data.get("best_epoch", 0)),
        )


class Adam:
    """Adam with bias-corrected moments; updates the parameter arrays in place."""

    def __init__(self, params: list[np.ndarray], config: TrainingConfig):
        self.params = params
        self.config = config
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        cfg = self.config
        self.t += 1
        correction1 = 1.0 - cfg.beta1**self.t
        correction2 = 1.0 - cfg.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            p -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)


class Trainable(ABC):
    """A network the training loop can optimise."""

    @abstractmethod
    def parameters(self) -> list[np.ndarray]:
        """Trainable arrays, updated in place by the optimiser."""
        pass

    @abstractmethod
    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
        """Training-mode loss of one batch and the gradients of ``parameters()``."""
        pass

    @abstractmethod
    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        """Inference-mode loss."""
        pass

    def state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def load_state(self, state: list[np.ndarray]) -> None:
        for p, saved in zip(self.parameters(), state):
            p[...] = saved


def fit_minibatch(
    net: Trainable,
    train: tuple[np.ndarray, np.ndarray],
    test: tuple[np.ndarray, np.ndarray],
    config: TrainingConfig,
    rng: np.random.Generator,
) -> TrainingHistory:
    """
    Mini-batch Adam on binary cross-entropy. After each epoch the test loss is
    evaluated; the network is left holding the snapshot with the lowest test
    loss.
    """
    x_train, y_train = train
    x_test, y_test = test
    n = len(x_train)
    optimizer = Adam(net.parameters(), config)
    history = TrainingHistory()
    best_loss = np.inf
    best_state = net.state()
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = net.loss_and_grads(x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise DivergedLoss(f"Training loss became {loss} in epoch {epoch}")
            optimizer.step(grads)
            batch_losses.append(loss * len(idx))
        train_loss = float(np.sum(batch_losses) / n)
        test_loss = net.loss(x_test, y_test)
        if not np.isfinite(test_loss):
            raise DivergedLoss(f"Test loss became {test_loss} in epoch {epoch}")
        history.train_loss.append(train_loss)
        history.test_loss.append(test_loss)
        logger.debug("epoch %d: train loss %.5f, test loss %.5f", epoch, train_loss, test_loss)

        if test_loss < best_loss:
            best_loss = test_loss
            best_state = net.state()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                logger.info("Stopping early after epoch %d", epoch)
                break

    net.load_state(best_state)
    logger.info("Best test loss %.5f in epoch %d", best_loss, history.best_epoch)
    return history
