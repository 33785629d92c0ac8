from abc import ABC
from abc import abstractmethod
from typing import Any
from typing import ClassVar

import numpy as np
from scipy.special import expit

# Keeps sigmoid outputs strictly inside (0, 1)
PROB_EPS = 1e-15


def sigmoid(z: np.ndarray) -> np.ndarray:
    return np.clip(expit(z), PROB_EPS, 1.0 - PROB_EPS)


def leaky_relu(z: np.ndarray, negative_slope: float) -> np.ndarray:
    return np.where(z > 0, z, negative_slope * z)


def leaky_relu_grad(z: np.ndarray, negative_slope: float) -> np.ndarray:
    return np.where(z > 0, 1.0, negative_slope)


def bce_with_logits(logits: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits."""
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


class Detector(ABC):
    """
    Abstract base class for unbalance detectors.
    A detector maps model inputs to the probability that an unbalance is present.
    """

    kind: ClassVar[str]

    @abstractmethod
    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Probability of the unbalance class for each row of ``x``."""
        pass

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.predict_proba(x) >= 0.5).astype(np.int64)

    @abstractmethod
    def to_params(self) -> dict[str, Any]:
        """JSON-compatible parameters sufficient to rebuild the detector."""
        pass

    @classmethod
    @abstractmethod
    def from_params(cls, params: dict[str, Any]) -> "Detector":
        pass
