"""L2-regularised logistic regression fitted by damped Newton iterations."""
import dataclasses
import logging
from typing import Any
from typing import ClassVar

import numpy as np

from ...errors import NonFinite
from ...errors import ShapeMismatch
from ...errors import SingleClass
from .base import Detector
from .base import sigmoid

logger = logging.getLogger(__name__)


@dataclasses.dataclass
class LogisticRegression(Detector):
    weights: np.ndarray
    bias: float = 0.0
    reg: float = 0.0

    kind: ClassVar[str] = "logreg"

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.weights.shape[0]:
            raise ShapeMismatch(
                f"Expected {self.weights.shape[0]} features, got shape {x.shape}"
            )
        return x @ self.weights + self.bias

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(x))

    def to_params(self) -> dict[str, Any]:
        return {"weights": self.weights.tolist(), "bias": self.bias, "reg": self.reg}

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "LogisticRegression":
        return cls(
            weights=np.asarray(params["weights"], dtype=np.float64),
            bias=float(params["bias"]),
            reg=float(params.get("reg", 0.0)),
        )


def _check_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeMismatch(f"Features {x.shape} and labels {y.shape} do not align")
    if not np.all(np.isfinite(x)):
        raise NonFinite("Feature matrix contains NaN or infinite values")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass(f"Need both classes to fit, got only {classes.tolist()}")
    return x, y


def _objective(theta: np.ndarray, x1: np.ndarray, y: np.ndarray, reg: float) -> float:
    z = x1 @ theta
    w = theta[:-1]
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * reg * (w @ w))


def _gradient(theta: np.ndarray, x1: np.ndarray, y: np.ndarray, reg: float) -> np.ndarray:
    p = sigmoid(x1 @ theta)
    grad = x1.T @ (p - y) / len(y)
    grad[:-1] += reg * theta[:-1]
    return grad


def logreg_gradient(
    model: LogisticRegression, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """Gradient of the regularised objective w.r.t. (weights, bias)."""
    x, y = _check_xy(x, y)
    x1 = np.column_stack([x, np.ones(len(x))])
    theta = np.append(model.weights, model.bias)
    return _gradient(theta, x1, y, model.reg)


def logreg_train(
    x: np.ndarray,
    y: np.ndarray,
    reg: float = 1e-4,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> LogisticRegression:
    """
    Minimise the mean binary cross-entropy plus ``reg / 2 * ||w||**2``.
    The bias is not regularised.

    Raises:
        SingleClass: If ``y`` holds only one class
        NonFinite: If ``x`` holds NaN or infinite values
    """
    x, y = _check_xy(x, y)
    n, d = x.shape
    x1 = np.column_stack([x, np.ones(n)])
    theta = np.zeros(d + 1)
    ridge = np.full(d + 1, reg)
    ridge[-1] = 0.0

    loss = _objective(theta, x1, y, reg)
    for iteration in range(1, max_iter + 1):
        grad = _gradient(theta, x1, y, reg)
        if np.linalg.norm(grad) < tol:
            break
        p = sigmoid(x1 @ theta)
        hessian = (x1.T * (p * (1.0 - p))) @ x1 / n + np.diag(ridge)
        step = np.linalg.lstsq(hessian, grad, rcond=None)[0]
        t = 1.0
        # Backtracking keeps every accepted step a descent step
        while t > 1e-10:
            candidate = theta - t * step
            candidate_loss = _objective(candidate, x1, y, reg)
            if candidate_loss <= loss - 1e-4 * t * (grad @ step):
                break
            t *= 0.5
        else:
            break
        theta, loss = candidate, candidate_loss

    logger.debug("logreg converged after %d iterations, loss %.6g", iteration, loss)
    return LogisticRegression(weights=theta[:-1].copy(), bias=float(theta[-1]), reg=reg)


def logreg_predict(model: LogisticRegression, x: np.ndarray) -> np.ndarray:
    return model.predict_proba(x)
