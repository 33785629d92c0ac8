from .base import Detector
from .cnn1d import Cnn1dModel
from .forest import RandomForest
from .hmm import GaussianHmm
from .hmm import HmmDetector
from .hmm import HmmDetectorBank
from .logreg import LogisticRegression
from .mlp import MlpModel

DETECTOR_KINDS: dict[str, type[Detector]] = {
    cls.kind: cls
    for cls in (LogisticRegression, MlpModel, Cnn1dModel, RandomForest, HmmDetectorBank)
}

__all__ = [
    "DETECTOR_KINDS",
    "Cnn1dModel",
    "Detector",
    "GaussianHmm",
    "HmmDetector",
    "HmmDetectorBank",
    "LogisticRegression",
    "MlpModel",
    "RandomForest",
]
