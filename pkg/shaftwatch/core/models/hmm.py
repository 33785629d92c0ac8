"""Gaussian hidden Markov model and the per-speed-interval HMM detector.

The HMM is fitted on MFCC sequences of windows without unbalance; its
per-frame log-likelihood of a new window is the single feature of a
logistic-regression head.
"""
import dataclasses
import logging
from typing import Any
from typing import ClassVar
from typing import Optional
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ...errors import BadParams
from ...errors import EmptyInput
from ...errors import EmptySequence
from ...errors import warn_degenerate_variance
from ..dsp import MfccConfig
from ..dsp import Standardizer
from ..dsp import mfcc_sequences
from .base import Detector
from .logreg import LogisticRegression

logger = logging.getLogger(__name__)

VARIANCE_FLOOR_RATIO = 1e-6
_TINY = 1e-300
_LOG_2PI = np.log(2.0 * np.pi)


@dataclasses.dataclass
class GaussianHmm:
    startprob: np.ndarray  # (S,)
    transmat: np.ndarray  # (S, S), rows sum to 1
    means: np.ndarray  # (S, D)
    variances: np.ndarray  # (S, D), diagonal covariances
    variance_floor: np.ndarray  # (D,)
    variance_floored: bool = False
    n_iter: int = 0
    log_likelihoods: list[float] = dataclasses.field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.startprob)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "startprob": self.startprob.tolist(),
            "transmat": self.transmat.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "variance_floor": self.variance_floor.tolist(),
            "variance_floored": self.variance_floored,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianHmm":
        return cls(
            startprob=np.asarray(data["startprob"], dtype=np.float64),
            transmat=np.asarray(data["transmat"], dtype=np.float64),
            means=np.asarray(data["means"], dtype=np.float64),
            variances=np.asarray(data["variances"], dtype=np.float64),
            variance_floor=np.asarray(data["variance_floor"], dtype=np.float64),
            variance_floored=bool(data.get("variance_floored", False)),
            n_iter=int(data.get("n_iter", 0)),
        )


def emission_log_prob(hmm: GaussianHmm, x: np.ndarray) -> np.ndarray:
    """Log-density of every frame under every state: (..., T, D) -> (..., T, S)."""
    diff = x[..., None, :] - hmm.means
    return -0.5 * (
        np.sum(_LOG_2PI + np.log(hmm.variances), axis=-1)
        + np.sum(diff**2 / hmm.variances, axis=-1)
    )


def _log(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, _TINY))


def forward_log(hmm: GaussianHmm, log_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Forward recursion in log space for a batch of equal-length sequences.

    Args:
        log_b: emission log-probabilities, shape (N, T, S)

    Returns:
        (log_alpha of shape (N, T, S), sequence log-likelihoods of shape (N,))
    """
    log_a = _log(hmm.transmat)
    log_alpha = np.empty_like(log_b)
    log_alpha[:, 0] = _log(hmm.startprob) + log_b[:, 0]
    for t in range(1, log_b.shape[1]):
        log_alpha[:, t] = logsumexp(log_alpha[:, t - 1, :, None] + log_a, axis=1) + log_b[:, t]
    return log_alpha, logsumexp(log_alpha[:, -1], axis=-1)


def backward_log(hmm: GaussianHmm, log_b: np.ndarray) -> np.ndarray:
    log_a = _log(hmm.transmat)
    log_beta = np.zeros_like(log_b)
    for t in range(log_b.shape[1] - 2, -1, -1):
        log_beta[:, t] = logsumexp(
            log_a + (log_b[:, t + 1] + log_beta[:, t + 1])[:, None, :], axis=2
        )
    return log_beta


def sequence_loglik(hmm: GaussianHmm, sequences: np.ndarray) -> np.ndarray:
    """Total log-likelihood of one (T, D) sequence or a (N, T, D) batch."""
    x = np.asarray(sequences, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1] == 0:
        raise EmptySequence("Cannot score a sequence without frames")
    _, loglik = forward_log(hmm, emission_log_prob(hmm, x))
    loglik = np.maximum(loglik, np.finfo(np.float64).min)
    return loglik[0] if single else loglik


def hmm_loglik(hmm: GaussianHmm, sequence: np.ndarray):
    """Forward log-likelihood divided by the number of frames."""
    x = np.asarray(sequence, dtype=np.float64)
    if x.ndim < 2 or x.shape[-2] == 0:
        raise EmptySequence("Cannot score a sequence without frames")
    return sequence_loglik(hmm, x) / x.shape[-2]


def _group_by_length(sequences: Sequence[np.ndarray]) -> list[np.ndarray]:
    groups: dict[int, list[np.ndarray]] = {}
    for seq in sequences:
        groups.setdefault(len(seq), []).append(seq)
    return [np.stack(groups[length]) for length in sorted(groups)]


def _clamp_variances(hmm: GaussianHmm, variances: np.ndarray) -> np.ndarray:
    low = variances < hmm.variance_floor
    if low.any():
        if not hmm.variance_floored:
            warn_degenerate_variance(int(low.any(axis=0).sum()))
        hmm.variance_floored = True
    return np.maximum(variances, hmm.variance_floor)


def _e_step(hmm: GaussianHmm, groups: list[np.ndarray]):
    n_states, n_features = hmm.n_states, hmm.n_features
    start = np.zeros(n_states)
    trans = np.zeros((n_states, n_states))
    post = np.zeros(n_states)
    first = np.zeros((n_states, n_features))
    second = np.zeros((n_states, n_features))
    total = 0.0
    log_a = _log(hmm.transmat)
    for x in groups:
        log_b = emission_log_prob(hmm, x)
        log_alpha, loglik = forward_log(hmm, log_b)
        log_beta = backward_log(hmm, log_b)
        gamma = np.exp(log_alpha + log_beta - loglik[:, None, None])
        start += gamma[:, 0].sum(axis=0)
        if x.shape[1] > 1:
            log_xi = (
                log_alpha[:, :-1, :, None]
                + log_a
                + (log_b[:, 1:] + log_beta[:, 1:])[:, :, None, :]
                - loglik[:, None, None, None]
            )
            trans += np.exp(log_xi).sum(axis=(0, 1))
        post += gamma.sum(axis=(0, 1))
        first += np.einsum("nts,ntd->sd", gamma, x)
        second += np.einsum("nts,ntd->sd", gamma, x**2)
        total += float(loglik.sum())
    return start, trans, post, first, second, total


def _m_step(hmm: GaussianHmm, start, trans, post, first, second) -> None:
    hmm.startprob = start / start.sum()
    row_sums = trans.sum(axis=1, keepdims=True)
    transmat = np.where(row_sums > 0, trans / np.where(row_sums > 0, row_sums, 1.0), hmm.transmat)
    hmm.transmat = transmat / transmat.sum(axis=1, keepdims=True)
    used = post > 0
    safe = np.where(used, post, 1.0)[:, None]
    means = np.where(used[:, None], first / safe, hmm.means)
    variances = np.where(used[:, None], second / safe - means**2, hmm.variances)
    hmm.means = means
    hmm.variances = _clamp_variances(hmm, variances)


def hmm_fit(
    sequences: Sequence[np.ndarray],
    n_states: int,
    seed: int,
    max_iter: int = 200,
    tol: float = 1e-6,
    variance_floor_ratio: float = VARIANCE_FLOOR_RATIO,
) -> GaussianHmm:
    """
    Fit a diagonal-Gaussian HMM by Baum-Welch.

    Iterates until the total log-likelihood gains less than ``tol`` or
    ``max_iter`` iterations have run. Variances below
    ``variance_floor_ratio`` times the feature variance are clamped and the
    model is flagged with ``variance_floored``.

    Raises:
        EmptyInput: If there are no sequences or a sequence has no frames
    """
    if n_states < 1:
        raise BadParams(f"n_states must be >= 1, got {n_states}")
    sequences = [np.asarray(s, dtype=np.float64) for s in sequences]
    if not sequences or any(s.ndim != 2 or len(s) == 0 for s in sequences):
        raise EmptyInput("hmm_fit needs at least one non-empty (T, D) sequence")
    frames = np.vstack(sequences)
    feature_var = frames.var(axis=0)
    floor = variance_floor_ratio * np.where(feature_var > 0, feature_var, 1.0)

    rng = np.random.default_rng(seed)
    if n_states == 1:
        means = frames.mean(axis=0)[None]
        transmat = np.ones((1, 1))
    else:
        picks = rng.choice(len(frames), size=n_states, replace=len(frames) < n_states)
        means = frames[picks].copy()
        transmat = rng.dirichlet(np.full(n_states, 10.0), size=n_states)
        transmat /= transmat.sum(axis=1, keepdims=True)
    hmm = GaussianHmm(
        startprob=np.full(n_states, 1.0 / n_states),
        transmat=transmat,
        means=means,
        variances=np.tile(feature_var, (n_states, 1)),
        variance_floor=floor,
    )
    hmm.variances = _clamp_variances(hmm, hmm.variances)
    groups = _group_by_length(sequences)

    if n_states == 1:
        # Closed form: the single state's mean and variance are the frame moments
        hmm.log_likelihoods.append(float(sum(sequence_loglik(hmm, g).sum() for g in groups)))
        return hmm

    previous = -np.inf
    for iteration in range(1, max_iter + 1):
        start, trans, post, first, second, total = _e_step(hmm, groups)
        hmm.log_likelihoods.append(total)
        _m_step(hmm, start, trans, post, first, second)
        hmm.n_iter = iteration
        logger.debug("Baum-Welch iteration %d: log-likelihood %.6f", iteration, total)
        if total - previous < tol:
            break
        previous = total
    logger.debug("HMM with %d states fitted in %d iterations", n_states, hmm.n_iter)
    return hmm


@dataclasses.dataclass
class HmmDetector:
    """One speed interval: scaler, HMM, scaler and logistic head."""

    scaler1: Standardizer
    hmm: GaussianHmm
    scaler2: Standardizer
    head: LogisticRegression
    speed_interval: tuple[float, float]
    mfcc: MfccConfig

    def contains(self, mean_rpm: np.ndarray) -> np.ndarray:
        lo, hi = self.speed_interval
        rpm = np.asarray(mean_rpm, dtype=np.float64)
        return (rpm >= lo) & (rpm < hi)

    def loglik_features(self, sequences: np.ndarray) -> np.ndarray:
        """Per-frame HMM log-likelihood of raw MFCC sequences, shape (N, 1)."""
        scaled = self.scaler1.apply(sequences)
        return hmm_loglik(self.hmm, scaled)[:, None]

    def predict_proba(self, windows: np.ndarray) -> np.ndarray:
        features = self.loglik_features(mfcc_sequences(windows, self.mfcc))
        return self.head.predict_proba(self.scaler2.apply(features))

    def to_dict(self) -> dict:
        return {
            "scaler1": self.scaler1.to_dict(),
            "hmm": self.hmm.to_dict(),
            "scaler2": self.scaler2.to_dict(),
            "head": self.head.to_params(),
            "speed_interval": list(self.speed_interval),
            "mfcc": self.mfcc.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HmmDetector":
        lo, hi = data["speed_interval"]
        return cls(
            scaler1=Standardizer.from_dict(data["scaler1"]),
            hmm=GaussianHmm.from_dict(data["hmm"]),
            scaler2=Standardizer.from_dict(data["scaler2"]),
            head=LogisticRegression.from_params(data["head"]),
            speed_interval=(float(lo), float(hi)),
            mfcc=MfccConfig(**data["mfcc"]),
        )


@dataclasses.dataclass
class HmmDetectorBank(Detector):
    """
    Speed-interval detectors. Each window is scored by the detector whose
    interval holds its mean speed; windows outside every interval go to the
    detector with the nearest interval centre.
    """

    detectors: list[HmmDetector]

    kind: ClassVar[str] = "hmm_bank"

    def route(self, mean_rpm: np.ndarray) -> np.ndarray:
        rpm = np.asarray(mean_rpm, dtype=np.float64)
        centres = np.array([(lo + hi) / 2.0 for lo, hi in self.intervals])
        nearest = np.abs(rpm[:, None] - centres).argmin(axis=1)
        for i, detector in enumerate(self.detectors):
            nearest = np.where(detector.contains(rpm), i, nearest)
        return nearest

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [d.speed_interval for d in self.detectors]

    def predict_proba(self, x: np.ndarray, mean_rpm: Optional[np.ndarray] = None) -> np.ndarray:
        if mean_rpm is None:
            raise BadParams("HMM detectors need the mean speed of every window")
        x = np.atleast_2d(x)
        which = self.route(np.atleast_1d(mean_rpm))
        proba = np.zeros(len(x))
        for i, detector in enumerate(self.detectors):
            rows = which == i
            if rows.any():
                proba[rows] = detector.predict_proba(x[rows])
        return proba

    def predict(self, x: np.ndarray, mean_rpm: Optional[np.ndarray] = None) -> np.ndarray:
        return (self.predict_proba(x, mean_rpm) >= 0.5).astype(np.int64)

    def to_params(self) -> dict[str, Any]:
        return {"detectors": [d.to_dict() for d in self.detectors]}

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> "HmmDetectorBank":
        return cls(detectors=[HmmDetector.from_dict(d) for d in params["detectors"]])
