"""Feature extraction: FFT magnitudes, robust scaling, statistical features,
snippets and MFCCs."""
import dataclasses
import enum
import logging
from pathlib import Path
from typing import Sequence
from typing import Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy import signal
from scipy import stats

from ..errors import BadLength
from ..errors import BadParams
from ..errors import NonFinite
from ..errors import TooFewRows
from ..errors import ZeroVariance
from .data import SAMPLE_RATE
from .data import WINDOW_SIZE

logger = logging.getLogger(__name__)

N_COEFFICIENTS = WINDOW_SIZE // 2
SCALER_EPSILON = 1e-12
RECIPE_VERSION = 1


# FFT


def rfft_magnitudes(window: np.ndarray, n: int = WINDOW_SIZE) -> np.ndarray:
    """
    Magnitudes of the real DFT bins 0..n/2-1 (DC kept, Nyquist dropped).

    Accepts a single window of length ``n`` or a stack of shape (..., n).
    No taper is applied.
    """
    x = np.asarray(window, dtype=np.float64)
    if x.shape[-1:] != (n,):
        raise BadLength(f"Expected windows of length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite("Window contains non-finite values")
    return np.abs(sp_fft.rfft(x, axis=-1))[..., : n // 2]


# Scalers


@dataclasses.dataclass(frozen=True)
class RobustScaler:
    median: np.ndarray
    iqr: np.ndarray
    epsilon: float = SCALER_EPSILON

    @property
    def divisor(self) -> np.ndarray:
        return np.maximum(self.iqr, self.epsilon)

    def to_dict(self) -> dict:
        return {
            "median": self.median.tolist(),
            "iqr": self.iqr.tolist(),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RobustScaler":
        return cls(
            median=np.asarray(data["median"], dtype=np.float64),
            iqr=np.asarray(data["iqr"], dtype=np.float64),
            epsilon=float(data["epsilon"]),
        )


def fit_robust_scaler(
    train_spectra: np.ndarray, epsilon: float = SCALER_EPSILON
) -> RobustScaler:
    """Per-column median and 5..95 % quantile spacing (linear interpolation)."""
    x = np.asarray(train_spectra, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewRows(f"Need a matrix with at least 2 rows, got shape {x.shape}")
    q05, median, q95 = np.quantile(x, [0.05, 0.5, 0.95], axis=0, method="linear")
    return RobustScaler(median=median, iqr=q95 - q05, epsilon=epsilon)


def apply_scaler(scaler: RobustScaler, spectrum: np.ndarray) -> np.ndarray:
    x = np.asarray(spectrum, dtype=np.float64)
    if x.shape[-1:] != scaler.median.shape:
        raise BadLength(
            f"Expected {scaler.median.shape[0]} coefficients, got shape {x.shape}"
        )
    return (x - scaler.median) / scaler.divisor


@dataclasses.dataclass(frozen=True)
class Standardizer:
    """Zero-mean, unit-variance scaling used around the HMM."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] < 2:
            raise TooFewRows(f"Need at least 2 rows to standardize, got {x.shape[0]}")
        std = x.std(axis=0)
        return cls(mean=x.mean(axis=0), scale=np.where(std > 0, std, 1.0))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            scale=np.asarray(data["scale"], dtype=np.float64),
        )


# Statistical features


@enum.unique
class FeatureVariant(enum.Enum):
    THREE = "three"
    SEVEN = "seven"


@dataclasses.dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    names: list[str]
    recipe: str
    labels: pd.DataFrame | None = None

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise BadLength(
                f"{len(self.names)} feature names for a matrix of shape {self.values.shape}"
            )

    @property
    def header(self) -> str:
        return f"# recipe: {self.recipe}; version: {RECIPE_VERSION}"

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.names)
        if self.labels is not None:
            frame = pd.concat([self.labels.reset_index(drop=True), frame], axis=1)
        return frame

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.header + "\n")
            self.to_frame().to_csv(f, index=False, lineterminator="\n")
        return path


def _std_and_kurtosis(windows: np.ndarray, sensor: str) -> tuple[np.ndarray, np.ndarray]:
    std = windows.std(axis=-1)
    if np.any(std == 0):
        raise ZeroVariance(f"Kurtosis undefined for a constant {sensor} window")
    kurt = stats.kurtosis(windows, axis=-1, fisher=True, bias=True)
    return std, kurt


def stat_features(
    windows: dict[str, np.ndarray],
    mean_rpm: np.ndarray,
    variant: FeatureVariant = FeatureVariant.THREE,
) -> FeatureMatrix:
    """
    Minimal features per window: mean RPM plus population standard deviation
    and Fisher excess kurtosis of the vibration sensors.

    Args:
        windows: aligned window stacks keyed by channel name ("vib1".."vib3")
        mean_rpm: mean Measured_RPM of each window
        variant: THREE uses vib1 only, SEVEN uses all three sensors
    """
    sensors = ["vib1"] if variant is FeatureVariant.THREE else ["vib1", "vib2", "vib3"]
    mean_rpm = np.asarray(mean_rpm, dtype=np.float64)
    columns = [mean_rpm]
    names = ["mean_rpm"]
    for sensor in sensors:
        if sensor not in windows:
            raise BadParams(f"Variant {variant.value} needs windows for {sensor}")
        x = np.atleast_2d(np.asarray(windows[sensor], dtype=np.float64))
        if x.shape[0] != mean_rpm.shape[0]:
            raise BadLength(f"{sensor} windows are not aligned with mean_rpm")
        std, kurt = _std_and_kurtosis(x, sensor)
        columns += [std, kurt]
        names += [f"std_{sensor}", f"kurtosis_excess_{sensor}"]
    return FeatureMatrix(
        values=np.column_stack(columns),
        names=names,
        recipe=f"stat-{variant.value}",
    )


# MFCC


@dataclasses.dataclass(frozen=True)
class MfccConfig:
    n_mfcc: int = 13
    n_mels: int = 26
    snippet_len: int = 512
    overlap: int = 0
    frame_window: str = "hann"
    log_floor: float = 1e-10

    def __post_init__(self):
        if not 0 < self.n_mfcc <= self.n_mels:
            raise BadParams(f"Need 0 < n_mfcc <= n_mels, got {self.n_mfcc}/{self.n_mels}")
        if not 0 <= self.overlap < self.snippet_len:
            raise BadParams(
                f"Need 0 <= overlap < snippet_len, got {self.overlap}/{self.snippet_len}"
            )
        if self.log_floor <= 0:
            raise BadParams("log_floor must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def snippet_count(total: int, snippet_len: int, overlap: int) -> int:
    return (total - overlap) // (snippet_len - overlap)


def snippetize(sample: np.ndarray, snippet_len: int, overlap: int) -> np.ndarray:
    """
    Cut a window (or a stack of windows) into frames of ``snippet_len`` at
    stride ``snippet_len - overlap``; the trailing partial frame is dropped.

    Returns an array of shape (..., n_frames, snippet_len).
    """
    x = np.asarray(sample, dtype=np.float64)
    total = x.shape[-1]
    if not 0 <= overlap < snippet_len <= total:
        raise BadParams(
            f"Need 0 <= overlap < snippet_len <= {total}, got {overlap}/{snippet_len}"
        )
    stride = snippet_len - overlap
    frames = sliding_window_view(x, snippet_len, axis=-1)[..., ::stride, :]
    return frames[..., : snippet_count(total, snippet_len, overlap), :]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int, n_fft: int, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """
    Triangular filters equally spaced on the mel scale between 0 Hz and
    Nyquist. Returns shape (n_mels, n_fft // 2 + 1).
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - left) / (center - left)
    falling = (right - freqs) / (right - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def filterbank_energies(
    frames: np.ndarray, cfg: MfccConfig, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    taper = signal.get_window(cfg.frame_window, cfg.snippet_len)
    power = np.abs(sp_fft.rfft(frames * taper, axis=-1)) ** 2 / cfg.snippet_len
    return power @ mel_filterbank(cfg.n_mels, cfg.snippet_len, sample_rate).T


def mfcc_frames(
    frames: np.ndarray, cfg: MfccConfig, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """MFCCs of a stack of frames of shape (..., snippet_len)."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != cfg.snippet_len:
        raise BadLength(
            f"Expected frames of length {cfg.snippet_len}, got shape {frames.shape}"
        )
    log_energy = np.log(filterbank_energies(frames, cfg, sample_rate) + cfg.log_floor)
    return sp_fft.dct(log_energy, type=2, norm="ortho", axis=-1)[..., : cfg.n_mfcc]


def mfcc(frame: np.ndarray, cfg: MfccConfig, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (cfg.snippet_len,):
        raise BadLength(f"Expected a frame of length {cfg.snippet_len}, got {frame.shape}")
    return mfcc_frames(frame, cfg, sample_rate)


def mfcc_sequences(
    windows: np.ndarray, cfg: MfccConfig, sample_rate: int = SAMPLE_RATE
) -> np.ndarray:
    """MFCC sequences for a stack of windows: shape (n_windows, n_frames, n_mfcc)."""
    frames = snippetize(np.atleast_2d(windows), cfg.snippet_len, cfg.overlap)
    return mfcc_frames(frames, cfg, sample_rate)


# Feature matrices for the CLI


def fft_feature_matrix(windows: np.ndarray) -> FeatureMatrix:
    spectra = rfft_magnitudes(np.atleast_2d(windows))
    names = [f"fft_{k:04d}" for k in range(spectra.shape[1])]
    return FeatureMatrix(values=spectra, names=names, recipe="fft-magnitude")


def mfcc_feature_matrix(windows: np.ndarray, cfg: MfccConfig) -> FeatureMatrix:
    """One row per snippet; rows of a window are consecutive."""
    sequences = mfcc_sequences(windows, cfg)
    values = sequences.reshape(-1, cfg.n_mfcc)
    names = [f"mfcc_{k:02d}" for k in range(cfg.n_mfcc)]
    recipe = (
        f"mfcc(n_mfcc={cfg.n_mfcc}, n_mels={cfg.n_mels}, snippet_len={cfg.snippet_len}, "
        f"overlap={cfg.overlap}, window={cfg.frame_window})"
    )
    return FeatureMatrix(values=values, names=names, recipe=recipe)


def stack_features(matrices: Sequence[FeatureMatrix]) -> FeatureMatrix:
    first = matrices[0]
    labels = None
    if all(m.labels is not None for m in matrices):
        labels = pd.concat([m.labels for m in matrices], ignore_index=True)
    return FeatureMatrix(
        values=np.vstack([m.values for m in matrices]),
        names=first.names,
        recipe=first.recipe,
        labels=labels,
    )
