"""Loading, validation, warm-up trimming and windowing of rig recordings.

A recording is the five-column CSV written by the measurement rig (or by the
simulator): ``V_in, Measured_RPM, Vibration_1, Vibration_2, Vibration_3`` at
4096 samples per second. Files are named after their dataset id, e.g.
``0D.csv`` (no unbalance, development) or ``4E.csv`` (strongest unbalance,
evaluation).
"""
import dataclasses
import enum
import logging
import re
from pathlib import Path
from typing import Literal
from typing import Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import BadId
from ..errors import BadParams
from ..errors import EmptyFile
from ..errors import MissingColumn
from ..errors import NonNumericCell
from ..errors import RecordingInvariantError
from ..errors import TooShort

logger = logging.getLogger(__name__)

SAMPLE_RATE = 4096
WINDOW_SIZE = 4096
WARMUP_SAMPLES = 50_000

COLUMNS = ("V_in", "Measured_RPM", "Vibration_1", "Vibration_2", "Vibration_3")

Channel = Literal["vib1", "vib2", "vib3"]
CHANNELS: tuple[Channel, ...] = ("vib1", "vib2", "vib3")
_CHANNEL_COLUMNS = {"vib1": "Vibration_1", "vib2": "Vibration_2", "vib3": "Vibration_3"}

_DATASET_ID_RE = re.compile(r"([0-4])([DE])")
_PARSER_LINE_RE = re.compile(r"line (\d+)")


@enum.unique
class Role(enum.Enum):
    DEVELOPMENT = "D"
    EVALUATION = "E"


@dataclasses.dataclass(frozen=True)
class DatasetId:
    strength: int
    role: Role

    def __post_init__(self):
        if not 0 <= self.strength <= 4:
            raise BadId(f"Unbalance strength must be within 0..4, got {self.strength}")

    def __str__(self) -> str:
        return f"{self.strength}{self.role.value}"

    @property
    def filename(self) -> str:
        return f"{self}.csv"

    @property
    def description(self) -> str:
        if self.strength == 0:
            return "no unbalance"
        if self.strength == 4:
            return "strong unbalance"
        return f"unbalance strength {self.strength}"


@dataclasses.dataclass(frozen=True)
class RealFile:
    path: Path


@dataclasses.dataclass(frozen=True)
class Synthetic:
    seed: int


RecordingSource = Union[RealFile, Synthetic]


@dataclasses.dataclass(frozen=True)
class Recording:
    v_in: np.ndarray
    measured_rpm: np.ndarray
    vib1: np.ndarray
    vib2: np.ndarray
    vib3: np.ndarray
    unbalance_id: int
    role: Role
    source: RecordingSource
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate != SAMPLE_RATE:
            raise RecordingInvariantError(
                f"Sample rate must be {SAMPLE_RATE} Hz, got {self.sample_rate}"
            )
        lengths = {len(a) for a in self._channels()}
        if len(lengths) != 1:
            raise RecordingInvariantError(
                f"All channels must have equal length, got {sorted(lengths)}"
            )
        rpm = self.measured_rpm
        if not np.all(np.isfinite(rpm)) or np.any(rpm < 0):
            raise RecordingInvariantError("Measured_RPM must be finite and >= 0")
        for array in self._channels():
            array.flags.writeable = False

    def _channels(self) -> tuple[np.ndarray, ...]:
        return (self.v_in, self.measured_rpm, self.vib1, self.vib2, self.vib3)

    def __len__(self) -> int:
        return len(self.v_in)

    @property
    def dataset_id(self) -> DatasetId:
        return DatasetId(self.unbalance_id, self.role)

    def channel(self, name: Channel) -> np.ndarray:
        if name not in _CHANNEL_COLUMNS:
            raise BadParams(f"Unknown channel {name!r}, expected one of {CHANNELS}")
        return getattr(self, name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(dict(zip(COLUMNS, self._channels())))


@dataclasses.dataclass(frozen=True)
class WindowSample:
    values: np.ndarray
    mean_rpm: float
    unbalance_id: int
    label: int
    window_index: int

    def __post_init__(self):
        if self.values.ndim != 1:
            raise BadParams("Window values must be one-dimensional")
        if len(self.values) != WINDOW_SIZE:
            raise RecordingInvariantError(
                f"Window holds {len(self.values)} samples, expected {WINDOW_SIZE}"
            )
        if self.label != int(self.unbalance_id != 0):
            raise RecordingInvariantError(
                f"Label {self.label} inconsistent with unbalance id {self.unbalance_id}"
            )


def parse_dataset_id(s: str) -> DatasetId:
    match = _DATASET_ID_RE.fullmatch(s)
    if not match:
        raise BadId(f"Invalid dataset id {s!r}, expected <0-4><D|E>")
    strength, role = match.groups()
    return DatasetId(int(strength), Role(role))


def all_dataset_ids() -> list[DatasetId]:
    return [DatasetId(k, role) for k in range(5) for role in Role]


def load_recording(path: Union[str, Path], dataset_id: DatasetId) -> Recording:
    """
    Load a recording from a five-column CSV file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        EmptyFile: If the file has no header or no data rows
        MissingColumn: If one of the five expected columns is absent
        NonNumericCell: If a cell cannot be parsed as a real number
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Recording not found: {path}")
    if path.stat().st_size == 0:
        raise EmptyFile(f"Empty recording file: {path}")

    try:
        # round_trip keeps write -> read bit-identical
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"Empty recording file: {path}")
    except pd.errors.ParserError as e:
        match = _PARSER_LINE_RE.search(str(e))
        row = int(match.group(1)) - 2 if match else -1
        raise NonNumericCell(row, "*", str(e))

    frame.columns = [str(c).strip() for c in frame.columns]
    for column in COLUMNS:
        if column not in frame.columns:
            raise MissingColumn(column)
    extra = sorted(set(frame.columns) - set(COLUMNS))
    if extra:
        raise RecordingInvariantError(f"Unexpected columns in {path.name}: {extra}")
    if len(frame) == 0:
        raise EmptyFile(f"Recording {path} has a header but no rows")

    arrays = {}
    for column in COLUMNS:
        raw = frame[column]
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna().to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            raise NonNumericCell(row, column, raw.iloc[row])
        arrays[column] = np.ascontiguousarray(values.to_numpy(dtype=np.float64))

    logger.info("Loaded %s: %d rows", path.name, len(frame))
    return Recording(
        v_in=arrays["V_in"],
        measured_rpm=arrays["Measured_RPM"],
        vib1=arrays["Vibration_1"],
        vib2=arrays["Vibration_2"],
        vib3=arrays["Vibration_3"],
        unbalance_id=dataset_id.strength,
        role=dataset_id.role,
        source=RealFile(path),
    )


def save_recording(recording: Recording, path: Union[str, Path]) -> Path:
    """Write a recording in the five-column CSV schema (LF line endings)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    recording.to_frame().to_csv(path, index=False, lineterminator="\n")
    return path


def trim_warmup(recording: Recording, n: int = WARMUP_SAMPLES) -> Recording:
    if len(recording) <= n:
        raise TooShort(
            f"Recording {recording.dataset_id} has {len(recording)} samples, "
            f"need more than {n} to trim the warm-up"
        )
    return dataclasses.replace(
        recording,
        v_in=recording.v_in[n:],
        measured_rpm=recording.measured_rpm[n:],
        vib1=recording.vib1[n:],
        vib2=recording.vib2[n:],
        vib3=recording.vib3[n:],
    )


def window_count(length: int, size: int = WINDOW_SIZE, hop: int = WINDOW_SIZE) -> int:
    if length < size:
        return 0
    return (length - size) // hop + 1


def window_matrix(
    recording: Recording,
    channel: Channel = "vib1",
    size: int = WINDOW_SIZE,
    hop: int = WINDOW_SIZE,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Cut one channel into windows without copying.

    Returns:
        (values, mean_rpm) with shapes (n_windows, size) and (n_windows,).
        The trailing partial window is discarded.
    """
    if size < 1 or hop < 1:
        raise BadParams(f"Window size and hop must be >= 1, got size={size}, hop={hop}")
    count = window_count(len(recording), size, hop)
    if count == 0:
        return np.empty((0, size)), np.empty(0)
    values = sliding_window_view(recording.channel(channel), size)[::hop][:count]
    rpm = sliding_window_view(recording.measured_rpm, size)[::hop][:count]
    return values, rpm.mean(axis=1)


def window(
    recording: Recording,
    channel: Channel = "vib1",
    size: int = WINDOW_SIZE,
    hop: int = WINDOW_SIZE,
) -> list[WindowSample]:
    values, mean_rpm = window_matrix(recording, channel, size, hop)
    label = int(recording.unbalance_id != 0)
    return [
        WindowSample(
            values=values[i],
            mean_rpm=float(mean_rpm[i]),
            unbalance_id=recording.unbalance_id,
            label=label,
            window_index=i,
        )
        for i in range(len(values))
    ]
