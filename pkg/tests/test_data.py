import dataclasses

import numpy as np
import pytest

from shaftwatch.core.data import COLUMNS
from shaftwatch.core.data import DatasetId
from shaftwatch.core.data import Recording
from shaftwatch.core.data import Role
from shaftwatch.core.data import Synthetic
from shaftwatch.core.data import WindowSample
from shaftwatch.core.data import all_dataset_ids
from shaftwatch.core.data import load_recording
from shaftwatch.core.data import parse_dataset_id
from shaftwatch.core.data import save_recording
from shaftwatch.core.data import trim_warmup
from shaftwatch.core.data import window
from shaftwatch.core.data import window_count
from shaftwatch.core.data import window_matrix
from shaftwatch.errors import BadId
from shaftwatch.errors import EmptyFile
from shaftwatch.errors import MissingColumn
from shaftwatch.errors import NonNumericCell
from shaftwatch.errors import RecordingInvariantError
from shaftwatch.errors import TooShort

from .conftest import make_recording


@pytest.mark.parametrize(
    "text, strength, role",
    [
        ("0D", 0, Role.DEVELOPMENT),
        ("4E", 4, Role.EVALUATION),
        ("2D", 2, Role.DEVELOPMENT),
        ("3E", 3, Role.EVALUATION),
    ],
)
def test_parse_dataset_id(text: str, strength: int, role: Role):
    """Test parsing valid dataset ids."""
    dataset_id = parse_dataset_id(text)
    assert dataset_id == DatasetId(strength, role)
    assert str(dataset_id) == text
    assert dataset_id.filename == f"{text}.csv"


@pytest.mark.parametrize("text", ["5D", "0X", "0d", "", "10D", "D0", " 0D"])
def test_parse_dataset_id_invalid(text: str):
    """Test that malformed dataset ids are rejected."""
    with pytest.raises(BadId):
        parse_dataset_id(text)


def test_all_dataset_ids():
    """Test that the ten datasets are enumerated once each."""
    ids = all_dataset_ids()
    assert len(ids) == 10
    assert len(set(ids)) == 10
    assert {str(i) for i in ids} == {f"{k}{r}" for k in range(5) for r in "DE"}


def test_dataset_description():
    assert DatasetId(0, Role.DEVELOPMENT).description == "no unbalance"
    assert DatasetId(4, Role.EVALUATION).description == "strong unbalance"


def test_save_load_roundtrip_is_bit_identical(tmp_path):
    """Test that values survive a write and read without any change."""
    rec = make_recording(1000, strength=3, role=Role.EVALUATION, seed=5)
    path = save_recording(rec, tmp_path / "3E.csv")

    loaded = load_recording(path, parse_dataset_id("3E"))

    assert len(loaded) == 1000
    for name in ("v_in", "measured_rpm", "vib1", "vib2", "vib3"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(rec, name))
    assert loaded.unbalance_id == 3
    assert loaded.role is Role.EVALUATION


def test_saved_file_uses_lf_and_schema_header(tmp_path):
    path = save_recording(make_recording(10), tmp_path / "0D.csv")
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0].decode() == ",".join(COLUMNS)


def test_load_zeros_file(tmp_path):
    """Test loading an 8192-row file of zeros."""
    path = tmp_path / "0D.csv"
    rows = ["0,0,0,0,0"] * 8192
    path.write_text(",".join(COLUMNS) + "\n" + "\n".join(rows) + "\n")

    rec = load_recording(path, parse_dataset_id("0D"))

    assert len(rec) == 8192
    assert rec.vib1.dtype == np.float64
    assert not rec.vib3.any()


def test_load_column_order_and_crlf(tmp_path):
    """Test that column order is free and CRLF line endings are accepted."""
    path = tmp_path / "1D.csv"
    header = "Vibration_3,V_in,Vibration_1,Measured_RPM,Vibration_2"
    path.write_bytes((header + "\r\n" + "3,4.0,1,1057,2\r\n" * 5).encode())

    rec = load_recording(path, parse_dataset_id("1D"))

    assert rec.vib1.tolist() == [1.0] * 5
    assert rec.vib2.tolist() == [2.0] * 5
    assert rec.vib3.tolist() == [3.0] * 5
    assert rec.measured_rpm.tolist() == [1057.0] * 5


def test_load_missing_column(tmp_path):
    """Test that a missing column is reported by name."""
    path = tmp_path / "0D.csv"
    path.write_text("V_in,Measured_RPM,Vibration_1,Vibration_3\n1,2,3,4\n")

    with pytest.raises(MissingColumn) as exc_info:
        load_recording(path, parse_dataset_id("0D"))

    assert exc_info.value.name == "Vibration_2"


def test_load_non_numeric_cell(tmp_path):
    """Test that a non-numeric cell is reported with its row and column."""
    path = tmp_path / "0D.csv"
    path.write_text(
        ",".join(COLUMNS) + "\n" + "1,2,3,4,5\n" + "1,2,3,4,5\n" + "1,2,3,abc,5\n"
    )

    with pytest.raises(NonNumericCell) as exc_info:
        load_recording(path, parse_dataset_id("0D"))

    assert exc_info.value.row == 2
    assert exc_info.value.col == "Vibration_2"


def test_load_empty_file(tmp_path):
    path = tmp_path / "0D.csv"
    path.write_text("")
    with pytest.raises(EmptyFile):
        load_recording(path, parse_dataset_id("0D"))


def test_load_header_only(tmp_path):
    path = tmp_path / "0D.csv"
    path.write_text(",".join(COLUMNS) + "\n")
    with pytest.raises(EmptyFile):
        load_recording(path, parse_dataset_id("0D"))


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_recording(tmp_path / "nope.csv", parse_dataset_id("0D"))


def test_recording_invariants():
    """Test that a recording rejects unequal lengths and negative speeds."""
    n = 10
    base = dict(
        v_in=np.zeros(n),
        measured_rpm=np.zeros(n),
        vib1=np.zeros(n),
        vib2=np.zeros(n),
        vib3=np.zeros(n),
        unbalance_id=0,
        role=Role.DEVELOPMENT,
        source=Synthetic(0),
    )
    with pytest.raises(RecordingInvariantError):
        Recording(**{**base, "vib2": np.zeros(n + 1)})
    with pytest.raises(RecordingInvariantError):
        Recording(**{**base, "measured_rpm": np.full(n, -1.0)})
    with pytest.raises(RecordingInvariantError):
        Recording(**{**base, "measured_rpm": np.full(n, np.nan)})
    with pytest.raises(RecordingInvariantError):
        Recording(**base, sample_rate=1000)


def test_recording_is_read_only():
    rec = make_recording(16)
    with pytest.raises(ValueError):
        rec.vib1[0] = 1.0
    with pytest.raises(dataclasses.FrozenInstanceError):
        rec.unbalance_id = 2


@pytest.mark.parametrize("length, expected", [(54096, 4096), (50001, 1)])
def test_trim_warmup(length: int, expected: int):
    rec = make_recording(length)
    trimmed = trim_warmup(rec)
    assert len(trimmed) == expected
    np.testing.assert_array_equal(trimmed.vib1, rec.vib1[50000:])


@pytest.mark.parametrize("length", [50000, 100])
def test_trim_warmup_too_short(length: int):
    with pytest.raises(TooShort):
        trim_warmup(make_recording(length))


@pytest.mark.parametrize(
    "length, expected",
    [(12288, 3), (4095, 0), (4096, 1), (12287, 2), (26421248 - 50000, 6438)],
)
def test_window_count(length: int, expected: int):
    assert window_count(length) == expected


def test_window_constant_speed():
    """Test windowing a recording with three full windows at constant speed."""
    rec = make_recording(12288, strength=2, rpm=1500.0)

    samples = window(rec)

    assert len(samples) == 3
    assert [s.window_index for s in samples] == [0, 1, 2]
    assert all(s.mean_rpm == pytest.approx(1500.0) for s in samples)
    assert all(s.label == 1 and s.unbalance_id == 2 for s in samples)
    np.testing.assert_array_equal(samples[1].values, rec.vib1[4096:8192])


def test_window_short_recording():
    assert window(make_recording(4095)) == []


def test_window_matrix_covers_disjoint_ranges():
    """Test that windows tile the recording without gaps or overlap."""
    rec = make_recording(4096 * 4 + 100, seed=3)

    values, mean_rpm = window_matrix(rec, "vib3")

    assert values.shape == (4, 4096)
    assert mean_rpm.shape == (4,)
    np.testing.assert_array_equal(values.reshape(-1), rec.vib3[: 4 * 4096])


@pytest.mark.parametrize("length", [0, 4095, 4097, 8192])
def test_window_sample_rejects_wrong_length(length: int):
    with pytest.raises(RecordingInvariantError, match="expected 4096"):
        WindowSample(values=np.zeros(length), mean_rpm=1500.0, unbalance_id=0, label=0, window_index=0)


def test_window_rejects_other_sizes():
    with pytest.raises(RecordingInvariantError, match="Window holds 2048 samples"):
        window(make_recording(8192), size=2048)


def test_window_no_unbalance_label():
    samples = window(make_recording(4096, strength=0))
    assert samples[0].label == 0
