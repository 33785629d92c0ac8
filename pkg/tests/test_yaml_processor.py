import io
from pathlib import Path

import pytest
import yaml

from shaftwatch.core.yaml_processor import load_experiment_spec_from_yaml
from shaftwatch.core.yaml_processor import load_experiment_spec_from_yaml_fileobj
from shaftwatch.core.yaml_processor import load_sim_spec_from_yaml
from shaftwatch.core.yaml_processor import load_sim_spec_from_yaml_fileobj
from shaftwatch.core.yaml_processor import save_sim_spec_to_yaml
from shaftwatch.core.yaml_processor import save_sim_spec_to_yaml_fileobj
from shaftwatch.scheme.experiment import AllStrengths
from shaftwatch.scheme.experiment import Approach
from shaftwatch.scheme.experiment import ExperimentSpec
from shaftwatch.scheme.experiment import HmmGrid
from shaftwatch.scheme.experiment import HmmParams
from shaftwatch.scheme.experiment import Pairwise
from shaftwatch.scheme.experiment import SyntheticSource
from shaftwatch.scheme.experiment import default_intervals
from shaftwatch.scheme.experiment import parse_mode
from shaftwatch.scheme.simulation import SimSpec


@pytest.fixture
def overrides_sim(fixtures_folder: Path) -> SimSpec:
    """Load a simulation spec with unbalance and resonance overrides."""
    return load_sim_spec_from_yaml(fixtures_folder / "overrides_simulation.yaml")


@pytest.fixture
def rf3_spec(fixtures_folder: Path) -> ExperimentSpec:
    return load_experiment_spec_from_yaml(fixtures_folder / "rf3_pairwise.yaml")


def test_tiny_simulation(fixtures_folder: Path):
    """Test loading the short simulation used by the command-line tests."""
    spec = load_sim_spec_from_yaml(fixtures_folder / "tiny_simulation.yaml")

    assert spec.seed == 11
    assert spec.development.step_seconds == 0.05
    assert spec.evaluation.repetitions == 2
    assert spec.unbalances == {}
    assert spec.resonance_bands is None


def test_overrides_simulation(overrides_sim: SimSpec):
    assert overrides_sim.seed == 42
    assert set(overrides_sim.unbalances) == {2}
    assert overrides_sim.unbalances[2].radius_mm == 20.0
    assert overrides_sim.unbalances[2].factor == pytest.approx(65.62)
    assert overrides_sim.resonance_bands[0].center_rpm == 1200.0
    assert overrides_sim.remount_jitter == 0.0


def test_save_and_load_sim_spec(overrides_sim: SimSpec, tmp_path: Path):
    """Test saving and loading a simulation spec from YAML."""
    temp_path = tmp_path / "nested" / "simulation.yaml"

    save_sim_spec_to_yaml(overrides_sim, temp_path)
    loaded = load_sim_spec_from_yaml(temp_path)

    assert loaded == overrides_sim


def test_save_and_load_sim_spec_fileobj(overrides_sim: SimSpec):
    buffer = io.StringIO()
    save_sim_spec_to_yaml_fileobj(overrides_sim, buffer)
    buffer.seek(0)
    assert load_sim_spec_from_yaml_fileobj(buffer) == overrides_sim


def test_sim_spec_yaml_format():
    """Test that the dump keeps the field order of the model."""
    buffer = io.StringIO()
    save_sim_spec_to_yaml_fileobj(SimSpec(), buffer)

    content = buffer.getvalue()
    data = yaml.safe_load(content)

    assert content.startswith("seed: 2020\n")
    assert list(data)[:4] == ["seed", "unbalances", "development", "evaluation"]
    assert data["development"] == {"step_seconds": 20.0, "repetitions": 2}


def test_empty_document_gives_defaults():
    assert load_sim_spec_from_yaml_fileobj(io.StringIO("")) == SimSpec()


def test_missing_file(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        load_sim_spec_from_yaml(tmp_path / "missing.yaml")
    with pytest.raises(FileNotFoundError):
        load_experiment_spec_from_yaml(tmp_path / "missing.yaml")


def test_malformed_yaml():
    with pytest.raises(yaml.YAMLError):
        load_sim_spec_from_yaml_fileobj(io.StringIO("seed: [1, 2\n"))


@pytest.mark.parametrize(
    "content, match",
    [
        ("seed: abc\n", "Invalid simulation spec field 'seed'"),
        ("base_noise_sigma: -1\n", "base_noise_sigma"),
        ("unbalances:\n  7:\n    mass_g: 1\n    radius_mm: 1\n", "unknown strengths"),
        ("- 1\n- 2\n", "Expected dictionary"),
    ],
)
def test_invalid_sim_spec(content: str, match: str):
    with pytest.raises(ValueError, match=match):
        load_sim_spec_from_yaml_fileobj(io.StringIO(content))


def test_rf3_experiment(rf3_spec: ExperimentSpec):
    """Test loading a pairwise random forest experiment."""
    assert rf3_spec.approach is Approach.RF3
    assert rf3_spec.mode == Pairwise(strength=4)
    assert rf3_spec.mode.strengths == [0, 4]
    assert rf3_spec.forest.n_trees == 25
    assert rf3_spec.forest.features_per_split == 2
    assert isinstance(rf3_spec.data_source, SyntheticSource)
    assert rf3_spec.data_source.sim.seed == 3
    assert rf3_spec.warmup_samples == 4096
    assert rf3_spec.effective_depth is None


def test_hmm_experiment(fixtures_folder: Path):
    spec = load_experiment_spec_from_yaml(fixtures_folder / "hmm_small.yaml")

    assert spec.approach is Approach.HMM_MFCC
    assert spec.mode == AllStrengths()
    assert spec.hmm.intervals == [(1050.0, 1400.0), (1400.0, 1930.0)]
    assert len(spec.hmm.grid.points()) == 2
    assert spec.hmm.eval_strengths == [3, 4]


def test_experiment_echo_roundtrip(rf3_spec: ExperimentSpec):
    assert ExperimentSpec.model_validate(rf3_spec.echo()) == rf3_spec


@pytest.mark.parametrize(
    "content, match",
    [
        ("approach: cnn\ndepth: 7\n", "depth for cnn"),
        ("approach: fft-mlp\ndepth: -1\n", "depth for fft-mlp"),
        ("approach: svm\n", "approach"),
        ("approach: rf3\nmode:\n  kind: pairwise\n  strength: 0\n", "mode"),
        ("approach: rf3\ndev_fraction: 1.0\n", "dev_fraction"),
        ("seed: 1\n", "approach"),
    ],
)
def test_invalid_experiment_spec(content: str, match: str):
    with pytest.raises(ValueError, match=match):
        load_experiment_spec_from_yaml_fileobj(io.StringIO(content))


def test_default_depths():
    assert ExperimentSpec(approach=Approach.FFT_MLP).effective_depth == 2
    assert ExperimentSpec(approach=Approach.CNN).effective_depth == 4
    assert ExperimentSpec(approach=Approach.CNN, depth=1).effective_depth == 1


@pytest.mark.parametrize(
    "text, expected",
    [("all", AllStrengths()), ("pairwise:3", Pairwise(strength=3)), ("Pairwise:1", Pairwise(strength=1))],
)
def test_parse_mode(text: str, expected):
    mode = parse_mode(text)
    assert mode == expected
    assert parse_mode(str(mode)) == mode


@pytest.mark.parametrize("text", ["pairwise:0", "pairwise:5", "pairwise", "some", "pairwise:x"])
def test_parse_mode_invalid(text: str):
    with pytest.raises(ValueError):
        parse_mode(text)


def test_default_hmm_grid():
    points = HmmGrid().points()
    assert len(points) == 3 * 4 * 3 * 2
    assert points[0].model_dump() == {"n_mfcc": 8, "n_states": 1, "snippet_len": 256, "overlap": 0}
    assert points[1].overlap == 128


def test_default_intervals():
    intervals = default_intervals()
    assert len(intervals) == 17
    assert intervals[0] == (630.0, 730.0)
    assert intervals[-1] == (2230.0, 2330.0)


@pytest.mark.parametrize(
    "fields",
    [
        {"split_fractions": (0.5, 0.5, 0.5)},
        {"intervals": [(1000.0, 900.0)]},
        {"eval_strengths": [5]},
        {"n_mels": 10},
    ],
)
def test_invalid_hmm_params(fields: dict):
    with pytest.raises(ValueError):
        HmmParams(**fields)
