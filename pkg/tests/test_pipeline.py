import functools

import numpy as np
import pytest

from shaftwatch.core.data import DatasetId
from shaftwatch.core.data import Role
from shaftwatch.core.data import save_recording
from shaftwatch.core.model_store import save_model
from shaftwatch.core.pipeline import DirectoryProvider
from shaftwatch.core.pipeline import SimulatedProvider
from shaftwatch.core.pipeline import TrainedModel
from shaftwatch.core.pipeline import WindowSet
from shaftwatch.core.pipeline import evaluate_model
from shaftwatch.core.pipeline import provider_for
from shaftwatch.core.pipeline import run_experiment
from shaftwatch.core.pipeline import run_hmm_experiment
from shaftwatch.core.pipeline import split_dev
from shaftwatch.core.pipeline import stratified_split
from shaftwatch.core.pipeline import train_model
from shaftwatch.core.rigsim import simulate_dataset
from shaftwatch.core.yaml_processor import load_experiment_spec_from_yaml
from shaftwatch.errors import EmptyInterval
from shaftwatch.errors import MissingDataset
from shaftwatch.errors import TooFew
from shaftwatch.scheme.experiment import AllStrengths
from shaftwatch.scheme.experiment import Approach
from shaftwatch.scheme.experiment import ExperimentSpec
from shaftwatch.scheme.experiment import ForestParams
from shaftwatch.scheme.experiment import HmmGrid
from shaftwatch.scheme.experiment import HmmGridPoint
from shaftwatch.scheme.experiment import HmmParams
from shaftwatch.scheme.experiment import Pairwise
from shaftwatch.scheme.experiment import RealDirectory
from shaftwatch.scheme.experiment import SyntheticSource
from shaftwatch.scheme.experiment import TrainingParams
from shaftwatch.scheme.simulation import ProfileSpec
from shaftwatch.scheme.simulation import SimSpec

from .conftest import make_recording

NOISY_SEEDS = (31, 32, 33)
HMM_INTERVALS = [(1050.0, 1400.0), (1400.0, 1930.0)]


def rf3_spec(sim: SimSpec, mode=None, seed: int = 1) -> ExperimentSpec:
    return ExperimentSpec(
        approach=Approach.RF3,
        mode=mode or AllStrengths(),
        seed=seed,
        forest=ForestParams(n_trees=20),
        data_source=SyntheticSource(sim=sim),
        warmup_samples=4096,
    )


def write_datasets(sim: SimSpec, directory) -> None:
    for strength in range(5):
        for role in Role:
            dataset_id = DatasetId(strength, role)
            save_recording(simulate_dataset(sim, dataset_id), directory / dataset_id.filename)


def test_split_dev_sizes():
    """Test a 90/10 split of 100 samples."""
    train, test = split_dev(np.arange(100), 0.9, seed=3)

    assert len(train) == 90
    assert len(test) == 10
    assert sorted(np.concatenate([train, test]).tolist()) == list(range(100))


def test_split_dev_is_reproducible():
    a_train, _ = split_dev(np.arange(50), seed=7)
    b_train, _ = split_dev(np.arange(50), seed=7)
    c_train, _ = split_dev(np.arange(50), seed=8)
    np.testing.assert_array_equal(a_train, b_train)
    assert not np.array_equal(a_train, c_train)


def test_split_dev_list():
    train, test = split_dev(list("abcdefghijkl"), seed=0)
    assert len(train) == 11
    assert len(test) == 1
    assert set(train) | set(test) == set("abcdefghijkl")


def test_split_dev_too_few():
    with pytest.raises(TooFew):
        split_dev(np.arange(9))


@pytest.mark.parametrize("seed", range(5))
def test_split_dev_keeps_label_proportions(seed: int):
    labels = (np.arange(20000) % 5 != 0).astype(int)
    train, test = split_dev(labels, seed=seed)
    assert abs(train.mean() - 0.8) < 0.05
    assert abs(test.mean() - 0.8) < 0.05


def test_stratified_split():
    """Test that every part of a three-way split holds both classes."""
    labels = np.array([0] * 10 + [1] * 4)

    parts = stratified_split(labels, (0.4, 0.4, 0.2), np.random.default_rng(0))

    assert len(parts) == 3
    assert sorted(np.concatenate(parts).tolist()) == list(range(14))
    for part in parts:
        assert set(labels[part]) == {0, 1}
    assert [int(np.sum(labels[p] == 0)) for p in parts] == [4, 4, 2]


def test_window_set_from_recording():
    rec = make_recording(4096 * 3 + 7, strength=2, role=Role.EVALUATION, rpm=1200.0)

    windows = WindowSet.from_recording(rec, ("vib1", "vib3"))

    assert len(windows) == 3
    assert windows.channels["vib3"].shape == (3, 4096)
    np.testing.assert_array_equal(windows.values[2], rec.vib1[8192:12288])
    frame = windows.label_frame()
    assert frame.columns.tolist() == ["dataset", "unbalance_id", "label", "window_index"]
    assert frame["dataset"].tolist() == ["2E"] * 3
    assert frame["label"].tolist() == [1, 1, 1]


def test_window_set_concat_and_subset():
    a = WindowSet.from_recording(make_recording(8192, strength=0))
    b = WindowSet.from_recording(make_recording(4096 * 3, strength=4))

    both = WindowSet.concat([a, b])

    assert len(both) == 5
    assert both.labels.tolist() == [0, 0, 1, 1, 1]
    assert both.subset(np.array([1, 4])).strength.tolist() == [0, 4]


def test_simulated_provider_windows(small_provider: SimulatedProvider):
    windows = small_provider.windows([DatasetId(0, Role.EVALUATION), DatasetId(1, Role.EVALUATION)])
    assert len(windows) == 40
    assert set(windows.dataset) == {"0E", "1E"}
    assert np.all((windows.mean_rpm > 1000.0) & (windows.mean_rpm < 1950.0))


def test_directory_provider_missing_dataset(tmp_path):
    provider = DirectoryProvider(tmp_path)
    with pytest.raises(MissingDataset):
        provider.windows([DatasetId(0, Role.DEVELOPMENT)])


def test_provider_for_real_directory(tmp_path):
    provider = provider_for(RealDirectory(path=tmp_path), warmup_samples=100)
    assert isinstance(provider, DirectoryProvider)
    assert provider.warmup_samples == 100


def test_pairwise_report_classes(small_sim: SimSpec, small_provider: SimulatedProvider):
    """Test that a pairwise experiment only sees strengths 0 and k."""
    spec = rf3_spec(small_sim, mode=Pairwise(strength=2))

    model, report = run_experiment(spec, small_provider)

    assert set(report.per_class) == {0, 2}
    assert 0.0 <= report.overall_accuracy <= 1.0
    assert model.test_accuracy is not None
    weighted = sum(b.acc * b.n for b in report.rpm_bins) / sum(b.n for b in report.rpm_bins)
    assert weighted == pytest.approx(report.overall_accuracy, abs=1e-12)
    assert report.seed == spec.seed
    assert report.spec == spec.echo()


def test_all_strengths_report_classes(small_sim: SimSpec, small_provider: SimulatedProvider):
    spec = rf3_spec(small_sim)
    _, report = run_experiment(spec, small_provider)
    assert set(report.per_class) == {0, 1, 2, 3, 4}
    assert all(b.n > 0 for b in report.rpm_bins)


def test_training_is_deterministic(small_sim: SimSpec, small_provider: SimulatedProvider):
    spec = rf3_spec(small_sim, seed=5)
    first = train_model(spec, small_provider).to_container()
    second = train_model(spec, small_provider, n_jobs=2).to_container()
    assert first.model_dump_json() == second.model_dump_json()


def test_container_roundtrip_predicts_identically(small_sim: SimSpec, small_provider: SimulatedProvider):
    model = train_model(rf3_spec(small_sim), small_provider)
    restored = TrainedModel.from_container(model.to_container())
    windows = small_provider.windows([DatasetId(3, Role.EVALUATION)])
    np.testing.assert_array_equal(restored.predict(windows), model.predict(windows))


def test_fft_mlp_container_keeps_scaler(small_sim: SimSpec, small_provider: SimulatedProvider):
    spec = ExperimentSpec(
        approach=Approach.FFT_MLP,
        mode=Pairwise(strength=4),
        depth=0,
        training=TrainingParams(max_epochs=2),
        data_source=SyntheticSource(sim=small_sim),
        warmup_samples=4096,
    )

    model = train_model(spec, small_provider)
    container = model.to_container()

    assert container.kind == "mlp"
    assert container.hyperparameters["depth"] == 0
    assert len(container.scalers["robust"]["median"]) == 2048
    assert len(container.history["test_loss"]) == 2
    restored = TrainedModel.from_container(container)
    np.testing.assert_allclose(restored.scaler.iqr, model.scaler.iqr)


def test_training_does_not_read_evaluation_files(tmp_path, small_sim: SimSpec):
    """Test that deleting the evaluation recordings leaves the trained model unchanged."""
    write_datasets(small_sim, tmp_path)
    spec = ExperimentSpec(
        approach=Approach.RF7,
        seed=9,
        forest=ForestParams(n_trees=10),
        data_source=RealDirectory(path=tmp_path),
        warmup_samples=4096,
    )

    before = save_model(train_model(spec).to_container(), tmp_path / "before.json")
    for strength in range(5):
        (tmp_path / DatasetId(strength, Role.EVALUATION).filename).unlink()
    model = train_model(spec)
    after = save_model(model.to_container(), tmp_path / "after.json")

    assert before.read_bytes() == after.read_bytes()
    with pytest.raises(MissingDataset):
        evaluate_model(model)


def hmm_sim() -> SimSpec:
    return SimSpec(
        seed=9,
        development=ProfileSpec(step_seconds=0.5, repetitions=2),
        evaluation=ProfileSpec(step_seconds=1.0, repetitions=2),
    )


def test_hmm_single_point_grid_is_selected():
    """Test that a one-point grid yields that point in every interval."""
    grid = HmmGrid(n_mfcc=[8], n_states=[1], snippet_len=[512], overlap_fractions=[0.0])
    provider = SimulatedProvider(hmm_sim(), warmup_samples=4096)

    detectors, report = run_hmm_experiment(
        HMM_INTERVALS, grid, seed=3, params=HmmParams(max_iter=20), provider=provider
    )

    point = HmmGridPoint(n_mfcc=8, n_states=1, snippet_len=512, overlap=0)
    assert [d.speed_interval for d in detectors] == HMM_INTERVALS
    assert all(score.selected == point for score in report.intervals)
    assert set(report.per_class) == {0, 3}
    for score in report.intervals:
        assert score.n > 0
        assert score.balanced_accuracy >= 0.5
        assert set(score.per_strength) == {3}


def test_hmm_beats_constant_classifier(fixtures_folder):
    spec = load_experiment_spec_from_yaml(fixtures_folder / "hmm_small.yaml")

    model, report = run_experiment(spec)

    assert model.detector.kind == "hmm_bank"
    assert set(report.per_class) == {0, 3, 4}
    assert report.balanced_accuracy >= 0.5
    for score in report.intervals:
        assert score.balanced_accuracy >= 0.5
        assert set(score.per_strength) == {3, 4}
    assert {p["n_states"] for p in model.hyperparameters()["selected"]} <= {1, 2}


def test_hmm_empty_interval():
    grid = HmmGrid(n_mfcc=[8], n_states=[1], snippet_len=[512], overlap_fractions=[0.0])
    provider = SimulatedProvider(hmm_sim(), warmup_samples=4096)
    with pytest.raises(EmptyInterval):
        run_hmm_experiment([(3000.0, 3100.0)], grid, seed=0, provider=provider)


@pytest.mark.slow
def test_fft_mlp_all_strengths(e2e_sim: SimSpec, e2e_provider: SimulatedProvider):
    """Test the FFT network on all unbalance strengths of a simulated rig."""
    spec = ExperimentSpec(
        approach=Approach.FFT_MLP,
        mode=AllStrengths(),
        depth=2,
        training=TrainingParams(max_epochs=20),
        data_source=SyntheticSource(sim=e2e_sim),
    )

    model, report = run_experiment(spec, e2e_provider)

    assert model.history.best_epoch >= 1
    assert report.overall_accuracy >= 0.95
    assert report.per_class[4] >= 0.99
    assert set(report.per_class) == {0, 1, 2, 3, 4}


@pytest.mark.slow
def test_rf3_detects_strongest_unbalance(e2e_sim: SimSpec, e2e_provider: SimulatedProvider):
    """Test that minimal features separate the strongest unbalance almost perfectly."""
    spec = ExperimentSpec(
        approach=Approach.RF3,
        mode=Pairwise(strength=4),
        data_source=SyntheticSource(sim=e2e_sim),
    )

    _, report = run_experiment(spec, e2e_provider)

    assert report.overall_accuracy >= 0.99
    assert set(report.per_class) == {0, 4}


@functools.cache
def noisy_provider(seed: int) -> SimulatedProvider:
    sim = SimSpec(
        seed=seed,
        base_noise_sigma=0.05,
        development=ProfileSpec(step_seconds=1.0, repetitions=2),
        evaluation=ProfileSpec(step_seconds=2.0, repetitions=2),
    )
    return SimulatedProvider(sim, warmup_samples=4096)


def pooled_accuracy(make_spec) -> tuple[float, int]:
    """Accuracy pooled over the noisy rigs, weighted by window count: (accuracy, windows)."""
    correct, total = 0.0, 0
    for seed in NOISY_SEEDS:
        provider = noisy_provider(seed)
        _, report = run_experiment(make_spec(provider.sim), provider)
        n = sum(b.n for b in report.rpm_bins)
        correct += report.overall_accuracy * n
        total += n
    return correct / total, total


def two_sigma(a: float, b: float, n: int) -> float:
    """Two binomial standard errors of the difference of two accuracies over n windows each."""
    return 2.0 * np.sqrt((a * (1.0 - a) + b * (1.0 - b)) / n)


@pytest.mark.slow
def test_pairwise_accuracy_grows_with_strength():
    """
    Test that stronger unbalances are easier to detect on noisy rigs.

    Accuracies are pooled over three rig seeds. A drop between neighbouring
    strengths must stay within two standard errors of the pooled difference.
    """
    results = []
    for strength in range(1, 5):
        results.append(
            pooled_accuracy(
                lambda sim: ExperimentSpec(
                    approach=Approach.FFT_MLP,
                    mode=Pairwise(strength=strength),
                    depth=2,
                    training=TrainingParams(max_epochs=15),
                    data_source=SyntheticSource(sim=sim),
                    warmup_samples=4096,
                )
            )
        )
    accuracies = [acc for acc, _ in results]

    for (a, n), (b, _) in zip(results, results[1:]):
        assert b >= a - two_sigma(a, b, n), accuracies
    assert accuracies[3] > accuracies[0]


@pytest.mark.slow
def test_hidden_layers_beat_linear_network():
    """
    Test that two hidden layers score at least as well as none on all strengths.

    Both depths train on the same noisy rigs with the same seeds; the
    comparison allows two standard errors of the pooled difference.
    """

    def fft_spec(depth: int):
        return lambda sim: ExperimentSpec(
            approach=Approach.FFT_MLP,
            mode=AllStrengths(),
            depth=depth,
            training=TrainingParams(max_epochs=20),
            data_source=SyntheticSource(sim=sim),
            warmup_samples=4096,
        )

    linear, n = pooled_accuracy(fft_spec(0))
    deep, _ = pooled_accuracy(fft_spec(2))

    assert deep >= linear - two_sigma(linear, deep, n), (linear, deep)
