"""Experiment protocols.

Development recordings are windowed and split 90/10 into a training and a
test part; scalers and models are fitted on development data only and
evaluated on the evaluation recordings of the same unbalance strengths.
The HMM approach instead trains one detector per speed interval on a
stratified three-way split of ``0D`` and ``kD``.
"""
import dataclasses
import logging
from abc import ABC
from abc import abstractmethod
from pathlib import Path
from typing import Iterable
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
import pandas as pd
from joblib import Parallel
from joblib import delayed

from .. import __version__
from ..errors import EmptyInterval
from ..errors import MissingClass
from ..errors import MissingDataset
from ..errors import TooFew
from ..scheme.experiment import AllStrengths
from ..scheme.experiment import Approach
from ..scheme.experiment import DataSource
from ..scheme.experiment import EvalReport
from ..scheme.experiment import ExperimentSpec
from ..scheme.experiment import HmmGrid
from ..scheme.experiment import HmmGridPoint
from ..scheme.experiment import HmmParams
from ..scheme.experiment import IntervalScore
from ..scheme.experiment import Pairwise
from ..scheme.experiment import RealDirectory
from ..scheme.experiment import RpmBin
from ..scheme.model import ModelContainer
from ..scheme.simulation import SimSpec
from .data import WARMUP_SAMPLES
from .data import WINDOW_SIZE
from .data import DatasetId
from .data import Recording
from .data import Role
from .data import load_recording
from .data import trim_warmup
from .data import window_matrix
from .dsp import FeatureVariant
from .dsp import MfccConfig
from .dsp import RobustScaler
from .dsp import Standardizer
from .dsp import apply_scaler
from .dsp import fit_robust_scaler
from .dsp import mfcc_sequences
from .dsp import rfft_magnitudes
from .dsp import stat_features
from .metrics import accuracy
from .metrics import balanced_accuracy
from .metrics import per_class_accuracy
from .metrics import rpm_binned_accuracy
from .models import DETECTOR_KINDS
from .models import Detector
from .models import HmmDetector
from .models import HmmDetectorBank
from .models.cnn1d import cnn_train
from .models.forest import rf_train
from .models.hmm import hmm_fit
from .models.hmm import hmm_loglik
from .models.logreg import logreg_train
from .models.mlp import mlp_train
from .models.optim import TrainingConfig
from .models.optim import TrainingHistory
from .rigsim import simulate_dataset

logger = logging.getLogger(__name__)

MIN_DEV_SAMPLES = 10
MIN_INTERVAL_CLASS_SAMPLES = 3

_CHANNELS = {
    Approach.CNN: ("vib1",),
    Approach.FFT_MLP: ("vib1",),
    Approach.RF3: ("vib1",),
    Approach.RF7: ("vib1", "vib2", "vib3"),
    Approach.HMM_MFCC: ("vib1",),
}


# Windows


@dataclasses.dataclass(frozen=True)
class WindowSet:
    """Aligned windows of one or more channels with their per-window metadata."""

    channels: dict[str, np.ndarray]
    mean_rpm: np.ndarray
    strength: np.ndarray
    window_index: np.ndarray
    dataset: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        return (self.strength != 0).astype(np.int64)

    @property
    def values(self) -> np.ndarray:
        return self.channels["vib1"]

    def __len__(self) -> int:
        return len(self.mean_rpm)

    def subset(self, idx: np.ndarray) -> "WindowSet":
        return WindowSet(
            channels={name: values[idx] for name, values in self.channels.items()},
            mean_rpm=self.mean_rpm[idx],
            strength=self.strength[idx],
            window_index=self.window_index[idx],
            dataset=self.dataset[idx],
        )

    def label_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "dataset": self.dataset,
                "unbalance_id": self.strength,
                "label": self.labels,
                "window_index": self.window_index,
            }
        )

    @classmethod
    def from_recording(
        cls, recording: Recording, channels: Sequence[str] = ("vib1",), size: int = WINDOW_SIZE
    ) -> "WindowSet":
        stacks = {}
        mean_rpm = np.empty(0)
        for name in channels:
            values, mean_rpm = window_matrix(recording, name, size, size)
            stacks[name] = np.array(values)
        n = len(mean_rpm)
        return cls(
            channels=stacks,
            mean_rpm=mean_rpm,
            strength=np.full(n, recording.unbalance_id, dtype=np.int64),
            window_index=np.arange(n, dtype=np.int64),
            dataset=np.full(n, str(recording.dataset_id), dtype=object),
        )

    @classmethod
    def concat(cls, sets: Sequence["WindowSet"]) -> "WindowSet":
        names = list(sets[0].channels)
        return cls(
            channels={name: np.concatenate([s.channels[name] for s in sets]) for name in names},
            mean_rpm=np.concatenate([s.mean_rpm for s in sets]),
            strength=np.concatenate([s.strength for s in sets]),
            window_index=np.concatenate([s.window_index for s in sets]),
            dataset=np.concatenate([s.dataset for s in sets]),
        )


# Data sources


class DatasetProvider(ABC):
    """Delivers warm-up trimmed recordings by dataset id."""

    def __init__(self, warmup_samples: int = WARMUP_SAMPLES):
        self.warmup_samples = warmup_samples

    @abstractmethod
    def raw_recording(self, dataset_id: DatasetId) -> Recording:
        pass

    def recording(self, dataset_id: DatasetId) -> Recording:
        return trim_warmup(self.raw_recording(dataset_id), self.warmup_samples)

    def windows(
        self, dataset_ids: Iterable[DatasetId], channels: Sequence[str] = ("vib1",)
    ) -> WindowSet:
        sets = [WindowSet.from_recording(self.recording(i), channels) for i in dataset_ids]
        return WindowSet.concat(sets)


class DirectoryProvider(DatasetProvider):
    def __init__(self, path: Union[str, Path], warmup_samples: int = WARMUP_SAMPLES):
        super().__init__(warmup_samples)
        self.path = Path(path)

    def raw_recording(self, dataset_id: DatasetId) -> Recording:
        file_path = self.path / dataset_id.filename
        if not file_path.exists():
            raise MissingDataset(f"Dataset {dataset_id} not found: {file_path}")
        return load_recording(file_path, dataset_id)


class SimulatedProvider(DatasetProvider):
    def __init__(self, sim: SimSpec, warmup_samples: int = WARMUP_SAMPLES):
        super().__init__(warmup_samples)
        self.sim = sim

    def raw_recording(self, dataset_id: DatasetId) -> Recording:
        return simulate_dataset(self.sim, dataset_id)


def provider_for(source: DataSource, warmup_samples: int = WARMUP_SAMPLES) -> DatasetProvider:
    if isinstance(source, RealDirectory):
        return DirectoryProvider(source.path, warmup_samples)
    return SimulatedProvider(source.sim, warmup_samples)


# Splits


def _child_seeds(seed: int, n: int) -> list[int]:
    return [
        int(s.generate_state(1, dtype=np.uint32)[0])
        for s in np.random.SeedSequence(seed).spawn(n)
    ]


def split_indices(n: int, frac: float = 0.9, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    if n < MIN_DEV_SAMPLES:
        raise TooFew(f"Need at least {MIN_DEV_SAMPLES} samples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(round(frac * n)), 1), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _take(samples, idx: np.ndarray):
    if isinstance(samples, (WindowSet, np.ndarray)):
        return samples.subset(idx) if isinstance(samples, WindowSet) else samples[idx]
    return [samples[i] for i in idx]


def split_dev(samples, frac: float = 0.9, seed: int = 0):
    """
    Uniform random partition into a training and a test part.

    Accepts a WindowSet, an array (split along the first axis) or a list.

    Raises:
        TooFew: If there are fewer than 10 samples
    """
    train_idx, test_idx = split_indices(len(samples), frac, seed)
    return _take(samples, train_idx), _take(samples, test_idx)


def stratified_split(
    labels: np.ndarray, fractions: Sequence[float], rng: np.random.Generator
) -> list[np.ndarray]:
    """Split indices into ``len(fractions)`` parts, each holding every class."""
    parts: list[list[np.ndarray]] = [[] for _ in fractions]
    bounds = np.cumsum(fractions)[:-1]
    for cls in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == cls))
        n = len(members)
        cuts = np.round(bounds * n).astype(int)
        for i in range(len(cuts)):
            low = cuts[i - 1] + 1 if i > 0 else 1
            high = n - (len(cuts) - i)
            cuts[i] = min(max(cuts[i], low), high)
        for part, chunk in zip(parts, np.split(members, cuts)):
            part.append(chunk)
    return [np.sort(np.concatenate(p)) for p in parts]


# Trained models


def model_inputs(
    approach: Approach, windows: WindowSet, scaler: Optional[RobustScaler] = None
) -> np.ndarray:
    """What the detector of ``approach`` consumes for these windows."""
    if approach is Approach.FFT_MLP:
        return apply_scaler(scaler, rfft_magnitudes(windows.values))
    if approach is Approach.CNN:
        return windows.values
    if approach in (Approach.RF3, Approach.RF7):
        variant = FeatureVariant.THREE if approach is Approach.RF3 else FeatureVariant.SEVEN
        return stat_features(windows.channels, windows.mean_rpm, variant).values
    raise ValueError(f"{approach.value} detectors consume raw windows and speeds")


@dataclasses.dataclass
class TrainedModel:
    spec: ExperimentSpec
    detector: Detector
    scaler: Optional[RobustScaler] = None
    test_accuracy: Optional[float] = None
    history: Optional[TrainingHistory] = None

    @property
    def approach(self) -> Approach:
        return self.spec.approach

    def predict(self, windows: WindowSet) -> np.ndarray:
        if isinstance(self.detector, HmmDetectorBank):
            return self.detector.predict(windows.values, windows.mean_rpm)
        return self.detector.predict(model_inputs(self.approach, windows, self.scaler))

    def hyperparameters(self) -> dict:
        spec = self.spec
        if spec.approach in (Approach.FFT_MLP, Approach.CNN):
            return {"depth": spec.effective_depth, **spec.training.model_dump(mode="json")}
        if spec.approach in (Approach.RF3, Approach.RF7):
            return spec.forest.model_dump(mode="json")
        return {
            "selected": [
                _grid_point_of(d).model_dump() for d in self.detector.detectors
            ],
            "intervals": [list(d.speed_interval) for d in self.detector.detectors],
        }

    def to_container(self) -> ModelContainer:
        return ModelContainer(
            package_version=__version__,
            kind=self.detector.kind,
            approach=self.approach.value,
            mode=str(self.spec.mode),
            seed=self.spec.seed,
            hyperparameters=self.hyperparameters(),
            parameters=self.detector.to_params(),
            scalers={"robust": self.scaler.to_dict()} if self.scaler is not None else {},
            history=self.history.to_dict() if self.history is not None else None,
            test_accuracy=self.test_accuracy,
            spec=self.spec.echo(),
        )

    @classmethod
    def from_container(cls, container: ModelContainer) -> "TrainedModel":
        if container.kind not in DETECTOR_KINDS:
            raise ValueError(f"Unknown model kind {container.kind!r}")
        robust = container.scalers.get("robust")
        return cls(
            spec=ExperimentSpec.model_validate(container.spec),
            detector=DETECTOR_KINDS[container.kind].from_params(container.parameters),
            scaler=RobustScaler.from_dict(robust) if robust is not None else None,
            test_accuracy=container.test_accuracy,
            history=(
                TrainingHistory.from_dict(container.history)
                if container.history is not None
                else None
            ),
        )


def _training_config(spec: ExperimentSpec) -> TrainingConfig:
    t = spec.training
    return TrainingConfig(
        learning_rate=t.learning_rate,
        batch_size=t.batch_size,
        max_epochs=t.max_epochs,
        patience=t.patience,
    )


def train_model(
    spec: ExperimentSpec, provider: Optional[DatasetProvider] = None, n_jobs: int = 1
) -> TrainedModel:
    """
    Fit the model of ``spec`` on development recordings only.

    Raises:
        MissingDataset: If a development recording is absent
    """
    provider = provider or provider_for(spec.data_source, spec.warmup_samples)
    if spec.approach is Approach.HMM_MFCC:
        return _train_hmm(spec, provider, n_jobs)

    dev_ids = [DatasetId(k, Role.DEVELOPMENT) for k in spec.mode.strengths]
    windows = provider.windows(dev_ids, _CHANNELS[spec.approach])
    split_seed, model_seed = _child_seeds(spec.seed, 2)
    train, test = split_dev(windows, spec.dev_fraction, split_seed)
    logger.info(
        "Training %s (%s) on %d windows, testing on %d",
        spec.approach.value,
        spec.mode,
        len(train),
        len(test),
    )

    scaler = None
    history = None
    if spec.approach is Approach.FFT_MLP:
        scaler = fit_robust_scaler(rfft_magnitudes(train.values))
        detector = mlp_train(
            (model_inputs(spec.approach, train, scaler), train.labels),
            (model_inputs(spec.approach, test, scaler), test.labels),
            spec.effective_depth,
            model_seed,
            hidden_width=spec.training.hidden_width,
            negative_slope=spec.training.negative_slope,
            config=_training_config(spec),
        )
        history = detector.history
    elif spec.approach is Approach.CNN:
        t = spec.training
        detector = cnn_train(
            (train.values, train.labels),
            (test.values, test.labels),
            spec.effective_depth,
            model_seed,
            kernel_size=t.kernel_size,
            base_channels=t.base_channels,
            pool_size=t.pool_size,
            fc_width=t.fc_width,
            negative_slope=t.negative_slope,
            config=_training_config(spec),
        )
        history = detector.history
    else:
        f = spec.forest
        detector = rf_train(
            model_inputs(spec.approach, train),
            train.labels,
            n_trees=f.n_trees,
            max_depth=f.max_depth,
            features_per_split=f.features_per_split,
            seed=model_seed,
            bootstrap=f.bootstrap,
            n_jobs=n_jobs,
        )

    model = TrainedModel(spec=spec, detector=detector, scaler=scaler, history=history)
    model.test_accuracy = accuracy(model.predict(test), test.labels)
    logger.info("Accuracy on the development test split: %.4f", model.test_accuracy)
    return model


def build_report(
    spec: ExperimentSpec,
    pred: np.ndarray,
    windows: WindowSet,
    test_accuracy: Optional[float] = None,
    intervals: Optional[list[IntervalScore]] = None,
) -> EvalReport:
    truth = windows.labels
    bins = rpm_binned_accuracy(pred, truth, windows.mean_rpm, spec.bin_width)
    return EvalReport(
        spec=spec.echo(),
        overall_accuracy=accuracy(pred, truth),
        balanced_accuracy=balanced_accuracy(pred, truth, classes=[0, 1]),
        per_class=per_class_accuracy(pred, truth, windows.strength),
        rpm_bins=[RpmBin(center=b.center, acc=b.acc, n=b.n) for b in bins],
        seed=spec.seed,
        version=__version__,
        test_accuracy=test_accuracy,
        intervals=intervals,
    )


def evaluate_model(model: TrainedModel, provider: Optional[DatasetProvider] = None) -> EvalReport:
    """
    Evaluate a trained model on the evaluation recordings of its strengths.

    Raises:
        MissingDataset: If an evaluation recording is absent
    """
    spec = model.spec
    provider = provider or provider_for(spec.data_source, spec.warmup_samples)
    if spec.approach is Approach.HMM_MFCC:
        return _evaluate_hmm(model, provider)
    eval_ids = [DatasetId(k, Role.EVALUATION) for k in spec.mode.strengths]
    windows = provider.windows(eval_ids, _CHANNELS[spec.approach])
    pred = model.predict(windows)
    report = build_report(spec, pred, windows, model.test_accuracy)
    logger.info(
        "Evaluation accuracy %.4f (balanced %.4f) on %d windows",
        report.overall_accuracy,
        report.balanced_accuracy,
        len(windows),
    )
    return report


def run_experiment(
    spec: ExperimentSpec, provider: Optional[DatasetProvider] = None, n_jobs: int = 1
) -> tuple[TrainedModel, EvalReport]:
    provider = provider or provider_for(spec.data_source, spec.warmup_samples)
    model = train_model(spec, provider, n_jobs)
    return model, evaluate_model(model, provider)


# HMM protocol


def _grid_point_of(detector: HmmDetector) -> HmmGridPoint:
    return HmmGridPoint(
        n_mfcc=detector.mfcc.n_mfcc,
        n_states=detector.hmm.n_states,
        snippet_len=detector.mfcc.snippet_len,
        overlap=detector.mfcc.overlap,
    )


def fit_hmm_detector(
    fit_windows: np.ndarray,
    head_windows: np.ndarray,
    head_labels: np.ndarray,
    cfg: MfccConfig,
    n_states: int,
    speed_interval: tuple[float, float],
    seed: int,
    max_iter: int = 200,
    reg: float = 1e-4,
) -> HmmDetector:
    """
    Scaler 1 and the HMM are fitted on ``fit_windows`` (no unbalance);
    scaler 2 and the logistic head on the HMM scores of ``head_windows``.
    """
    fit_seqs = mfcc_sequences(fit_windows, cfg)
    scaler1 = Standardizer.fit(fit_seqs.reshape(-1, cfg.n_mfcc))
    hmm = hmm_fit(list(scaler1.apply(fit_seqs)), n_states, seed, max_iter=max_iter)
    scores = hmm_loglik(hmm, scaler1.apply(mfcc_sequences(head_windows, cfg)))[:, None]
    scaler2 = Standardizer.fit(scores)
    head = logreg_train(scaler2.apply(scores), head_labels, reg=reg)
    return HmmDetector(
        scaler1=scaler1,
        hmm=hmm,
        scaler2=scaler2,
        head=head,
        speed_interval=speed_interval,
        mfcc=cfg,
    )


def _score_grid_point(
    sets: tuple[WindowSet, WindowSet, WindowSet],
    point: HmmGridPoint,
    speed_interval: tuple[float, float],
    seed: int,
    params: HmmParams,
) -> tuple[float, HmmDetector]:
    set1, set2, set3 = sets
    cfg = MfccConfig(
        n_mfcc=point.n_mfcc,
        n_mels=params.n_mels,
        snippet_len=point.snippet_len,
        overlap=point.overlap,
    )
    detector = fit_hmm_detector(
        set1.values[set1.labels == 0],
        set2.values,
        set2.labels,
        cfg,
        point.n_states,
        speed_interval,
        seed,
        max_iter=params.max_iter,
        reg=params.logreg_reg,
    )
    pred = (detector.predict_proba(set3.values) >= 0.5).astype(np.int64)
    return balanced_accuracy(pred, set3.labels), detector


def select_hmm_detectors(
    windows: WindowSet, params: HmmParams, seed: int, n_jobs: int = 1
) -> tuple[list[HmmDetector], float]:
    """
    Train one detector per speed interval, choosing the grid point with the
    highest balanced accuracy on the third split (ties go to the earliest
    point).

    Returns:
        (detectors, accuracy of the chosen detectors on their third splits)

    Raises:
        EmptyInterval: If an interval lacks windows of either class
    """
    points = params.grid.points()
    detectors = []
    correct = 0
    total = 0
    interval_seeds = np.random.SeedSequence(seed).spawn(len(params.intervals))
    for (lo, hi), interval_seed in zip(params.intervals, interval_seeds):
        inside = (windows.mean_rpm >= lo) & (windows.mean_rpm < hi)
        sub = windows.subset(np.flatnonzero(inside))
        counts = np.bincount(sub.labels, minlength=2)
        if counts.min() < MIN_INTERVAL_CLASS_SAMPLES:
            raise EmptyInterval(
                f"Speed interval [{lo}, {hi}) holds {counts[0]} windows without and "
                f"{counts[1]} with unbalance; need {MIN_INTERVAL_CLASS_SAMPLES} of each"
            )
        split_seq, grid_seq = interval_seed.spawn(2)
        parts = stratified_split(
            sub.labels, params.split_fractions, np.random.default_rng(split_seq)
        )
        sets = tuple(sub.subset(p) for p in parts)
        point_seeds = [
            int(s.generate_state(1, dtype=np.uint32)[0]) for s in grid_seq.spawn(len(points))
        ]
        results = Parallel(n_jobs=n_jobs)(
            delayed(_score_grid_point)(sets, point, (lo, hi), point_seed, params)
            for point, point_seed in zip(points, point_seeds)
        )
        best = int(np.argmax([score for score, _ in results]))
        score, detector = results[best]
        logger.info(
            "Interval [%g, %g): selected %s with balanced accuracy %.4f",
            lo,
            hi,
            points[best],
            score,
        )
        set3 = sets[2]
        pred = (detector.predict_proba(set3.values) >= 0.5).astype(np.int64)
        correct += int(np.sum(pred == set3.labels))
        total += len(set3)
        detectors.append(detector)
    return detectors, correct / total


def _hmm_strengths(spec: ExperimentSpec) -> tuple[int, list[int]]:
    if isinstance(spec.mode, Pairwise):
        return spec.mode.strength, [spec.mode.strength]
    return spec.hmm.train_strength, sorted(set(spec.hmm.eval_strengths))


def _train_hmm(spec: ExperimentSpec, provider: DatasetProvider, n_jobs: int) -> TrainedModel:
    train_strength, _ = _hmm_strengths(spec)
    dev_ids = [DatasetId(0, Role.DEVELOPMENT), DatasetId(train_strength, Role.DEVELOPMENT)]
    windows = provider.windows(dev_ids)
    logger.info(
        "Training HMM detectors for %d speed intervals on %d windows of 0D and %dD",
        len(spec.hmm.intervals),
        len(windows),
        train_strength,
    )
    detectors, test_accuracy = select_hmm_detectors(windows, spec.hmm, spec.seed, n_jobs)
    return TrainedModel(
        spec=spec, detector=HmmDetectorBank(detectors=detectors), test_accuracy=test_accuracy
    )


def _balanced_or_none(pred: np.ndarray, truth: np.ndarray) -> Optional[float]:
    try:
        return balanced_accuracy(pred, truth, classes=[0, 1])
    except MissingClass:
        return None


def _evaluate_hmm(model: TrainedModel, provider: DatasetProvider) -> EvalReport:
    spec = model.spec
    _, eval_strengths = _hmm_strengths(spec)
    eval_ids = [DatasetId(0, Role.EVALUATION)] + [
        DatasetId(k, Role.EVALUATION) for k in eval_strengths
    ]
    windows = provider.windows(eval_ids)
    truth = windows.labels
    pred = np.full(len(windows), -1, dtype=np.int64)
    scores = []
    for detector in model.detector.detectors:
        lo, hi = detector.speed_interval
        inside = detector.contains(windows.mean_rpm)
        score = IntervalScore(lo=lo, hi=hi, n=int(inside.sum()), selected=_grid_point_of(detector))
        if not inside.any():
            logger.info("No evaluation windows in [%g, %g), interval skipped", lo, hi)
            scores.append(score)
            continue
        interval_pred = (detector.predict_proba(windows.values[inside]) >= 0.5).astype(np.int64)
        pred[inside] = interval_pred
        score.balanced_accuracy = _balanced_or_none(interval_pred, truth[inside])
        strengths = windows.strength[inside]
        for k in eval_strengths:
            pair = np.isin(strengths, [0, k])
            score.per_strength[k] = (
                _balanced_or_none(interval_pred[pair], truth[inside][pair]) if pair.any() else None
            )
        scores.append(score)

    scored = pred >= 0
    if not scored.any():
        raise EmptyInterval("No evaluation window falls into any speed interval")
    report = build_report(
        spec, pred[scored], windows.subset(np.flatnonzero(scored)), model.test_accuracy, scores
    )
    logger.info(
        "HMM balanced accuracy %.4f over %d windows of %s",
        report.balanced_accuracy,
        int(scored.sum()),
        ", ".join(str(i) for i in eval_ids),
    )
    return report


def run_hmm_experiment(
    intervals: Sequence[tuple[float, float]],
    grid: HmmGrid,
    seed: int,
    data_source: Optional[DataSource] = None,
    params: Optional[HmmParams] = None,
    provider: Optional[DatasetProvider] = None,
    n_jobs: int = 1,
) -> tuple[list[HmmDetector], EvalReport]:
    """
    Per-speed-interval HMM detectors trained on ``0D`` and ``3D`` (or the
    configured training strength) and evaluated on ``0E`` together with
    each requested evaluation strength.

    Raises:
        EmptyInterval: If a training interval lacks windows of either class
    """
    base = params or HmmParams()
    hmm_params = base.model_copy(update={"intervals": list(intervals), "grid": grid})
    spec_fields = {"approach": Approach.HMM_MFCC, "mode": AllStrengths(), "seed": seed}
    if data_source is not None:
        spec_fields["data_source"] = data_source
    if provider is not None:
        spec_fields["warmup_samples"] = provider.warmup_samples
    spec = ExperimentSpec(hmm=HmmParams.model_validate(hmm_params.model_dump()), **spec_fields)
    model, report = run_experiment(spec, provider, n_jobs)
    return model.detector.detectors, report
