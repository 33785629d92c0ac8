import enum
import itertools
from pathlib import Path
from typing import Annotated
from typing import Any
from typing import Literal
from typing import Optional
from typing import Union

from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator

from .simulation import SimSpec

DEPTH_RANGES = {"fft-mlp": (0, 4), "cnn": (1, 6)}
DEFAULT_DEPTH = {"fft-mlp": 2, "cnn": 4}


@enum.unique
class Approach(str, enum.Enum):
    CNN = "cnn"
    FFT_MLP = "fft-mlp"
    RF3 = "rf3"
    RF7 = "rf7"
    HMM_MFCC = "hmm-mfcc"


class Pairwise(BaseModel):
    """No unbalance against one unbalance strength k."""

    kind: Literal["pairwise"] = "pairwise"
    strength: int = Field(ge=1, le=4)

    @property
    def strengths(self) -> list[int]:
        return [0, self.strength]

    def __str__(self) -> str:
        return f"pairwise:{self.strength}"


class AllStrengths(BaseModel):
    kind: Literal["all"] = "all"

    @property
    def strengths(self) -> list[int]:
        return [0, 1, 2, 3, 4]

    def __str__(self) -> str:
        return "all"


Mode = Annotated[Union[Pairwise, AllStrengths], Field(discriminator="kind")]


def parse_mode(text: str) -> Union[Pairwise, AllStrengths]:
    """Parse ``pairwise:K`` (K in 1..4) or ``all``."""
    text = text.strip().lower()
    if text == "all":
        return AllStrengths()
    kind, _, strength = text.partition(":")
    if kind != "pairwise" or not strength.isdigit() or not 1 <= int(strength) <= 4:
        raise ValueError(f"Invalid mode {text!r}, expected 'pairwise:K' with K in 1..4 or 'all'")
    return Pairwise(strength=int(strength))


class TrainingParams(BaseModel):
    """Gradient training of the MLP and CNN."""

    learning_rate: float = Field(default=1e-3, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    max_epochs: int = Field(default=100, ge=1)
    patience: Optional[int] = Field(default=None, ge=1)
    hidden_width: int = Field(default=128, ge=1)
    kernel_size: int = Field(default=9, ge=1)
    base_channels: int = Field(default=16, ge=1)
    pool_size: int = Field(default=4, ge=2)
    fc_width: int = Field(default=64, ge=1)
    negative_slope: float = Field(default=0.01, ge=0.0)


class ForestParams(BaseModel):
    n_trees: int = Field(default=100, ge=1)
    max_depth: Optional[int] = Field(default=None, ge=1)
    features_per_split: Union[Literal["sqrt"], int] = "sqrt"
    bootstrap: bool = True


class HmmGridPoint(BaseModel):
    n_mfcc: int
    n_states: int
    snippet_len: int
    overlap: int


class HmmGrid(BaseModel):
    """Hyperparameter grid; ``overlap_fractions`` are fractions of ``snippet_len``."""

    n_mfcc: list[int] = Field(default_factory=lambda: [8, 13, 20])
    n_states: list[int] = Field(default_factory=lambda: [1, 2, 3, 5])
    snippet_len: list[int] = Field(default_factory=lambda: [256, 512, 1024])
    overlap_fractions: list[float] = Field(default_factory=lambda: [0.0, 0.5])

    @model_validator(mode="after")
    def _check_values(self) -> "HmmGrid":
        lists = [self.n_mfcc, self.n_states, self.snippet_len, self.overlap_fractions]
        if any(len(values) == 0 for values in lists):
            raise ValueError("Every HMM grid axis needs at least one value")
        if any(not 0.0 <= f < 1.0 for f in self.overlap_fractions):
            raise ValueError("Overlap fractions must be within [0, 1)")
        return self

    def points(self) -> list[HmmGridPoint]:
        """Grid points in a fixed order; selection ties resolve to the earliest."""
        return [
            HmmGridPoint(
                n_mfcc=n_mfcc,
                n_states=n_states,
                snippet_len=snippet_len,
                overlap=int(round(snippet_len * fraction)),
            )
            for n_mfcc, n_states, snippet_len, fraction in itertools.product(
                self.n_mfcc, self.n_states, self.snippet_len, self.overlap_fractions
            )
        ]


def default_intervals(lo: float = 630.0, hi: float = 2330.0, width: float = 100.0):
    edges = []
    start = lo
    while start < hi:
        edges.append((start, min(start + width, hi)))
        start += width
    return edges


class HmmParams(BaseModel):
    grid: HmmGrid = Field(default_factory=HmmGrid)
    intervals: list[tuple[float, float]] = Field(default_factory=default_intervals)
    split_fractions: tuple[float, float, float] = (0.4, 0.4, 0.2)
    train_strength: int = Field(default=3, ge=1, le=4)
    eval_strengths: list[int] = Field(default_factory=lambda: [3])
    n_mels: int = Field(default=26, ge=1)
    max_iter: int = Field(default=200, ge=1)
    logreg_reg: float = Field(default=1e-4, ge=0.0)

    @model_validator(mode="after")
    def _check(self) -> "HmmParams":
        if any(lo >= hi for lo, hi in self.intervals):
            raise ValueError("Every speed interval needs lo < hi")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9 or min(self.split_fractions) <= 0:
            raise ValueError("split_fractions must be positive and sum to 1")
        if not self.eval_strengths or any(not 1 <= k <= 4 for k in self.eval_strengths):
            raise ValueError("eval_strengths must name strengths within 1..4")
        if max(self.grid.n_mfcc) > self.n_mels:
            raise ValueError("n_mfcc values must not exceed n_mels")
        return self


class RealDirectory(BaseModel):
    kind: Literal["directory"] = "directory"
    path: Path


class SyntheticSource(BaseModel):
    kind: Literal["synthetic"] = "synthetic"
    sim: SimSpec = Field(default_factory=SimSpec)


DataSource = Annotated[Union[RealDirectory, SyntheticSource], Field(discriminator="kind")]


class ExperimentSpec(BaseModel):
    approach: Approach
    mode: Mode = Field(default_factory=AllStrengths)
    depth: Optional[int] = None
    seed: int = 2020
    data_source: DataSource = Field(default_factory=SyntheticSource)
    training: TrainingParams = Field(default_factory=TrainingParams)
    forest: ForestParams = Field(default_factory=ForestParams)
    hmm: HmmParams = Field(default_factory=HmmParams)
    dev_fraction: float = Field(default=0.9, gt=0.0, lt=1.0)
    warmup_samples: int = Field(default=50_000, ge=0)
    bin_width: float = Field(default=100.0, gt=0.0)

    @model_validator(mode="after")
    def _check_depth(self) -> "ExperimentSpec":
        bounds = DEPTH_RANGES.get(self.approach.value)
        if bounds is not None and self.depth is not None:
            lo, hi = bounds
            if not lo <= self.depth <= hi:
                raise ValueError(
                    f"depth for {self.approach.value} must be within {lo}..{hi}, got {self.depth}"
                )
        return self

    @property
    def effective_depth(self) -> Optional[int]:
        if self.depth is not None:
            return self.depth
        return DEFAULT_DEPTH.get(self.approach.value)

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


class RpmBin(BaseModel):
    center: float
    acc: float
    n: int


class IntervalScore(BaseModel):
    lo: float
    hi: float
    n: int
    balanced_accuracy: Optional[float] = None
    per_strength: dict[int, Optional[float]] = Field(default_factory=dict)
    selected: Optional[HmmGridPoint] = None


class EvalReport(BaseModel):
    spec: dict[str, Any]
    overall_accuracy: float
    balanced_accuracy: float
    per_class: dict[int, float]
    rpm_bins: list[RpmBin]
    seed: int
    version: str
    test_accuracy: Optional[float] = None
    intervals: Optional[list[IntervalScore]] = None
