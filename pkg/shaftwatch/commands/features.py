import argparse
import logging
from pathlib import Path

import numpy as np

from .. import deps
from ..core.dsp import FeatureMatrix
from ..core.dsp import FeatureVariant
from ..core.dsp import MfccConfig
from ..core.dsp import fft_feature_matrix
from ..core.dsp import mfcc_feature_matrix
from ..core.dsp import stack_features
from ..core.dsp import stat_features
from ..core.pipeline import DirectoryProvider
from ..core.pipeline import WindowSet
from ..errors import ReportIoError

logger = logging.getLogger(__name__)

VARIANTS = ("three", "seven", "fft", "mfcc")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "features",
        help="extract a feature matrix from recordings",
        description="Window every recording in a directory and write one feature row per "
        "window (or per snippet for mfcc).",
    )
    parser.add_argument(
        "--in", dest="input_dir", type=Path, help="recording directory (default: SHAFT_DATA_DIR)"
    )
    parser.add_argument("--variant", choices=VARIANTS, required=True)
    parser.add_argument("--out", type=Path, required=True, help="feature CSV file")
    parser.add_argument("--warmup", type=int, help="warm-up samples to drop (default: 50000)")
    parser.add_argument("--n-mfcc", type=int, default=13)
    parser.add_argument("--n-mels", type=int, default=26)
    parser.add_argument("--snippet-len", type=int, default=512)
    parser.add_argument("--overlap", type=int, default=0)
    parser.set_defaults(func=run)


def _features(windows: WindowSet, args: argparse.Namespace) -> FeatureMatrix:
    labels = windows.label_frame()
    if args.variant in ("three", "seven"):
        matrix = stat_features(windows.channels, windows.mean_rpm, FeatureVariant(args.variant))
    elif args.variant == "fft":
        matrix = fft_feature_matrix(windows.values)
    else:
        cfg = MfccConfig(
            n_mfcc=args.n_mfcc,
            n_mels=args.n_mels,
            snippet_len=args.snippet_len,
            overlap=args.overlap,
        )
        matrix = mfcc_feature_matrix(windows.values, cfg)
        per_window = len(matrix.values) // max(len(windows), 1)
        labels = labels.loc[labels.index.repeat(per_window)].reset_index(drop=True)
        labels["frame_index"] = np.tile(np.arange(per_window), len(windows))
    return FeatureMatrix(values=matrix.values, names=matrix.names, recipe=matrix.recipe, labels=labels)


def run(args: argparse.Namespace) -> int:
    data_dir = deps.get_data_dir(args.input_dir)
    provider = DirectoryProvider(data_dir, deps.get_warmup(args.warmup))
    channels = ("vib1", "vib2", "vib3") if args.variant == "seven" else ("vib1",)
    matrices = []
    for dataset_id in deps.present_dataset_ids(data_dir):
        windows = provider.windows([dataset_id], channels)
        matrices.append(_features(windows, args))
        logger.info("%s: %d windows", dataset_id, len(windows))
    matrix = stack_features(matrices)
    try:
        matrix.to_csv(args.out)
    except OSError as e:
        raise ReportIoError(f"Cannot write feature file {args.out}: {e}")
    logger.info("Wrote %d x %d %s features to %s", *matrix.values.shape, matrix.recipe, args.out)
    return 0
