import argparse
import logging
from pathlib import Path

import pandas as pd

from .. import deps
from ..core.model_store import save_model
from ..core.pipeline import train_model
from ..core.yaml_processor import load_experiment_spec_from_yaml
from ..errors import ReportIoError
from ..scheme.experiment import Approach
from ..scheme.experiment import ExperimentSpec
from ..scheme.experiment import RealDirectory
from ..scheme.experiment import parse_mode

logger = logging.getLogger(__name__)


def mode_arg(text: str):
    try:
        return parse_mode(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "train",
        help="train a detector on development recordings",
        description="Train one of the detectors on the development recordings and write "
        "the model container.",
    )
    parser.add_argument("--approach", choices=[a.value for a in Approach])
    parser.add_argument("--mode", type=mode_arg, help="pairwise:K (K in 1..4) or all")
    parser.add_argument("--depth", type=int, help="hidden layers (fft-mlp) or conv blocks (cnn)")
    parser.add_argument("--seed", type=int, help="seed (default: SHAFT_SEED, 2020)")
    parser.add_argument("--data", type=Path, help="recording directory (default: SHAFT_DATA_DIR)")
    parser.add_argument("--spec", type=Path, help="experiment spec YAML file")
    parser.add_argument("--epochs", type=int, help="maximum training epochs")
    parser.add_argument("--warmup", type=int, help="warm-up samples to drop (default: 50000)")
    parser.add_argument("--n-jobs", type=int, help="parallel workers (default: SHAFT_N_JOBS)")
    parser.add_argument("--out", type=Path, required=True, help="model file (JSON)")
    parser.set_defaults(func=run)


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    # Only fields the file states; environment settings fill the rest
    data = (
        load_experiment_spec_from_yaml(args.spec).model_dump(exclude_unset=True) if args.spec else {}
    )
    if args.approach is not None:
        data["approach"] = args.approach
    if "approach" not in data:
        raise ValueError("--approach is required without an experiment spec file")
    if args.mode is not None:
        data["mode"] = args.mode
    if args.depth is not None:
        data["depth"] = args.depth
    if args.seed is not None or "seed" not in data:
        data["seed"] = deps.get_seed(args.seed)
    if args.epochs is not None:
        data["training"] = {**data.get("training", {}), "max_epochs": args.epochs}
    if args.warmup is not None or "warmup_samples" not in data:
        data["warmup_samples"] = deps.get_warmup(args.warmup)
    # SHAFT_DATA_DIR applies only when neither --data nor the file names a source
    if args.data is not None or "data_source" not in data:
        data_dir = deps.get_data_dir(args.data, required=args.spec is None)
        if data_dir is not None:
            data["data_source"] = RealDirectory(path=data_dir)
    return ExperimentSpec.model_validate(data)


def run(args: argparse.Namespace) -> int:
    spec = build_spec(args)
    model = train_model(spec, n_jobs=deps.get_n_jobs(args.n_jobs))
    save_model(model.to_container(), args.out)
    if model.history is not None:
        logger.info(
            "Best-on-test epoch %d of %d", model.history.best_epoch, len(model.history.test_loss)
        )
        log_path = args.out.with_suffix(".history.csv")
        frame = pd.DataFrame(
            {
                "epoch": range(1, len(model.history.train_loss) + 1),
                "train_loss": model.history.train_loss,
                "test_loss": model.history.test_loss,
            }
        )
        try:
            frame.to_csv(log_path, index=False, lineterminator="\n", float_format="%.17g")
        except OSError as e:
            raise ReportIoError(f"Cannot write training log {log_path}: {e}")
    logger.info("Development test accuracy %.4f", model.test_accuracy)
    return 0
