import argparse
import logging
from pathlib import Path

from .. import deps
from ..core.model_store import load_model
from ..core.pipeline import DirectoryProvider
from ..core.pipeline import TrainedModel
from ..core.pipeline import evaluate_model
from ..core.pipeline import provider_for
from ..core.reports import write_report

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "evaluate",
        help="evaluate a trained model on evaluation recordings",
        description="Score a model container on the evaluation recordings and write a report.",
    )
    parser.add_argument("--model", type=Path, required=True, help="model file (JSON)")
    parser.add_argument(
        "--data", type=Path, help="recording directory (default: SHAFT_DATA_DIR or the "
        "model's training source)"
    )
    parser.add_argument("--report", type=Path, required=True, help="report file")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    model = TrainedModel.from_container(load_model(args.model))
    data_dir = deps.get_data_dir(args.data, required=False)
    warmup = model.spec.warmup_samples
    if data_dir is not None:
        provider = DirectoryProvider(data_dir, warmup)
    else:
        provider = provider_for(model.spec.data_source, warmup)
    report = evaluate_model(model, provider)
    write_report(report, args.report, args.format)
    logger.info(
        "Overall accuracy %.4f, balanced accuracy %.4f",
        report.overall_accuracy,
        report.balanced_accuracy,
    )
    return 0
