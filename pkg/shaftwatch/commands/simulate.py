import argparse
import logging
from pathlib import Path

from .. import deps
from ..core.data import all_dataset_ids
from ..core.data import save_recording
from ..core.rigsim import simulate_dataset
from ..core.yaml_processor import load_sim_spec_from_yaml
from ..core.yaml_processor import save_sim_spec_to_yaml
from ..errors import ReportIoError
from ..scheme.simulation import SimSpec
from ..scheme.simulation import UnbalanceSpec

logger = logging.getLogger(__name__)

MANIFEST_NAME = "simulation.yaml"


def parse_unbalance(text: str) -> tuple[int, UnbalanceSpec]:
    """``K=MASS_G:RADIUS_MM``, e.g. ``2=3.281:20``."""
    try:
        strength, values = text.split("=", 1)
        mass, radius = values.split(":", 1)
        spec = UnbalanceSpec(mass_g=float(mass), radius_mm=float(radius))
        k = int(strength)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"Invalid unbalance override {text!r}, expected K=MASS_G:RADIUS_MM"
        )
    if not 0 <= k <= 4:
        raise argparse.ArgumentTypeError(f"Unbalance strength must be within 0..4, got {k}")
    return k, spec


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "simulate",
        help="write synthetic recordings 0D.csv..4E.csv",
        description="Simulate the ten rig recordings and write them as CSV files.",
    )
    parser.add_argument("--spec", type=Path, help="simulation spec YAML file")
    parser.add_argument("--out", type=Path, help="output directory (default: SHAFT_OUT_DIR)")
    parser.add_argument("--seed", type=int, help="base seed (default: SHAFT_SEED, 2020)")
    parser.add_argument(
        "--unbalance",
        type=parse_unbalance,
        action="append",
        default=[],
        metavar="K=MASS_G:RADIUS_MM",
        help="override the unbalance of strength K (repeatable)",
    )
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    spec = load_sim_spec_from_yaml(args.spec) if args.spec else SimSpec(seed=deps.get_seed(None))
    update = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.unbalance:
        update["unbalances"] = {**spec.unbalances, **dict(args.unbalance)}
    if update:
        spec = SimSpec.model_validate({**spec.model_dump(), **update})

    out_dir = deps.get_out_dir(args.out)
    try:
        for dataset_id in all_dataset_ids():
            recording = simulate_dataset(spec, dataset_id)
            path = save_recording(recording, out_dir / dataset_id.filename)
            logger.info("Wrote %s (%d samples)", path, len(recording))
        save_sim_spec_to_yaml(spec, out_dir / MANIFEST_NAME)
    except OSError as e:
        raise ReportIoError(f"Cannot write simulated data to {out_dir}: {e}")
    return 0
