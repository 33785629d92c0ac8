"""Resolution of CLI inputs that fall back to settings."""
from pathlib import Path
from typing import Optional

from .core.config import settings
from .core.data import DatasetId
from .core.data import all_dataset_ids
from .errors import MissingDataset


def get_seed(seed: Optional[int]) -> int:
    return settings.SEED if seed is None else seed


def get_out_dir(out: Optional[Path]) -> Path:
    return Path(out) if out is not None else Path(settings.OUT_DIR)


def get_data_dir(data: Optional[Path], required: bool = True) -> Optional[Path]:
    """
    The ``--data`` directory, else ``SHAFT_DATA_DIR``.

    Raises:
        MissingDataset: If neither is set (when required) or the directory is absent
    """
    data_dir = Path(data) if data is not None else settings.DATA_DIR
    if data_dir is None:
        if required:
            raise MissingDataset("No data directory given; pass --data or set SHAFT_DATA_DIR")
        return None
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise MissingDataset(f"Data directory not found: {data_dir}")
    return data_dir


def get_warmup(warmup: Optional[int]) -> int:
    return settings.WARMUP_SAMPLES if warmup is None else warmup


def get_n_jobs(n_jobs: Optional[int]) -> int:
    return settings.N_JOBS if n_jobs is None else n_jobs


def present_dataset_ids(data_dir: Path) -> list[DatasetId]:
    """Dataset ids whose CSV file exists in ``data_dir``, in 0D..4E order."""
    found = [i for i in all_dataset_ids() if (data_dir / i.filename).exists()]
    if not found:
        raise MissingDataset(f"No recordings named 0D.csv..4E.csv in {data_dir}")
    return found
