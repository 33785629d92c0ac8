import logging
from pathlib import Path
from typing import Literal
from typing import Union

import pandas as pd

from ..errors import ReportIoError
from ..scheme.experiment import EvalReport

logger = logging.getLogger(__name__)

ReportFormat = Literal["json", "csv"]
RPM_BIN_COLUMNS = ["center", "acc", "n"]


def report_to_json(report: EvalReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def rpm_bins_frame(report: EvalReport) -> pd.DataFrame:
    """The speed-binned accuracy series: x = bin centre, y = accuracy."""
    rows = [b.model_dump() for b in report.rpm_bins]
    return pd.DataFrame(rows, columns=RPM_BIN_COLUMNS)


def write_report(
    report: EvalReport, file_path: Union[str, Path], fmt: ReportFormat = "json"
) -> Path:
    """
    Write an evaluation report as JSON (full report) or CSV (one row per
    speed bin).

    Raises:
        ReportIoError: If the file cannot be written
        ValueError: If the format is unknown
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"Unknown report format {fmt!r}, expected 'json' or 'csv'")
    file_path = Path(file_path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            file_path.write_text(report_to_json(report), encoding="utf-8")
        else:
            rpm_bins_frame(report).to_csv(
                file_path, index=False, lineterminator="\n", float_format="%.17g"
            )
    except OSError as e:
        raise ReportIoError(f"Cannot write report {file_path}: {e}")
    logger.info("Wrote %s report to %s", fmt, file_path)
    return file_path
