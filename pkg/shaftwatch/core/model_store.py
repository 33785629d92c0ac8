import json
import logging
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from ..errors import ReportIoError
from ..errors import VersionMismatch
from ..scheme.model import FORMAT_VERSION
from ..scheme.model import ModelContainer

logger = logging.getLogger(__name__)


def save_model(container: ModelContainer, file_path: Union[str, Path]) -> Path:
    """
    Save a model container as JSON.

    Raises:
        ReportIoError: If the file cannot be written
    """
    file_path = Path(file_path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(container.model_dump_json() + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIoError(f"Cannot write model file {file_path}: {e}")
    logger.info("Saved %s model to %s", container.kind, file_path)
    return file_path


def load_model(file_path: Union[str, Path]) -> ModelContainer:
    """
    Load a model container from JSON.

    Raises:
        FileNotFoundError: If the file doesn't exist
        VersionMismatch: If the container was written by an incompatible format version
        ValueError: If the document is not a model container
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"Model file not found: {file_path}")
    with open(file_path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Model file {file_path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ValueError("Expected a JSON object for the model container")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"Model file {file_path} has format version {version}, expected {FORMAT_VERSION}"
        )
    try:
        return ModelContainer.model_validate(data)
    except ValidationError as e:
        raise ValueError(f"Invalid model container {file_path}: {e}")
