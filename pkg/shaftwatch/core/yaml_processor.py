from pathlib import Path
from typing import Any
from typing import Dict
from typing import TextIO
from typing import Union

import yaml
from pydantic import ValidationError

from ..scheme.experiment import ExperimentSpec
from ..scheme.simulation import SimSpec


def load_sim_spec_from_yaml(file_path: Union[str, Path]) -> SimSpec:
    """
    Load a SimSpec from a YAML file.

    Args:
        file_path: Path to the YAML file

    Returns:
        SimSpec object loaded from the YAML file

    Raises:
        FileNotFoundError: If the file doesn't exist
        yaml.YAMLError: If the YAML is malformed
        ValueError: If the YAML structure doesn't match the SimSpec format
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"YAML file not found: {file_path}")

    with open(file_path, "r", encoding="utf-8") as f:
        return load_sim_spec_from_yaml_fileobj(f)


def load_sim_spec_from_yaml_fileobj(fileobj: TextIO) -> SimSpec:
    """
    Load a SimSpec from a file-like object containing YAML.

    An empty document yields the default simulation.

    Raises:
        yaml.YAMLError: If the YAML is malformed
        ValueError: If the YAML structure doesn't match the SimSpec format
    """
    data = _safe_load(fileobj)
    if data is None:
        return SimSpec()
    return _validate(SimSpec, data, "simulation spec")


def save_sim_spec_to_yaml(spec: SimSpec, file_path: Union[str, Path]) -> None:
    """
    Save a SimSpec to a YAML file.

    Raises:
        OSError: If the file cannot be written
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "w", encoding="utf-8") as f:
        save_sim_spec_to_yaml_fileobj(spec, f)


def save_sim_spec_to_yaml_fileobj(spec: SimSpec, fileobj: TextIO) -> None:
    data = spec.model_dump(mode="json")
    yaml.safe_dump(data, fileobj, default_flow_style=False, sort_keys=False)


def load_experiment_spec_from_yaml(file_path: Union[str, Path]) -> ExperimentSpec:
    """
    Load an ExperimentSpec from a YAML file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        yaml.YAMLError: If the YAML is malformed
        ValueError: If the YAML structure doesn't match the ExperimentSpec format
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"YAML file not found: {file_path}")

    with open(file_path, "r", encoding="utf-8") as f:
        return load_experiment_spec_from_yaml_fileobj(f)


def load_experiment_spec_from_yaml_fileobj(fileobj: TextIO) -> ExperimentSpec:
    data = _safe_load(fileobj)
    return _validate(ExperimentSpec, data, "experiment spec")


def _safe_load(fileobj: TextIO) -> Any:
    try:
        return yaml.safe_load(fileobj)
    except yaml.YAMLError as e:
        raise yaml.YAMLError(f"Failed to parse YAML: {e}")


def _validate(model, data: Dict[str, Any], what: str):
    """
    Validate a parsed YAML document against a pydantic model.

    Raises:
        ValueError: If the data doesn't match, naming the offending field
    """
    if not isinstance(data, dict):
        raise ValueError(f"Expected dictionary for {what} data")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ValueError(f"Invalid {what} field '{location}': {first['msg']}")
