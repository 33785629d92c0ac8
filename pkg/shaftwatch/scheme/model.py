from typing import Any
from typing import Optional

from pydantic import BaseModel
from pydantic import Field

FORMAT_VERSION = 1


class ModelContainer(BaseModel):
    """Self-describing trained model: everything inference needs, plus provenance."""

    format_version: int = FORMAT_VERSION
    package_version: str
    kind: str
    approach: str
    mode: str
    seed: int
    hyperparameters: dict[str, Any] = Field(default_factory=dict)
    parameters: dict[str, Any]
    scalers: dict[str, Any] = Field(default_factory=dict)
    history: Optional[dict[str, Any]] = None
    test_accuracy: Optional[float] = None
    spec: dict[str, Any]
