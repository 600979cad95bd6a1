# src/manifest.py

from datetime import datetime, timezone
from typing import Dict, List, Optional
import json
import logging
import os

from . import __version__
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
OUTCOMES = ("completed", "blow_up", "error")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest:
    """
    Summary of one simulate run, written once and last into the run directory.

    Attributes:
        config_digest (str): SHA-256 of the parsed configuration.
        artifact_version (str): quatflow version that produced the run.
        started_at (str): ISO-8601 UTC start time.
        finished_at (Optional[str]): ISO-8601 UTC end time.
        outcome (str): "completed", "blow_up" or "error".
        censored (bool): True when the trajectory ended in blow-up.
        files (List[str]): Emitted files, relative to the run directory.
        message (Optional[str]): Blow-up or error description.
    """

    def __init__(
        self,
        config_digest: str,
        artifact_version: str = __version__,
        started_at: Optional[str] = None,
        finished_at: Optional[str] = None,
        outcome: str = "completed",
        censored: bool = False,
        files: Optional[List[str]] = None,
        message: Optional[str] = None,
    ) -> None:
        self.config_digest: str = config_digest
        self.artifact_version: str = artifact_version
        self.started_at: str = started_at or utc_now()
        self.finished_at: Optional[str] = finished_at
        self.outcome: str = outcome
        self.censored: bool = censored
        self.files: List[str] = files if files is not None else []
        self.message: Optional[str] = message

    def add_file(self, name: str) -> None:
        if name not in self.files:
            self.files.append(name)

    def finish(self, outcome: str, message: Optional[str] = None) -> None:
        """
        Stamps the end time and outcome.

        Args:
            outcome (str): One of "completed", "blow_up", "error".
            message (Optional[str]): Description of a blow-up or error.
        """
        if outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome '{outcome}'")
        self.outcome = outcome
        self.censored = outcome == "blow_up"
        self.message = message
        self.finished_at = utc_now()

    def to_dict(self) -> Dict:
        return {
            "config_digest": self.config_digest,
            "artifact_version": self.artifact_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outcome": self.outcome,
            "censored": self.censored,
            "files": list(self.files),
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "RunManifest":
        return cls(
            config_digest=data["config_digest"],
            artifact_version=data["artifact_version"],
            started_at=data["started_at"],
            finished_at=data.get("finished_at"),
            outcome=data["outcome"],
            censored=data.get("censored", False),
            files=list(data.get("files", [])),
            message=data.get("message"),
        )

    def save_to_file(self, directory: str) -> str:
        """
        Writes manifest.json into the run directory.

        Args:
            directory (str): The run directory.

        Returns:
            str: Path of the written manifest.
        """
        path = os.path.join(directory, MANIFEST_NAME)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=4, sort_keys=True)
        logger.info(f"Manifest saved to '{path}' (outcome {self.outcome})")
        return path

    @classmethod
    def load_from_file(cls, directory: str) -> "RunManifest":
        """
        Loads manifest.json from a run directory.

        Raises:
            ConfigurationError: If no manifest exists there.
        """
        path = os.path.join(directory, MANIFEST_NAME)
        if not os.path.exists(path):
            raise ConfigurationError(f"no manifest in '{directory}'")
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))
