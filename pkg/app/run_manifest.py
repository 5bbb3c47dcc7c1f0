# Run Manifest


from dataclasses import dataclass, field
import datetime
import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from app.exceptions import ConfigurationError


@dataclass
class RunManifest:
    """
    Record of a scenario run, sufficient to re-run it.

    Stores the normalised scenario, the seeds drawn, package versions, the
    largest solver residual and the files written. ``config`` is the
    scenario in its JSON layout, so ``ScenarioConfig.from_dict`` restores it.
    """

    config: Dict[str, Any]                      # Scenario echo
    versions: Dict[str, str] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)
    max_residual: float = 0.0
    outputs: List[str] = field(default_factory=list)
    labels: Dict[str, Dict[str, str]] = field(default_factory=dict)
    timestamp: datetime.datetime = field(default_factory=datetime.datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert manifest to dictionary.

        Returns:
            Dict[str, Any]: A dictionary containing the serialized manifest.
        """
        return {
            'config': self.config,
            'versions': dict(self.versions),
            'seeds': list(self.seeds),
            'max_residual': self.max_residual,
            'outputs': list(self.outputs),
            'labels': dict(self.labels),
            'timestamp': self.timestamp.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunManifest':
        """
        Create manifest from dictionary.

        Args:
            data (Dict[str, Any]): Dictionary containing serialized manifest data.

        Returns:
            RunManifest: The restored manifest.

        Raises:
            ConfigurationError: If required fields are missing or malformed.
        """
        try:
            return cls(
                config=data['config'],
                versions=data.get('versions', {}),
                seeds=list(data.get('seeds', [])),
                max_residual=float(data.get('max_residual', 0.0)),
                outputs=list(data.get('outputs', [])),
                labels=data.get('labels', {}),
                timestamp=datetime.datetime.fromisoformat(data['timestamp']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid run manifest: {e}") from e

    def write(self, path: Path) -> None:
        """Write the manifest as UTF-8 JSON."""
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)
        logging.info(f"Manifest written to {path}")

    @classmethod
    def load(cls, path: Path) -> 'RunManifest':
        """
        Read a manifest file.

        Raises:
            ConfigurationError: If the file cannot be read or parsed.
        """
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read manifest {path}: {e}") from e
        return cls.from_dict(data)
