"""Run manifests: config hash, code version, per-artifact hashes and timing.

Timing fields are recorded but excluded from the determinism contract; a
stage re-run from the same manifest inputs must reproduce every artifact
hash whose `timing` flag is false.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    stage: str
    config: dict
    artifacts: list[dict] = field(default_factory=list)
    started: float = field(default_factory=time.time)

    def add(self, path, seconds: float | None = None, timing: bool = False):
        self.artifacts.append(
            {
                "path": str(path),
                "sha256": file_hash(path),
                "seconds": seconds,
                "timing": timing,
            }
        )

    def write(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        doc = {
            "stage": self.stage,
            "code_version": __version__,
            "config_hash": config_hash(self.config),
            "config": self.config,
            "wall_seconds": time.time() - self.started,
            "artifacts": self.artifacts,
        }
        path = directory / "manifest.json"
        path.write_text(json.dumps(doc, indent=1))
        return path


def report_hashes(manifest_path) -> dict[str, str]:
    """Artifact hashes that participate in the determinism contract."""
    doc = json.loads(Path(manifest_path).read_text())
    return {a["path"]: a["sha256"] for a in doc["artifacts"] if not a["timing"]}
