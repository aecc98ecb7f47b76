"""Shared fixtures. The acceptance suite trains two agents and three
detectors, which takes a while; artifacts are cached under tests/_cache
keyed by the acceptance config hash, so only the first run pays the cost
(training is deterministic per seed, making the cache exact)."""

import json
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
ACCEPTANCE_CONFIG = TESTS_DIR / "acceptance_config.json"


def acceptance_doc():
    from uavguard.harness import validate_config

    return validate_config(ACCEPTANCE_CONFIG)


def cache_root(doc) -> Path:
    from uavguard.harness import config_hash
    from uavguard.sim import Arena

    # the built-in arena is part of what the artifacts depend on
    key = config_hash({"config": doc, "arena": Arena().to_json()})
    return TESTS_DIR / "_cache" / f"h{key}"


@pytest.fixture(scope="session")
def desk_run():
    """Validated acceptance config plus its cache directory, with the
    expensive stages (trainings, detector suite) materialized."""
    from uavguard.harness import reproduce

    doc = acceptance_doc()
    root = cache_root(doc)
    stages = {}
    for stage in ("train-compare", "detector-suite"):
        manifest = root / stage / "manifest.json"
        if not manifest.exists():
            manifest = reproduce(stage, doc, out_override=root)
        stages[stage] = Path(manifest)
    return {"doc": doc, "root": root, "stages": stages}
