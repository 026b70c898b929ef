import json
from pathlib import Path

import pytest

from oofa.io import read_design
from oofa.perm import Design

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "paper"


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads((FIXTURES / "manifest.json").read_text())


@pytest.fixture(scope="session")
def load_fixture(manifest):
    def _load(name: str) -> Design:
        entry = manifest["fixtures"][name]
        return read_design(FIXTURES / entry["file"])

    return _load
