import os

import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def fixture_path() -> str:
    return os.path.join(DATA_DIR, "fixture.jsonl")


@pytest.fixture(scope="session")
def tempo_instance_path() -> str:
    return os.path.join(DATA_DIR, "tempo_instance.json")
