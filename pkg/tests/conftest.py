import json
from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "golden"
DATA_DIR = Path(__file__).parent.parent / "src" / "eyebench" / "data"


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture
def data_dir():
    return DATA_DIR


def load_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
