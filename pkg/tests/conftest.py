import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO_ROOT = Path(__file__).resolve().parents[1]
PIMA_CSV = REPO_ROOT / "data" / "pima.csv"


@pytest.fixture(scope="session")
def pima_path():
    if not PIMA_CSV.exists():
        pytest.skip("canonical Pima file data/pima.csv not present")
    return PIMA_CSV


@pytest.fixture(scope="session")
def pima(pima_path):
    from onsetml.data import load_csv

    return load_csv(pima_path, has_header=True)
