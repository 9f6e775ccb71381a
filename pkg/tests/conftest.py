import sys
from pathlib import Path

import pytest

from hinembed.graph import add_inverse_edges, load_graph

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_PATH = DATA_DIR / "table1_fixture.tsv"


@pytest.fixture(scope="session")
def fixture_path():
    return FIXTURE_PATH


@pytest.fixture()
def raw_graph():
    with open(FIXTURE_PATH) as f:
        return load_graph(f)


@pytest.fixture()
def graph(raw_graph):
    return add_inverse_edges(raw_graph)
