import importlib.util
import os
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from stvmargin.election import Rules, parse_blt  # noqa: E402

DATA = HERE / "data"
TABLE1A = DATA / "table1a.blt"
A, B, C, D, E = range(5)

HAVE_SCIP = importlib.util.find_spec("pyscipopt") is not None
SCIP_ORACLE = f"external:{sys.executable} -m stvmargin.scip_bridge"


@pytest.fixture(scope="session")
def table1a():
    return parse_blt(TABLE1A.read_bytes())


@pytest.fixture(scope="session")
def table1a_3dp():
    return parse_blt(TABLE1A.read_bytes(), Rules(decimals=3))


def pytest_configure(config):
    os.environ.setdefault("PYTHONHASHSEED", "0")
