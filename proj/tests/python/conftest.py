import os
import pathlib

import pytest

DATA = pathlib.Path(os.environ.get("SAYT_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="session")
def mini():
    return DATA / "mini"


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("SAYT_CLI")
    if not path:
        pytest.skip("SAYT_CLI is not set")
    return path
