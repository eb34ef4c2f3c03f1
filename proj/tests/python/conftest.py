import os
import pathlib

import pytest


@pytest.fixture
def configs():
    return pathlib.Path(os.environ.get("MNLS_CONFIGS", pathlib.Path(__file__).parents[2] / "configs"))
