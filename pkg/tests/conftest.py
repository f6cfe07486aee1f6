from __future__ import annotations

import numpy as np
import pytest

from nvsd.io import load_boston


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def boston():
    return load_boston()


@pytest.fixture(scope="session")
def boston_csv():
    from importlib import resources

    with resources.as_file(resources.files("nvsd.datasets").joinpath("boston.csv")) as p:
        yield str(p)
