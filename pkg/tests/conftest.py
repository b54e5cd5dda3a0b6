from pathlib import Path

import numpy as np
import pytest

from protoldpc.graphs.lps import LpsParams, lps_generate
from protoldpc.graphs.tanner import node_split, protograph_to_partitions
from protoldpc.protograph import read_base_matrix

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def eq8():
    return read_base_matrix(DATA / "eq8.txt").entries


@pytest.fixture(scope="session")
def eq7():
    return read_base_matrix(DATA / "eq7.txt").entries


@pytest.fixture(scope="session")
def fig1a():
    return np.array([[1, 1, 1, 0], [1, 1, 1, 1], [0, 1, 1, 1]])


@pytest.fixture(scope="session")
def x513():
    return lps_generate(LpsParams(5, 13))


@pytest.fixture(scope="session")
def lifted33(x513):
    return node_split(x513, protograph_to_partitions([[3, 3]]))
