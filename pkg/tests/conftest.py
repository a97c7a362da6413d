"""Shared fixtures: the reference 27-run design and its responses."""

import pytest

from rpltaguchi.arrays import L27
from rpltaguchi.design import DesignMatrix
from rpltaguchi.fixtures import REFERENCE_FACTORS, REFERENCE_POWER_MW


@pytest.fixture(scope="session")
def ref_design():
    return DesignMatrix.from_array(REFERENCE_FACTORS, L27)


@pytest.fixture(scope="session")
def ref_values():
    return list(REFERENCE_POWER_MW)
