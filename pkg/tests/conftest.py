import math

import pytest

from travelwave import cubic, double_well, reconstruct, solve_cstar


@pytest.fixture(scope="session")
def cubic_spec():
    return cubic(0.3)


@pytest.fixture(scope="session")
def cubic_solved(cubic_spec):
    result = solve_cstar(cubic_spec)
    return cubic_spec, result, reconstruct(cubic_spec, result)


@pytest.fixture(scope="session")
def dw15_solved():
    spec = double_well(1.5)
    result = solve_cstar(spec)
    return spec, result, reconstruct(spec, result)


SQRT2 = math.sqrt(2.0)
