import os
import sys

import pytest

# Make the flat src modules importable as in the application
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from exponents import geometric  # noqa: E402
from muntz_poly import DiscreteFunctional, MuntzPolynomial  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size acceptance runs (deselect with -m 'not slow')")


@pytest.fixture(scope='session')
def powers_of_two():
    """lambda_k = 2^k, stored from k = 0 so that seq[k] = 2^k."""
    return geometric(2, 200)


@pytest.fixture(scope='session')
def three_slices():
    from octa_lab import SliceSpec
    return [
        SliceSpec(DiscreteFunctional.parse("1:1"), 0.25, MuntzPolynomial.monomial(4)),
        SliceSpec(DiscreteFunctional.parse("0.9:0.6,1:0.4"), 0.25, MuntzPolynomial.monomial(2)),
        SliceSpec(DiscreteFunctional.parse("0.95:1"), 0.25, MuntzPolynomial.monomial(2)),
    ]
