import numpy as np
import pytest

from gapls import AffineSubspace, NonnegativeOrthant


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_affine_orthant(rng, m=4, n=8, shift=0.5):
    """Affine set through a strictly positive point, paired with the orthant."""
    A = rng.standard_normal((m, n))
    z = rng.uniform(shift, 1.0 + shift, n)
    return AffineSubspace(A, A @ z), NonnegativeOrthant(n), z


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
