import numpy as np
import pytest

from censreg.datagen import censor_key, generate, make_design, rng_stream


@pytest.fixture
def draw():
    """Generate one replicate of a design with the study defaults."""

    def _draw(kind, n=200, q=0.3, seed=11, rep=0, **kw):
        spec = make_design(kind, n, q, **kw)
        return generate(spec, rng_stream(seed, spec.kind.code, censor_key(q), rep))

    return _draw


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
