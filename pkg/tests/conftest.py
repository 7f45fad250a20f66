import numpy as np
import pytest
from scipy import ndimage

_ACCEPTANCE = []


def texture_image(shape, seed=0, sigma=2.0):
    """Smooth random texture in [0, 1]."""
    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.random(shape), sigma)
    return (img - img.min()) / (img.max() - img.min())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    """Log an acceptance criterion outcome; summarized at the end of the run."""

    def record(number, name, passed, detail=""):
        _ACCEPTANCE.append((number, name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {name} {detail}".rstrip())
