import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sensorpress.autoencoder import init_params
from sensorpress.sphering import SpheringScale

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_params(L, K, seed=0, sigma=1.0, scale=1.0):
    """Random-weight parameters with nonzero biases."""
    r = np.random.default_rng(seed)
    p = init_params(L, K, seed)
    return type(p)(
        p.W_enc * scale,
        r.normal(0, 0.3, K),
        p.W_dec * scale,
        r.normal(0, 0.3, L),
        sigma=SpheringScale(sigma),
    )


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
