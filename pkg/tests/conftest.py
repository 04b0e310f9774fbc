import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from silhouette_crf.fields import Frame, LabelField

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the outcome line of one acceptance criterion."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


def square_frame(h, w, x0, y0, side, fg=1.0, bg=0.0):
    img = np.full((h, w), bg)
    img[y0:y0 + side, x0:x0 + side] = fg
    return Frame(img)


def mask_field(h, w, x0, y0, side):
    m = np.zeros((h, w), dtype=bool)
    m[y0:y0 + side, x0:x0 + side] = True
    return LabelField.from_mask(m)
