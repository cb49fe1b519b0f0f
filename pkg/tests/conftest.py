import pytest

from ctxdep.config import config_from_dict

# smallest configuration that still exercises every stage
SMALL_CONFIG = {
    "seed": 1,
    "linear_epochs": 20,
    "train": {"d_w": 8, "d_h": 8, "d_s": 4, "epochs": 3},
    "synth": {"n_messages": 200, "n_validation": 50, "n_test": 60, "min_responses": 5, "max_responses": 10},
}


@pytest.fixture
def small_config():
    return config_from_dict(SMALL_CONFIG)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
