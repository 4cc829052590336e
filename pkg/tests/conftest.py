import numpy as np
import pytest

from groklab.network import ActivationSpec, ArchSpec, init_model

ALL_ACTIVATIONS = [
    ActivationSpec.square(),
    ActivationSpec.polynomial(1.0, 0.25),
    ActivationSpec("cubic"),
    ActivationSpec("abs_cubic"),
    ActivationSpec("signed_square"),
]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training runs (acceptance suite)")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tiny_model(p=5, hidden=(4,), act=None, seed=0):
    act = act or ActivationSpec.square()
    return init_model(ArchSpec(p, tuple(hidden), (act,)), seed)


def run_doc(**over):
    doc = {
        "format_version": 1,
        "dataset": {"modulus": 7, "train_frac": 0.6},
        "model": {"hidden_dims": [16]},
        "epochs": 20,
        "log_every": 5,
        "seed": 3,
    }
    doc.update(over)
    return doc


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
