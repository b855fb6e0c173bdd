import numpy as np
import pytest

from pam4qpsk.harness import ExperimentConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg(tmp_path):
    """A configuration small enough for end-to-end tests in seconds."""
    cfg = ExperimentConfig()
    cfg.sweep.test_bits = 2**14
    cfg.dnn.train_bits = 2 * 8192
    cfg.dnn.epochs = 3
    cfg.dnn.batch_size = 512
    cfg.dnn.learning_rate = 3e-3
    cfg.sweep.pam4_snr_db = [20.0, 25.0]
    cfg.sweep.power_mw = [38.5, 55.0]
    cfg.fig4.pam4_snr_db = [20.0]
    cfg.fig4.power_mw = [38.5, 55.0]
    cfg.dump_symbols = 256
    cfg.output_dir = str(tmp_path / "runs")
    return cfg


ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
