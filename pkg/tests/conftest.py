import os
import shutil

import numpy as np
import pytest

from crashwatch.synthetic import fixture_dir


@pytest.fixture
def fixture_copy(tmp_path):
    """A writable copy of the bundled OHLCV fixture and its experiment.json."""
    dst = tmp_path / "fixture"
    shutil.copytree(fixture_dir(), dst)
    return dst


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory):
    """One full fixture experiment shared by the slower tests."""
    from crashwatch.experiment import load_config, run_experiment
    import dataclasses
    root = tmp_path_factory.mktemp("fixture_run")
    src = root / "fixture"
    shutil.copytree(fixture_dir(), src)
    cfg = load_config(src / "experiment.json")
    cfg = dataclasses.replace(cfg, out_dir=str(root / "out"))
    out = run_experiment(cfg)
    return cfg, out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write(path, text):
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
