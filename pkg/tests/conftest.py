import numpy as np
import pytest

from oilsense.config import load_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config(tmp_path):
    """A pipeline config that runs end to end in a few seconds."""
    text = """
z_grid: {points: 12}
f_grid: {points: 61, resonance_points: 1501}
models:
  forest: {n_trees: 8, max_depth: 8}
  logistic: {epochs: 100}
  svm: {max_rows: 600}
"""
    path = tmp_path / "small.yaml"
    path.write_text(text)
    return path


@pytest.fixture
def small_cfg(small_config):
    return load_config(small_config)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
