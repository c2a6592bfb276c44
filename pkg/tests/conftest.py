import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridids.dataset import Dataset, RawDataset  # noqa: E402
from gridids.schema import FeatureSchema  # noqa: E402


def make_dataset(values, labels, names=None, raw=False):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    names = names or [f"f{j}" for j in range(values.shape[1])]
    cls = RawDataset if raw else Dataset
    return cls(FeatureSchema.plain(names), values, np.asarray(labels))


@pytest.fixture
def tiny():
    return make_dataset([[0.0, 1.0], [1.0, 0.0], [5.0, 5.0], [6.0, 5.0]], [1, 1, 7, 7])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
