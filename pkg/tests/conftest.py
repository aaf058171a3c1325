import numpy as np
import pytest

from rhomboid_pool.geometry import PointCloud
from rhomboid_pool.synthetic import random_cloud


@pytest.fixture
def square_cloud():
    # four co-circular points plus a centre point
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]))


@pytest.fixture
def cloud2d():
    return random_cloud(3, 8, 2)


@pytest.fixture
def cloud3d():
    return random_cloud(5, 8, 3)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
