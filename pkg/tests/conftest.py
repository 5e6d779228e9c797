from __future__ import annotations

from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"

# MainNet baseline measurements: mean CPU percent and total messages per
# second, both against the peer count of the observed node.
CPU_VS_PEERS = [
    (10, 16.929),
    (20, 18.651),
    (30, 18.694),
    (40, 20.645),
    (50, 22.405),
    (60, 22.924),
    (70, 23.825),
]
MESSAGES_VS_PEERS = [
    (10, 1080.92),
    (20, 2474.27),
    (30, 3744.87),
    (40, 4747.98),
    (50, 6005.29),
    (60, 7568.48),
    (70, 8470.71),
]


@pytest.fixture
def cpu_points():
    return list(CPU_VS_PEERS)


@pytest.fixture
def msgs_points():
    return list(MESSAGES_VS_PEERS)


@pytest.fixture
def cpu_csv_path():
    return DATA_DIR / "cpu_vs_peers.csv"


@pytest.fixture
def msgs_csv_path():
    return DATA_DIR / "messages_vs_peers.csv"
