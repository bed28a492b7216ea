import json
from pathlib import Path

import pytest

from cfspectra.session import SessionConfig, synth

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _load(name):
    return SessionConfig.from_json((CONFIG_DIR / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def shipped_direct():
    return synth(_load("direct_12"))


@pytest.fixture(scope="session")
def shipped_product():
    return synth(_load("product_23"))


@pytest.fixture(scope="session")
def shipped_staircase():
    return synth(_load("staircase_mixing"))


@pytest.fixture(scope="session")
def probe_direct():
    # warm-up stages, then 64-column translate and rotate stages
    return synth(SessionConfig(
        mode="direct", targets=(1, 2),
        blocks=(((1, 2), 4, None, (8, 8, 64, 64)),),
    ))


@pytest.fixture(scope="session")
def probe_product():
    # the fifth stage is a 64-column delayed-translate stage
    return synth(SessionConfig(
        mode="product", targets=(2, 3),
        blocks=(((1, 2), 5, None, (6, 6, 6, 6, 64)),),
    ))


@pytest.fixture(scope="session")
def probe_large():
    # the probed stage tops out just under a million levels
    return synth(SessionConfig(
        mode="direct", targets=(1, 2),
        blocks=(((1, 2), 3, None, (45, 45, 64)),),
    ))
