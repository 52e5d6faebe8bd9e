import json
import pathlib

import pytest

from gridrestore.fragility import PfAssignment
from gridrestore.mdp import build_mdp
from gridrestore.network import load_network

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def fixture_doc(name: str) -> dict:
    return json.loads(fixture_text(name))


@pytest.fixture(scope="session")
def feeder6():
    return load_network(fixture_text("feeder6.json"))


@pytest.fixture(scope="session")
def feeder6_model(feeder6):
    """Five-branch feeder under uniform pf 0.4 and permissive electrics."""
    return build_mdp(feeder6, PfAssignment.uniform(feeder6, 0.4))


@pytest.fixture(scope="session")
def feeder12_small():
    return load_network(fixture_text("feeder12_small_der.json"))


@pytest.fixture(scope="session")
def feeder12_large():
    return load_network(fixture_text("feeder12_large_der.json"))
