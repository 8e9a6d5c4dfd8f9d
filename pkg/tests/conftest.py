import json
from importlib import resources

import pytest

from qsodyn.specfile import parse_spec


def load_fixture(name):
    text = resources.files("qsodyn").joinpath(f"fixtures/{name}.json").read_text()
    return parse_spec(json.loads(text), source=name)


def fixture_path(name):
    return str(resources.files("qsodyn").joinpath(f"fixtures/{name}.json"))


@pytest.fixture
def three_vertex_operator():
    """n=3 operator whose fixed points are exactly the three vertices."""
    return load_fixture("attracting_not_unique").build()


@pytest.fixture
def sufficiency_gap_operator():
    """n=3 operator failing the uniqueness bounds yet with a unique fixed point."""
    return load_fixture("uniqueness_sufficiency_gap").build()


@pytest.fixture
def s2_noncontractive_operator():
    """n=3 operator with one fixed point but contraction modulus >= 1."""
    return load_fixture("unique_not_contractive_s2").build()
