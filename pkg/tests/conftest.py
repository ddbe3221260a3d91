import sys
from pathlib import Path

import pytest

from multiverse.wat import parse_module

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


@pytest.fixture(scope="session")
def programs_dir():
    return PROGRAMS


def load_program(name):
    return parse_module((PROGRAMS / f"{name}.wat").read_text())


@pytest.fixture(scope="session")
def knock_module():
    return load_program("knock")


@pytest.fixture(scope="session")
def app_b_module():
    return load_program("app_b")
