from __future__ import annotations

from pathlib import Path

import pytest

from gdlog import Registry, parse_program
from gdlog.parser import parse_facts

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def registry():
    return Registry.with_demo_distributions()


def load_program(name: str, registry):
    path = CORPUS / name
    return parse_program(path.read_text(), registry, str(path))


def load_facts(name: str, program):
    path = CORPUS / name
    return parse_facts(path.read_text(), program.edb, str(path))


@pytest.fixture(scope="session")
def burglar(registry):
    return load_program("burglar.gdl", registry)


@pytest.fixture(scope="session")
def burglar_edb(burglar):
    return load_facts("burglar.facts", burglar)


@pytest.fixture(scope="session")
def burglar_ppdl(registry):
    return load_program("burglar_ppdl.gdl", registry)


@pytest.fixture(scope="session")
def report_edb(burglar_ppdl):
    return load_facts("burglar_report.facts", burglar_ppdl)
