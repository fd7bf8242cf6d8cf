import sys
from pathlib import Path

import pytest

from ucoref.mentions import DecisionFile
from ucoref.ucca import read_passage

FIXTURES = Path(__file__).resolve().parent / "fixtures"
CORPUS = FIXTURES / "corpus"


def load(name):
    p = read_passage(CORPUS / (name + ".xml"))
    dec = CORPUS / (name + ".json")
    return p, DecisionFile.load(dec) if dec.exists() else None


@pytest.fixture
def fig1():
    return load("fig1")


@pytest.fixture
def fig1_implicit():
    return load("fig1_implicit")


@pytest.fixture(params=sorted(x.stem for x in CORPUS.glob("*.xml")))
def corpus_doc(request):
    return load(request.param)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
