from __future__ import annotations

import pytest

from folearn.learn import TrainingSequence
from folearn.logic import parse_formula
from folearn.structure import LocalAccessOracle
from folearn.synth import figure1_structure

EXAMPLE1 = "phi(x; y1,y2) := (R(x) | x = y1 | E(x,y1)) & !exists z. (E(y2,z) & E(z,x))"
EXAMPLE1_LABELS = {"a": 0, "b": 1, "g": 0, "k": 1}


@pytest.fixture
def fig1():
    return figure1_structure()


@pytest.fixture
def fig1_oracle(fig1):
    return LocalAccessOracle(fig1)


@pytest.fixture
def ex1_template():
    return parse_formula(EXAMPLE1)


@pytest.fixture
def ex1_train():
    return TrainingSequence(tuple(((u,), c) for u, c in EXAMPLE1_LABELS.items()), k=1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
