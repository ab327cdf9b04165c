from __future__ import annotations

import pytest

from minheight.curve import CurveModel, parse_ainvs

CURVES = {
    "11a1": "[0,-1,1,-10,-20]",
    "14a1": "[1,0,1,4,-6]",
    "36a1": "[0,0,0,0,1]",
    "37a1": "[0,0,1,-1,0]",
    "43a1": "[0,1,1,0,0]",
    "389a1": "[0,1,1,-2,0]",
    "1470l1": "[1,1,1,-2990,71147]",
    "32a1": "[0,0,0,4,0]",
    "x3mx": "[0,0,0,-1,0]",
}


def curve(name) -> CurveModel:
    return CurveModel.from_ainvs(parse_ainvs(CURVES[name]), label=name)


@pytest.fixture
def e37():
    return curve("37a1")


@pytest.fixture
def e1470():
    return curve("1470l1")


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
