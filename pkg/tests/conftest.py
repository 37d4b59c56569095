import pathlib
from fractions import Fraction

import pytest

from pathprob import modelio
from pathprob.models import Constraint, Ctmc, Dta, Guard, Rule
from pathprob.product import build_graph

ROOT = pathlib.Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"


@pytest.fixture(scope="session")
def unit_deadline():
    """Single clock: jump to the goal state before one time unit."""
    return modelio.parse_model(str(MODELS / "unit_deadline.json"))


@pytest.fixture(scope="session")
def exposure_window():
    """Two clocks: reach the goal before one time unit while every unbroken
    stay in the unsafe state lasts less than one time unit."""
    return modelio.parse_model(str(MODELS / "exposure_window.json"))


@pytest.fixture(scope="session")
def departure():
    """Single state, single clock, accepting once the clock passed one.

    Every region is alive and the all-ceilings grid point is an unknown, so
    this covers the boundary-row code path (the two shipped models have a
    dead ceiling).  The acceptance probability is one everywhere.
    """
    chain = Ctmc(
        states=("w",),
        transition=((Fraction(1),),),
        exit_rates=(Fraction(1),),
        labeling=("a",),
    )
    dta = Dta(
        locations=("q0", "qf"),
        final=frozenset({"qf"}),
        clocks=("x",),
        rules=(
            Rule("q0", "a", Guard((Constraint(0, "<", 1),)), frozenset(), "q0"),
            Rule("q0", "a", Guard((Constraint(0, ">=", 1),)), frozenset(), "qf"),
            Rule("qf", "a", Guard(), frozenset(), "qf"),
        ),
        alphabet=frozenset({"a"}),
    )
    return chain, dta


@pytest.fixture(scope="session")
def unit_graph(unit_deadline):
    return build_graph(*unit_deadline)


@pytest.fixture(scope="session")
def exposure_graph(exposure_window):
    return build_graph(*exposure_window)


@pytest.fixture(scope="session")
def departure_graph(departure):
    return build_graph(*departure)
