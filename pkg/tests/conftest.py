import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

# Add the parent directory to sys.path to allow imports from app
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.config import load_settings
from app.main import app
from app.schemas.tower import DomainDescription, Mode
from app.services.tower import (
    add_relation,
    adjoin_characteristic,
    adjoin_even_root,
    init_tower,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def interval(name: str, lo, hi) -> DomainDescription:
    return DomainDescription(coordinates=(name,), box=((Fraction(lo), Fraction(hi)),))


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def settings():
    # Smaller samples than the defaults keep the suite fast
    return load_settings(DOMAIN_SAMPLES=2000, VARIETY_SAMPLES=2000, REGULARITY_SAMPLES=4000)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def expected_outcomes():
    return json.loads((FIXTURES / "expected.json").read_text())


@pytest.fixture
def interval_tower(settings):
    """[-1, 1] with Q generated by 1 - t^2."""
    return init_tower(interval("t", -1, 1), ["1 - t^2"], settings=settings)


@pytest.fixture
def abs_tower(interval_tower, settings):
    """R[t, |t|] on [-1, 1]."""
    return adjoin_even_root(interval_tower, "u", "t^2", 2, settings)


@pytest.fixture
def abs_chi_tower(abs_tower, settings):
    """R[t, |t|, chi_[0,1]] on [-1, 1]."""
    return adjoin_characteristic(abs_tower, "c", "t", "compact", settings=settings)


@pytest.fixture
def counter_base(settings):
    """[-2, 2] with Q generated by 2 - t and 2 + t."""
    return init_tower(interval("t", -2, 2), ["2 - t", "2 + t"], settings=settings)


@pytest.fixture
def counter_tower(counter_base, settings):
    """The base above with chi of {-t^2 (t + 1)(t - 1) >= 0} forced through."""
    return adjoin_characteristic(
        counter_base, "f", "-t^2*(t + 1)*(t - 1)", "compact", force=True, settings=settings
    )


@pytest.fixture
def circle_tower(settings):
    """R[cos t, sin t] over one period with the circle relation."""
    tw = init_tower(
        interval("t", -4, 4),
        coordinates=[("x", "cos(t)"), ("y", "sin(t)")],
        claimed_mode=Mode.EXACT,
        settings=settings,
    )
    return add_relation(tw, "x^2 + y^2 - 1", settings)
