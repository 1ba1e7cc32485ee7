"""Shared fixtures: the nominal scenario, a two-metre variant used by the
analytic gaze examples, and zero-noise working memories built from them."""

from __future__ import annotations

import copy

import pytest

from intentsim.config import Config
from intentsim.harness import bootstrap_memory
from intentsim.world import Scenario, load_scenario, scenario_path


@pytest.fixture(scope="session")
def cfg() -> Config:
    return Config()


@pytest.fixture(scope="session")
def nominal_scenario() -> Scenario:
    return load_scenario(scenario_path("nominal"))


def _with_person_at(scenario: Scenario, x: float, y: float) -> Scenario:
    doc = copy.deepcopy(scenario)
    person = doc.person
    person.pose = type(person.pose)(x, y, person.pose.theta)
    return doc


@pytest.fixture(scope="session")
def twometre_scenario(nominal_scenario) -> Scenario:
    """Nominal room with the person exactly 2 m west of the ball, the spacing
    behind the 35.9-degree ball-visibility threshold examples."""
    return _with_person_at(nominal_scenario, 2.0, 3.0)


@pytest.fixture(scope="session")
def nominal_wm(nominal_scenario, cfg):
    return bootstrap_memory(nominal_scenario, cfg)


@pytest.fixture(scope="session")
def twometre_wm(twometre_scenario, cfg):
    return bootstrap_memory(twometre_scenario, cfg)
