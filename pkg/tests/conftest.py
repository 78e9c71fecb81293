"""Shared fixtures: bundled case-study scenarios."""

from pathlib import Path

import pytest

from pointbudget.scenario import parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(scope="session")
def ape_config():
    return parse_scenario(SCENARIO_DIR / "case_study_ape.scn")


@pytest.fixture(scope="session")
def rpe_wc_config():
    return parse_scenario(SCENARIO_DIR / "case_study_rpe_wc.scn")


@pytest.fixture(scope="session")
def case_family(ape_config):
    return ape_config.family
