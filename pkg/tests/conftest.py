from __future__ import annotations

from pathlib import Path

import pytest

from planloop.envs import SPLITS, generate_bw_problem
from planloop.envs.blocksworld import load_domain as load_bw_domain
from planloop.envs.household import load_domain as load_hh_domain
from planloop.pddl import ground, parse_problem

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def bw_domain():
    return load_bw_domain()


@pytest.fixture(scope="session")
def hh_domain():
    return load_hh_domain()


@pytest.fixture(scope="session")
def bw_problem_text():
    return (FIXTURES / "bw" / "simple_problem_0.pddl").read_text()


@pytest.fixture(scope="session")
def bw_domain_text():
    return (FIXTURES / "bw" / "domain.pddl").read_text()


@pytest.fixture(scope="session")
def hh_domain_text():
    return (FIXTURES / "hh" / "domain.pddl").read_text()


@pytest.fixture(scope="session")
def hh_problem_text():
    return (FIXTURES / "hh" / "simple" / "cleaning_out_drawers_0.pddl").read_text()


@pytest.fixture(scope="session")
def bw_problem(bw_domain, bw_problem_text):
    return parse_problem(bw_problem_text, bw_domain)


@pytest.fixture(scope="session")
def bw_task(bw_domain, bw_problem):
    return ground(bw_domain, bw_problem)


@pytest.fixture(scope="session")
def hh_problem(hh_domain, hh_problem_text):
    return parse_problem(hh_problem_text, hh_domain)


@pytest.fixture(scope="session")
def hh_task(hh_domain, hh_problem):
    return ground(hh_domain, hh_problem)


@pytest.fixture(scope="session")
def generated_bw_problems(bw_domain):
    """25 problems per split, seeds 0..24; shared by calibration and acceptance."""
    problems = {}
    for split_name, split in SPLITS.items():
        problems[split_name] = [
            generate_bw_problem(split, seed, domain=bw_domain, name=f"{split_name}_problem_{seed}")
            for seed in range(25)
        ]
    return problems
