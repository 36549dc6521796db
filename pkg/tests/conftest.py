from __future__ import annotations

import pytest

import cmslab as cl

THIRD = 1.0 / 3.0

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sys_a_config() -> dict:
    """One unit box, two halving maps, fair constant coin."""
    return {
        "dimension": 1,
        "vertices": [
            {"index": 1, "lower": [0.0], "upper": [1.0], "base_point": [0.0]},
        ],
        "edges": [
            {"id": "e1", "source": 1, "target": 1, "linear": [0.5],
             "offset": [0.0], "prob": {"family": "constant", "alpha": 0.5}},
            {"id": "e2", "source": 1, "target": 1, "linear": [0.5],
             "offset": [0.5], "prob": {"family": "constant", "alpha": 0.5}},
        ],
        "support_set": [1],
    }


def sys_b_config() -> dict:
    """Same maps as A with affine place-dependent probabilities."""
    cfg = sys_a_config()
    cfg["edges"][0]["prob"] = {"family": "affine", "alpha": 1.0 / 3.0,
                               "beta": [1.0 / 3.0]}
    cfg["edges"][1]["prob"] = {"family": "affine", "alpha": 2.0 / 3.0,
                               "beta": [-1.0 / 3.0]}
    return cfg


def sys_c_config() -> dict:
    """Two separated boxes, slope-1/3 maps between every pair, fair coin.

    Offsets are chosen so each base point maps onto a base point bit-exactly,
    which makes every derived displacement exactly zero.
    """
    return {
        "dimension": 1,
        "vertices": [
            {"index": 1, "lower": [0.0], "upper": [1.0], "base_point": [0.0]},
            {"index": 2, "lower": [2.0], "upper": [3.0], "base_point": [2.0]},
        ],
        "edges": [
            {"id": "c11", "source": 1, "target": 1, "linear": [THIRD],
             "offset": [0.0], "prob": {"family": "constant", "alpha": 0.5}},
            {"id": "c12", "source": 1, "target": 2, "linear": [THIRD],
             "offset": [2.0], "prob": {"family": "constant", "alpha": 0.5}},
            {"id": "c21", "source": 2, "target": 1, "linear": [THIRD],
             "offset": [-(2.0 * THIRD)], "prob": {"family": "constant", "alpha": 0.5}},
            {"id": "c22", "source": 2, "target": 2, "linear": [THIRD],
             "offset": [2.0 - 2.0 * THIRD], "prob": {"family": "constant", "alpha": 0.5}},
        ],
        "support_set": [1, 2],
    }


@pytest.fixture(scope="session")
def sys_a() -> cl.MarkovSystem:
    return cl.validate_system(sys_a_config())


@pytest.fixture(scope="session")
def sys_b() -> cl.MarkovSystem:
    return cl.validate_system(sys_b_config())


@pytest.fixture(scope="session")
def sys_c() -> cl.MarkovSystem:
    return cl.validate_system(sys_c_config())


@pytest.fixture(scope="session")
def mu_a(sys_a) -> cl.EmpiricalMeasure:
    return cl.estimate_invariant(sys_a, 100_000, burn_in=1000, seed=101)


@pytest.fixture(scope="session")
def mu_b(sys_b) -> cl.EmpiricalMeasure:
    return cl.estimate_invariant(sys_b, 100_000, burn_in=1000, seed=42)


@pytest.fixture(scope="session")
def mu_c(sys_c) -> cl.EmpiricalMeasure:
    return cl.estimate_invariant(sys_c, 20_000, burn_in=1000, seed=7)


@pytest.fixture(scope="session")
def constants_a(sys_a, mu_a) -> cl.ConstantSet:
    return cl.derive_constants(sys_a, mu_a)


@pytest.fixture(scope="session")
def constants_b(sys_b, mu_b) -> cl.ConstantSet:
    return cl.derive_constants(sys_b, mu_b)


@pytest.fixture(scope="session")
def constants_c(sys_c, mu_c) -> cl.ConstantSet:
    return cl.derive_constants(sys_c, mu_c)
