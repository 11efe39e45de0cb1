"""Shared fixtures.

The bundled example is solved once per session; its report and serialized
trace are shared read-only by many tests (a full solve runs 56 iterations,
so re-solving in every test would dominate the suite's runtime).
"""

from __future__ import annotations

from importlib import resources

import pytest

from credible_sdp import running_example, solve, write_trace


@pytest.fixture(scope="session")
def example_problem():
    return running_example()


@pytest.fixture(scope="session")
def example_report(example_problem):
    return solve(example_problem)


@pytest.fixture(scope="session")
def example_trace(example_report):
    return write_trace(example_report)


@pytest.fixture()
def problem_file(tmp_path):
    """The bundled problem JSON copied to a temporary file for CLI runs."""
    data = resources.files("credible_sdp").joinpath("data/running_example.json").read_bytes()
    path = tmp_path / "problem.json"
    path.write_bytes(data)
    return path
