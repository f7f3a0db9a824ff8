"""
Shared fixtures for tests.
"""

import json
import os
import sys

import pytest

# Make `src.mginf` importable from the repository root
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.mginf.numerics import QuadratureSpec
from src.mginf.service_models import (
    BetaConstantFamilyParams,
    make_beta_constant_family,
    make_deterministic,
    make_exponential,
    make_implicit_constant_variance,
    make_zero_beta_model,
)


@pytest.fixture
def quadrature():
    """Default quadrature tolerances."""
    return QuadratureSpec()


@pytest.fixture
def unit_exponential():
    """Exponential service with mean 1."""
    return make_exponential(1.0)


@pytest.fixture
def deterministic_two():
    """Deterministic service of length 2."""
    return make_deterministic(2.0)


@pytest.fixture
def zero_beta_model():
    """β ≡ 0 law with λ = 1 and G(0) = 0.3."""
    return make_zero_beta_model(1.0, 0.3)


@pytest.fixture
def beta_constant_model():
    """Constant-β family at λ = 1, ρ = 1, β = 0."""
    return make_beta_constant_family(BetaConstantFamilyParams(1.0, 1.0, 0.0))


@pytest.fixture(scope="session")
def constant_variance_model():
    """Constant-variance law at λ = 1, G(0) = 0.8 (built once: it solves a table at construction)."""
    return make_implicit_constant_variance(1.0, 0.8)


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario dict to a JSON file and return its path."""

    def _write(data: dict, name: str = "scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write


@pytest.fixture
def cli_runner():
    """Typer CLI runner."""
    from typer.testing import CliRunner

    return CliRunner()


@pytest.fixture
def api_client():
    """FastAPI test client for the HTTP surface."""
    from fastapi.testclient import TestClient

    from src.mginf import server

    return TestClient(server.app)
