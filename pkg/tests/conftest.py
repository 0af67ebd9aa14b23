"""Shared fixtures: reference flows and their cached optima."""

import pytest

from tlcontrol import FlowParams, optimize_linear, optimize_tlc


@pytest.fixture(scope="session")
def unit_flow():
    """Flow with alpha = c2 = sigma_bar = 1, hence R = 1."""
    return FlowParams(alpha=1.0, c2=1.0, sigma_bar=1.0)


@pytest.fixture(scope="session")
def hurricane():
    """Hurricane boundary-layer inputs, R = 6."""
    return FlowParams(alpha=1e-3, c2=1500.0, sigma_bar=3000.0)


@pytest.fixture(scope="session")
def unit_opt(unit_flow):
    return optimize_tlc(unit_flow)


@pytest.fixture(scope="session")
def hurricane_opt(hurricane):
    return optimize_tlc(hurricane)


@pytest.fixture(scope="session")
def hurricane_linear(hurricane):
    return optimize_linear(hurricane)
