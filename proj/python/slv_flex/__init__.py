"""Flexible launch-vehicle simulator and control-design workbench."""

import json

from ._core import (
    ConfigError,
    DesignError,
    DomainError,
    IoError,
    LinearizationError,
    LinearModel,
    SimConfig,
    TransferFunction,
    atmosphere,
    design_elliptic,
    design_notch,
    design_point_model,
    engine_thrust,
    margins,
    mass_properties,
    pitch_loop,
    simulate,
    step_response,
)
from ._core import monte_carlo as _monte_carlo


def monte_carlo(config=None, runs=50, scales=(), mode="independent", workers=0):
    """Run a modal-uncertainty campaign and return the parsed summary."""
    return json.loads(_monte_carlo(config, runs, list(scales), mode, workers))


__all__ = [
    "ConfigError",
    "DesignError",
    "DomainError",
    "IoError",
    "LinearizationError",
    "LinearModel",
    "SimConfig",
    "TransferFunction",
    "atmosphere",
    "design_elliptic",
    "design_notch",
    "design_point_model",
    "engine_thrust",
    "margins",
    "mass_properties",
    "monte_carlo",
    "pitch_loop",
    "simulate",
    "step_response",
]
