"""Contextuality analysis for empirical models and qubit states."""

__version__ = "0.1.0"

from .entropy import contextual_shannon, minimizing_context, reconstruct, von_neumann
from .hierarchy import (
    classify,
    decide_possibilistic_extendability,
    decide_probabilistic_extendability,
    decide_strong_contextuality,
)
from .model import ContextualityClass, EmpiricalModel, MeasurementScenario
from .quantum import QuantumState, empirical_model
from .witness import hardy_witness

__all__ = [
    "ContextualityClass",
    "EmpiricalModel",
    "MeasurementScenario",
    "QuantumState",
    "classify",
    "contextual_shannon",
    "decide_possibilistic_extendability",
    "decide_probabilistic_extendability",
    "decide_strong_contextuality",
    "empirical_model",
    "hardy_witness",
    "minimizing_context",
    "reconstruct",
    "von_neumann",
]
