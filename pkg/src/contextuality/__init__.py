"""Exact contextuality deciders for finite, possibly disturbing behaviors."""
from .model import (
    Behavior,
    Composite,
    Context,
    Distribution,
    Isomorphism,
    ModelError,
    Observable,
    Scenario,
    SearchBudgetExceeded,
    find_isomorphism,
    is_consistently_connected,
    is_deterministic,
    is_nondisturbing,
    marginal,
    validate,
)

__all__ = [
    "Behavior",
    "Composite",
    "Context",
    "Distribution",
    "Isomorphism",
    "ModelError",
    "Observable",
    "Scenario",
    "SearchBudgetExceeded",
    "find_isomorphism",
    "is_consistently_connected",
    "is_deterministic",
    "is_nondisturbing",
    "marginal",
    "validate",
]
