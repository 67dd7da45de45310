"""Nested Uhrig dynamical decoupling: schedules, coefficient and walk checks, simulation."""
from importlib import resources

from .algebra import GeneratorLabel, pauli_multiply, pauli_of, xor_add
from .coeffs import (CoefficientQuery, build_matrices, coefficient_via_matrices,
                     coefficient_via_oracle, verify_vanishing)
from .sequence import IntervalGrid, build_schedule, nudd_fraction, udd_fraction
from .sim import evolve, random_bath, scaling_fit
from .walk import build_chi, exploration_map, verify_walk_zero

__version__ = '0.1.0'


def schema(name: str) -> dict:
    """Load a shipped report schema: ``schedule``, ``verify``, ``walk_map`` or ``simulate``."""
    import json
    return json.loads(resources.files(__name__).joinpath(f'schemas/{name}.schema.json').read_text())
