"""Integral Apollonian curvature orbits: enumeration, congruence densities, prime counts."""

from .descartes import (
    PRESETS,
    CompanionPair,
    CurvatureOverflowError,
    DescartesForm,
    GeneratorSet,
    ReductionError,
    RootQuintuple,
    apply_generator,
    companion_pair,
    eval_form,
    reduce_to_root,
    signature,
)
from .enumerate import (
    EnumerationConfig,
    MemoryCapExceeded,
    OrbitCensus,
    count_vectors,
    enumerate_orbit,
    fit_exponent,
    validate_connectivity,
)

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "CompanionPair",
    "CurvatureOverflowError",
    "DescartesForm",
    "EnumerationConfig",
    "GeneratorSet",
    "MemoryCapExceeded",
    "OrbitCensus",
    "ReductionError",
    "RootQuintuple",
    "apply_generator",
    "companion_pair",
    "count_vectors",
    "enumerate_orbit",
    "eval_form",
    "fit_exponent",
    "reduce_to_root",
    "signature",
    "validate_connectivity",
]
