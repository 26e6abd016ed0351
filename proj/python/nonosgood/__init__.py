"""Numerical laboratory for divergence-free flows with prescribed
non-Osgood moduli of continuity."""

from ._core import (
    BuildingBlock,
    ConstructionError,
    DivergenceError,
    DomainError,
    Modulus,
    ModulusPair,
    ParamTable,
    ResolutionError,
    TrajField,
    build_auxiliary,
    cantor_center,
    default_pair,
    dyadic_center,
    locate_symbols,
    target_map,
)

__all__ = [
    "BuildingBlock",
    "ConstructionError",
    "DivergenceError",
    "DomainError",
    "Modulus",
    "ModulusPair",
    "ParamTable",
    "ResolutionError",
    "TrajField",
    "build_auxiliary",
    "cantor_center",
    "default_pair",
    "dyadic_center",
    "locate_symbols",
    "target_map",
]
