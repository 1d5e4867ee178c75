"""Pointwise φ-curvature engine for harmonic-Ricci solitons.

Everything is evaluated from truncated Taylor jets at probe points of a chart:
metric and map expressions are parsed once, expanded to a fixed jet order and
pushed through Christoffel symbols, curvature and their covariant derivatives.
"""

from .expr import FieldEnv, parse
from .geometry import GeometryData, PotentialData, TensorValue
from .maps import MapData
from .phicurv import PhiCurvatures
from .solitons import EngineConfig, SolitonData

__all__ = [
    "EngineConfig",
    "FieldEnv",
    "GeometryData",
    "MapData",
    "PhiCurvatures",
    "PotentialData",
    "SolitonData",
    "TensorValue",
    "parse",
]
