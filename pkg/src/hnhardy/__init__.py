"""Desk-scale Orlicz-Hardy analysis on the Heisenberg group."""

from .group import (
    GroupConfig,
    KoranyiBall,
    ball_volume,
    dilate,
    group_distance,
    hpoint,
    identity,
    inverse,
    koranyi_norm,
    multiply,
    unit_ball_volume,
)
from .grid import Box, GridFunction
from .orlicz import OrliczSpec, builtin_phi, luxemburg_norm, modular

__all__ = [
    "Box",
    "GridFunction",
    "GroupConfig",
    "KoranyiBall",
    "OrliczSpec",
    "ball_volume",
    "builtin_phi",
    "dilate",
    "group_distance",
    "hpoint",
    "identity",
    "inverse",
    "koranyi_norm",
    "luxemburg_norm",
    "modular",
    "multiply",
    "unit_ball_volume",
]
