"""Tollmien-Schlichting growing modes of the MHD system over the Hartmann layer.

Library layout mirrors the construction: shared numerics, Airy evaluation,
background profile, slow (inviscid) and fast (viscous) approximate modes, the
magnetic solver coupling them, dispersion-relation certification, and the
discrete resolvent machinery that upgrades the approximate eigenvalue to an
exact one.
"""

from .params import ModeFunction, SpectralParams
from .profile import HartmannProfile, StructureConstants, check_structure

__all__ = [
    "SpectralParams",
    "ModeFunction",
    "HartmannProfile",
    "StructureConstants",
    "check_structure",
]

__version__ = "0.1.0"
