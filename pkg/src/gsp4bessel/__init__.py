"""Explicit archimedean Bessel models on GSp(4, R): operators, closed forms, ladder and zeta integral."""

from . import bessel_nonsplit, bessel_split, cli, group_core, jets, lie_algebra, zeta_integral
from .config import DEFAULT, Settings

__all__ = [
    "DEFAULT",
    "Settings",
    "bessel_nonsplit",
    "bessel_split",
    "cli",
    "group_core",
    "jets",
    "lie_algebra",
    "zeta_integral",
]
__version__ = "0.1.0"
