"""Central numerical settings."""

from __future__ import annotations

import os
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Tolerances:
    similitude: float = 1e-12
    decompose: float = 1e-9
    newton_max_iter: int = 50
    newton_damping: float = 0.5
    algebra_membership: float = 1e-10
    table: float = 1e-14


@dataclass(frozen=True)
class LadderConfig:
    """Jet budget for the raising ladder; ``order=None`` picks the minimum needed."""

    order: int | None = None
    max_order: int = 32
    guard: float = 0.05


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    min_level: int = 4
    max_level: int = 9


@dataclass(frozen=True)
class SplitConfig:
    phi1: float = 0.7853981633974483
    phi2: float = 0.39269908169872414
    log_domain_above: float = 50.0
    betas: tuple[float, ...] = (1.0, 5.0, 10.0, 20.0)
    t_max: float = 1e3
    n_ray: int = 31


@dataclass(frozen=True)
class Settings:
    tol: Tolerances = field(default_factory=Tolerances)
    ladder: LadderConfig = field(default_factory=LadderConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    split: SplitConfig = field(default_factory=SplitConfig)


DEFAULT = Settings()


def thread_count() -> int:
    """Worker cap from ``GSP4_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GSP4_THREADS", "1")))
    except ValueError:
        return 1
