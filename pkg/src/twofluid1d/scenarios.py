"""Registered initial-data presets.

Every generator produces data satisfying the positivity and no-slip
requirements for any grid with at least 2 cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .solver import Grid, InitialData

__all__ = ["ScenarioPreset", "SCENARIOS", "make_initial_data"]


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    generator: Callable[[Grid], InitialData]
    description: str


def _uniform(grid: Grid) -> InitialData:
    n = grid.n_cells
    return InitialData(R0=np.ones(n), Q0=np.ones(n), u0=np.zeros(n + 1))


def _pinned_sine(y: np.ndarray, amplitude: float, k: float = 1.0) -> np.ndarray:
    u = amplitude * np.sin(k * np.pi * y)
    u[0] = 0.0
    u[-1] = 0.0
    return u


def _smooth_bump(grid: Grid) -> InitialData:
    y_c = grid.cell_centers()
    R0 = 1.0 + 0.3 * np.sin(2.0 * np.pi * y_c)
    # the modulated cosine dips to -1 at y = 1/2, so Q0 stays >= 0.7
    Q0 = 1.0 + 0.3 * np.cos(2.0 * np.pi * y_c) * np.sin(np.pi * y_c)
    return InitialData(R0=R0, Q0=Q0, u0=_pinned_sine(grid.nodes(), 0.1))


def _two_zone(grid: Grid) -> InitialData:
    y_c = grid.cell_centers()
    R0 = np.where(y_c < 0.5, 1.0, 2.0)
    Q0 = np.where(y_c < 0.5, 2.0, 1.0)
    return InitialData(R0=R0, Q0=Q0, u0=np.zeros(grid.n_cells + 1))


def _near_vacuum_fraction(grid: Grid) -> InitialData:
    n = grid.n_cells
    return InitialData(
        R0=np.ones(n),
        Q0=np.full(n, 0.05),
        u0=_pinned_sine(grid.nodes(), 0.1),
    )


SCENARIOS: dict[str, ScenarioPreset] = {
    p.name: p
    for p in (
        ScenarioPreset(
            "uniform",
            _uniform,
            "constant unit partial densities at rest (an exact steady state)",
        ),
        ScenarioPreset(
            "smooth-bump",
            _smooth_bump,
            "smooth density modulation with a velocity bump; the reference decay scenario",
        ),
        ScenarioPreset(
            "two-zone",
            _two_zone,
            "piecewise-constant densities with a jump at y = 1/2, at rest",
        ),
        ScenarioPreset(
            "near-vacuum-fraction",
            _near_vacuum_fraction,
            "small but positive minority-phase density, probing the lower density bounds",
        ),
    )
}


def make_initial_data(scenario: str, grid: Grid) -> InitialData:
    return SCENARIOS[scenario].generator(grid)
