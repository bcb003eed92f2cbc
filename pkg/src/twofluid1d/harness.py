"""Experiment orchestration: single runs with CSV/JSON output, grid
convergence sweeps, stability (Lipschitz) experiments, and the single-fluid
reduction check against an independently coded barotropic solver.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solveh_banded

from .closure import GammaLaw
from .config import RunConfig
from .diagnostics import (
    CSV_COLUMNS,
    DecayFit,
    DiagnosticsRecord,
    InsufficientData,
    StabilityReport,
    density_bounds,
    fit_decay,
    record_state,
    record_to_row,
    stability_ratio,
)
from .equilibrium import SteadyState, solve_equilibrium
from .scenarios import SCENARIOS, make_initial_data
from .solver import (
    Grid,
    InitialData,
    LagrangianState,
    SchemeConfig,
    compute_dt,
    init_state,
    run,
    step,
)

__all__ = [
    "ConfigError",
    "LevelMismatch",
    "ConvergenceResult",
    "ReductionResult",
    "build_problem",
    "run_simulation",
    "run_convergence",
    "run_stability",
    "run_reduction_check",
    "steady_info",
    "DECAY_FLOOR",
]

DECAY_FLOOR = 1e-10
_REFINE_FACTOR = 8  # grid refinement for the continuum-targeted steady state


class ConfigError(Exception):
    """Experiment preconditions violated (e.g. unequal exponents for the
    reduction check)."""


class LevelMismatch(Exception):
    """Convergence levels are not nested."""


@dataclass(frozen=True)
class ConvergenceResult:
    """Errors against the finest level (the last entry) and observed orders."""

    levels: tuple[int, ...]
    errors_tau: tuple[float, ...]
    orders: tuple[float, ...]
    rates: tuple[float | None, ...]
    r_squared: tuple[float | None, ...]


@dataclass(frozen=True)
class ReductionResult:
    """Worst per-step discrepancy between the two-fluid run and the
    barotropic oracle."""

    max_discrepancy: float
    n_steps: int


def build_problem(
    cfg: RunConfig, n_cells: int | None = None
) -> tuple[Grid, InitialData, SchemeConfig]:
    grid = Grid(n_cells if n_cells is not None else cfg.n_cells)
    data = make_initial_data(cfg.scenario, grid)
    law = GammaLaw(cfg.gamma_plus, cfg.gamma_minus)
    scheme = SchemeConfig(law=law, mu=cfg.mu, cfl=cfg.cfl)
    return grid, data, scheme


def _decay_series(records: list[DiagnosticsRecord]) -> tuple[np.ndarray, np.ndarray]:
    times = np.array([r.t for r in records])
    values = np.array([r.dist_u + r.dist_tau for r in records])
    return times, values


def _fit_window(times: np.ndarray, values: np.ndarray) -> tuple[float, float] | None:
    """Central window of the span where the decay signal is above noise."""
    above = values >= 100.0 * DECAY_FLOOR
    if int(np.sum(above)) < 4:
        return None
    t_sig = float(times[above][-1])
    if t_sig <= times[0]:
        return None
    return (0.25 * t_sig, 0.75 * t_sig)


def _try_decay_fit(records: list[DiagnosticsRecord]) -> DecayFit | None:
    times, values = _decay_series(records)
    window = _fit_window(times, values)
    if window is None:
        return None
    try:
        return fit_decay(times, values, window, floor=DECAY_FLOOR)
    except InsufficientData:
        return None


def _refined_steady(cfg: RunConfig) -> SteadyState:
    grid_fine = Grid(cfg.n_cells * _REFINE_FACTOR)
    data_fine = make_initial_data(cfg.scenario, grid_fine)
    law = GammaLaw(cfg.gamma_plus, cfg.gamma_minus)
    return solve_equilibrium(data_fine.R0, data_fine.Q0, data_fine.tau0, law)


def run_simulation(cfg: RunConfig, out_dir: str | None = None) -> dict:
    """One full run: equilibrium solve, time integration with a diagnostics
    observer, CSV time series, final-state CSV, and a JSON summary.

    Writes <out>/timeseries.csv, <out>/summary.json, <out>/state_final.csv.
    The output directory must already exist.  Returns the summary dict.
    """
    out = Path(out_dir if out_dir is not None else cfg.out)
    grid, data, scheme = build_problem(cfg)
    law = scheme.law
    steady = solve_equilibrium(data.R0, data.Q0, data.tau0, law)
    steady_fine = _refined_steady(cfg)
    state = init_state(data, grid, scheme)

    records: list[DiagnosticsRecord] = []
    final = run(
        state,
        grid,
        scheme,
        cfg.t_end,
        observer=lambda s: records.append(record_state(s, data, steady, grid, law)),
        observe_dt=cfg.cadence,
    )

    _write_timeseries(out / "timeseries.csv", records)
    _write_state_final(out / "state_final.csv", final, grid)

    fit = _try_decay_fit(records)
    bounds = density_bounds(records)
    first, last = records[0], records[-1]
    energy_increases = [
        records[k + 1].energy - records[k].energy for k in range(len(records) - 1)
    ]
    summary = {
        "config": {
            "scenario": cfg.scenario,
            "n_cells": cfg.n_cells,
            "t_end": cfg.t_end,
            "cfl": cfg.cfl,
            "mu": cfg.mu,
            "gamma_plus": cfg.gamma_plus,
            "gamma_minus": cfg.gamma_minus,
            "cadence": cfg.cadence,
            "seed": cfg.seed,
        },
        "steps": final.step_count,
        "mass_initial": first.mass,
        "mass_final": last.mass,
        "mass_drift_rel": abs(last.mass - first.mass) / first.mass,
        "energy_initial": first.energy,
        "energy_final": last.energy,
        "max_recorded_energy_increase_rel": (
            max(energy_increases) / first.energy if energy_increases else 0.0
        ),
        "steady": {
            "z_inf": steady.Z_inf,
            "c_star": steady.C_star,
            "mass_residual": steady.mass_residual,
            "z_inf_refined": steady_fine.Z_inf,
            "c_star_refined": steady_fine.C_star,
        },
        "final": {
            "t": last.t,
            "dist_tau": last.dist_tau,
            "dist_u": last.dist_u,
            "dist_R": last.dist_R,
            "dist_Q": last.dist_Q,
        },
        "density_bounds": {
            "min_R": bounds.min_R,
            "max_R": bounds.max_R,
            "min_Q": bounds.min_Q,
            "max_Q": bounds.max_Q,
            "min_Z": bounds.min_Z,
            "max_Z": bounds.max_Z,
            "min_tau": bounds.min_tau,
            "max_tau": bounds.max_tau,
            "all_positive": bounds.all_positive,
        },
        "decay": None
        if fit is None
        else {
            "rate": fit.rate,
            "log_intercept": fit.log_intercept,
            "r_squared": fit.r_squared,
            "window": list(fit.window),
            "n_points": fit.n_points,
        },
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _write_timeseries(path: Path, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(record_to_row(rec))


def _write_state_final(path: Path, state: LagrangianState, grid: Grid) -> None:
    # velocity reported at cell centers (average of the flanking nodes)
    u_cells = 0.5 * (state.u[:-1] + state.u[1:])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "tau", "u", "R", "Q", "Z", "p"])
        for i, y in enumerate(grid.cell_centers()):
            writer.writerow(
                [
                    repr(float(y)),
                    repr(float(state.tau[i])),
                    repr(float(u_cells[i])),
                    repr(float(state.R[i])),
                    repr(float(state.Q[i])),
                    repr(float(state.Z[i])),
                    repr(float(state.p[i])),
                ]
            )


def run_convergence(cfg: RunConfig, levels: list[int]) -> ConvergenceResult:
    """Run nested resolutions to the same t_end; errors of each level's final
    tau against the finest level by cell-average restriction, observed orders
    between successive pairs, and the decay-rate fit per level.
    """
    if len(levels) < 3:
        raise LevelMismatch("need at least 3 levels")
    for a, b in zip(levels, levels[1:]):
        if b <= a or b % a != 0:
            raise LevelMismatch(f"levels must be nested, got {a} then {b}")

    finals: list[LagrangianState] = []
    rates: list[float | None] = []
    r_sqs: list[float | None] = []
    for n in levels:
        grid, data, scheme = build_problem(cfg, n_cells=n)
        steady = solve_equilibrium(data.R0, data.Q0, data.tau0, scheme.law)
        records: list[DiagnosticsRecord] = []
        final = run(
            init_state(data, grid, scheme),
            grid,
            scheme,
            cfg.t_end,
            observer=lambda s, d=data, st=steady, g=grid, lw=scheme.law: records.append(
                record_state(s, d, st, g, lw)
            ),
            observe_dt=cfg.cadence,
        )
        finals.append(final)
        fit = _try_decay_fit(records)
        rates.append(None if fit is None else fit.rate)
        r_sqs.append(None if fit is None else fit.r_squared)

    n_ref = levels[-1]
    tau_ref = finals[-1].tau
    errors = []
    for n, final in zip(levels[:-1], finals[:-1]):
        restricted = tau_ref.reshape(n, n_ref // n).mean(axis=1)
        diff = final.tau - restricted
        errors.append(math.sqrt(float(np.sum(diff * diff)) / n))
    orders = []
    for (n1, e1), (n2, e2) in zip(zip(levels, errors), zip(levels[1:], errors[1:])):
        if e1 == 0.0 or e2 == 0.0:
            orders.append(float("nan"))
        else:
            orders.append(math.log(e1 / e2) / math.log(n2 / n1))
    return ConvergenceResult(
        levels=tuple(levels),
        errors_tau=tuple(errors),
        orders=tuple(orders),
        rates=tuple(rates),
        r_squared=tuple(r_sqs),
    )


def _perturbed_data(base: InitialData, grid: Grid, delta: float) -> InitialData:
    # deterministic smooth perturbations: even bump on the densities, odd
    # bump on the velocity, all with unit sup norm
    y_c = grid.cell_centers()
    y_n = grid.nodes()
    bump_c = np.sin(np.pi * y_c) ** 2
    bump_n = np.sin(2.0 * np.pi * y_n)
    bump_n[0] = 0.0
    bump_n[-1] = 0.0
    return InitialData(
        R0=base.R0 + delta * bump_c,
        Q0=base.Q0 + delta * bump_c,
        u0=base.u0 + delta * bump_n,
    )


def run_stability(cfg: RunConfig, deltas: list[float]) -> list[StabilityReport]:
    """Empirical Lipschitz experiment: perturb the initial data by each delta
    and compare the trajectories against the unperturbed base run."""
    if any(d < 0.0 for d in deltas):
        raise ConfigError("perturbation sizes must be nonnegative")
    grid, base, scheme = build_problem(cfg)

    def collect(data: InitialData) -> list[LagrangianState]:
        states: list[LagrangianState] = []
        run(
            init_state(data, grid, scheme),
            grid,
            scheme,
            cfg.t_end,
            observer=states.append,
            observe_dt=cfg.cadence,
        )
        return states

    base_states = collect(base)
    reports = []
    for delta in deltas:
        pert = _perturbed_data(base, grid, delta)
        pert_states = collect(pert)
        reports.append(stability_ratio(base_states, pert_states, base, pert, grid))
    return reports


def _barotropic_step(
    tau: np.ndarray,
    u: np.ndarray,
    rho0tau0: np.ndarray,
    gamma: float,
    mu: float,
    dy: float,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One step of a single-fluid viscous barotropic solver with
    p = (rho0tau0/tau)**gamma, same staggered discretization, coded
    independently of the two-fluid path."""
    tau_new = tau + (dt / dy) * np.diff(u)
    p = (rho0tau0 / tau_new) ** gamma
    w = (dt * mu / dy**2) / tau_new
    ab = np.zeros((2, tau.size - 1))
    ab[0, 1:] = -w[1:-1]
    ab[1, :] = 1.0 + w[1:] + w[:-1]
    rhs = u[1:-1] - (dt / dy) * (p[1:] - p[:-1])
    u_new = np.zeros_like(u)
    u_new[1:-1] = solveh_banded(ab, rhs, lower=False)
    return tau_new, u_new


def run_reduction_check(cfg: RunConfig, n_steps: int = 1000) -> ReductionResult:
    """With equal adiabatic exponents the closure degenerates to Z = R + Q;
    the two-fluid solver must then track a barotropic solver exactly up to
    the closure tolerance.  Both solvers take the two-fluid step sizes."""
    if cfg.gamma_plus != cfg.gamma_minus:
        raise ConfigError(
            f"reduction check needs equal exponents, got "
            f"{cfg.gamma_plus} and {cfg.gamma_minus}"
        )
    grid, data, scheme = build_problem(cfg)
    state = init_state(data, grid, scheme)
    tau_b = data.tau0.copy()
    u_b = data.u0.copy()
    rho0tau0 = (data.R0 + data.Q0) * data.tau0
    worst = 0.0
    for _ in range(n_steps):
        dt = compute_dt(state, grid, scheme)
        state = step(state, grid, scheme, dt)
        tau_b, u_b = _barotropic_step(
            tau_b, u_b, rho0tau0, cfg.gamma_plus, cfg.mu, grid.dy, dt
        )
        worst = max(
            worst,
            float(np.max(np.abs(state.tau - tau_b)))
            + float(np.max(np.abs(state.u - u_b))),
        )
    return ReductionResult(max_discrepancy=worst, n_steps=n_steps)


def steady_info(cfg: RunConfig) -> dict:
    """Equilibrium summary for the `steady` subcommand."""
    grid, data, scheme = build_problem(cfg)
    steady = solve_equilibrium(data.R0, data.Q0, data.tau0, scheme.law)
    fine = _refined_steady(cfg)
    return {
        "scenario": cfg.scenario,
        "n_cells": cfg.n_cells,
        "z_inf": steady.Z_inf,
        "c_star": steady.C_star,
        "mass_residual": steady.mass_residual,
        "z_inf_refined": fine.Z_inf,
        "c_star_refined": fine.C_star,
        "tau_inf_min": float(np.min(steady.tau_inf)),
        "tau_inf_max": float(np.max(steady.tau_inf)),
    }
