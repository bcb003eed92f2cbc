"""Time integration of the two-fluid system in Lagrangian mass coordinates.

Unknowns live on a staggered uniform grid over the mass coordinate
y in [0, 1]: specific volume tau (and the algebraic fields R, Q, Z, p) on
cell centers, velocity u on nodes, with u pinned to zero at both ends by
the no-slip condition.  One step of the first-order splitting:

  1. tau update from the discrete velocity divergence (explicit),
  2. per-cell closure re-solve, giving Z and the pressure at the new level,
  3. velocity update with implicit viscosity and the new-level pressure
     gradient, one symmetric positive-definite tridiagonal solve.

The partial densities are never evolved: R = R0*tau0/tau and
Q = Q0*tau0/tau are algebraic identities of the mass-coordinate form, so
discrete mass conservation is exact (the tau update telescopes).  The
implicit viscous solve removes the O(dy**2) parabolic time-step
restriction; the explicit acoustic part is held stable by a CFL bound on
the local sound speed sqrt(-dp/dtau).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solveh_banded

from . import closure as _closure
from .closure import ClosureTolerances, DomainError, GammaLaw

__all__ = [
    "PositivityLoss",
    "DimensionMismatch",
    "Grid",
    "InitialData",
    "SchemeConfig",
    "LagrangianState",
    "EulerianView",
    "init_state",
    "compute_dt",
    "step",
    "run",
    "eulerian_to_lagrangian",
    "lagrangian_to_eulerian",
]


class PositivityLoss(Exception):
    """A cell's specific volume went non-positive (time-step contract violated)."""


class DimensionMismatch(Exception):
    """Array lengths inconsistent with the grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform staggered grid over the mass coordinate y in [0, 1]."""

    n_cells: int
    dy: float = field(init=False)

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells")
        object.__setattr__(self, "dy", 1.0 / self.n_cells)

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dy

    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dy


@dataclass(frozen=True)
class InitialData:
    """Initial partial densities on cells and velocity on nodes.

    tau0 = 1/(R0+Q0) is cached on construction.  mass_scale records the
    total-mass normalization applied by ``eulerian_to_lagrangian`` (1.0 for
    data built directly in mass coordinates).
    """

    R0: np.ndarray
    Q0: np.ndarray
    u0: np.ndarray
    mass_scale: float = 1.0
    tau0: np.ndarray = field(init=False)

    def __post_init__(self):
        R0 = np.asarray(self.R0, dtype=float)
        Q0 = np.asarray(self.Q0, dtype=float)
        u0 = np.asarray(self.u0, dtype=float)
        if R0.ndim != 1 or R0.shape != Q0.shape:
            raise DimensionMismatch("R0 and Q0 must be 1-d arrays of equal length")
        if u0.shape != (R0.size + 1,):
            raise DimensionMismatch(
                f"u0 must have {R0.size + 1} node values, got {u0.size}"
            )
        if not (np.all(R0 > 0.0) and np.all(Q0 > 0.0)):
            raise ValueError("initial partial densities must be strictly positive")
        if u0[0] != 0.0 or u0[-1] != 0.0:
            raise ValueError("no-slip: initial velocity must vanish at both ends")
        object.__setattr__(self, "R0", R0)
        object.__setattr__(self, "Q0", Q0)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "tau0", 1.0 / (R0 + Q0))


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme parameters: pressure law, viscosity, and step-control factors."""

    law: GammaLaw
    mu: float = 1.0
    cfl: float = 0.4
    positivity_factor: float = 0.5
    tol: ClosureTolerances = ClosureTolerances()
    max_dt: float | None = None

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("viscosity mu must be positive")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if not 0.0 < self.positivity_factor < 1.0:
            raise ValueError("positivity_factor must lie in (0, 1)")
        if self.max_dt is not None and self.max_dt <= 0.0:
            raise ValueError("max_dt must be positive when given")


@dataclass(frozen=True)
class LagrangianState:
    """Discrete state at one time level.

    tau on cells, u on nodes; R, Q, Z, p are algebraic caches consistent
    with tau.  R0tau0 and Q0tau0 are the per-cell constants of the motion
    that define the algebraic fields.  Treat instances as immutable values;
    ``step`` returns a fresh state.
    """

    t: float
    tau: np.ndarray
    u: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    Z: np.ndarray
    p: np.ndarray
    R0tau0: np.ndarray
    Q0tau0: np.ndarray
    step_count: int = 0


@dataclass(frozen=True)
class EulerianView:
    """Physical-space picture of a Lagrangian state (for output/plotting)."""

    x_nodes: np.ndarray
    x_centers: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    p: np.ndarray


def init_state(data: InitialData, grid: Grid, cfg: SchemeConfig) -> LagrangianState:
    """Build the t=0 state, populating the algebraic fields by closure solves."""
    if data.R0.size != grid.n_cells:
        raise DimensionMismatch(
            f"data has {data.R0.size} cells, grid has {grid.n_cells}"
        )
    R0tau0 = data.R0 * data.tau0
    Q0tau0 = data.Q0 * data.tau0
    Z, _, _ = _closure._solve_closure_arrays(data.R0, data.Q0, cfg.law, cfg.tol)
    return LagrangianState(
        t=0.0,
        tau=data.tau0.copy(),
        u=data.u0.copy(),
        R=data.R0.copy(),
        Q=data.Q0.copy(),
        Z=Z,
        p=Z**cfg.law.gamma_plus,
        R0tau0=R0tau0,
        Q0tau0=Q0tau0,
    )


def compute_dt(state: LagrangianState, grid: Grid, cfg: SchemeConfig) -> float:
    """Stable step: acoustic CFL and a positivity guard on the tau update.

    Per cell the acoustic bound is cfl*dy/sqrt(-dp/dtau), the positivity
    bound limits the fractional change of tau to cfg.positivity_factor.
    """
    dpdtau = _closure._dp_dtau_arrays(
        state.R0tau0, state.Q0tau0, state.tau, state.Z, cfg.law
    )
    sound_sq = np.maximum(-dpdtau, 1e-30)
    dt_acoustic = cfg.cfl * grid.dy / np.sqrt(sound_sq)
    du = np.abs(np.diff(state.u))
    with np.errstate(divide="ignore"):
        dt_positivity = np.where(
            du > 0.0,
            cfg.positivity_factor * state.tau * grid.dy / np.where(du > 0.0, du, 1.0),
            np.inf,
        )
    dt = float(min(dt_acoustic.min(), dt_positivity.min()))
    if cfg.max_dt is not None:
        dt = min(dt, cfg.max_dt)
    assert dt > 0.0
    return dt


def step(state: LagrangianState, grid: Grid, cfg: SchemeConfig, dt: float) -> LagrangianState:
    """Advance one time step of size dt (caller enforces dt <= compute_dt)."""
    dy = grid.dy
    mu = cfg.mu
    gamma_plus = cfg.law.gamma_plus

    tau_new = state.tau + (dt / dy) * np.diff(state.u)
    if not np.all(tau_new > 0.0):
        raise PositivityLoss(
            f"specific volume lost positivity at t={state.t} with dt={dt}"
        )
    R_new = state.R0tau0 / tau_new
    Q_new = state.Q0tau0 / tau_new
    Z_new, _, _ = _closure._solve_closure_arrays(
        R_new, Q_new, cfg.law, cfg.tol, x0=state.Z
    )
    p_new = Z_new**gamma_plus

    # implicit viscosity, explicit (new-level) pressure gradient; interior
    # nodes j=1..n-1 couple through the cells between them
    n = grid.n_cells
    w = (dt * mu / dy**2) / tau_new
    diag = 1.0 + w[1:] + w[:-1]
    upper = -w[1:-1]
    # diagonally dominant with positive diagonal by construction: the row
    # sums exceed the off-diagonal magnitudes by exactly 1
    assert np.all(diag > 0.0)
    rhs = state.u[1:-1] - (dt / dy) * (p_new[1:] - p_new[:-1])
    ab = np.zeros((2, n - 1))
    ab[0, 1:] = upper
    ab[1, :] = diag
    u_new = np.zeros(n + 1)
    u_new[1:-1] = solveh_banded(ab, rhs, lower=False)

    return LagrangianState(
        t=state.t + dt,
        tau=tau_new,
        u=u_new,
        R=R_new,
        Q=Q_new,
        Z=Z_new,
        p=p_new,
        R0tau0=state.R0tau0,
        Q0tau0=state.Q0tau0,
        step_count=state.step_count + 1,
    )


def run(
    state: LagrangianState,
    grid: Grid,
    cfg: SchemeConfig,
    t_end: float,
    observer: Callable[[LagrangianState], None] | None = None,
    observe_dt: float | None = None,
) -> LagrangianState:
    """Integrate to t_end, firing the observer at a fixed cadence.

    The step size is clipped so the trajectory lands exactly on every
    observation instant and on t_end; observation times are generated as
    t0 + k*observe_dt (no accumulation drift).  The observer always fires
    at the initial time and at t_end.
    """
    if observe_dt is not None and observe_dt <= 0.0:
        raise ValueError("observe_dt must be positive")
    if t_end < state.t:
        raise ValueError(f"t_end={t_end} lies before the state time {state.t}")
    t0 = state.t
    tiny = 1e-12 * max(1.0, abs(t_end))
    if observer is not None:
        observer(state)
    if t_end <= t0 + tiny:
        return state

    n_obs = 1  # next observation index (t0 itself was index 0)
    while state.t < t_end - tiny:
        target = t_end
        if observe_dt is not None:
            t_obs = t0 + n_obs * observe_dt
            while t_obs <= state.t + tiny:
                n_obs += 1
                t_obs = t0 + n_obs * observe_dt
            target = min(t_end, t_obs)
        dt = compute_dt(state, grid, cfg)
        if state.t + dt >= target - tiny:
            dt = target - state.t
            state = step(state, grid, cfg, dt)
            state = replace(state, t=target)  # kill accumulation round-off
            if observer is not None:
                observer(state)
            if observe_dt is not None and target != t_end:
                n_obs += 1
        else:
            state = step(state, grid, cfg, dt)
    return state


def eulerian_to_lagrangian(
    R: np.ndarray, Q: np.ndarray, u: np.ndarray, grid: Grid
) -> InitialData:
    """Resample physical-space fields onto the uniform mass-coordinate grid.

    Inputs are samples at uniform cell centers of [0, 1] in physical space
    (all three arrays the same length).  The cumulative mass
    y(x) = integral of (R+Q) is built with the midpoint rule (exact for
    cellwise-constant densities), the densities are rescaled by the total
    mass so y spans exactly [0, 1], and the fields are evaluated at the
    images of the uniform mass-cell centers/nodes by monotone linear
    interpolation.  The normalization factor is recorded in
    ``InitialData.mass_scale``.
    """
    R = np.asarray(R, dtype=float)
    Q = np.asarray(Q, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (R.shape == Q.shape == u.shape) or R.ndim != 1:
        raise DimensionMismatch("R, Q, u must be 1-d arrays of equal length")
    if not (np.all(R > 0.0) and np.all(Q > 0.0)):
        raise DomainError("physical densities must be strictly positive")
    m = R.size
    dx = 1.0 / m
    x_nodes = np.arange(m + 1) * dx
    x_centers = (np.arange(m) + 0.5) * dx
    y_nodes = np.concatenate([[0.0], np.cumsum((R + Q) * dx)])
    total_mass = y_nodes[-1]
    y_hat = y_nodes / total_mass

    n = grid.n_cells
    out_centers = (np.arange(n) + 0.5) / n
    out_nodes = np.arange(n + 1) / n
    x_at_centers = np.interp(out_centers, y_hat, x_nodes)
    x_at_nodes = np.interp(out_nodes, y_hat, x_nodes)
    R_out = np.interp(x_at_centers, x_centers, R) / total_mass
    Q_out = np.interp(x_at_centers, x_centers, Q) / total_mass
    u_out = np.interp(x_at_nodes, x_centers, u)
    u_out[0] = 0.0
    u_out[-1] = 0.0
    return InitialData(R0=R_out, Q0=Q_out, u0=u_out, mass_scale=total_mass)


def lagrangian_to_eulerian(state: LagrangianState, grid: Grid) -> EulerianView:
    """Physical node positions by cumulative volume, plus the cell fields."""
    x_nodes = np.concatenate([[0.0], np.cumsum(state.tau * grid.dy)])
    x_centers = 0.5 * (x_nodes[:-1] + x_nodes[1:])
    return EulerianView(
        x_nodes=x_nodes,
        x_centers=x_centers,
        tau=state.tau,
        u=state.u,
        R=state.R,
        Q=state.Q,
        p=state.p,
    )
