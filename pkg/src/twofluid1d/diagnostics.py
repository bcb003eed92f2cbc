"""Functionals monitored along a run: mass, energy, Lyapunov values, density
extrema, distances to equilibrium, decay-rate fits, a representation-formula
residual, and stability ratios between perturbed runs.

Discrete conventions.  Cell quantities integrate with the midpoint rule
(sum times dy); node quantities transfer to cells as the arithmetic average
of the two adjacent node values *of the integrand* (so kinetic energy uses
the average of squares and stays nonnegative).  These conventions make the
discrete Cauchy-Schwarz chains behind the Lyapunov cross-term bound hold
exactly, not just asymptotically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import closure as _closure
from .closure import GammaLaw
from .equilibrium import SteadyState
from .solver import Grid, InitialData, LagrangianState, SchemeConfig

__all__ = [
    "EnergyFormMismatch",
    "InsufficientData",
    "InsufficientSampling",
    "ConfigMismatch",
    "DiagnosticsRecord",
    "DecayFit",
    "StabilityReport",
    "DensityBounds",
    "CSV_COLUMNS",
    "record_to_row",
    "l2_cells",
    "l2_nodes",
    "total_mass",
    "energy",
    "lyapunov_G",
    "lyapunov_full",
    "record_state",
    "density_bounds",
    "fit_decay",
    "representation_residual",
    "stability_ratio",
]


class EnergyFormMismatch(Exception):
    """The two algebraically equivalent potential-energy forms disagree,
    which signals a closure bug rather than a modelling choice."""


class InsufficientData(Exception):
    """Too few usable points for a decay fit."""


class InsufficientSampling(Exception):
    """Too few trajectory samples to accumulate time integrals."""


class ConfigMismatch(Exception):
    """Two runs being compared do not share grid/sampling."""


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Snapshot of every monitored functional at one instant."""

    t: float
    mass: float
    energy: float
    lyapunov_G: float
    lyapunov_full: float
    min_tau: float
    max_tau: float
    min_R: float
    max_R: float
    min_Q: float
    max_Q: float
    min_Z: float
    max_Z: float
    dist_tau: float
    dist_u: float
    dist_R: float
    dist_Q: float


CSV_COLUMNS = (
    "t",
    "mass",
    "energy",
    "lyapunov_G",
    "lyapunov_full",
    "min_tau",
    "max_tau",
    "min_R",
    "max_R",
    "min_Q",
    "max_Q",
    "min_Z",
    "max_Z",
    "dist_tau",
    "dist_u",
    "dist_R",
    "dist_Q",
)


def record_to_row(record: DiagnosticsRecord) -> list[str]:
    """One CSV row in the fixed column order, round-trip exact floats."""
    return [repr(getattr(record, name)) for name in CSV_COLUMNS]


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit log(value) ~ log_intercept - rate * t."""

    rate: float
    log_intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class StabilityReport:
    """Empirical Lipschitz data for a pair of runs from perturbed initial data."""

    input_delta: float
    output_delta: float
    ratio: float
    degenerate: bool = False


@dataclass(frozen=True)
class DensityBounds:
    """Running extrema of the densities and specific volume over a record stream."""

    min_R: float
    max_R: float
    min_Q: float
    max_Q: float
    min_Z: float
    max_Z: float
    min_tau: float
    max_tau: float
    all_positive: bool


def l2_cells(v: np.ndarray, grid: Grid) -> float:
    """L2 norm of a cell field (midpoint rule)."""
    return math.sqrt(float(np.sum(v * v)) * grid.dy)


def l2_nodes(u: np.ndarray, grid: Grid) -> float:
    """L2 norm of a node field (cellwise average of squares)."""
    sq = u * u
    return math.sqrt(0.5 * float(np.sum(sq[:-1] + sq[1:])) * grid.dy)


def total_mass(state: LagrangianState, grid: Grid) -> float:
    """Integral of the specific volume (conserved exactly by the scheme)."""
    return float(np.sum(state.tau)) * grid.dy


def energy(
    state: LagrangianState, data: InitialData, grid: Grid, law: GammaLaw
) -> float:
    """Total energy: kinetic plus the two-phase internal energy.

    The potential part is evaluated in its primal form built from the phase
    volumes (alpha*tau, (1-alpha)*tau) and cross-checked against the
    algebraically equivalent form written directly in Z; disagreement beyond
    1e-12 relative raises EnergyFormMismatch.
    """
    gp = law.gamma_plus
    gm = law.gamma_minus
    g = law.gamma
    u = state.u
    kinetic = 0.25 * float(np.sum(u[:-1] ** 2 + u[1:] ** 2)) * grid.dy

    R0tau0 = state.R0tau0
    Q0tau0 = state.Q0tau0
    alpha_tau = (state.R / state.Z) * state.tau
    beta_tau = (1.0 - state.R / state.Z) * state.tau
    pot_primal = float(
        np.sum(
            R0tau0**gp / (gp - 1.0) * alpha_tau ** (1.0 - gp)
            + Q0tau0**gm / (gm - 1.0) * beta_tau ** (1.0 - gm)
        )
    ) * grid.dy
    pot_z = float(
        np.sum(
            R0tau0 * state.Z ** (gp - 1.0) / (gp - 1.0)
            + Q0tau0 * state.Z ** (gp - g) / (gm - 1.0)
        )
    ) * grid.dy
    scale = max(abs(pot_primal), abs(pot_z), 1e-300)
    if abs(pot_primal - pot_z) > 1e-12 * scale:
        raise EnergyFormMismatch(
            f"potential-energy forms disagree: {pot_primal} vs {pot_z}"
        )
    return kinetic + pot_primal


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _relative_entropy_cells(
    state: LagrangianState,
    steady: SteadyState,
    grid: Grid,
    law: GammaLaw,
    quad_order: int = 16,
) -> np.ndarray:
    """Per-cell integral of (p(y, tau_inf) - p(y, xi)) d xi from tau_inf to tau.

    Fixed-order Gauss-Legendre on each cell's interval; every quadrature
    point costs one closure solve (done as a single vectorized batch).
    Nonnegative because the pressure is strictly decreasing in tau and
    p(y, tau_inf) = C_star.
    """
    nodes, weights = _gauss_legendre(quad_order)
    tau = state.tau
    tau_inf = steady.tau_inf
    a = np.minimum(tau, tau_inf)
    b = np.maximum(tau, tau_inf)
    halfw = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xi = mid[:, None] + halfw[:, None] * nodes[None, :]
    R_q = state.R0tau0[:, None] / xi
    Q_q = state.Q0tau0[:, None] / xi
    Z_q, _, _ = _closure._solve_closure_arrays(R_q.ravel(), Q_q.ravel(), law)
    p_q = (Z_q ** law.gamma_plus).reshape(xi.shape)
    inner = (steady.C_star - p_q) @ weights
    return np.sign(tau - tau_inf) * halfw * inner


def lyapunov_G(
    state: LagrangianState,
    steady: SteadyState,
    grid: Grid,
    law: GammaLaw,
    quad_order: int = 16,
) -> float:
    """Integral of the relative-entropy integrand G(y, tau, tau_inf) (>= 0)."""
    return float(np.sum(_relative_entropy_cells(state, steady, grid, law, quad_order))) * grid.dy


def _cross_term(state: LagrangianState, steady: SteadyState, grid: Grid) -> float:
    """Integral of u*K with K the node cumulative of (tau - tau_inf)."""
    K = np.concatenate([[0.0], np.cumsum(state.tau - steady.tau_inf)]) * grid.dy
    prod = state.u * K
    return 0.5 * float(np.sum(prod[:-1] + prod[1:])) * grid.dy


def lyapunov_full(
    state: LagrangianState,
    steady: SteadyState,
    grid: Grid,
    law: GammaLaw,
    epsilon: float = 0.01,
    quad_order: int = 16,
) -> float:
    """Full Lyapunov functional: integral of (u**2/2 + G + epsilon*u*K).

    epsilon must lie in (0, 1); small values keep the cross term dominated
    by the quadratic parts, which is what makes the functional decay.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    u = state.u
    kinetic = 0.25 * float(np.sum(u[:-1] ** 2 + u[1:] ** 2)) * grid.dy
    g_part = lyapunov_G(state, steady, grid, law, quad_order)
    return kinetic + g_part + epsilon * _cross_term(state, steady, grid)


def record_state(
    state: LagrangianState,
    data: InitialData,
    steady: SteadyState,
    grid: Grid,
    law: GammaLaw,
    epsilon: float = 0.01,
    quad_order: int = 16,
) -> DiagnosticsRecord:
    """Evaluate every monitored functional on one state."""
    return DiagnosticsRecord(
        t=state.t,
        mass=total_mass(state, grid),
        energy=energy(state, data, grid, law),
        lyapunov_G=lyapunov_G(state, steady, grid, law, quad_order),
        lyapunov_full=lyapunov_full(state, steady, grid, law, epsilon, quad_order),
        min_tau=float(np.min(state.tau)),
        max_tau=float(np.max(state.tau)),
        min_R=float(np.min(state.R)),
        max_R=float(np.max(state.R)),
        min_Q=float(np.min(state.Q)),
        max_Q=float(np.max(state.Q)),
        min_Z=float(np.min(state.Z)),
        max_Z=float(np.max(state.Z)),
        dist_tau=l2_cells(state.tau - steady.tau_inf, grid),
        dist_u=l2_nodes(state.u, grid),
        dist_R=l2_cells(state.R - steady.R_inf, grid),
        dist_Q=l2_cells(state.Q - steady.Q_inf, grid),
    )


def density_bounds(records: Iterable[DiagnosticsRecord]) -> DensityBounds:
    """Running extrema across a record stream; reports whether all infima
    stayed strictly positive."""
    records = list(records)
    if not records:
        raise InsufficientData("need at least one record")
    min_R = min(r.min_R for r in records)
    max_R = max(r.max_R for r in records)
    min_Q = min(r.min_Q for r in records)
    max_Q = max(r.max_Q for r in records)
    min_Z = min(r.min_Z for r in records)
    max_Z = max(r.max_Z for r in records)
    min_tau = min(r.min_tau for r in records)
    max_tau = max(r.max_tau for r in records)
    return DensityBounds(
        min_R=min_R,
        max_R=max_R,
        min_Q=min_Q,
        max_Q=max_Q,
        min_Z=min_Z,
        max_Z=max_Z,
        min_tau=min_tau,
        max_tau=max_tau,
        all_positive=min(min_R, min_Q, min_Z, min_tau) > 0.0,
    )


def fit_decay(
    times: np.ndarray,
    values: np.ndarray,
    window: tuple[float, float],
    floor: float = 1e-10,
) -> DecayFit:
    """Least squares of log(value) against t over a window.

    Values at or below ``floor`` are discarded (they are round-off noise,
    not signal).  A constant series fits rate 0 with r_squared reported
    as 0.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise ValueError("window must satisfy t_lo < t_hi")
    mask = (times >= t_lo) & (times <= t_hi) & (values > floor)
    if int(np.sum(mask)) < 3:
        raise InsufficientData(
            f"only {int(np.sum(mask))} usable points in window {window}"
        )
    t = times[mask]
    logv = np.log(values[mask])
    if np.all(logv == logv[0]):
        return DecayFit(
            rate=0.0,
            log_intercept=float(logv[0]),
            r_squared=0.0,
            window=(t_lo, t_hi),
            n_points=t.size,
        )
    slope, intercept = np.polyfit(t, logv, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - np.mean(logv)) ** 2))
    r_sq = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(
        rate=-float(slope),
        log_intercept=float(intercept),
        r_squared=r_sq,
        window=(t_lo, t_hi),
        n_points=t.size,
    )


def representation_residual(
    states: Sequence[LagrangianState],
    data: InitialData,
    grid: Grid,
    cfg: SchemeConfig,
) -> float:
    """Worst mismatch between tau and its integrating-factor reconstruction.

    The viscous flux sigma = mu*du/dy/tau - p admits a representation of tau
    through exp of its time integral; that integral is itself reconstructed
    from the velocity via the mean-free spatial antiderivative plus the time
    integral of the spatial mean of sigma.  Both time integrals use the
    trapezoid rule over the given samples, so the residual scales like
    O(dt + sampling_interval**2) on smooth runs and halves when both are
    halved together.

    The spatial antiderivative is the node cumulative dy * sum(u_j), which
    matches the telescoping structure of the discrete momentum update; with
    that choice the residual carries no grid-resolution floor.
    """
    if len(states) < 3:
        raise InsufficientSampling("need at least 3 trajectory samples")
    times = np.array([s.t for s in states])
    if not np.all(np.diff(times) > 0.0):
        raise ValueError("sample times must be strictly increasing")
    dy = grid.dy
    mu = cfg.mu
    u0 = data.u0
    tau0 = data.tau0

    def antiderivative_mean_free(w: np.ndarray) -> np.ndarray:
        v = np.concatenate([[0.0], np.cumsum(w[1:-1])]) * dy
        return v - float(np.sum(v)) * dy

    sigmas = [mu * np.diff(s.u) / dy / s.tau - s.p for s in states]
    mean_sigma = np.array([float(np.sum(sg)) * dy for sg in sigmas])
    # cumulative trapezoid of the spatial mean over the sample times
    dt_half = 0.5 * np.diff(times)
    mean_int = np.concatenate(
        [[0.0], np.cumsum(dt_half * (mean_sigma[1:] + mean_sigma[:-1]))]
    )

    A = [
        antiderivative_mean_free(s.u - u0) + mean_int[k]
        for k, s in enumerate(states)
    ]
    integrand = [s.tau * s.p * np.exp(-A[k] / mu) for k, s in enumerate(states)]

    worst = 0.0
    inner = np.zeros(grid.n_cells)
    for k, s in enumerate(states):
        if k > 0:
            inner = inner + dt_half[k - 1] * (integrand[k] + integrand[k - 1])
        tau_hat = np.exp(A[k] / mu) * (tau0 + inner / mu)
        worst = max(worst, float(np.max(np.abs(s.tau - tau_hat))))
    return worst


def stability_ratio(
    base_states: Sequence[LagrangianState],
    pert_states: Sequence[LagrangianState],
    base_data: InitialData,
    pert_data: InitialData,
    grid: Grid,
) -> StabilityReport:
    """Empirical Lipschitz ratio between two runs sampled at the same times.

    output_delta is the sup over samples of |dR|_inf + |dQ|_inf + |du|_L2
    plus the space-time L2 norm of the velocity-gradient difference; the
    input_delta combines the sup norms of the density perturbations with the
    L2 norm of the velocity perturbation.  Identical inputs are flagged and
    reported with ratio 0.
    """
    if len(base_states) != len(pert_states):
        raise ConfigMismatch("runs have different sample counts")
    times_b = np.array([s.t for s in base_states])
    times_p = np.array([s.t for s in pert_states])
    if times_b.size == 0 or not np.allclose(times_b, times_p, rtol=0, atol=1e-12):
        raise ConfigMismatch("runs sampled at different times")
    if base_states[0].tau.size != grid.n_cells or pert_states[0].tau.size != grid.n_cells:
        raise ConfigMismatch("runs use a different grid")

    input_delta = (
        float(np.max(np.abs(base_data.R0 - pert_data.R0)))
        + float(np.max(np.abs(base_data.Q0 - pert_data.Q0)))
        + l2_nodes(base_data.u0 - pert_data.u0, grid)
    )
    sup_out = 0.0
    grad_sq = np.empty(times_b.size)
    for k, (sb, sp) in enumerate(zip(base_states, pert_states)):
        du = sb.u - sp.u
        sup_out = max(
            sup_out,
            float(np.max(np.abs(sb.R - sp.R)))
            + float(np.max(np.abs(sb.Q - sp.Q)))
            + l2_nodes(du, grid),
        )
        ddu = np.diff(du) / grid.dy
        grad_sq[k] = float(np.sum(ddu * ddu)) * grid.dy
    grad_term = math.sqrt(float(np.trapezoid(grad_sq, times_b)))
    output_delta = sup_out + grad_term
    if input_delta == 0.0:
        return StabilityReport(
            input_delta=0.0, output_delta=output_delta, ratio=0.0, degenerate=True
        )
    return StabilityReport(
        input_delta=input_delta,
        output_delta=output_delta,
        ratio=output_delta / input_delta,
        degenerate=False,
    )
