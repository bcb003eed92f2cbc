"""Steady state of the Lagrangian two-fluid system.

The equilibrium has zero velocity and a spatially constant pressure
C_star = Z_inf**gamma_plus, with Z_inf a single scalar.  Eliminating
(R_inf, Q_inf) from the closure gives the explicit equilibrium profile

    tau_inf = tau0 * (Q0 * Z_inf**(-g) + R0 / Z_inf),

and Z_inf is fixed by conservation of total volume in mass coordinates:
the integral of tau_inf must equal the integral of tau0.  That map is
strictly decreasing in Z_inf, so a bracketed bisection finds the unique
root.  The quadrature is the midpoint rule on the uniform cell grid; the
steady state is then a fixed point of the discrete dynamics, not merely of
the continuum equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import GammaLaw

__all__ = ["BracketFailure", "SteadyState", "tau_inf_profile", "solve_equilibrium"]

_Z_MIN = 1e-8
_Z_MAX = 1e8


class BracketFailure(Exception):
    """No sign change of the volume constraint within the search range."""


@dataclass(frozen=True)
class SteadyState:
    """Equilibrium scalar Z_inf, constant pressure, and cell profiles."""

    Z_inf: float
    C_star: float
    tau_inf: np.ndarray
    R_inf: np.ndarray
    Q_inf: np.ndarray
    mass_residual: float


def tau_inf_profile(
    Z_candidate: float, R0: np.ndarray, Q0: np.ndarray, tau0: np.ndarray, law: GammaLaw
) -> np.ndarray:
    """Equilibrium specific volume per cell for a trial Z_inf.

    Every entry is positive and strictly decreasing in ``Z_candidate``.
    """
    z = float(Z_candidate)
    return tau0 * (Q0 * z ** (-law.gamma) + R0 / z)


def solve_equilibrium(
    R0: np.ndarray,
    Q0: np.ndarray,
    tau0: np.ndarray,
    law: GammaLaw,
    mass_tol: float = 1e-12,
) -> SteadyState:
    """Find the unique steady state for the given initial data.

    Bisection on the strictly decreasing map Z -> integral of tau_inf(Z),
    with the bracket grown geometrically from Z = 1.  The bisection runs to
    a relative width of 1e-14, far below ``mass_tol``; robustness is worth
    more than iteration count for this one-shot computation.
    """
    R0 = np.asarray(R0, dtype=float)
    Q0 = np.asarray(Q0, dtype=float)
    tau0 = np.asarray(tau0, dtype=float)
    if not (R0.shape == Q0.shape == tau0.shape) or R0.ndim != 1:
        raise ValueError("R0, Q0, tau0 must be 1-d arrays of equal length")
    if not (np.all(R0 > 0) and np.all(Q0 > 0) and np.all(tau0 > 0)):
        raise ValueError("equilibrium data must be strictly positive")
    if mass_tol <= 0:
        raise ValueError("mass_tol must be positive")

    target = float(np.mean(tau0))  # midpoint-rule integral over [0, 1]

    def volume_gap(z: float) -> float:
        return float(np.mean(tau_inf_profile(z, R0, Q0, tau0, law))) - target

    # grow the bracket from Z = 1; volume_gap is strictly decreasing
    z_lo, z_hi = 1.0, 1.0
    g_lo = volume_gap(z_lo)
    if g_lo >= 0.0:
        while volume_gap(z_hi) > 0.0:
            z_hi *= 2.0
            if z_hi > _Z_MAX:
                raise BracketFailure(
                    f"no sign change of the volume constraint up to Z={_Z_MAX}"
                )
    else:
        while volume_gap(z_lo) < 0.0:
            z_lo *= 0.5
            if z_lo < _Z_MIN:
                raise BracketFailure(
                    f"no sign change of the volume constraint down to Z={_Z_MIN}"
                )

    while z_hi - z_lo > 1e-14 * z_hi:
        z_mid = 0.5 * (z_lo + z_hi)
        if volume_gap(z_mid) >= 0.0:
            z_lo = z_mid
        else:
            z_hi = z_mid

    z_inf = 0.5 * (z_lo + z_hi)
    tau_inf = tau_inf_profile(z_inf, R0, Q0, tau0, law)
    R_inf = R0 * tau0 / tau_inf
    Q_inf = Q0 * tau0 / tau_inf
    residual = abs(float(np.mean(tau_inf)) - target)
    if residual > mass_tol:
        raise BracketFailure(
            f"volume constraint residual {residual} above mass_tol={mass_tol}"
        )
    assert np.all(R_inf < z_inf), "equilibrium must satisfy R_inf < Z_inf"
    return SteadyState(
        Z_inf=z_inf,
        C_star=z_inf**law.gamma_plus,
        tau_inf=tau_inf,
        R_inf=R_inf,
        Q_inf=Q_inf,
        mass_residual=residual,
    )
