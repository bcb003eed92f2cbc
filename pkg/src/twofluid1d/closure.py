"""Algebraic pressure closure for the 1D compressible two-fluid model.

Both phases share a single pressure, which makes the dominant-phase density
Z an implicit function of the partial densities (R, Q):

    Z**g - R * Z**(g - 1) - Q = 0,      g = gamma_plus / gamma_minus,

restricted to the physical branch Z >= R.  The common pressure is then
p = Z**gamma_plus and the volume fraction of the dominant phase is
alpha = R / Z.

This module solves the closure equation with a bracketed Newton iteration
and provides the closed-form derivatives of Z (with respect to tau and to
the per-point data Q0, R0, tau0) that feed the time-step control and the
stability diagnostics.  All functions are pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ClosureError",
    "DomainError",
    "NonConvergence",
    "GammaLaw",
    "ClosureTolerances",
    "ClosureResult",
    "closure_bracket",
    "solve_closure",
    "dZ_dtau",
    "dp_dtau",
    "dZ_partials",
    "pressure_decomposition",
]


class ClosureError(Exception):
    """Base class for closure failures."""


class DomainError(ClosureError):
    """Inputs outside the admissible domain (non-positive data or a
    non-positive derivative denominator, which means Z is not a valid root)."""


class NonConvergence(ClosureError):
    """Root iteration exhausted its budget with the residual above tolerance."""


@dataclass(frozen=True)
class GammaLaw:
    """Adiabatic exponents of the two phases and their ratio g = gamma_plus/gamma_minus."""

    gamma_plus: float
    gamma_minus: float
    gamma: float = field(init=False)

    def __post_init__(self):
        if not (self.gamma_plus > 1.0 and self.gamma_minus > 1.0):
            raise ValueError(
                f"adiabatic exponents must exceed 1, got "
                f"gamma_plus={self.gamma_plus}, gamma_minus={self.gamma_minus}"
            )
        object.__setattr__(self, "gamma", self.gamma_plus / self.gamma_minus)


@dataclass(frozen=True)
class ClosureTolerances:
    """Absolute residual tolerance on |Z**g - R*Z**(g-1) - Q| and the iteration cap."""

    residual_tol: float = 1e-12
    max_iterations: int = 64

    def __post_init__(self):
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class ClosureResult:
    """Root Z of the pressure closure at one material point, with derived fields."""

    Z: float
    alpha: float
    p: float
    residual: float
    iterations: int


_DEFAULT_TOL = ClosureTolerances()


def closure_bracket(R: float, Q: float, law: GammaLaw) -> tuple[float, float]:
    """Rigorous bracket [lo, hi] for the closure root.

    hi = max(2R, (2Q)**(1/g)) bounds the root from above: beyond it one of
    the two factors in Q = (1 - R/Z) * Z**g would exceed its budget.  The
    lower end lo = max(R, Q**(1/g)) follows from (1 - R/Z) <= 1.  The
    residual f(Z) = Z**g - R*Z**(g-1) - Q changes sign on [lo, hi].
    """
    if R <= 0.0 or Q <= 0.0:
        raise DomainError(f"partial densities must be positive, got R={R}, Q={Q}")
    inv_g = 1.0 / law.gamma
    lo = max(R, Q**inv_g)
    hi = max(2.0 * R, (2.0 * Q) ** inv_g)
    return lo, hi


def solve_closure(
    R: float, Q: float, law: GammaLaw, tol: ClosureTolerances = _DEFAULT_TOL
) -> ClosureResult:
    """Solve the pressure closure for Z at one material point.

    Newton iteration on the cancellation-safe residual
    f(Z) = Z**(g-1) * (Z - R) - Q, safeguarded by bisection: every iterate
    stays inside the current sign-change bracket, which shrinks each step.
    A final Newton polish drives the returned residual to round-off level
    so that derived identities (pressure decomposition, energy forms) hold
    well below the nominal tolerance.
    """
    if R <= 0.0 or Q <= 0.0:
        raise DomainError(f"partial densities must be positive, got R={R}, Q={Q}")
    g = law.gamma
    gm1 = g - 1.0
    lo, hi = closure_bracket(R, Q, law)
    a, b = lo, hi
    x = 0.5 * (lo + hi)
    rtol = tol.residual_tol
    iterations = 0
    converged = False
    for iterations in range(1, tol.max_iterations + 1):
        zgm1 = x**gm1
        fx = zgm1 * (x - R) - Q
        if abs(fx) <= rtol:
            converged = True
            break
        if fx > 0.0:
            b = x
        else:
            a = x
        dfx = zgm1 * (g * x - gm1 * R) / x
        if dfx > 0.0:
            xn = x - fx / dfx
            if not (a <= xn <= b):
                xn = 0.5 * (a + b)
        else:
            xn = 0.5 * (a + b)
        x = xn
    if not converged:
        raise NonConvergence(
            f"closure solve failed after {tol.max_iterations} iterations "
            f"(R={R}, Q={Q}, gamma={g}, residual={fx})"
        )
    # f must be strictly increasing at the root (uniqueness surrogate).
    zgm1 = x**gm1
    dfx = zgm1 * (g * x - gm1 * R) / x
    assert dfx > 0.0, "closure residual not increasing at the root"
    xp = x - (zgm1 * (x - R) - Q) / dfx
    if lo <= xp <= hi:
        x = xp
    residual = abs(x**gm1 * (x - R) - Q)
    return ClosureResult(
        Z=x,
        alpha=R / x,
        p=x**law.gamma_plus,
        residual=residual,
        iterations=iterations,
    )


def dZ_dtau(R0tau0: float, Q0tau0: float, tau: float, Z: float, law: GammaLaw) -> float:
    """Derivative of the closure root with respect to the specific volume.

    Here Z is the root for R = R0tau0/tau, Q = Q0tau0/tau.  The value is
    strictly negative; the denominator is positive whenever Z is a valid
    root (it equals Z**(g-2) * (g*(Z-R) + R) > 0).
    """
    g = law.gamma
    zgm1 = Z ** (g - 1.0)
    denom = g * zgm1 - (R0tau0 / tau) * (g - 1.0) * zgm1 / Z
    if denom <= 0.0:
        raise DomainError(
            f"non-positive closure derivative denominator {denom}; "
            f"Z={Z} is not a valid root for tau={tau}"
        )
    num = (Q0tau0 + R0tau0 * zgm1) / tau**2
    return -num / denom


def dp_dtau(R0tau0: float, Q0tau0: float, tau: float, Z: float, law: GammaLaw) -> float:
    """Derivative of the common pressure Z**gamma_plus with respect to tau (< 0)."""
    gp = law.gamma_plus
    return gp * Z ** (gp - 1.0) * dZ_dtau(R0tau0, Q0tau0, tau, Z, law)


def dZ_partials(
    Q0: float, R0: float, tau0: float, tau: float, Z: float, law: GammaLaw
) -> tuple[float, float, float]:
    """Partial derivatives of the closure root with respect to (Q0, R0, tau0).

    Z is viewed as a function of the per-point data through
    R = R0*tau0/tau, Q = Q0*tau0/tau.  All three quotients share the
    denominator of ``dZ_dtau``; the first two are strictly positive.
    """
    g = law.gamma
    zgm1 = Z ** (g - 1.0)
    denom = g * zgm1 - (R0 * tau0 / tau) * (g - 1.0) * zgm1 / Z
    if denom <= 0.0:
        raise DomainError(
            f"non-positive closure derivative denominator {denom}; "
            f"Z={Z} is not a valid root"
        )
    ratio = tau0 / tau
    dZ_dQ0 = ratio / denom
    dZ_dR0 = ratio * zgm1 / denom
    dZ_dtau0 = (Q0 / tau + (R0 / tau) * zgm1) / denom
    return dZ_dQ0, dZ_dR0, dZ_dtau0


def pressure_decomposition(
    R: float, Q: float, result: ClosureResult, law: GammaLaw
) -> tuple[float, float]:
    """Split the common pressure into per-phase contributions.

    Returns (alpha * (R/alpha)**gamma_plus, (1-alpha) * (Q/(1-alpha))**gamma_minus);
    their sum equals Z**gamma_plus up to round-off when Z solves the closure.
    """
    alpha = result.alpha
    part_plus = alpha * (R / alpha) ** law.gamma_plus
    part_minus = (1.0 - alpha) * (Q / (1.0 - alpha)) ** law.gamma_minus
    return part_plus, part_minus


def _solve_closure_arrays(
    R: np.ndarray,
    Q: np.ndarray,
    law: GammaLaw,
    tol: ClosureTolerances = _DEFAULT_TOL,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Vectorized closure solve used internally by the solver and diagnostics.

    Same bracketed Newton iteration as ``solve_closure``, run elementwise on
    arrays; ``x0`` (e.g. the previous time level's Z) warm-starts the
    iteration.  Not part of the public closure interface.  Returns
    (Z, residual, iterations_of_slowest_entry).
    """
    R = np.asarray(R, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if R.size == 0:
        return np.empty(0), np.empty(0), 0
    if not (np.all(R > 0.0) and np.all(Q > 0.0)):
        raise DomainError("partial densities must be positive")
    g = law.gamma
    gm1 = g - 1.0
    inv_g = 1.0 / g
    lo = np.maximum(R, Q**inv_g)
    hi = np.maximum(2.0 * R, (2.0 * Q) ** inv_g)
    a = lo.copy()
    b = hi.copy()
    if x0 is not None:
        x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    else:
        x = 0.5 * (lo + hi)
    rtol = tol.residual_tol
    done = np.zeros(R.shape, dtype=bool)
    slowest = tol.max_iterations
    for it in range(1, tol.max_iterations + 1):
        zgm1 = x**gm1
        f = zgm1 * (x - R) - Q
        done |= np.abs(f) <= rtol
        if done.all():
            slowest = it
            break
        active = ~done
        b = np.where(active & (f > 0.0), x, b)
        a = np.where(active & (f <= 0.0), x, a)
        df = zgm1 * (g * x - gm1 * R) / x
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / df
        bad = ~((xn >= a) & (xn <= b) & (df > 0.0))
        xn = np.where(bad, 0.5 * (a + b), xn)
        x = np.where(active, xn, x)
    else:
        worst = float(np.max(np.abs(x**gm1 * (x - R) - Q)))
        raise NonConvergence(
            f"vectorized closure solve failed after {tol.max_iterations} "
            f"iterations (worst residual {worst})"
        )
    zgm1 = x**gm1
    df = zgm1 * (g * x - gm1 * R) / x
    assert np.all(df > 0.0), "closure residual not increasing at some root"
    xp = np.clip(x - (zgm1 * (x - R) - Q) / df, lo, hi)
    x = xp
    residual = np.abs(x**gm1 * (x - R) - Q)
    return x, residual, slowest


def _dp_dtau_arrays(
    R0tau0: np.ndarray,
    Q0tau0: np.ndarray,
    tau: np.ndarray,
    Z: np.ndarray,
    law: GammaLaw,
) -> np.ndarray:
    """Vectorized ``dp_dtau`` over cell arrays (internal; mirrors the scalar formula)."""
    g = law.gamma
    zgm1 = Z ** (g - 1.0)
    denom = g * zgm1 - (R0tau0 / tau) * (g - 1.0) * zgm1 / Z
    if not np.all(denom > 0.0):
        raise DomainError("non-positive closure derivative denominator")
    num = (Q0tau0 + R0tau0 * zgm1) / tau**2
    gp = law.gamma_plus
    return gp * Z ** (gp - 1.0) * (-num / denom)
