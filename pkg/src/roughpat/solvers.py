"""Time integrators for the surface heat equation and the two-species
reaction-diffusion system, plus error and order-of-convergence helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import DivergenceError, InvalidArgument
from .fdm import LinearSolver, gershgorin_radius


@dataclass(frozen=True)
class RdsParams:
    delta_u: float
    delta_v: float
    alpha: float
    beta: float
    gamma: float
    xi1: float
    xi2: float

    def __post_init__(self):
        if not (self.delta_u > 0 and self.delta_v > 0):
            raise InvalidArgument("diffusion coefficients must be > 0")
        if self.beta == 0:
            raise InvalidArgument("beta must be nonzero")

    @classmethod
    def preset(cls, name):
        try:
            return PRESETS[name]
        except KeyError:
            raise InvalidArgument(f"unknown reaction preset {name!r}; choose from {sorted(PRESETS)}") from None


_DV = 1e-3
SPOTS = RdsParams(delta_u=0.516 * _DV, delta_v=_DV, alpha=0.899, beta=-0.91, gamma=-0.899, xi1=0.02, xi2=0.2)
STRIPES = replace(SPOTS, xi1=3.5, xi2=0.0)
PRESETS = {"spots": SPOTS, "stripes": STRIPES}


@dataclass
class SimState:
    t: float
    U: np.ndarray
    V: np.ndarray | None = None
    step: int = 0


def n_steps(tau, T):
    """Number of steps of size tau that lands nearest to T."""
    if not tau > 0:
        raise InvalidArgument(f"tau must be > 0, got {tau}")
    if T < 0:
        raise InvalidArgument(f"T must be >= 0, got {T}")
    return int(round(T / tau))


def _check_finite(arrays, step, what):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"{what}: non-finite values at step {step}", step=step)


# ---------------------------------------------------------------- heat

def _theta_matrix(lap, tau, theta):
    n = lap.shape[0]
    return (sp.identity(n, format="csr") - (tau * theta) * lap).tocsc()


def check_theta_stability(lap, tau, theta):
    """Reject explicit-leaning steps whose Gershgorin bound exceeds 2."""
    if not 0.0 <= theta <= 1.0:
        raise InvalidArgument(f"theta must lie in [0, 1], got {theta}")
    if theta < 0.5:
        rho = gershgorin_radius(lap)
        if tau * (1.0 - 2.0 * theta) * rho > 2.0:
            raise InvalidArgument(
                f"tau={tau} violates the explicit stability bound tau*(1-2theta)*rho <= 2 "
                f"(rho <= {rho:.4g}, max tau {2.0 / ((1.0 - 2.0 * theta) * rho):.4g})"
            )


def theta_step(lap, u, theta, tau, h_now=None, h_next=None, solver=None):
    """One step of (I - tau theta L) u1 = u + tau theta h1 + tau (1-theta)(L u + h0)."""
    if solver is None:
        check_theta_stability(lap, tau, theta)
    rhs = np.array(u, dtype=float, copy=True)
    if theta < 1.0:
        rhs += tau * (1.0 - theta) * (lap @ u)
        if h_now is not None:
            rhs += tau * (1.0 - theta) * h_now
    if theta > 0.0 and h_next is not None:
        rhs += tau * theta * h_next
    if theta == 0.0:
        return rhs
    if solver is None:
        solver = LinearSolver(_theta_matrix(lap, tau, theta))
    # solve for the correction to u so that exact steady states stay exact
    u = np.asarray(u, dtype=float)
    return u + solver.solve((rhs - u) + (tau * theta) * (lap @ u))


@dataclass
class HeatResult:
    state: SimState
    max_norms: list
    snapshots: list = field(default_factory=list)

    @property
    def max_norm_monotone(self):
        m = np.asarray(self.max_norms)
        return bool(np.all(np.diff(m) <= 1e-14 * max(m[0], 1.0)))


def run_heat(lap, u0, theta, tau, T, source=None, snapshot_every=None):
    """Integrate u_t = L u + h(t) from t=0 with the theta-method.

    ``source`` is a callable t -> nodal vector (or None for h = 0).
    """
    check_theta_stability(lap, tau, theta)
    k = n_steps(tau, T)
    solver = LinearSolver(_theta_matrix(lap, tau, theta)) if theta > 0 else None
    u = np.array(u0, dtype=float, copy=True)
    norms = [float(np.max(np.abs(u)))]
    snaps = [SimState(0.0, u.copy(), None, 0)] if snapshot_every else []
    h_now = source(0.0) if source else None
    for j in range(k):
        t1 = (j + 1) * tau
        h_next = source(t1) if source else None
        u = theta_step(lap, u, theta, tau, h_now, h_next, solver=solver)
        _check_finite([u], j + 1, "heat")
        norms.append(float(np.max(np.abs(u))))
        if snapshot_every and (j + 1) % snapshot_every == 0:
            snaps.append(SimState(t1, u.copy(), None, j + 1))
        h_now = h_next
    return HeatResult(SimState(k * tau, u, None, k), norms, snaps)


# ---------------------------------------------------------------- reaction-diffusion

def reaction_terms(u, v, p):
    """f_u = a u (1 - xi1 v^2) + v (1 - xi2 u); f_v = b v (1 + (a xi1 / b) u v) + u (g + xi2 v)."""
    if p.beta == 0:
        raise InvalidArgument("beta must be nonzero")
    fu = p.alpha * u * (1.0 - p.xi1 * v * v) + v * (1.0 - p.xi2 * u)
    fv = p.beta * v * (1.0 + (p.alpha * p.xi1 / p.beta) * u * v) + u * (p.gamma + p.xi2 * v)
    return fu, fv


@dataclass
class RdsResult:
    state: SimState
    snapshots: list
    step_changes: list
    converged: bool

    @property
    def final_step_change(self):
        return self.step_changes[-1] if self.step_changes else float("nan")


class Bdf2Operators:
    """Factorizations for the BDF2 system matrices 3I - 2 tau d L and the
    backward-Euler bootstrap matrices I - tau d L, built on first use."""

    def __init__(self, lap, p, tau):
        n = lap.shape[0]
        eye = sp.identity(n, format="csr")
        self.lap = lap
        self.bdf = {s: LinearSolver((3.0 * eye - (2.0 * tau * d) * lap).tocsc()) for s, d in
                    (("u", p.delta_u), ("v", p.delta_v))}
        self.be = {s: LinearSolver((eye - (tau * d) * lap).tocsc()) for s, d in
                   (("u", p.delta_u), ("v", p.delta_v))}


def bdf2_run(lap, p, U0, V0, tau, T, forcing=None, steady_tol=None, snapshot_every=None,
             refactor_each_step=False, operators=None, v_first=False):
    """IMEX-BDF2 for the reaction-diffusion system, bootstrapped by one
    IMEX backward-Euler step.

    ``forcing`` is an optional callable t -> (s_u, s_v) added to the
    reaction terms. With ``steady_tol`` the run stops as soon as the
    relative step change of U drops below it.
    """
    # overflow shows up as a DivergenceError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _bdf2(lap, p, U0, V0, tau, T, forcing, steady_tol, snapshot_every, refactor_each_step,
                     operators, v_first)


def _bdf2(lap, p, U0, V0, tau, T, forcing, steady_tol, snapshot_every, refactor_each_step, operators, v_first):
    k = n_steps(tau, T)
    ops = operators or Bdf2Operators(lap, p, tau)

    def F(U, V, t):
        fu, fv = reaction_terms(U, V, p)
        if forcing is not None:
            su, sv = forcing(t)
            fu, fv = fu + su, fv + sv
        return fu, fv

    def solver(kind, s):
        base = (ops.bdf if kind == "bdf" else ops.be)[s]
        return LinearSolver(base.A) if refactor_each_step else base

    U_prev = np.array(U0, dtype=float, copy=True)
    V_prev = np.array(V0, dtype=float, copy=True)
    _check_finite([U_prev, V_prev], 0, "rds initial condition")
    snaps = [SimState(0.0, U_prev.copy(), V_prev.copy(), 0)] if snapshot_every else []
    changes = []
    if k == 0:
        return RdsResult(SimState(0.0, U_prev, V_prev, 0), snaps, changes, False)

    fu_prev, fv_prev = F(U_prev, V_prev, 0.0)
    _check_finite([fu_prev, fv_prev], 1, "rds")
    U = solver("be", "u").solve(U_prev + tau * fu_prev)
    V = solver("be", "v").solve(V_prev + tau * fv_prev)
    _check_finite([U, V], 1, "rds")
    changes.append(_rel_change(U, U_prev))
    if snapshot_every and 1 % snapshot_every == 0:
        snaps.append(SimState(tau, U.copy(), V.copy(), 1))
    converged = steady_tol is not None and changes[-1] < steady_tol
    j = 1
    while j < k and not converged:
        fu, fv = F(U, V, j * tau)
        rhs_u = 4.0 * tau * fu - 2.0 * tau * fu_prev + 4.0 * U - U_prev
        rhs_v = 4.0 * tau * fv - 2.0 * tau * fv_prev + 4.0 * V - V_prev
        _check_finite([rhs_u, rhs_v], j + 1, "rds")
        if v_first:
            V_new = solver("bdf", "v").solve(rhs_v)
            U_new = solver("bdf", "u").solve(rhs_u)
        else:
            U_new = solver("bdf", "u").solve(rhs_u)
            V_new = solver("bdf", "v").solve(rhs_v)
        j += 1
        _check_finite([U_new, V_new], j, "rds")
        changes.append(_rel_change(U_new, U))
        U_prev, V_prev, fu_prev, fv_prev = U, V, fu, fv
        U, V = U_new, V_new
        if snapshot_every and j % snapshot_every == 0:
            snaps.append(SimState(j * tau, U.copy(), V.copy(), j))
        if steady_tol is not None and changes[-1] < steady_tol:
            converged = True
    return RdsResult(SimState(j * tau, U, V, j), snaps, changes, converged)


def _rel_change(new, old):
    den = np.linalg.norm(old)
    num = np.linalg.norm(new - old)
    return float(num / den) if den > 0 else (0.0 if num == 0 else math.inf)


# ---------------------------------------------------------------- errors and orders

def manufactured_error(numeric, exact):
    """Relative l2 error |numeric - exact| / |exact|."""
    numeric = np.asarray(numeric, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if numeric.shape != exact.shape:
        raise InvalidArgument(f"shape mismatch {numeric.shape} vs {exact.shape}")
    den = np.linalg.norm(exact)
    if den == 0:
        raise InvalidArgument("exact solution is identically zero; relative error undefined")
    return float(np.linalg.norm(numeric - exact) / den)


def rds_error(U, V, u_exact, v_exact, n_equations=2):
    eu = manufactured_error(U, u_exact)
    ev = manufactured_error(V, v_exact)
    return math.sqrt(eu * eu + ev * ev) / n_equations


def estimate_order(errors, resolutions):
    """Least-squares slope of log(error) against log(resolution)."""
    e = np.asarray(errors, dtype=float)
    r = np.asarray(resolutions, dtype=float)
    if e.size < 2 or e.size != r.size:
        raise InvalidArgument("need at least two (error, resolution) pairs of equal length")
    if np.any(e <= 0) or np.any(r <= 0):
        raise InvalidArgument("errors and resolutions must be positive")
    slope, _ = np.polyfit(np.log(r), np.log(e), 1)
    return float(slope)
