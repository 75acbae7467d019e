"""Augmented Lagrangian evaluations, residuals and KKT certificates.

All functions here are stateless over immutable inputs.  Penalty weights
may be scalars or per-constraint vectors; scalar weights are broadcast so
every formula is written componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .problem import DimensionMismatchError, ProblemSpec

Penalty = Union[float, np.ndarray]


def as_weight(value: Penalty, size: int) -> np.ndarray:
    """Broadcast a scalar or vector penalty to a strictly positive vector."""
    w = np.asarray(value, dtype=float)
    if w.ndim == 0:
        w = np.full(size, float(w))
    elif w.shape != (size,):
        raise DimensionMismatchError(
            f"penalty vector has shape {w.shape}, expected ({size},)"
        )
    if size and np.any(w <= 0):
        raise ValueError("penalty entries must be strictly positive")
    return w


def inf_norm(v: np.ndarray) -> float:
    """||v||_inf with the empty vector mapping to 0."""
    return float(np.max(np.abs(v))) if v.size else 0.0


@dataclass
class Multipliers:
    lam: np.ndarray  # equality multipliers, length p
    mu: np.ndarray   # inequality multipliers, length m, kept >= 0

    def copy(self) -> "Multipliers":
        return Multipliers(self.lam.copy(), self.mu.copy())


@dataclass
class PenaltyState:
    """Penalty weights and proximal stepsize; rho/nu never decrease."""

    rho: Penalty
    nu: Penalty
    gamma: float

    def rho_vec(self, p: int) -> np.ndarray:
        return as_weight(self.rho, p)

    def nu_vec(self, m: int) -> np.ndarray:
        return as_weight(self.nu, m)


@dataclass
class KktReport:
    stationarity: float
    eq_infeas: float
    ineq_infeas: float
    complementarity_ok: bool
    epsilon: float

    @property
    def is_eps_kkt(self) -> bool:
        e = self.epsilon
        return (
            self.stationarity <= e
            and self.eq_infeas <= e
            and self.ineq_infeas <= e
            and self.complementarity_ok
        )


def eval_lagrangian(prob: ProblemSpec, x: np.ndarray, mult: Multipliers) -> float:
    """f1(x) + <lam, h(x)> + <mu, g(x)>."""
    x = prob.check_x(x)
    val = prob.f1(x)
    if prob.p:
        val += float(mult.lam @ prob.h(x))
    if prob.m:
        val += float(mult.mu @ prob.g(x))
    return val


def _ineq_terms(g_x: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> float:
    # (1/2nu)||[nu g + mu]_+||^2 - (1/2nu)||mu||^2, componentwise weights
    shifted = np.maximum(0.0, nu * g_x + mu)
    return float(np.sum(shifted**2 / (2.0 * nu)) - np.sum(mu**2 / (2.0 * nu)))


def eval_al(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
            rho: Penalty, nu: Penalty) -> float:
    """Augmented Lagrangian without the proximal term (f2 excluded)."""
    x = prob.check_x(x)
    val = prob.f1(x)
    if prob.p:
        r = as_weight(rho, prob.p)
        h_x = prob.h(x)
        val += float(mult.lam @ h_x) + float(np.sum(r * h_x**2) / 2.0)
    if prob.m:
        val += _ineq_terms(prob.g(x), mult.mu, as_weight(nu, prob.m))
    return val


def eval_pal(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
             pen: PenaltyState, v: np.ndarray) -> float:
    """Proximal augmented Lagrangian (f2 intentionally excluded).

    Adds (1/2gamma)||x - v||^2 to the non-proximal value, centering the
    subproblem at v.
    """
    if pen.gamma <= 0:
        raise ValueError("gamma must be strictly positive")
    val = eval_al(prob, x, mult, pen.rho, pen.nu)
    d = np.asarray(x, dtype=float) - np.asarray(v, dtype=float)
    return val + float(d @ d) / (2.0 * pen.gamma)


def grad_al(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
            rho: Penalty, nu: Penalty) -> np.ndarray:
    """Gradient of eval_al in x: grad f1 + Jh^T(lam + rho h) + Jg^T [nu g + mu]_+."""
    x = prob.check_x(x)
    grad = prob.grad_f1(x).astype(float, copy=True)
    if prob.p:
        r = as_weight(rho, prob.p)
        h_x = prob.h(x)
        grad += prob.jac_h_transpose_apply(x, mult.lam + r * h_x)
    if prob.m:
        nu_v = as_weight(nu, prob.m)
        shifted = np.maximum(0.0, nu_v * prob.g(x) + mult.mu)
        grad += prob.jac_g_transpose_apply(x, shifted)
    return grad


def grad_pal(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
             pen: PenaltyState, v: np.ndarray) -> np.ndarray:
    if pen.gamma <= 0:
        raise ValueError("gamma must be strictly positive")
    grad = grad_al(prob, x, mult, pen.rho, pen.nu)
    return grad + (np.asarray(x, dtype=float) - np.asarray(v, dtype=float)) / pen.gamma


def eval_pal_completed_square(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
                              pen: PenaltyState, v: np.ndarray) -> float:
    """Equivalent rewriting of eval_pal with the equality penalty completed
    into a square; used as an exactness cross-check."""
    x = prob.check_x(x)
    val = prob.f1(x)
    if prob.p:
        r = as_weight(pen.rho, prob.p)
        h_x = prob.h(x)
        val += float(np.sum((r * h_x + mult.lam) ** 2 / (2.0 * r)))
        val -= float(np.sum(mult.lam**2 / (2.0 * r)))
    if prob.m:
        nu_v = as_weight(pen.nu, prob.m)
        shifted = np.maximum(0.0, nu_v * prob.g(x) + mult.mu)
        val += float(np.sum(shifted**2 / (2.0 * nu_v)))
        val -= float(np.sum(mult.mu**2 / (2.0 * nu_v)))
    d = x - np.asarray(v, dtype=float)
    return val + float(d @ d) / (2.0 * pen.gamma)


def compute_E(g_x: np.ndarray, mu_prev: np.ndarray, nu_prev: Penalty) -> np.ndarray:
    """Complementarity surrogate: componentwise min{-g(x), mu/nu}."""
    m = g_x.size
    if m == 0:
        return np.zeros(0)
    nu_v = as_weight(nu_prev, m)
    return np.minimum(-g_x, mu_prev / nu_v)


def natural_residual(prob: ProblemSpec, x: np.ndarray, grad: np.ndarray) -> float:
    """||x - prox_f2(x - grad)||_inf; zero exactly at stationary points."""
    x = np.asarray(x, dtype=float)
    return inf_norm(x - prob.prox_f2(x - grad, 1.0))


def kkt_report(prob: ProblemSpec, x: np.ndarray, mult: Multipliers,
               epsilon: float) -> KktReport:
    """Residuals of the epsilon-KKT conditions at (x, lam, mu)."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    x = prob.check_x(x)
    grad = prob.grad_f1(x).astype(float, copy=True)
    if prob.p:
        grad += prob.jac_h_transpose_apply(x, mult.lam)
    if prob.m:
        grad += prob.jac_g_transpose_apply(x, mult.mu)
    stationarity = natural_residual(prob, x, grad)
    h_x = prob.h(x) if prob.p else np.zeros(0)
    g_x = prob.g(x) if prob.m else np.zeros(0)
    comp_ok = True
    if prob.m:
        comp_ok = bool(np.all(mult.mu >= 0)) and bool(
            np.all(mult.mu[g_x < -epsilon] == 0)
        )
    return KktReport(
        stationarity=stationarity,
        eq_infeas=inf_norm(h_x),
        ineq_infeas=inf_norm(np.maximum(0.0, g_x)),
        complementarity_ok=comp_ok,
        epsilon=epsilon,
    )
