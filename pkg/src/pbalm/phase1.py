"""Feasibility bootstrap: lift (x, s), minimize ||h||^2/2 + s^2 subject to
g(x) <= s, then hand the x part back as a feasible start."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .outer import OuterConfig, run
from .problem import ProblemSpec, check_feasible


class Phase1Failed(RuntimeError):
    """The lifted solve stalled above tolerance; the base problem may be
    infeasible."""


@dataclass
class Phase1Spec:
    base: ProblemSpec
    lifted: ProblemSpec
    slack_index: int  # position of s in the lifted variable


def build_phase1(base: ProblemSpec) -> Phase1Spec:
    """Lift the base problem: variable (x, s), objective ||h(x)||^2/2 + s^2,
    inequalities g(x) - s <= 0, no equalities, f2 inherited on x with s free.
    """
    n = base.n

    def f1(z):
        x, s = z[:n], z[n]
        if base.p:
            h = base.h(x)
            return 0.5 * float(h @ h) + s * s
        return s * s

    def grad_f1(z):
        x, s = z[:n], z[n]
        out = np.zeros(n + 1)
        if base.p:
            h = base.h(x)
            out[:n] = base.jac_h_transpose_apply(x, h)
        out[n] = 2.0 * s
        return out

    def g(z):
        x, s = z[:n], z[n]
        return base.g(x) - s

    def jac_g_T(z, y):
        x = z[:n]
        out = np.zeros(n + 1)
        out[:n] = base.jac_g_transpose_apply(x, y)
        out[n] = -float(np.sum(y))
        return out

    def f2_value(z):
        return base.f2_value(z[:n])

    def prox_f2(z, step):
        out = z.copy()
        out[:n] = base.prox_f2(z[:n], step)
        return out

    lifted = ProblemSpec(
        n=n + 1, p=0, m=base.m,
        f1=f1, grad_f1=grad_f1,
        g=g, jac_g_transpose_apply=jac_g_T,
        f2_value=f2_value, prox_f2=prox_f2,
        name=f"{base.name}-phase1",
    )
    return Phase1Spec(base=base, lifted=lifted, slack_index=n)


def find_feasible(base: ProblemSpec, x_start: np.ndarray, tol: float,
                  cfg: OuterConfig) -> np.ndarray:
    """Return a point satisfying check_feasible(base, ., tol), or raise
    Phase1Failed.  Short-circuits when x_start is already feasible."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x_start = base.check_x(x_start)
    if check_feasible(base, x_start, tol):
        return x_start.copy()

    spec = build_phase1(base)
    x_proj = base.prox_f2(x_start, 1.0)
    if base.m:
        s0 = max(0.0, float(np.max(base.g(x_proj))))
    else:
        s0 = 0.0
    z0 = np.concatenate([x_proj, [s0]])

    # No guarantee is needed here beyond feasibility of the base problem,
    # so the solve runs in relaxed mode with a tight inner tolerance.
    tau = min(tol / 10.0, 1e-7)
    cfg1 = dataclasses.replace(
        cfg,
        require_feasible_start=False,
        stop_tol=min(cfg.stop_tol, tol / 2.0),
        tau_schedule=lambda k: tau,
        multiplier_init="zeros",
        max_outer=min(cfg.max_outer, 60),
    )
    result = run(
        spec.lifted, z0, cfg1,
        stop_when=lambda z: check_feasible(base, z[: base.n], tol),
    )
    x = result.x[: base.n]
    if not check_feasible(base, x, tol):
        raise Phase1Failed(
            f"phase-I solve did not reach feasibility within {tol}; "
            "the base problem may have no feasible point"
        )
    return x
