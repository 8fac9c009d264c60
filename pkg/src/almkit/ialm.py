"""Outer inexact augmented Lagrangian loop for equality-constrained
problems, with geometric penalty growth beta_k = beta0 * sigma^k, a choice
of dual step-size policies, and a pure-penalty ablation mode that freezes
the multipliers at zero.

Each outer iteration solves the AL subproblem to eps-stationarity with the
proximal point method, then updates y by a damped ascent step
y <- y + w_k c(x_{k+1}).  The loop stops at the first iterate whose primal
residual and independently re-measured dual residual (with the certificate
multiplier y_k + beta_k c(x_{k+1})) both fall below eps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import (
    CurvatureSchedule,
    KktResidual,
    ProblemSpec,
    al_curvature_params,
    al_smooth_oracle,
    kkt_residual,
)
from .ippm import ippm_solve

LOG2_SQ = math.log(2.0) ** 2

# Weak-convexity floor: convex subproblems (rho_hat = 0) are still valid
# proximal point inputs for any positive rho, so clamp instead of failing.
DEFAULT_RHO_FLOOR = 1e-6


@dataclass(frozen=True)
class TheoreticalDual:
    """w_k = w0 * min{1, gamma_k / ||c(x_{k+1})||}, the step size with a
    certified uniform bound on ||y_k||."""

    w0: float = 1.0

    def __post_init__(self):
        if self.w0 <= 0:
            raise ValueError("w0 must be positive")


@dataclass(frozen=True)
class PowerGrowthDual:
    """w_k = M (k+1)^q / ||c(x_{k+1})||: dual increments of norm M (k+1)^q."""

    M: float = 1.0
    q: int = 0

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if self.q < 0 or int(self.q) != self.q:
            raise ValueError("q must be a nonnegative integer")


@dataclass(frozen=True)
class PracticalDual:
    """w_k = 1 / ||c(x_{k+1})||: unit-norm dual increments."""


DualStepPolicy = Union[TheoreticalDual, PowerGrowthDual, PracticalDual]


def gamma_schedule(k: int, c0_norm: float) -> float:
    """Damping sequence (log 2)^2 ||c(x0)|| / ((k+1) [log(k+2)]^2)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return LOG2_SQ * c0_norm / ((k + 1) * math.log(k + 2) ** 2)


def dual_step_size(
    policy: DualStepPolicy, k: int, c_norm_next: float, gamma_k: float
) -> float:
    """Step size w_k for the multiplier update y <- y + w_k c(x_{k+1}).

    When the residual vanishes the increment w_k c is zero regardless of
    w_k; the residual-normalized policies return 0 there so the recorded
    step stays finite.
    """
    if c_norm_next < 0 or gamma_k < 0:
        raise ValueError("residual norm and gamma must be nonnegative")
    if isinstance(policy, TheoreticalDual):
        if c_norm_next == 0.0:
            return policy.w0
        return policy.w0 * min(1.0, gamma_k / c_norm_next)
    if isinstance(policy, PowerGrowthDual):
        if c_norm_next == 0.0:
            return 0.0
        return policy.M * (k + 1) ** policy.q / c_norm_next
    if isinstance(policy, PracticalDual):
        if c_norm_next == 0.0:
            return 0.0
        return 1.0 / c_norm_next
    raise TypeError(f"unknown dual step policy {policy!r}")


@dataclass
class IalmConfig:
    """Solver configuration; defaults follow the bundled benchmark setup."""

    beta0: float = 0.01
    sigma: float = 3.0
    eps: float = 1e-3
    policy: DualStepPolicy = field(default_factory=PracticalDual)
    penalty_mode: bool = False
    max_outer: int = 40
    max_inner: int = 10**6
    curvature_override: Optional[CurvatureSchedule] = None
    rho_floor: float = DEFAULT_RHO_FLOOR

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ValueError("beta0 must be positive")
        if self.sigma <= 1:
            raise ValueError("sigma must exceed 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")
        if self.rho_floor <= 0:
            raise ValueError("rho_floor must be positive")


@dataclass(frozen=True)
class OuterIterationRecord:
    """Trajectory entry for one outer iteration k (producing x_{k+1}).

    ``dres`` is re-measured with the certificate multiplier
    y_k + beta_k c(x_{k+1}); ``dres_running`` with the updated running
    multiplier y_{k+1}.  ``x`` is kept so diagnostics can re-trace the run.
    """

    k: int
    beta: float
    w: float
    pres: float
    dres: float
    dres_running: float
    y_norm: float
    grad_evals: int
    obj_evals: int
    seconds: float
    x: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    """Full outcome of one solve: trajectory, certificate, and counts.

    ``y`` is the certificate multiplier backing ``kkt``; ``y_running`` the
    last ascent iterate.  ``success`` means both final residuals were at or
    below the configured tolerance.
    """

    records: list
    x: np.ndarray
    y: np.ndarray
    y_running: np.ndarray
    kkt: KktResidual
    success: bool
    termination: str
    grad_evals: int
    obj_evals: int
    seconds: float


def _resolve_curvature(problem: ProblemSpec, config: IalmConfig) -> CurvatureSchedule:
    if config.curvature_override is not None:
        return config.curvature_override
    if problem.default_curvature is not None:
        return problem.default_curvature
    if problem.constants is None:
        raise ValueError(
            "no curvature information: populate the constants ledger or supply "
            "a curvature override"
        )
    ledger = problem.constants
    L0, rho0 = problem.smooth.L, problem.smooth.rho

    def schedule(beta: float, y_norm: float) -> tuple[float, float]:
        return al_curvature_params(beta, y_norm, ledger, L0, rho0)

    return schedule


def ialm_solve(problem: ProblemSpec, config: IalmConfig) -> SolveReport:
    """Solve an equality-constrained composite problem to an eps-KKT point."""
    problem = problem.with_fresh_counters()
    curvature = _resolve_curvature(problem, config)
    h = problem.nonsmooth
    l = problem.constraints.n_constraints

    t0 = time.perf_counter()
    x = problem.x0
    y = np.zeros(l)
    c0_norm = float(np.linalg.norm(problem.constraints.evaluate(x)))

    records: list[OuterIterationRecord] = []
    beta = config.beta0
    final_kkt = None
    y_cert = y

    for k in range(config.max_outer):
        rho_hat, L_hat = curvature(beta, float(np.linalg.norm(y)))
        if not (math.isfinite(L_hat) and L_hat > 0 and math.isfinite(rho_hat) and rho_hat >= 0):
            raise ValueError(f"curvature schedule returned invalid (rho, L)=({rho_hat}, {L_hat})")
        rho_eff = max(rho_hat, config.rho_floor)
        phi = al_smooth_oracle(problem, y, beta, L_hat, rho_hat)
        sub = ippm_solve(
            phi,
            h,
            x,
            rho_eff,
            L_hat,
            config.eps,
            max_inner=config.max_inner,
        )
        x = sub.x
        c_next = problem.constraints.evaluate(x)
        pres = float(np.linalg.norm(c_next))
        y_cert = y + beta * c_next
        final_kkt = kkt_residual(x, y_cert, problem)
        converged = (
            sub.converged and pres <= config.eps and final_kkt.dres <= config.eps
        )

        if config.penalty_mode:
            w = 0.0
        else:
            gamma_k = gamma_schedule(k, c0_norm)
            w = dual_step_size(config.policy, k, pres, gamma_k)
        if w != 0.0 and pres > 0.0:
            if isinstance(config.policy, PracticalDual):
                # Unit-norm increment along c/||c||, stable however small
                # the residual is.
                y = y + c_next / pres
            elif isinstance(config.policy, PowerGrowthDual):
                scale = config.policy.M * (k + 1) ** config.policy.q
                y = y + scale * (c_next / pres)
            else:
                y = y + w * c_next
        dres_running = kkt_residual(x, y, problem).dres

        records.append(
            OuterIterationRecord(
                k=k,
                beta=beta,
                w=w,
                pres=pres,
                dres=final_kkt.dres,
                dres_running=dres_running,
                y_norm=float(np.linalg.norm(y)),
                grad_evals=problem.counters.grad,
                obj_evals=problem.counters.obj,
                seconds=time.perf_counter() - t0,
                x=x.copy(),
            )
        )

        if converged:
            return SolveReport(
                records=records,
                x=x,
                y=y_cert,
                y_running=y,
                kkt=final_kkt,
                success=True,
                termination="converged",
                grad_evals=problem.counters.grad,
                obj_evals=problem.counters.obj,
                seconds=time.perf_counter() - t0,
            )
        beta = beta * config.sigma

    return SolveReport(
        records=records,
        x=x,
        y=y_cert,
        y_running=y,
        kkt=final_kkt,
        success=False,
        termination="max_outer_exhausted",
        grad_evals=problem.counters.grad,
        obj_evals=problem.counters.obj,
        seconds=time.perf_counter() - t0,
    )
