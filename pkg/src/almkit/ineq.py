"""Augmented Lagrangian solver for nonconvex objectives with affine
equality plus smooth convex inequality constraints

    minimize g(x) + h(x)   subject to  A x = b,  f(x) <= 0,

using the hinge-penalized AL

    L_beta(x; y, z) = g(x) + h(x) + y'(Ax-b) + (beta/2)||Ax-b||^2
                      + (||[z + beta f(x)]_+||^2 - ||z||^2) / (2 beta),

and a slack-variable bridge that maps general inequality problems onto the
equality solver.  The hinge keeps the smooth part continuously
differentiable (gradient Lipschitz, not twice differentiable), which is all
the inner solver needs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    Array,
    ConstraintOracle,
    DimensionMismatch,
    EvalCounters,
    NonFiniteValue,
    ProblemSpec,
    ProxCapableFunction,
    SmoothOracle,
    as_vector,
)
from .ialm import (
    IalmConfig,
    PowerGrowthDual,
    PracticalDual,
    TheoreticalDual,
    gamma_schedule,
)
from .ippm import ippm_solve
from .prox import nonneg_indicator, stacked


@dataclass(frozen=True)
class IneqConstants:
    """Aggregate bounds over dom(h) for the inequality-constrained problem."""

    B0: float
    B_f: float
    B_bar_c: float
    AtA_norm: float
    D: float

    def __post_init__(self):
        for name in ("B0", "B_f", "B_bar_c", "AtA_norm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass
class IneqProblemSpec:
    """Problem instance with affine equalities and convex inequalities.

    ``ineq`` must carry per-component bounds (both |f_i| and ||grad f_i||)
    and smoothness constants; convexity of each f_i is assumed, not checked.
    """

    smooth: SmoothOracle
    nonsmooth: ProxCapableFunction
    A: np.ndarray
    b: np.ndarray
    ineq: ConstraintOracle
    constants: IneqConstants
    rho0: float
    x0: np.ndarray
    counters: EvalCounters = field(default_factory=EvalCounters)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.x0 = as_vector(self.x0, name="x0")
        if self.A.ndim != 2 or self.A.shape[0] != self.b.shape[0]:
            raise DimensionMismatch("affine part shapes inconsistent")
        if self.A.shape[0] > 0 and self.A.shape[1] != self.x0.shape[0]:
            raise DimensionMismatch("affine part column count must match dim")
        if self.rho0 < 0:
            raise ValueError("rho0 must be nonnegative")
        if self.ineq.component_bounds is None or self.ineq.component_smoothness is None:
            raise ValueError("inequality oracle needs per-component bounds and smoothness")
        if not math.isfinite(self.nonsmooth.value(self.x0)):
            raise ValueError("x0 lies outside the domain of the nonsmooth term")

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    @property
    def n_eq(self) -> int:
        return self.A.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq.n_constraints

    def with_fresh_counters(self) -> "IneqProblemSpec":
        spec = IneqProblemSpec.__new__(IneqProblemSpec)
        spec.smooth = self.smooth.with_counters(EvalCounters())
        spec.nonsmooth = self.nonsmooth
        spec.A = self.A
        spec.b = self.b
        spec.ineq = self.ineq
        spec.constants = self.constants
        spec.rho0 = self.rho0
        spec.x0 = self.x0
        spec.counters = EvalCounters()
        return spec


@dataclass(frozen=True)
class TripleKktResidual:
    """Primal, dual, and complementarity residuals for inequality KKT.

    pres  = sqrt(||Ax-b||^2 + ||[f(x)]_+||^2)
    compl = sum_i |z_i f_i(x)|
    """

    pres: float
    dres: float
    compl: float
    dres_is_upper_bound: bool = False
    pres_eq: float = 0.0
    pres_ineq: float = 0.0

    def __post_init__(self):
        for name in ("pres", "dres", "compl"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise NonFiniteValue(f"{name} must be finite")
            if val < 0:
                raise ValueError(f"{name} must be nonnegative")


def _check_ineq_inputs(x, y, z, beta, problem):
    x = as_vector(x, problem.dim, "x")
    y = as_vector(y, problem.n_eq, "y")
    z = as_vector(z, problem.n_ineq, "z")
    if np.any(z < 0):
        raise ValueError("inequality multipliers z must be nonnegative")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return x, y, z


def _ineq_smooth_value(x, y, z, beta, problem) -> float:
    r = problem.A @ x - problem.b if problem.n_eq else np.zeros(0)
    f = problem.ineq.evaluate(x)
    hinge = np.maximum(z + beta * f, 0.0)
    return (
        problem.smooth.value(x)
        + float(y @ r)
        + 0.5 * beta * float(r @ r)
        + (float(hinge @ hinge) - float(z @ z)) / (2.0 * beta)
    )


def _ineq_smooth_gradient(x, y, z, beta, problem) -> Array:
    g = problem.smooth.gradient(x)
    if problem.n_eq:
        r = problem.A @ x - problem.b
        g = g + problem.A.T @ (y + beta * r)
    f = problem.ineq.evaluate(x)
    hinge = np.maximum(z + beta * f, 0.0)
    return g + problem.ineq.jacobian_transpose_apply(x, hinge)


def al_ineq_value(x: Array, y: Array, z: Array, beta: float, problem: IneqProblemSpec) -> float:
    """Hinge-penalized augmented Lagrangian value (includes the h term)."""
    x, y, z = _check_ineq_inputs(x, y, z, beta, problem)
    problem.counters.obj += 1
    val = _ineq_smooth_value(x, y, z, beta, problem) + problem.nonsmooth.value(x)
    if not math.isfinite(val):
        raise NonFiniteValue("augmented Lagrangian value overflowed")
    return val


def al_ineq_gradient_smooth(
    x: Array, y: Array, z: Array, beta: float, problem: IneqProblemSpec
) -> Array:
    """Gradient of the smooth AL part:
    grad g + A'(y + beta (Ax-b)) + J_f' [z + beta f(x)]_+."""
    x, y, z = _check_ineq_inputs(x, y, z, beta, problem)
    problem.counters.grad += 1
    return _ineq_smooth_gradient(x, y, z, beta, problem)


def ineq_smoothness_bound(problem: IneqProblemSpec, beta: float, z: Array) -> float:
    """Smoothness of the smooth AL part:
    L0 + beta ||A'A|| + sum_i (beta B_i^f (B_i^f + L_i^f) + L_i^f |z_i|)."""
    Bf = problem.ineq.component_bounds
    Lf = problem.ineq.component_smoothness
    return float(
        problem.smooth.L
        + beta * problem.constants.AtA_norm
        + np.sum(beta * Bf * (Bf + Lf) + Lf * np.abs(z))
    )


def kkt_residual_ineq(x: Array, y: Array, z: Array, problem: IneqProblemSpec) -> TripleKktResidual:
    """Measure the three inequality-KKT residuals at (x, y, z)."""
    x, y, z = _check_ineq_inputs(x, y, z, 1.0, problem)
    r = problem.A @ x - problem.b if problem.n_eq else np.zeros(0)
    f = problem.ineq.evaluate(x)
    pres_eq = float(np.linalg.norm(r))
    pres_ineq = float(np.linalg.norm(np.maximum(f, 0.0)))
    v = problem.smooth.gradient(x) + problem.ineq.jacobian_transpose_apply(x, z)
    if problem.n_eq:
        v = v + problem.A.T @ y
    exact = problem.nonsmooth.subdiff_distance(x, -v)
    if exact is not None:
        dres, flagged = exact, False
    elif problem.nonsmooth.cone_subdiff:
        dres, flagged = float(np.linalg.norm(v)), True
    else:
        L = max(problem.smooth.L, 1.0)
        x_fwd = problem.nonsmooth.prox(x - v / L, 1.0 / L)
        v_fwd = problem.smooth.gradient(x_fwd) + problem.ineq.jacobian_transpose_apply(x_fwd, z)
        if problem.n_eq:
            v_fwd = v_fwd + problem.A.T @ y
        dres, flagged = float(np.linalg.norm(v_fwd - v + L * (x - x_fwd))), True
    return TripleKktResidual(
        pres=float(math.hypot(pres_eq, pres_ineq)),
        dres=dres,
        compl=float(np.sum(np.abs(z * f))),
        dres_is_upper_bound=flagged,
        pres_eq=pres_eq,
        pres_ineq=pres_ineq,
    )


def ineq_dual_step_size(policy, k: int, max_res: float, gamma_k: float, beta: float) -> float:
    """Policy step size capped at beta, which keeps z nonnegative."""
    if isinstance(policy, TheoreticalDual):
        w = policy.w0
        if max_res > 0.0:
            w = min(w, policy.w0 * gamma_k / max_res)
    elif isinstance(policy, PowerGrowthDual):
        w = policy.M * (k + 1) ** policy.q / max_res if max_res > 0.0 else math.inf
    elif isinstance(policy, PracticalDual):
        w = 1.0 / max_res if max_res > 0.0 else math.inf
    else:
        raise TypeError(f"unknown dual step policy {policy!r}")
    return min(w, beta)


def dual_update_z(z: Array, f_vals: Array, w: float, beta: float) -> Array:
    """z_i <- z_i + w max{-z_i/beta, f_i(x)}, clamped to stay nonnegative.

    The clamp only matters in floating point: with w <= beta the update is
    nonnegative exactly.
    """
    if w < 0 or w > beta:
        raise ValueError("need 0 <= w <= beta to preserve z >= 0")
    return np.maximum(z + w * np.maximum(-z / beta, f_vals), 0.0)


@dataclass(frozen=True)
class IneqOuterRecord:
    k: int
    beta: float
    w: float
    pres: float
    pres_eq: float
    pres_ineq: float
    dres: float
    compl: float
    y_norm: float
    z_norm: float
    grad_evals: int
    obj_evals: int
    seconds: float
    x: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class IneqSolveReport:
    records: list
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    y_running: np.ndarray
    z_running: np.ndarray
    kkt: TripleKktResidual
    success: bool
    termination: str
    grad_evals: int
    obj_evals: int
    seconds: float


def ialm_ineq_solve(problem: IneqProblemSpec, config: IalmConfig) -> IneqSolveReport:
    """Drive the inequality-constrained problem to an eps-KKT point.

    Subproblems stay rho0-weakly convex because the hinge composition of a
    convex constraint is convex; the dual clamp max{-z_i/beta, f_i} together
    with w_k <= beta_k keeps z nonnegative throughout.
    """
    problem = problem.with_fresh_counters()
    h = problem.nonsmooth
    t0 = time.perf_counter()

    x = problem.x0
    y = np.zeros(problem.n_eq)
    z = np.zeros(problem.n_ineq)

    # Damping scale: smallest initial residual among the blocks present.
    parts = []
    if problem.n_eq:
        parts.append(float(np.linalg.norm(problem.A @ x - problem.b)))
    if problem.n_ineq:
        parts.append(float(np.linalg.norm(np.maximum(problem.ineq.evaluate(x), 0.0))))
    gamma0_scale = min(parts) if parts else 0.0

    records: list[IneqOuterRecord] = []
    beta = config.beta0
    final_kkt = None
    y_cert, z_cert = y, z

    for k in range(config.max_outer):
        if config.curvature_override is not None:
            rho_hat, L_hat = config.curvature_override(
                beta, float(math.hypot(np.linalg.norm(y), np.linalg.norm(z)))
            )
        else:
            rho_hat, L_hat = problem.rho0, ineq_smoothness_bound(problem, beta, z)
        rho_eff = max(rho_hat, config.rho_floor)
        yk, zk = y, z
        phi = SmoothOracle(
            value_fn=lambda v, yk=yk, zk=zk, beta=beta: _ineq_smooth_value(
                v, yk, zk, beta, problem
            ),
            gradient_fn=lambda v, yk=yk, zk=zk, beta=beta: _ineq_smooth_gradient(
                v, yk, zk, beta, problem
            ),
            smoothness=L_hat,
            weak_convexity=rho_hat,
            counters=problem.counters,
        )
        sub = ippm_solve(phi, h, x, rho_eff, L_hat, config.eps, max_inner=config.max_inner)
        x = sub.x

        r = problem.A @ x - problem.b if problem.n_eq else np.zeros(0)
        f = problem.ineq.evaluate(x)
        pres_eq = float(np.linalg.norm(r))
        pres_ineq = float(np.linalg.norm(np.maximum(f, 0.0)))
        y_cert = y + beta * r
        z_cert = np.maximum(z + beta * f, 0.0)
        final_kkt = kkt_residual_ineq(x, y_cert, z_cert, problem)
        converged = (
            sub.converged
            and final_kkt.pres <= config.eps
            and final_kkt.dres <= config.eps
            and final_kkt.compl <= config.eps
        )

        if config.penalty_mode:
            w = 0.0
        else:
            gamma_k = gamma_schedule(k, gamma0_scale)
            w = ineq_dual_step_size(config.policy, k, max(pres_eq, pres_ineq), gamma_k, beta)
        if w != 0.0:
            if problem.n_eq and pres_eq > 0.0:
                y = y + w * r
            if problem.n_ineq:
                z = dual_update_z(z, f, w, beta)

        records.append(
            IneqOuterRecord(
                k=k,
                beta=beta,
                w=w,
                pres=final_kkt.pres,
                pres_eq=pres_eq,
                pres_ineq=pres_ineq,
                dres=final_kkt.dres,
                compl=final_kkt.compl,
                y_norm=float(np.linalg.norm(y)),
                z_norm=float(np.linalg.norm(z)),
                grad_evals=problem.counters.grad,
                obj_evals=problem.counters.obj,
                seconds=time.perf_counter() - t0,
                x=x.copy(),
                z=z.copy(),
            )
        )

        if converged:
            return IneqSolveReport(
                records=records,
                x=x,
                y=y_cert,
                z=z_cert,
                y_running=y,
                z_running=z,
                kkt=final_kkt,
                success=True,
                termination="converged",
                grad_evals=problem.counters.grad,
                obj_evals=problem.counters.obj,
                seconds=time.perf_counter() - t0,
            )
        beta = beta * config.sigma

    return IneqSolveReport(
        records=records,
        x=x,
        y=y_cert,
        z=z_cert,
        y_running=y,
        z_running=z,
        kkt=final_kkt,
        success=False,
        termination="max_outer_exhausted",
        grad_evals=problem.counters.grad,
        obj_evals=problem.counters.obj,
        seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class SlackCertificate:
    """Inequality-problem certificate recovered from the slack reformulation.

    ``z_hat`` drops the (small) negative part of the raw slack multiplier;
    ``neg_part_norm`` records what was dropped and ``compl`` the resulting
    complementarity sum at ``x``.
    """

    x: np.ndarray
    s: np.ndarray
    y_eq: np.ndarray
    z_raw: np.ndarray
    z_hat: np.ndarray
    neg_part_norm: float
    compl: float


@dataclass(frozen=True)
class SlackReformulation:
    """Equality-form problem over (x, s) plus the certificate translator."""

    problem: ProblemSpec
    n_original: int
    n_ineq: int

    def translate(self, x_full: Array, y_full: Array, ineq: ConstraintOracle) -> SlackCertificate:
        n, m = self.n_original, self.n_ineq
        x_full = as_vector(x_full, n + m, "x_full")
        l = y_full.shape[0] - m
        y_full = as_vector(y_full, l + m, "y_full")
        x, s = x_full[:n], x_full[n:]
        y_eq, z_raw = y_full[:l], y_full[l:]
        z_hat = np.maximum(z_raw, 0.0)
        f = ineq.evaluate(x)
        return SlackCertificate(
            x=x,
            s=s,
            y_eq=y_eq,
            z_raw=z_raw,
            z_hat=z_hat,
            neg_part_norm=float(np.linalg.norm(np.minimum(z_raw, 0.0))),
            compl=float(np.sum(np.abs(z_hat * f))),
        )


def slack_reformulate(
    problem: IneqProblemSpec, slack_bound: Optional[float] = None
) -> SlackReformulation:
    """Rewrite f(x) <= 0 as f(x) + s = 0 with s >= 0 folded into the
    nonsmooth term, producing an equality-form ProblemSpec over (x, s).

    The attached curvature schedule treats slack rows like any other
    constraint row with |f_j + s_j| bounded by B_j^f + slack_bound; it is
    exact when every f_j is affine.
    """
    n, m, l = problem.dim, problem.n_ineq, problem.n_eq
    A, b, ineq = problem.A, problem.b, problem.ineq
    Bf = ineq.component_bounds
    Lf = ineq.component_smoothness
    if slack_bound is None:
        slack_bound = 2.0 * max(1.0, float(np.max(Bf))) if m else 1.0

    g = problem.smooth

    def value(xs):
        return g.value(xs[:n])

    def gradient(xs):
        return np.concatenate([g.gradient(xs[:n]), np.zeros(m)])

    smooth = SmoothOracle(value, gradient, g.L, g.rho)

    def evaluate(xs):
        x, s = xs[:n], xs[n:]
        eq = A @ x - b if l else np.zeros(0)
        return np.concatenate([eq, ineq.evaluate(x) + s])

    def jac_t_apply(xs, v):
        x = xs[:n]
        v_eq, v_in = v[:l], v[l:]
        top = ineq.jacobian_transpose_apply(x, v_in)
        if l:
            top = top + A.T @ v_eq
        return np.concatenate([top, v_in])

    constraints = ConstraintOracle(
        evaluate_fn=evaluate,
        jacobian_t_apply_fn=jac_t_apply,
        n_constraints=l + m,
        component_smoothness=np.concatenate([np.zeros(l), Lf]),
        component_weak_convexity=np.zeros(l + m),
    )

    nonsmooth = stacked(problem.nonsmooth, nonneg_indicator(), n)
    f0 = ineq.evaluate(problem.x0)
    x0_full = np.concatenate([problem.x0, np.maximum(-f0, 0.0)])

    L_bar_f = float(np.sqrt(np.sum(Lf**2)))
    growth_rho = float(np.sum((Bf + slack_bound) * Lf))
    growth_L = float(
        problem.constants.AtA_norm + np.sum(Bf**2 + 1.0) + np.sum((Bf + slack_bound) * Lf)
    )
    L0, rho0 = g.L, problem.rho0

    def curvature(beta: float, y_norm: float) -> tuple[float, float]:
        return (
            rho0 + y_norm * L_bar_f + beta * growth_rho,
            L0 + y_norm * L_bar_f + beta * growth_L,
        )

    spec = ProblemSpec(
        smooth=smooth,
        nonsmooth=nonsmooth,
        constraints=constraints,
        constants=None,
        x0=x0_full,
        default_curvature=curvature,
    )
    return SlackReformulation(problem=spec, n_original=n, n_ineq=m)
