"""Seeded generators for the three bundled experiment families (nonconvex
box-and-equality quadratic programs, generalized eigenvalue problems, and
distance-matrix clustering), plus CSV ingestion and a versioned JSON
instance format.

Randomness comes from the Philox 64-bit counter-based generator keyed by
(seed, stream), one documented stream per matrix, so a seed fully
determines an instance across runs and platforms.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConstantsLedger,
    ConstraintOracle,
    ProblemSpec,
    SmoothOracle,
)
from .prox import BoxSet, NonnegBallSet, box_indicator, nonneg_ball_indicator, zero_function

FORMAT_VERSION = 1

# Philox stream indices, one per generated matrix/vector.
STREAM_Q = 0
STREAM_A = 1
STREAM_LINEAR = 2
STREAM_FEASIBLE = 3
STREAM_X0 = 4
STREAM_B = 5


def _rng(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sym_norm(M: np.ndarray) -> float:
    w = np.linalg.eigvalsh(M)
    return float(max(abs(w[0]), abs(w[-1])))


def quadratic_objective(Q: np.ndarray, c: Optional[np.ndarray] = None, half: bool = True) -> SmoothOracle:
    """SmoothOracle for (1/2) x'Qx + c'x (or x'Qx + c'x when half=False)."""
    Q = np.asarray(Q, dtype=float)
    c = np.zeros(Q.shape[0]) if c is None else np.asarray(c, dtype=float)
    w = np.linalg.eigvalsh(Q)
    scale = 0.5 if half else 1.0
    return SmoothOracle(
        value_fn=lambda x: scale * float(x @ (Q @ x)) + float(c @ x),
        gradient_fn=lambda x: 2.0 * scale * (Q @ x) + c,
        smoothness=2.0 * scale * max(abs(w[0]), abs(w[-1])),
        weak_convexity=2.0 * scale * max(0.0, -float(w[0])),
    )


# ---------------------------------------------------------------------------
# Box-and-equality quadratic programs
# ---------------------------------------------------------------------------


@dataclass
class LcqpInstance:
    """min (1/2)x'Qx + c'x  s.t.  Ax = b, lower <= x <= upper, with
    lambda_min(Q) = -rho by construction and b feasible by construction."""

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rho: float
    seed: int
    x0: np.ndarray

    def to_problem(self) -> ProblemSpec:
        Q, c, A, b = self.Q, self.c, self.A, self.b
        box = BoxSet(self.lower, self.upper)
        smooth = SmoothOracle(
            value_fn=lambda x: 0.5 * float(x @ (Q @ x)) + float(c @ x),
            gradient_fn=lambda x: Q @ x + c,
            smoothness=_sym_norm(Q),
            weak_convexity=self.rho,
        )
        m = A.shape[0]
        constraints = ConstraintOracle(
            evaluate_fn=lambda x: A @ x - b,
            jacobian_t_apply_fn=lambda x, v: A.T @ v,
            n_constraints=m,
            component_smoothness=np.zeros(m),
            component_weak_convexity=np.zeros(m),
            component_bounds=lcqp_row_bounds(A, b, box),
            jacobian_norm_bound=float(np.linalg.norm(A, 2)),
        )
        corner = float(np.sqrt(np.sum(np.maximum(self.lower**2, self.upper**2))))
        B0 = max(
            0.5 * smooth.L * corner**2 + float(np.linalg.norm(c)) * corner,
            smooth.L * corner + float(np.linalg.norm(c)),
        )
        ledger = ConstantsLedger.from_components(
            B0=B0,
            B_c=float(np.linalg.norm(A, 2)),
            B_i=constraints.component_bounds,
            L_i=np.zeros(m),
            rho_i=np.zeros(m),
            D=box.diameter,
        )
        AtA = A.T @ A
        rho = self.rho
        cache: dict[float, float] = {}

        def curvature(beta: float, y_norm: float) -> tuple[float, float]:
            # Exact AL curvature for this family: the smooth part is
            # ||Q + beta A'A||-smooth and rho-weakly convex.
            if beta not in cache:
                cache[beta] = _sym_norm(Q + beta * AtA)
            return (rho, cache[beta])

        return ProblemSpec(
            smooth=smooth,
            nonsmooth=box_indicator(box),
            constraints=constraints,
            constants=ledger,
            x0=self.x0,
            default_curvature=curvature,
        )


def lcqp_row_bounds(A: np.ndarray, b: np.ndarray, box: BoxSet) -> np.ndarray:
    """Per-row max{max_box |a_i'x - b_i|, ||a_i||}, box maximum in closed form."""
    mid = 0.5 * (box.lower + box.upper)
    half = 0.5 * (box.upper - box.lower)
    center = A @ mid
    spread = np.abs(A) @ half
    val_max = np.maximum(center + spread - b, b - (center - spread))
    return np.maximum(val_max, np.linalg.norm(A, axis=1))


def gen_lcqp(m: int, n: int, rho: float, seed: int) -> LcqpInstance:
    """Random instance: Gaussian data, spectrum shifted so lambda_min(Q) = -rho,
    b = A xhat for xhat in the inner half of the box [-5, 5]^n."""
    if not 0 < m < n:
        raise ValueError("need 0 < m < n")
    if rho <= 0:
        raise ValueError("rho must be positive")
    G = _rng(seed, STREAM_Q).standard_normal((n, n))
    Q = 0.5 * (G + G.T)
    w_min = float(np.linalg.eigvalsh(Q)[0])
    Q = Q - (w_min + rho) * np.eye(n)
    A = _rng(seed, STREAM_A).standard_normal((m, n))
    c = _rng(seed, STREAM_LINEAR).standard_normal(n)
    lower = np.full(n, -5.0)
    upper = np.full(n, 5.0)
    xhat = _rng(seed, STREAM_FEASIBLE).uniform(lower / 2.0, upper / 2.0)
    b = A @ xhat
    x0 = _rng(seed, STREAM_X0).uniform(lower, upper)
    return LcqpInstance(Q=Q, c=c, A=A, b=b, lower=lower, upper=upper, rho=rho, seed=seed, x0=x0)


# ---------------------------------------------------------------------------
# Generalized eigenvalue problems
# ---------------------------------------------------------------------------


@dataclass
class EvInstance:
    """min x'Qx  s.t.  x'Bx = 1, with B positive definite (lambda_min >= 1)."""

    Q: np.ndarray
    B: np.ndarray
    seed: int
    x0: np.ndarray

    def to_problem(
        self,
        rho_base_coeff: float = 0.2,
        rho_beta_coeff: float = 0.25,
        L_margin: float = 1.0,
    ) -> ProblemSpec:
        """Build the ProblemSpec with a curvature schedule for this family.

        No closed-form ledger exists (the domain is unbounded), so the
        schedule is tuned, not derived.  The weak-convexity curve follows
        the shape rho_base_coeff |lambda_min(Q)| + rho_beta_coeff beta,
        deliberately below the worst case: larger values stall the proximal
        point stopping rule without improving the measured certificates.
        The smoothness cap uses structure: near any subproblem stationary
        point the effective multiplier y + beta c is a (Q, B) pencil
        eigenvalue, so |c| <= (max|mu(Q, B)| + |y|)/beta bounds the
        constraint violation, hence the curvature, along realistic
        trajectories.  The measured certificates guard against these
        estimates being wrong.
        """
        Q, B = self.Q, self.B
        lam_min_Q = float(np.linalg.eigvalsh(Q)[0])
        smooth = SmoothOracle(
            value_fn=lambda x: float(x @ (Q @ x)),
            gradient_fn=lambda x: 2.0 * (Q @ x),
            smoothness=2.0 * _sym_norm(Q),
            weak_convexity=2.0 * max(0.0, -lam_min_Q),
        )
        constraints = ConstraintOracle(
            evaluate_fn=lambda x: np.array([float(x @ (B @ x)) - 1.0]),
            jacobian_t_apply_fn=lambda x, v: (2.0 * v[0]) * (B @ x),
            n_constraints=1,
            component_smoothness=np.array([2.0 * _sym_norm(B)]),
            component_weak_convexity=np.zeros(1),
        )
        norm_B = _sym_norm(B)
        # Largest |mu| with Qv = mu Bv: every subproblem stationary point has
        # effective multiplier y + beta c in [-pencil_cap, pencil_cap].
        B_half_inv = np.linalg.inv(np.linalg.cholesky(B))
        pencil_cap = _sym_norm(B_half_inv @ Q @ B_half_inv.T)
        L0 = smooth.L

        def curvature(beta: float, y_norm: float) -> tuple[float, float]:
            c_cap = (pencil_cap + y_norm) / beta
            rho_hat = rho_base_coeff * max(0.0, -lam_min_Q) + rho_beta_coeff * beta
            L_hat = L0 + 2.0 * norm_B * y_norm + L_margin * 2.0 * norm_B * beta * (
                3.0 * c_cap + 2.0
            )
            return (rho_hat, L_hat)

        return ProblemSpec(
            smooth=smooth,
            nonsmooth=zero_function(),
            constraints=constraints,
            constants=None,
            x0=self.x0,
            default_curvature=curvature,
        )


def gen_ev(n: int, seed: int) -> EvInstance:
    """Random instance: Q and Bbar symmetrized Gaussians, B = Bbar + (||Bbar||+1)I,
    x0 on the unit sphere rescaled away from the constraint surface."""
    if n < 2:
        raise ValueError("need n >= 2")
    G = _rng(seed, STREAM_Q).standard_normal((n, n))
    Q = 0.5 * (G + G.T)
    Gb = _rng(seed, STREAM_B).standard_normal((n, n))
    Bbar = 0.5 * (Gb + Gb.T)
    B = Bbar + (_sym_norm(Bbar) + 1.0) * np.eye(n)
    u = _rng(seed, STREAM_X0).standard_normal(n)
    u = u / np.linalg.norm(u)
    # The damping schedule needs ||c(x0)|| > 0; rescale if x0 starts on the
    # constraint surface.
    if abs(float(u @ (B @ u)) - 1.0) < 1e-3:
        u = math.sqrt(2.0) * u
    return EvInstance(Q=Q, B=B, seed=seed, x0=u)


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


@dataclass
class ClusteringInstance:
    """min sum_ij D_ij <x_i, x_j>  over X in R^{n x r} restricted to the
    orthant-ball set, s.t. x_i' sum_j x_j = 1 for every i."""

    D: np.ndarray
    r: int
    s: float
    x0: np.ndarray

    def to_problem(
        self,
        rho_beta_coeff: float = 1.0,
        L_base_coeff: float = 2.0,
        L_beta_coeff: Optional[float] = None,
    ) -> ProblemSpec:
        """Build the ProblemSpec with a tuned curvature schedule.

        The exact ledger bounds are far too pessimistic here, so the
        schedule is tuning: rho = rho0 + rho_beta_coeff beta, and smoothness
        L_base_coeff ||D|| + L_beta_coeff beta with L_beta_coeff defaulting
        to 4 ||D||, which scales with the instance.  The inner solver's
        stall guard flags an underestimate instead of looping silently.
        """
        D = self.D
        n, r = D.shape[0], self.r

        def value(xflat):
            X = xflat.reshape(n, r)
            return float(np.sum(D * (X @ X.T)))

        def gradient(xflat):
            X = xflat.reshape(n, r)
            return (2.0 * (D @ X)).ravel()

        w = np.linalg.eigvalsh(D)
        smooth = SmoothOracle(
            value_fn=value,
            gradient_fn=gradient,
            smoothness=2.0 * max(abs(w[0]), abs(w[-1])),
            weak_convexity=2.0 * max(0.0, -float(w[0])),
        )

        def evaluate(xflat):
            X = xflat.reshape(n, r)
            return X @ X.sum(axis=0) - 1.0

        def jac_t_apply(xflat, v):
            X = xflat.reshape(n, r)
            col = X.sum(axis=0)
            return (np.outer(v, col) + (X.T @ v)[None, :]).ravel()

        # Per-row constraint Hessian is (e_i 1' + 1 e_i') kron I_r.
        Ln = 1.0 + math.sqrt(n)
        rho_n = max(0.0, math.sqrt(n) - 1.0)
        s = self.s
        Bi = max(s * s * math.sqrt(n) + 1.0, 2.0 * math.sqrt(n) * s)
        ledger = ConstantsLedger.from_components(
            B0=max(smooth.L / 2.0 * s * s, smooth.L * s),
            B_c=2.0 * n * s,
            B_i=np.full(n, Bi),
            L_i=np.full(n, Ln),
            rho_i=np.full(n, rho_n),
            D=2.0 * s,
        )
        constraints = ConstraintOracle(
            evaluate_fn=evaluate,
            jacobian_t_apply_fn=jac_t_apply,
            n_constraints=n,
            component_smoothness=np.full(n, Ln),
            component_weak_convexity=np.full(n, rho_n),
            component_bounds=np.full(n, Bi),
        )
        norm_D = smooth.L / 2.0
        rho0 = smooth.rho
        L_base = L_base_coeff * norm_D
        k_L = 4.0 * norm_D if L_beta_coeff is None else L_beta_coeff

        def curvature(beta: float, y_norm: float) -> tuple[float, float]:
            return (rho0 + rho_beta_coeff * beta, L_base + k_L * beta)

        return ProblemSpec(
            smooth=smooth,
            nonsmooth=nonneg_ball_indicator(NonnegBallSet(self.s)),
            constraints=constraints,
            constants=ledger,
            x0=self.x0,
            default_curvature=curvature,
        )


def distance_matrix(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=2))


def gen_clustering(points: np.ndarray, r: int, s: float, seed: int = 0) -> ClusteringInstance:
    """Instance from data points: D_ij = ||z_i - z_j||, embedding width r,
    orthant-ball radius s."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("points must be an n x d matrix with n >= 2")
    if r < 1 or s <= 0:
        raise ValueError("need r >= 1 and s > 0")
    D = distance_matrix(points)
    n = D.shape[0]
    X0 = np.abs(_rng(seed, STREAM_X0).standard_normal((n, r))) / math.sqrt(n * r)
    nrm = float(np.linalg.norm(X0))
    if nrm > s:
        X0 *= s / nrm
    x0 = X0.ravel()
    c0 = X0 @ X0.sum(axis=0) - 1.0
    if float(np.linalg.norm(c0)) < 1e-3:
        x0 = 0.5 * x0
    return ClusteringInstance(D=D, r=int(r), s=float(s), x0=x0)


# ---------------------------------------------------------------------------
# CSV ingestion and instance serialization
# ---------------------------------------------------------------------------


def load_points_csv(path: str) -> np.ndarray:
    """Numeric rectangular CSV -> n x d matrix; a non-numeric first row is
    treated as a header and skipped."""
    rows: list[list[float]] = []
    width: Optional[int] = None
    first_content = True
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                if first_content:
                    first_content = False
                    continue
                raise ValueError(f"{path}: line {lineno}: non-numeric cell") from None
            first_content = False
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} cells, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no numeric data rows")
    return np.asarray(rows, dtype=float)


def instance_to_dict(instance) -> dict:
    """Versioned JSON-ready dict; matrices as row-major nested lists."""
    if isinstance(instance, LcqpInstance):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "lcqp",
            "seed": instance.seed,
            "rho": instance.rho,
            "Q": instance.Q.tolist(),
            "c": instance.c.tolist(),
            "A": instance.A.tolist(),
            "b": instance.b.tolist(),
            "lower": instance.lower.tolist(),
            "upper": instance.upper.tolist(),
            "x0": instance.x0.tolist(),
        }
    if isinstance(instance, EvInstance):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "ev",
            "seed": instance.seed,
            "Q": instance.Q.tolist(),
            "B": instance.B.tolist(),
            "x0": instance.x0.tolist(),
        }
    if isinstance(instance, ClusteringInstance):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "cluster",
            "D": instance.D.tolist(),
            "r": instance.r,
            "s": instance.s,
            "x0": instance.x0.tolist(),
        }
    raise TypeError(f"unknown instance type {type(instance)!r}")


def instance_from_dict(data: dict):
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported instance format_version {version!r}")
    kind = data.get("kind")
    if kind == "lcqp":
        return LcqpInstance(
            Q=np.asarray(data["Q"], dtype=float),
            c=np.asarray(data["c"], dtype=float),
            A=np.asarray(data["A"], dtype=float),
            b=np.asarray(data["b"], dtype=float),
            lower=np.asarray(data["lower"], dtype=float),
            upper=np.asarray(data["upper"], dtype=float),
            rho=float(data["rho"]),
            seed=int(data["seed"]),
            x0=np.asarray(data["x0"], dtype=float),
        )
    if kind == "ev":
        return EvInstance(
            Q=np.asarray(data["Q"], dtype=float),
            B=np.asarray(data["B"], dtype=float),
            seed=int(data["seed"]),
            x0=np.asarray(data["x0"], dtype=float),
        )
    if kind == "cluster":
        return ClusteringInstance(
            D=np.asarray(data["D"], dtype=float),
            r=int(data["r"]),
            s=float(data["s"]),
            x0=np.asarray(data["x0"], dtype=float),
        )
    raise ValueError(f"unknown instance kind {kind!r}")


def save_instance(instance, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh)


def load_instance(path: str):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
