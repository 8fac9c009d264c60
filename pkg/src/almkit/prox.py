"""Closed-form projections, proximal operators, and exact normal-cone
distances for the constraint sets used by the bundled experiments: boxes,
origin-centered balls, and the intersection of the nonnegative orthant with
a ball.

Matrix-shaped domains are handled by flattening to vectors; all operations
here are stateless and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Array, DimensionMismatch, ProxCapableFunction, as_vector

# Relative tolerance for deciding whether an iterate sits on a ball boundary.
_BOUNDARY_RTOL = 1e-10
# Absolute slack when checking that a point lies inside a set.
_MEMBERSHIP_ATOL = 1e-12


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned box {x : lower_i <= x_i <= upper_i}."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise DimensionMismatch("box bounds must be equal-length 1-D arrays")
        if np.any(lo > hi):
            raise ValueError("box is empty: some lower bound exceeds its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, n: int) -> "BoxSet":
        return cls(np.full(n, float(lo)), np.full(n, float(hi)))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))


@dataclass(frozen=True)
class BallSet:
    """Euclidean ball of radius r centered at the origin."""

    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("ball radius must be finite and positive")


@dataclass(frozen=True)
class NonnegBallSet:
    """Intersection of the nonnegative orthant with a ball of radius s."""

    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be finite and positive")


def project_box(x: Array, box: BoxSet) -> Array:
    """Coordinatewise clamp onto the box."""
    x = as_vector(x, box.dim)
    return np.clip(x, box.lower, box.upper)


def project_ball(x: Array, ball: BallSet) -> Array:
    """Radial scaling onto the ball; identity inside."""
    x = as_vector(x)
    nrm = float(np.linalg.norm(x))
    if nrm <= ball.radius:
        return x.copy()
    return (ball.radius / nrm) * x


def project_nonneg_ball(x: Array, s: NonnegBallSet) -> Array:
    """Exact projection onto {x >= 0, ||x|| <= s}.

    Zeroing the negative part commutes with the radial scaling because both
    the orthant and the ball are invariant under coordinate sign projection,
    so the composition is the exact Euclidean projection.
    """
    x = as_vector(x)
    y = np.maximum(x, 0.0)
    nrm = float(np.linalg.norm(y))
    if nrm > s.radius:
        y *= s.radius / nrm
    return y


def _check_in_box(x: Array, box: BoxSet) -> Array:
    scale = np.maximum(1.0, np.maximum(np.abs(box.lower), np.abs(box.upper)))
    if np.any(x < box.lower - _MEMBERSHIP_ATOL * scale) or np.any(
        x > box.upper + _MEMBERSHIP_ATOL * scale
    ):
        raise ValueError("point lies outside the box beyond tolerance")
    return np.clip(x, box.lower, box.upper)


def normal_cone_distance_box(x: Array, v: Array, box: BoxSet) -> float:
    """dist(v, N_X(x)) for the box X, with x in X (clamped within tolerance).

    Coordinatewise: interior coordinates contribute |v_i|; at an active upper
    bound the cone is [0, inf) so only the negative part of v_i contributes;
    symmetric at lower bounds; a pinned coordinate (lower == upper) absorbs
    everything.
    """
    x = as_vector(x, box.dim)
    v = as_vector(v, box.dim, "v")
    x = _check_in_box(x, box)
    at_lo = x <= box.lower
    at_hi = x >= box.upper
    d = np.abs(v).astype(float)
    d[at_hi] = np.maximum(0.0, -v[at_hi])
    d[at_lo] = np.maximum(0.0, v[at_lo])
    d[at_lo & at_hi] = 0.0
    return float(np.linalg.norm(d))


def normal_cone_distance_ball(x: Array, v: Array, ball: BallSet) -> float:
    """dist(v, N_X(x)) for the ball X.

    Interior points have N = {0}; boundary points have the outward ray
    {lam * x : lam >= 0}, onto which v is projected.
    """
    x = as_vector(x)
    v = as_vector(v, x.shape[0], "v")
    nrm = float(np.linalg.norm(x))
    if nrm > ball.radius * (1 + _BOUNDARY_RTOL) + _MEMBERSHIP_ATOL:
        raise ValueError("point lies outside the ball beyond tolerance")
    if nrm < ball.radius * (1 - _BOUNDARY_RTOL):
        return float(np.linalg.norm(v))
    lam = max(0.0, float(v @ x) / (nrm * nrm))
    return float(np.linalg.norm(v - lam * x))


def normal_cone_distance_nonneg(x: Array, v: Array) -> float:
    """dist(v, N(x)) for the nonnegative orthant at x >= 0."""
    x = as_vector(x)
    v = as_vector(v, x.shape[0], "v")
    if np.any(x < -_MEMBERSHIP_ATOL):
        raise ValueError("point lies outside the orthant beyond tolerance")
    active = x <= _MEMBERSHIP_ATOL
    d = np.abs(v).astype(float)
    # At active coordinates the cone is (-inf, 0]; only positive v_i costs.
    d[active] = np.maximum(0.0, v[active])
    return float(np.linalg.norm(d))


def normal_cone_distance_nonneg_ball(x: Array, v: Array, s: NonnegBallSet) -> float:
    """dist(v, N_C(x)) for C = orthant intersect ball of radius s.

    N_C(x) = {u + lam x : u_i <= 0 where x_i = 0, u_i = 0 where x_i > 0,
    lam >= 0 only on the sphere}.  For fixed lam the best u is closed form,
    and the minimization over lam >= 0 is a 1-D quadratic clamp.
    """
    x = as_vector(x)
    v = as_vector(v, x.shape[0], "v")
    nrm = float(np.linalg.norm(x))
    if nrm > s.radius * (1 + _BOUNDARY_RTOL) + _MEMBERSHIP_ATOL or np.any(
        x < -_MEMBERSHIP_ATOL
    ):
        raise ValueError("point lies outside the set beyond tolerance")
    active = x <= _MEMBERSHIP_ATOL
    free = ~active
    on_sphere = nrm >= s.radius * (1 - _BOUNDARY_RTOL)
    if on_sphere and float(np.sum(x[free] ** 2)) > 0:
        lam = max(0.0, float(v[free] @ x[free]) / float(np.sum(x[free] ** 2)))
    else:
        lam = 0.0
    resid_free = v[free] - lam * x[free]
    resid_active = np.maximum(0.0, v[active])
    return float(math.hypot(np.linalg.norm(resid_free), np.linalg.norm(resid_active)))


def zero_function() -> ProxCapableFunction:
    """The identically-zero nonsmooth term (free domain)."""
    return ProxCapableFunction(
        prox_fn=lambda v, step: v.copy(),
        value_fn=lambda x: 0.0,
        subdiff_distance_fn=lambda x, v: float(np.linalg.norm(v)),
        diameter=math.inf,
        cone_subdiff=True,
    )


def box_indicator(box: BoxSet) -> ProxCapableFunction:
    """Indicator of a box, with exact normal-cone distances."""
    scale = np.maximum(1.0, np.maximum(np.abs(box.lower), np.abs(box.upper)))

    def value(x):
        inside = np.all(x >= box.lower - _MEMBERSHIP_ATOL * scale) and np.all(
            x <= box.upper + _MEMBERSHIP_ATOL * scale
        )
        return 0.0 if inside else math.inf

    return ProxCapableFunction(
        prox_fn=lambda v, step: project_box(v, box),
        value_fn=value,
        subdiff_distance_fn=lambda x, v: normal_cone_distance_box(x, v, box),
        diameter=box.diameter,
        cone_subdiff=True,
    )


def ball_indicator(ball: BallSet) -> ProxCapableFunction:
    """Indicator of an origin-centered ball."""

    def value(x):
        return 0.0 if np.linalg.norm(x) <= ball.radius * (1 + _BOUNDARY_RTOL) else math.inf

    return ProxCapableFunction(
        prox_fn=lambda v, step: project_ball(v, ball),
        value_fn=value,
        subdiff_distance_fn=lambda x, v: normal_cone_distance_ball(x, v, ball),
        diameter=2.0 * ball.radius,
        cone_subdiff=True,
    )


def nonneg_ball_indicator(s: NonnegBallSet) -> ProxCapableFunction:
    """Indicator of the orthant-ball intersection (clustering domain)."""

    def value(x):
        ok = np.all(x >= -_MEMBERSHIP_ATOL) and np.linalg.norm(x) <= s.radius * (
            1 + _BOUNDARY_RTOL
        )
        return 0.0 if ok else math.inf

    return ProxCapableFunction(
        prox_fn=lambda v, step: project_nonneg_ball(v, s),
        value_fn=value,
        subdiff_distance_fn=lambda x, v: normal_cone_distance_nonneg_ball(x, v, s),
        diameter=2.0 * s.radius,
        cone_subdiff=True,
    )


def nonneg_indicator() -> ProxCapableFunction:
    """Indicator of the nonnegative orthant (slack variables)."""
    return ProxCapableFunction(
        prox_fn=lambda v, step: np.maximum(v, 0.0),
        value_fn=lambda x: 0.0 if np.all(x >= -_MEMBERSHIP_ATOL) else math.inf,
        subdiff_distance_fn=normal_cone_distance_nonneg,
        diameter=math.inf,
        cone_subdiff=True,
    )


def stacked(first: ProxCapableFunction, second: ProxCapableFunction, n_first: int) -> ProxCapableFunction:
    """Separable sum h(x[:n]) + g(x[n:]) over a partitioned vector."""

    def split(v):
        return v[:n_first], v[n_first:]

    def prox(v, step):
        a, b = split(v)
        return np.concatenate([first.prox(a, step), second.prox(b, step)])

    def value(x):
        a, b = split(x)
        return first.value(a) + second.value(b)

    subdiff = None
    if first.has_exact_subdiff and second.has_exact_subdiff:

        def subdiff(x, v):
            xa, xb = split(x)
            va, vb = split(v)
            return math.hypot(first.subdiff_distance(xa, va), second.subdiff_distance(xb, vb))

    if math.isinf(first.diameter) or math.isinf(second.diameter):
        diameter = math.inf
    else:
        diameter = math.hypot(first.diameter, second.diameter)
    return ProxCapableFunction(
        prox_fn=prox,
        value_fn=value,
        subdiff_distance_fn=subdiff,
        diameter=diameter,
        cone_subdiff=first.cone_subdiff and second.cone_subdiff,
    )
