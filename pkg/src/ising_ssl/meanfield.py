"""Deterministic limit of the community magnetizations and drift diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def z_infinity(eta: float, t):
    """Limit magnetizations ``(z1, z2)`` at time ``t`` starting from ``(eta, -eta)``.

    ``z1(t) = 1 + (eta - 1) exp(-t) = -z2(t)``.  ``t`` may be an array.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    z1 = 1.0 + (eta - 1.0) * np.exp(-t_arr)
    if np.ndim(z1) == 0:
        z1 = float(z1)
    return z1, -z1


@dataclass(frozen=True)
class MeanFieldCurve:
    eta: float

    def __call__(self, t):
        return z_infinity(self.eta, t)

    def rhs(self, z: np.ndarray) -> np.ndarray:
        return np.array([1.0 - z[0], -1.0 - z[1]])


def rk4(rhs, z0, t_grid) -> np.ndarray:
    """Classic fourth-order Runge-Kutta on an arbitrary ascending grid."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    out = np.empty((len(t_grid), len(z0)))
    z = np.asarray(z0, dtype=np.float64)
    out[0] = z
    for i in range(1, len(t_grid)):
        h = t_grid[i] - t_grid[i - 1]
        k1 = rhs(z)
        k2 = rhs(z + h / 2 * k1)
        k3 = rhs(z + h / 2 * k2)
        k4 = rhs(z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = z
    return out


def t_end_for_error(eta: float, eps: float) -> float:
    """Run time after which the limit error term ``(1 - eta) exp(-t)`` equals ``eps / 2``.

    Returns 0 when ``eps >= 2 (1 - eta)`` since the target already holds at ``t = 0``.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps >= 2 * (1 - eta):
        return 0.0
    return math.log(2 * (1 - eta) / eps)


@dataclass(frozen=True)
class DriftParams:
    a: float
    b: float
    alpha: float
    v1: float = 1.0
    v2: float = 1.0


def drift(z, k: int, p: DriftParams) -> float:
    """Linearized drift ``(a - alpha) v_k z_k + (b - alpha) v_other z_other`` for community ``k``."""
    z = np.asarray(z, dtype=np.float64)
    if k == 1:
        return (p.a - p.alpha) * p.v1 * z[..., 0] + (p.b - p.alpha) * p.v2 * z[..., 1]
    if k == 2:
        return (p.a - p.alpha) * p.v2 * z[..., 1] + (p.b - p.alpha) * p.v1 * z[..., 0]
    raise ValueError("k must be 1 or 2")


def regime(p: DriftParams) -> str:
    """Which of the four qualitative direction-field pictures ``alpha`` falls into."""
    a, b, al = p.a, p.b, p.alpha
    mid = (a + b) / 2
    if al < b:
        return "alpha < b"
    if b < al < mid:
        return "b < alpha < (a+b)/2"
    if mid < al < a:
        return "(a+b)/2 < alpha < a"
    if al > a:
        return "a < alpha"
    return "boundary"


def _slope(cx: float, cy: float) -> float:
    # line cx*z1 + cy*z2 = 0 written as z2 = slope * z1
    if cy == 0:
        return math.inf
    return -cx / cy


@dataclass
class DirectionField:
    points: np.ndarray
    sign1: np.ndarray
    sign2: np.ndarray
    slope1: float
    slope2: float
    regime: str


def direction_field(grid, p: DriftParams) -> DirectionField:
    """Signs of both drifts on ``grid`` (an ``(m, 2)`` array of z-pairs).

    ``slope1``/``slope2`` describe the zero lines of the two drifts as
    ``z2 = slope * z1`` (``inf`` for a vertical line).
    """
    pts = np.asarray(grid, dtype=np.float64).reshape(-1, 2)
    l1 = drift(pts, 1, p)
    l2 = drift(pts, 2, p)
    return DirectionField(
        points=pts,
        sign1=np.sign(l1).astype(int),
        sign2=np.sign(l2).astype(int),
        slope1=_slope((p.a - p.alpha) * p.v1, (p.b - p.alpha) * p.v2),
        slope2=_slope((p.b - p.alpha) * p.v1, (p.a - p.alpha) * p.v2),
        regime=regime(p),
    )


def square_grid(k: int) -> np.ndarray:
    """``k x k`` grid of z-pairs covering ``[-1, 1]^2``."""
    ax = np.linspace(-1.0, 1.0, k)
    z1, z2 = np.meshgrid(ax, ax, indexing="xy")
    return np.column_stack([z1.ravel(), z2.ravel()])


@dataclass
class Deviation:
    times: np.ndarray
    dev1: np.ndarray
    dev2: np.ndarray

    @property
    def per_time(self) -> np.ndarray:
        return np.maximum(self.dev1, self.dev2)

    @property
    def sup_dev(self) -> float:
        return float(self.per_time.max()) if len(self.times) else 0.0


def deviation(traj, eta: float) -> Deviation:
    """Distance of a sampled trajectory to the limit, per community and time."""
    times = np.asarray(traj.times, dtype=np.float64)
    m1, m2 = z_infinity(eta, times)
    return Deviation(times, np.abs(np.asarray(traj.z1) - m1), np.abs(np.asarray(traj.z2) - m2))


def default_grid(t_max: float, dt: float = 0.05) -> np.ndarray:
    """``0, dt, 2 dt, ..., t_max`` without floating drift at the end point."""
    m = int(round(t_max / dt))
    return np.arange(m + 1) * dt
