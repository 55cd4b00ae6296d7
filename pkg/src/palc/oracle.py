"""Brute-force references used to check the exact routines and the bounds.

Nothing here shares code paths with the solvers it checks beyond plain
polytope containment: margins come from a uniform gain grid, worst-case
costs from a parameter lattice and noise enumeration, reachable sets from
Monte-Carlo sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import polytope2d as geo
from .margin import deadbeat_max_gain
from .polytope2d import EmptySetError, Polytope2

Policy = Callable[[int, np.ndarray], np.ndarray]


class OracleRefusal(ValueError):
    """Request would blow up combinatorially."""


@dataclass(frozen=True)
class GridSpec:
    param_grid: int = 200
    noise_mode: str = "corners"
    noise_points: int = 3
    description: str = ""

    def __post_init__(self):
        if self.param_grid < 2:
            raise ValueError("param_grid must be >= 2")
        if self.noise_mode not in ("corners", "grid"):
            raise ValueError("noise_mode must be 'corners' or 'grid'")
        if self.noise_mode == "grid" and self.noise_points < 2:
            raise ValueError("noise grid needs at least 2 points")


@dataclass(frozen=True)
class QResult:
    value: float
    tolerance: float
    cell: tuple[float, float]
    n_params: int
    n_noise: int
    spec: GridSpec

    def __float__(self):
        return self.value


def linear_policy(k: float) -> Policy:
    return lambda n, x: k * x


def gain_schedule(gains) -> Policy:
    gains = list(gains)
    return lambda n, x: gains[n] * x


def pal_policy(P0: Polytope2, p: float, lambda_star: float) -> Policy:
    """Alternating learner gains frozen at the initial set's deadbeat bound."""
    k = deadbeat_max_gain(P0) / (lambda_star * p - 1)
    return lambda n, x: (k if n % 2 == 0 else -k) * x


def parameter_lattice(P: Polytope2, m: int) -> np.ndarray:
    """``m x m`` lattice over the bounding box, filtered by containment.

    Vertices are appended so the extreme points are always represented.
    """
    bb = geo.bounding_box(P)
    A, B = np.meshgrid(np.linspace(bb.l_a, bb.u_a, m), np.linspace(bb.l_b, bb.u_b, m))
    pts = np.column_stack([A.ravel(), B.ravel()])
    keep = np.ones(len(pts), dtype=bool)
    for h in P.halfspaces:
        keep &= h.offset - pts @ np.asarray(h.normal) >= -geo.EPS_GEOM
    return np.unique(np.vstack([pts[keep], P.vertices]), axis=0)


def _noise_sequences(N, eta, spec: GridSpec) -> np.ndarray:
    if spec.noise_mode == "corners":
        levels = [-eta, eta]
    else:
        if N > 6:
            raise OracleRefusal(f"grid noise over N={N} > 6 steps is refused")
        levels = list(np.linspace(-eta, eta, spec.noise_points))
    return np.array(list(itertools.product(levels, repeat=N)), dtype=float).reshape(-1, N)


def _rollout(x0, params, policy, noise):
    """States ``x_1..x_N`` for every (parameter, noise) pair: shape (P, W, N)."""
    a = params[:, 0][:, None]
    b = params[:, 1][:, None]
    x = np.full((len(params), len(noise)), float(x0))
    out = []
    for n in range(noise.shape[1]):
        u = policy(n, x)
        x = a * x + b * u + noise[None, :, n]
        out.append(x)
    return np.stack(out, axis=-1)


def q_horizon(x0, P: Polytope2, policy: Policy, N: int, eta, spec: GridSpec = GridSpec()) -> QResult:
    """Worst-case ``max_{1..N} |x_n|`` over a parameter lattice and noise set.

    A lower bound on the true supremum; ``tolerance`` is the largest jump of
    the lattice objective between neighbouring lattice nodes, a practical
    estimate of the gap at this resolution.
    """
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    if P.empty:
        raise EmptySetError("q_horizon over an empty parameter set")
    noise = _noise_sequences(N, eta, spec)
    params = parameter_lattice(P, spec.param_grid)
    xs = _rollout(x0, params, policy, noise)
    per_param = np.abs(xs).max(axis=(1, 2))
    value = float(per_param.max())

    bb = geo.bounding_box(P)
    m = spec.param_grid
    cell = ((bb.u_a - bb.l_a) / (m - 1), (bb.u_b - bb.l_b) / (m - 1))
    tol = _lattice_jump(x0, bb, m, P, policy, noise)
    return QResult(value, tol, cell, len(params), len(noise), spec)


def _lattice_jump(x0, bb, m, P, policy, noise) -> float:
    ga = np.linspace(bb.l_a, bb.u_a, m)
    gb = np.linspace(bb.l_b, bb.u_b, m)
    A, B = np.meshgrid(ga, gb)
    pts = np.column_stack([A.ravel(), B.ravel()])
    vals = np.abs(_rollout(x0, pts, policy, noise)).max(axis=(1, 2)).reshape(m, m)
    keep = np.ones(len(pts), dtype=bool)
    for h in P.halfspaces:
        keep &= h.offset - pts @ np.asarray(h.normal) >= -geo.EPS_GEOM
    keep = keep.reshape(m, m)
    jumps = [0.0]
    if m > 1:
        both = keep[:, 1:] & keep[:, :-1]
        if both.any():
            jumps.append(float(np.abs(np.diff(vals, axis=1))[both].max()))
        both = keep[1:, :] & keep[:-1, :]
        if both.any():
            jumps.append(float(np.abs(np.diff(vals, axis=0))[both].max()))
    return max(jumps)


def brute_margin(P, k_lo: float, k_hi: float, step: float) -> float:
    """``min`` over a uniform gain grid of the worst vertex eigenvalue."""
    if not k_lo < k_hi or not step > 0:
        raise ValueError("need k_lo < k_hi and step > 0")
    pts = P.vertices if isinstance(P, Polytope2) else np.asarray(P, float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptySetError("brute margin of an empty set")
    a = pts[:, 0][:, None]
    b = pts[:, 1][:, None]
    n = int(np.floor((k_hi - k_lo) / step)) + 1
    best = np.inf
    for start in range(0, n, 200_000):
        k = k_lo + step * np.arange(start, min(n, start + 200_000))
        f = np.abs(a + b * k).max(axis=0)
        best = min(best, float(f.min()))
    return best


def sample_polytope(P: Polytope2, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from a polygon (fan triangulation); segments and
    points are sampled along themselves."""
    v = P.vertices
    if len(v) == 0:
        raise EmptySetError("cannot sample an empty set")
    if len(v) == 1:
        return np.repeat(v, n, axis=0)
    if len(v) == 2:
        t = rng.random(n)[:, None]
        return v[0] + t * (v[1] - v[0])
    tri = np.stack([np.repeat(v[:1], len(v) - 2, 0), v[1:-1], v[2:]], axis=1)
    d1 = tri[:, 1] - tri[:, 0]
    d2 = tri[:, 2] - tri[:, 0]
    w = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    probs = w / w.sum() if w.sum() > 0 else None
    idx = rng.choice(len(tri), size=n, p=probs)
    r1 = rng.random(n)
    r2 = rng.random(n)
    flip = r1 + r2 > 1
    r1 = np.where(flip, 1 - r1, r1)
    r2 = np.where(flip, 1 - r2, r2)
    return tri[idx, 0] + r1[:, None] * d1[idx] + r2[:, None] * d2[idx]


def sampled_reach(x0, u, P: Polytope2, eta, samples: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo min/max of ``a x0 + b u + w``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    ab = sample_polytope(P, samples, rng)
    w = rng.uniform(-eta, eta, samples) if eta > 0 else np.zeros(samples)
    vals = ab[:, 0] * x0 + ab[:, 1] * u + w
    return float(vals.min()), float(vals.max())
