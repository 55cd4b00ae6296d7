"""Stability margin and gain of a parameter set.

The margin of a set P is ``min_k max_{(a, b) in P} |a + b k|``. For a fixed
gain the inner maximum is attained at a vertex, so everything here works on
the vertex list and reduces to minimizing a convex piecewise-linear function
of one variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polytope2d import BoundingBox, EmptySetError, Polytope2

EPS_NUM = 1e-9


class ControllabilityError(ValueError):
    """The parameter set touches or straddles ``b = 0``."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class MarginResult:
    lam: float
    gain: float


@dataclass(frozen=True)
class BoxStats:
    a_av: float
    b_av: float
    delta_a: float
    delta_b: float
    k_av: float
    k_max: float


def worst_eigenvalue(points, k) -> np.ndarray:
    """``max_i |a_i + b_i k|`` for one gain or an array of gains."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    k = np.asarray(k, dtype=float)
    vals = np.abs(pts[:, 0, None] + pts[:, 1, None] * k.reshape(1, -1))
    return vals.max(axis=0).reshape(k.shape)


def _vertices(P) -> np.ndarray:
    if isinstance(P, Polytope2):
        if P.empty:
            raise EmptySetError("stability margin of an empty set")
        return P.vertices
    pts = np.asarray(P, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptySetError("stability margin of an empty set")
    return pts


def stability_margin(P) -> MarginResult:
    """Exact margin and gain by candidate enumeration.

    The breakpoints of ``k -> max_i |a_i + b_i k|`` are among the pairwise
    intersections of the lines ``±(a_i + b_i k)`` and their zero crossings;
    the minimum of a convex piecewise-linear function sits at one of them.
    Among minimizers the one of smallest ``|k|`` is returned (``k = 0`` is
    always a candidate, which settles flat minima that straddle zero).

    Accepts a :class:`Polytope2` or an ``(n, 2)`` array of points.
    """
    pts = _vertices(P)
    c = np.concatenate([pts[:, 0], -pts[:, 0]])
    d = np.concatenate([pts[:, 1], -pts[:, 1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = d[:, None] - d[None, :]
        cross = (c[None, :] - c[:, None]) / dd
        zeros = -c / d
    cand = np.concatenate([cross[np.abs(dd) > 0], zeros[d != 0], [0.0]])
    cand = np.unique(cand[np.isfinite(cand)])
    f = worst_eigenvalue(pts, cand)
    lam = float(f.min())
    near = cand[f <= lam + 1e-12 * max(1.0, lam)]
    gain = float(near[np.argmin(np.abs(near))])
    return MarginResult(lam, gain + 0.0)


def pairwise_margin(a, b, valid=None) -> np.ndarray:
    """Margin value only, batched over the leading axes.

    Uses the dual of the one-dimensional min-max: the optimum equals the
    largest zero-slope convex combination of an increasing and a decreasing
    line, i.e. ``max_{i,j} (s_i a_i |b_j| - s_j a_j |b_i|) / (|b_i| + |b_j|)``
    with ``s = sign(b)``, together with ``|a_i|`` for points on ``b = 0``.
    ``a`` and ``b`` have shape ``(..., m)``; ``valid`` masks out padding.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if valid is None:
        valid = np.ones(a.shape, dtype=bool)
    s = np.sign(b)
    ab = np.abs(b)
    num = (s * a)[..., :, None] * ab[..., None, :] - (s * a)[..., None, :] * ab[..., :, None]
    den = ab[..., :, None] + ab[..., None, :]
    pair_ok = valid[..., :, None] & valid[..., None, :] & (den > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(pair_ok, num / np.where(den > 0, den, 1.0), -np.inf)
    best = vals.max(axis=(-2, -1))
    flat = np.where(valid & (b == 0), np.abs(a), -np.inf).max(axis=-1)
    return np.maximum(np.maximum(best, flat), 0.0)


def margin_value(P) -> float:
    """Margin only, via :func:`pairwise_margin` (no gain)."""
    pts = _vertices(P)
    return float(pairwise_margin(pts[:, 0], pts[:, 1]))


def box_stats(B: BoundingBox) -> BoxStats:
    a_av = (B.u_a + B.l_a) / 2
    b_av = (B.u_b + B.l_b) / 2
    k_av = -a_av / b_av if b_av != 0 else np.inf
    k_max = max(abs(B.l_a), abs(B.u_a)) / B.l_b if B.l_b > 0 else np.inf
    return BoxStats(a_av, b_av, (B.u_a - B.l_a) / 2, (B.u_b - B.l_b) / 2, k_av, k_max)


def box_margin(B: BoundingBox) -> MarginResult:
    """Closed form ``|k_av| Δb + Δa`` for a box with ``0 < l_b``."""
    if not B.l_b > 0:
        raise ControllabilityError(f"box is not controllable: l_b = {B.l_b} <= 0")
    st = box_stats(B)
    return MarginResult(abs(st.k_av) * st.delta_b + st.delta_a, st.k_av + 0.0)


def deadbeat_max_gain(P) -> float:
    """``max |a / b|`` over the set; vertex-attained when b is sign-definite."""
    pts = _vertices(P)
    b = pts[:, 1]
    if not (np.all(b > 0) or np.all(b < 0)):
        raise ControllabilityError("b is not sign-definite on the parameter set")
    return float(np.max(np.abs(pts[:, 0] / b)))


def pal_slab_deltas(x_prev2, x_prev1, k_prev2, k_prev1, eta):
    """Half-widths ``(Δb, Δa)`` of the box around two opposite-gain slabs."""
    if x_prev2 == 0 or x_prev1 == 0:
        raise PreconditionError("states must be nonzero")
    if k_prev2 == 0 or k_prev1 == 0 or np.sign(k_prev2) == np.sign(k_prev1):
        raise PreconditionError("gains must be nonzero with opposite signs")
    e2 = eta / abs(x_prev2)
    e1 = eta / abs(x_prev1)
    ks = abs(k_prev1) + abs(k_prev2)
    delta_b = (e2 + e1) / ks
    delta_a = (abs(k_prev1) * e2 + abs(k_prev2) * e1) / ks
    return delta_b, delta_a


def pal_margin_bound(k_max_prev, delta_b, delta_a) -> float:
    if min(k_max_prev, delta_b, delta_a) < 0:
        raise PreconditionError("inputs must be nonnegative")
    return k_max_prev * delta_b + delta_a


def parallelogram_box_margin(x1, x2, k1, k2, eta, k_av_box) -> float:
    """Margin of the outer box of the parallelogram left by gains ``k1, -k2``.

    ``k_av_box`` is the deadbeat gain at the box centre; its magnitude enters.
    """
    if x1 == 0 or x2 == 0:
        raise PreconditionError("states must be nonzero")
    if not (k1 > 0 and k2 > 0):
        raise PreconditionError("gains must be positive")
    e1 = eta / abs(x1)
    e2 = eta / abs(x2)
    return abs(k_av_box) * (e2 + e1) / (k2 + k1) + (k2 * e1 + k1 * e2) / (k1 + k2)
