"""Control laws: robust static feedback and its adaptive variants, the
passive-aggressive learner, and the switched strategy combining them.

Conventions: ``math.inf`` stands for an unbounded cost and orders above every
finite value; all gains act as ``u = k x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import consistent
from .consistent import Slab, UncertaintyState
from .margin import EPS_NUM, PreconditionError, deadbeat_max_gain, pairwise_margin, stability_margin
from .polytope2d import EmptySetError, Polytope2

INV_PHI = (math.sqrt(5) - 1) / 2


class Mode(str, Enum):
    PASSIVE = "Passive"
    ADAPTIVE = "Adaptive"


class Variant(str, Enum):
    WRSF = "WRSF"
    SRSF = "SRSF"


@dataclass(frozen=True)
class RsfPolicy:
    gain: float

    @classmethod
    def from_set(cls, P0: Polytope2) -> "RsfPolicy":
        return cls(stability_margin(P0).gain)


@dataclass(frozen=True)
class SrsfSolverParams:
    u_grid_points: int = 201
    x_grid_points: int = 65
    refine_iters: int = 40
    u_range_factor: float = 2.0

    def __post_init__(self):
        if self.u_grid_points < 3 or self.x_grid_points < 3:
            raise ValueError("u_grid_points and x_grid_points must be >= 3")
        if self.refine_iters < 1 or not self.u_range_factor > 0:
            raise ValueError("refine_iters and u_range_factor must be positive")


@dataclass(frozen=True)
class PalParams:
    p: float
    lambda_star: float

    def __post_init__(self):
        if not self.p > 0 or not self.lambda_star > 0:
            raise PreconditionError("p and lambda_star must be positive")
        if not self.lambda_star * self.p > 1:
            raise PreconditionError(
                f"need lambda_star > 1/p, got lambda_star={self.lambda_star}, p={self.p}"
            )

    @property
    def switched_ok(self) -> bool:
        """Whether ``1 - 1/p > lambda_star`` holds (needed by the switched law)."""
        return 1 - 1 / self.p > self.lambda_star

    def check_switched(self):
        if not self.switched_ok:
            raise PreconditionError(
                f"switched strategy needs 1 - 1/p > lambda_star > 1/p "
                f"(p={self.p}, lambda_star={self.lambda_star})"
            )


def _nonempty(P: Polytope2):
    if P.empty:
        raise EmptySetError("controller called with an empty uncertainty set")


# -- value functions ---------------------------------------------------------


def v_rsf_lambda(x, lam, eta) -> float:
    if lam >= 1:
        return math.inf
    return max(lam * abs(x) + eta, eta / (1 - lam))


def v_rsf(x, P: Polytope2, eta) -> float:
    """Worst-case sup-norm cost of the best static gain on ``P``."""
    _nonempty(P)
    return v_rsf_lambda(x, stability_margin(P).lam, eta)


def gamma_rsf(n: int, x0, lambda0, eta) -> float:
    """Closed-form bound on ``|x_n|`` under the frozen robust gain."""
    if lambda0 >= 1:
        return math.inf
    if n == 0:
        return abs(x0)
    return lambda0**n * abs(x0) + (lambda0**n - 1) / (lambda0 - 1) * eta


# -- actions -----------------------------------------------------------------


def rsf_action(x, policy: RsfPolicy) -> float:
    return policy.gain * x


def wrsf_action(x, P: Polytope2) -> float:
    _nonempty(P)
    return stability_margin(P).gain * x


def pal_gain(n: int, P: Polytope2, pal: PalParams) -> float:
    _nonempty(P)
    k = deadbeat_max_gain(P) / (pal.lambda_star * pal.p - 1)
    return k if n % 2 == 0 else -k


def pal_action(n: int, x, state: UncertaintyState | Polytope2, pal: PalParams) -> float:
    P = state.polytope if isinstance(state, UncertaintyState) else state
    return pal_gain(n, P, pal) * x


# -- strongly adaptive min-max -----------------------------------------------


def _lambda_after(x, us, xs_next, verts, eta):
    """Margin of ``P ∩ S(x -> x', u)`` for every ``(u, x')`` pair.

    The clipped set is the convex hull of the vertices inside the slab plus
    the crossings of polygon edges with the two slab boundaries, so the
    margin can be taken over that padded point set without ordering it.
    """
    a, b = verts[:, 0], verts[:, 1]
    s = a[None, :] * x + b[None, :] * us[:, None]  # (U, n)
    lo_lvl = xs_next - eta  # (U, X)
    hi_lvl = xs_next + eta
    tol = 1e-12 * (1 + np.abs(s).max(axis=1))[:, None, None]
    si = s[:, None, :]
    inside = (si >= lo_lvl[..., None] - tol) & (si <= hi_lvl[..., None] + tol)
    pa = [np.broadcast_to(a, inside.shape)]
    pb = [np.broadcast_to(b, inside.shape)]
    masks = [inside]
    sj = np.roll(s, -1, axis=1)[:, None, :]
    aj, bj = np.roll(a, -1), np.roll(b, -1)
    ds = sj - si
    for lvl in (lo_lvl, hi_lvl):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (lvl[..., None] - si) / ds
        ok = (ds != 0) & (t >= 0) & (t <= 1)
        t = np.where(ok, t, 0.0)
        pa.append(a + t * (aj - a))
        pb.append(b + t * (bj - b))
        masks.append(ok)
    return pairwise_margin(np.concatenate(pa, -1), np.concatenate(pb, -1), np.concatenate(masks, -1))


def _endpoint_cost(x, us, verts, eta):
    s = verts[:, 0][None, :] * x + verts[:, 1][None, :] * us[:, None]
    lo = s.min(axis=1) - eta
    hi = s.max(axis=1) + eta
    return lo, hi, np.maximum(np.maximum(np.abs(lo), np.abs(hi)), eta)


def srsf_objective(x, us, P: Polytope2, eta, params: SrsfSolverParams = SrsfSolverParams()):
    """Sampled min-max objective ``J(u)`` for an array of inputs.

    ``J(u) = max_{x'} |x'| ∨ eta / (1 - λ(P ∩ S(x -> x', u)))`` with the
    inner maximum over both endpoints of the reachable interval and
    ``x_grid_points`` interior samples. The ``|x'|`` part is exact.
    """
    _nonempty(P)
    us = np.atleast_1d(np.asarray(us, dtype=float))
    verts = P.vertices
    lo, hi, J = _endpoint_cost(x, us, verts, eta)
    lam_P = stability_margin(P).lam
    # λ of a subset never exceeds λ(P): those u are settled by the endpoints
    cap = math.inf if lam_P >= 1 else eta / (1 - lam_P)
    todo = np.flatnonzero(J < cap * (1 + 1e-12))
    if len(todo) == 0:
        return J
    t = np.linspace(0.0, 1.0, params.x_grid_points + 2)
    chunk = max(1, int(2_000_000 // (len(t) * (3 * len(verts)) ** 2)))
    J = J.copy()
    for start in range(0, len(todo), chunk):
        idx = todo[start:start + chunk]
        xs_next = lo[idx, None] + t[None, :] * (hi - lo)[idx, None]
        lam = _lambda_after(x, us[idx], xs_next, verts, eta)
        with np.errstate(divide="ignore"):
            term = np.where(lam < 1, eta / np.maximum(1 - lam, 0.0), np.inf)
        J[idx] = np.maximum(J[idx], term.max(axis=1))
    return J


@dataclass(frozen=True)
class SrsfSolution:
    u: float
    value: float
    wrsf_u: float
    wrsf_value: float


def _pick(us, Js):
    """Smallest objective, ties to the smallest |u|."""
    us = np.asarray(us, float)
    Js = np.asarray(Js, float)
    best = Js.min()
    near = np.flatnonzero(Js <= best + 1e-12 * max(1.0, abs(best)) if np.isfinite(best) else Js == best)
    i = near[np.argmin(np.abs(us[near]))]
    return float(us[i]), float(Js[i])


def srsf_solve(x, P: Polytope2, eta, params: SrsfSolverParams = SrsfSolverParams()) -> SrsfSolution:
    """Grid search plus golden-section refinement of the sampled objective.

    The WRSF action and ``u = 0`` are always candidates, so the returned
    value never exceeds theirs.
    """
    _nonempty(P)
    verts = P.vertices
    u_w = stability_margin(P).gain * x
    fixed = np.array([u_w, 0.0])
    J_fixed = srsf_objective(x, fixed, P, eta, params)
    best_u, best_J = _pick(fixed, J_fixed)

    try:
        kmax = deadbeat_max_gain(P)
    except ValueError:
        kmax = float(np.max(np.abs(verts[:, 0]))) / max(float(np.min(np.abs(verts[:, 1]))), 1e-12)
    half = params.u_range_factor * (kmax * abs(x) + eta)
    grid = np.linspace(-half, half, params.u_grid_points)
    _, _, lower = _endpoint_cost(x, grid, verts, eta)
    J_grid = np.full(len(grid), np.inf)
    # lower[i] <= J(grid[i]); visit cheapest first and stop once no u can win
    order = np.argsort(lower, kind="stable")
    step = 32
    for start in range(0, len(order), step):
        idx = order[start:start + step]
        idx = idx[lower[idx] <= best_J * (1 + 1e-12)]
        if len(idx) == 0:
            break
        J_grid[idx] = srsf_objective(x, grid[idx], P, eta, params)
        u_c, J_c = _pick(np.r_[best_u, grid[idx]], np.r_[best_J, J_grid[idx]])
        best_u, best_J = u_c, J_c

    i = int(np.argmin(np.where(np.isfinite(J_grid), J_grid, np.inf)))
    if np.isfinite(J_grid[i]):
        lo_u, hi_u = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        u_r, J_r = _golden(lambda u: float(srsf_objective(x, [u], P, eta, params)[0]), lo_u, hi_u, params.refine_iters)
        best_u, best_J = _pick([best_u, u_r], [best_J, J_r])
    J_w = float(J_fixed[0])
    return SrsfSolution(best_u, best_J, float(u_w), J_w)


def _golden(f, lo, hi, iters):
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def srsf_action(x, state: UncertaintyState | Polytope2, eta, params: SrsfSolverParams = SrsfSolverParams()) -> float:
    P = state.polytope if isinstance(state, UncertaintyState) else state
    return srsf_solve(x, P, eta, params).u


def v_srsf(x, P: Polytope2, eta, params: SrsfSolverParams = SrsfSolverParams()) -> float:
    """``min_u J(u)`` at state ``x`` (sampled inner maximum)."""
    return srsf_solve(x, P, eta, params).value


def gamma_seq(variant: str, x0, snapshots, eta, params: SrsfSolverParams = SrsfSolverParams()) -> list[float]:
    """Comparison sequences ``γ_0 = |x0|``, ``γ_{n+1} = f(γ_n, P_n)``.

    ``variant`` is ``"RSF"`` (frozen ``P_0``), ``"WRSF"`` (``V_RSF`` on
    ``P_n``) or ``"SRSF"`` (``V_SRSF`` on ``P_n``). ``snapshots`` lists
    ``P_0, P_1, ...``; the result has one more entry than ``snapshots``.
    """
    variant = variant.upper()
    if variant not in ("RSF", "WRSF", "SRSF"):
        raise ValueError(f"unknown variant {variant!r}")
    snaps = list(snapshots)
    if not snaps or any(P.empty for P in snaps):
        raise EmptySetError("snapshots must be nonempty polytopes")
    lam0 = stability_margin(snaps[0]).lam
    gam = [abs(x0)]
    for P in snaps:
        g = gam[-1]
        if math.isinf(g):
            gam.append(math.inf)
        elif variant == "RSF":
            gam.append(v_rsf_lambda(g, lam0, eta))
        elif variant == "WRSF":
            gam.append(v_rsf(g, P, eta))
        else:
            gam.append(v_srsf(g, P, eta, params))
    return gam


# -- switched strategy -------------------------------------------------------


@dataclass(frozen=True)
class PalcState:
    uncertainty: UncertaintyState
    pal: PalParams
    eta: float
    arsf_variant: Variant = Variant.SRSF
    solver: SrsfSolverParams = field(default_factory=SrsfSolverParams)
    step: int = 0
    mode: Mode = Mode.PASSIVE
    switch_step: int | None = None
    passive_steps: int = 0

    def observe(self, slab: Slab) -> "PalcState":
        return replace(self, uncertainty=consistent.update(self.uncertainty, slab), step=self.step + 1)


@dataclass(frozen=True)
class PalcDecision:
    u: float
    mode: Mode
    gain: float | None
    lam: float
    objective: float | None = None


def palc_action(state: PalcState, x) -> tuple[PalcDecision, PalcState]:
    """Learner while ``λ(P_n) > λ*``, adaptive robust feedback afterwards.

    The switch is latched: once adaptive, always adaptive.
    """
    P = state.uncertainty.polytope
    _nonempty(P)
    res = stability_margin(P)
    if state.mode is Mode.PASSIVE and res.lam > state.pal.lambda_star:
        k = pal_gain(state.passive_steps, P, state.pal)
        new = replace(state, passive_steps=state.passive_steps + 1)
        return PalcDecision(k * x, Mode.PASSIVE, k, res.lam), new
    new = state
    if state.mode is Mode.PASSIVE:
        new = replace(state, mode=Mode.ADAPTIVE, switch_step=state.step)
    if state.arsf_variant is Variant.WRSF:
        return PalcDecision(res.gain * x, Mode.ADAPTIVE, res.gain, res.lam), new
    sol = srsf_solve(x, P, state.eta, state.solver)
    return PalcDecision(sol.u, Mode.ADAPTIVE, None, res.lam, sol.value), new
