"""Consistent parameter sets from observed transitions.

Each transition ``x -> x_next`` under input ``u`` confines the unknown
parameters to the slab ``|x_next - a x - b u| <= eta``. The uncertainty set
is the initial polytope clipped by every slab seen so far.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import polytope2d as geo
from .polytope2d import EmptySetError, Halfspace, Polytope2

EPS_SLACK = 1e-6


class InconsistencyError(RuntimeError):
    """Observations admit no parameters even after inflating the noise bound."""


@dataclass(frozen=True)
class Slab:
    x_n: float
    u_n: float
    x_next: float
    eta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("noise bound eta must be nonnegative")

    @property
    def vacuous(self) -> bool:
        return self.x_n == 0 and self.u_n == 0

    @property
    def half_thickness(self) -> float:
        if self.vacuous:
            return math.inf
        return self.eta / math.hypot(self.x_n, self.u_n)

    def halfspaces(self) -> tuple[Halfspace, ...]:
        if self.vacuous:
            return ()
        n = (self.x_n, self.u_n)
        return (
            Halfspace(n, self.x_next + self.eta),
            Halfspace((-n[0], -n[1]), -(self.x_next - self.eta)),
        )

    def inflated(self, factor: float) -> "Slab":
        return Slab(self.x_n, self.u_n, self.x_next, self.eta * factor)

    def to_dict(self) -> dict:
        return {"x_n": self.x_n, "u_n": self.u_n, "x_next": self.x_next, "eta": self.eta}


def slab_from_observation(x_n, u_n, x_next, eta) -> Slab:
    return Slab(float(x_n), float(u_n), float(x_next), float(eta))


@dataclass(frozen=True)
class UncertaintyState:
    polytope: Polytope2
    step: int = 0
    history: tuple[Slab, ...] = ()
    warnings: tuple[str, ...] = ()
    window: int | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "polytope": geo.to_dict(self.polytope),
            "history": [s.to_dict() for s in self.history],
        }


def initial_state(P0: Polytope2, window: int | None = None) -> UncertaintyState:
    if P0.empty:
        raise EmptySetError("initial uncertainty set is empty")
    return UncertaintyState(P0, 0, (), (), window)


def update(state: UncertaintyState, slab: Slab) -> UncertaintyState:
    """Clip by one slab; retry once with a slightly inflated noise bound.

    Raises :class:`InconsistencyError` when even the inflated slab misses
    the current set.
    """
    history = state.history + (slab,)
    if state.window is not None:
        history = history[-state.window:] if state.window > 0 else ()
    notes = state.warnings
    if slab.vacuous:
        return UncertaintyState(state.polytope, state.step + 1, history, notes, state.window)
    P = geo.intersect_slab(state.polytope, slab)
    if P.empty:
        P = geo.intersect_slab(state.polytope, slab.inflated(1 + EPS_SLACK))
        if P.empty:
            raise InconsistencyError(
                f"step {state.step}: observation {slab} is inconsistent with the "
                "uncertainty set; the noise bound assumption is violated"
            )
        msg = f"step {state.step}: empty intersection, retried with eta*(1+{EPS_SLACK})"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes = notes + (msg,)
    return UncertaintyState(P, state.step + 1, history, notes, state.window)


def reach_interval(x, u, P: Polytope2, eta) -> tuple[float, float]:
    """One-step reachable interval ``[min a x + b u - eta, max a x + b u + eta]``."""
    if P.empty:
        raise EmptySetError("reachable set of an empty parameter set")
    s = P.vertices @ np.array([x, u], dtype=float)
    return float(s.min() - eta), float(s.max() + eta)
