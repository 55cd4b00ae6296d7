"""Exact 2D convex polygons over the parameter plane (a, b).

A :class:`Polytope2` carries both an irredundant halfspace list and its
counterclockwise vertex ring. Every operation returns a new value; clipping
is Sutherland-Hodgman against one halfspace at a time, so no LP is needed.
Zero-area results (segments, points) are legal, and emptiness is a flag.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS_GEOM = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (inverted bounds, unbounded seed, bad JSON)."""


class EmptySetError(GeometryError):
    """Raised when an operation needs a nonempty polytope."""


@dataclass(frozen=True)
class Halfspace:
    """The set ``{p : normal . p <= offset}`` with a unit-length normal."""

    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        nx, ny = float(self.normal[0]), float(self.normal[1])
        norm = math.hypot(nx, ny)
        if norm == 0.0 or not math.isfinite(norm):
            raise GeometryError("halfspace normal must be a nonzero finite vector")
        object.__setattr__(self, "normal", (nx / norm, ny / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def slack(self, point) -> float:
        """Signed slack ``offset - normal . point`` (negative means violated)."""
        return self.offset - (self.normal[0] * point[0] + self.normal[1] * point[1])

    def to_dict(self) -> dict:
        return {"normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class BoundingBox:
    l_a: float
    u_a: float
    l_b: float
    u_b: float

    def __post_init__(self):
        if self.l_a > self.u_a or self.l_b > self.u_b:
            raise GeometryError(f"inverted bounding box {self}")


@dataclass(frozen=True, eq=False)
class Polytope2:
    """Bounded convex polygon in the (a, b) plane.

    Build instances with :func:`from_box` or :func:`from_vertices`; the
    default constructor does not re-validate its inputs.
    """

    halfspaces: tuple[Halfspace, ...]
    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float).reshape(-1, 2)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @property
    def empty(self) -> bool:
        return len(self.vertices) == 0

    def __len__(self):
        return len(self.vertices)

    def __eq__(self, other):
        # same vertex ring, bit for bit; halfspaces follow from it
        if not isinstance(other, Polytope2):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(np.all(self.vertices == other.vertices))

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        pts = ", ".join(f"({a:.6g}, {b:.6g})" for a, b in self.vertices)
        return f"Polytope2([{pts}])"

    def to_json(self) -> str:
        return json.dumps(to_dict(self))


EMPTY = Polytope2((), np.empty((0, 2)))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Monotone-chain hull, CCW, collinear and duplicate points removed."""
    pts = sorted({(float(p[0]), float(p[1])) for p in np.asarray(points, float).reshape(-1, 2)})
    if len(pts) <= 1:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= EPS_GEOM * _scale(chain[-2], p):
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    ring = lower[:-1] + upper[:-1]
    return _clean_ring(np.array(ring, dtype=float))


def _scale(p, q):
    # cross / |pq| is the distance of the middle point from the chord
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _clean_ring(ring: np.ndarray) -> np.ndarray:
    """Deduplicate near-equal neighbours and drop collinear middle points."""
    pts = [tuple(p) for p in ring]
    out = []
    for p in pts:
        if not out or math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > EPS_GEOM:
            out.append(p)
    while len(out) > 1 and math.hypot(out[0][0] - out[-1][0], out[0][1] - out[-1][1]) <= EPS_GEOM:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            prev, cur, nxt = out[i - 1], out[i], out[(i + 1) % n]
            base = math.hypot(nxt[0] - prev[0], nxt[1] - prev[1])
            if base <= EPS_GEOM:
                # spike out and back: nxt duplicates prev, keep the tip
                out.pop((i + 1) % n)
                changed = True
                break
            # distance of cur from the chord prev-nxt; only drop points lying
            # between their neighbours, never the tip of a needle
            along = (cur[0] - prev[0]) * (nxt[0] - prev[0]) + (cur[1] - prev[1]) * (nxt[1] - prev[1])
            if abs(_cross(prev, cur, nxt)) <= EPS_GEOM * base and -EPS_GEOM * base <= along <= base * (base + EPS_GEOM):
                out.pop(i)
                changed = True
                break
    if len(out) == 2 and math.hypot(out[0][0] - out[1][0], out[0][1] - out[1][1]) <= EPS_GEOM:
        out.pop()
    return np.array(out, dtype=float).reshape(-1, 2)


def _segment_halfspaces(p, q) -> list[Halfspace]:
    d = (q[0] - p[0], q[1] - p[1])
    n = (-d[1], d[0])
    c = n[0] * p[0] + n[1] * p[1]
    return [
        Halfspace(n, c),
        Halfspace((-n[0], -n[1]), -c),
        Halfspace(d, d[0] * q[0] + d[1] * q[1]),
        Halfspace((-d[0], -d[1]), -(d[0] * p[0] + d[1] * p[1])),
    ]


def _ring_halfspaces(verts: np.ndarray) -> list[Halfspace]:
    n = len(verts)
    if n == 0:
        return []
    if n == 1:
        a, b = verts[0]
        return [Halfspace((1, 0), a), Halfspace((-1, 0), -a), Halfspace((0, 1), b), Halfspace((0, -1), -b)]
    if n == 2:
        return _segment_halfspaces(verts[0], verts[1])
    out = []
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        # outward normal of a CCW edge
        nrm = (q[1] - p[1], p[0] - q[0])
        out.append(Halfspace(nrm, nrm[0] * p[0] + nrm[1] * p[1]))
    return out


def from_vertices(points: Iterable[Sequence[float]]) -> Polytope2:
    """Convex hull of a finite point set (an empty input gives the empty polytope)."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise GeometryError("vertices must be finite")
    if len(pts) == 0:
        return EMPTY
    verts = convex_hull(pts)
    return Polytope2(tuple(_ring_halfspaces(verts)), verts)


def from_box(l_a: float, u_a: float, l_b: float, u_b: float) -> Polytope2:
    """Axis-aligned box ``[l_a, u_a] x [l_b, u_b]``."""
    bounds = [l_a, u_a, l_b, u_b]
    if not all(math.isfinite(float(v)) for v in bounds):
        raise GeometryError("box bounds must be finite")
    if l_a > u_a or l_b > u_b:
        raise GeometryError(f"inverted box bounds a:[{l_a}, {u_a}] b:[{l_b}, {u_b}]")
    corners = [(l_a, l_b), (u_a, l_b), (u_a, u_b), (l_a, u_b)]
    verts = convex_hull(corners)
    hs = (
        Halfspace((-1, 0), -l_a),
        Halfspace((1, 0), u_a),
        Halfspace((0, -1), -l_b),
        Halfspace((0, 1), u_b),
    )
    return Polytope2(_prune(hs, verts), verts)


def _prune(halfspaces: Iterable[Halfspace], verts: np.ndarray) -> tuple[Halfspace, ...]:
    """Drop duplicate halfspaces and, for full-dimensional polygons, those
    that do not support an edge."""
    unique: list[Halfspace] = []
    for h in halfspaces:
        if any(
            abs(h.normal[0] - g.normal[0]) <= EPS_GEOM
            and abs(h.normal[1] - g.normal[1]) <= EPS_GEOM
            and abs(h.offset - g.offset) <= EPS_GEOM
            for g in unique
        ):
            continue
        unique.append(h)
    if len(verts) < 3:
        return tuple(unique)
    kept = []
    for h in unique:
        tight = sum(1 for v in verts if abs(h.slack(v)) <= 1e3 * EPS_GEOM)
        if tight >= 2:
            kept.append(h)
    return tuple(kept)


def _clip_ring(verts: np.ndarray, h: Halfspace) -> np.ndarray:
    n = len(verts)
    if n == 0:
        return verts
    slack = h.offset - verts @ np.asarray(h.normal)
    inside = slack >= -EPS_GEOM
    if inside.all():
        return verts
    if not inside.any():
        return np.empty((0, 2))
    if n == 1:
        return verts
    out = []
    for i in range(n):
        j = (i + 1) % n
        p, q = verts[i], verts[j]
        if inside[i]:
            out.append(p)
        if inside[i] != inside[j]:
            # tolerance-inside endpoints have slightly negative slack; clamp so
            # the crossing never leaves the edge
            t = min(max(slack[i] / (slack[i] - slack[j]), 0.0), 1.0)
            out.append(p + t * (q - p))
    return _clean_ring(np.array(out))


def intersect_halfspace(P: Polytope2, h: Halfspace) -> Polytope2:
    """Exact ``P ∩ h``; the result is flagged empty if nothing survives."""
    if P.empty:
        return P
    verts = _clip_ring(P.vertices, h)
    if len(verts) == 0:
        return EMPTY
    if verts is P.vertices:
        return P
    return Polytope2(_prune(P.halfspaces + (h,), verts), verts)


def intersect_slab(P: Polytope2, slab) -> Polytope2:
    """Clip against both halfspaces of a slab (anything with ``.halfspaces()``)."""
    for h in slab.halfspaces():
        P = intersect_halfspace(P, h)
        if P.empty:
            break
    return P


def contains(P: Polytope2, point, tol: float = EPS_GEOM) -> bool:
    """True iff ``point`` satisfies every halfspace with slack >= -tol."""
    if P.empty:
        return False
    return all(h.slack(point) >= -tol for h in P.halfspaces)


def is_empty(P: Polytope2) -> bool:
    return P.empty


def vertices(P: Polytope2) -> list[tuple[float, float]]:
    """Counterclockwise, deduplicated vertex list."""
    return [(float(a), float(b)) for a, b in P.vertices]


def bounding_box(P: Polytope2) -> BoundingBox:
    if P.empty:
        raise EmptySetError("bounding box of an empty polytope")
    lo = P.vertices.min(axis=0)
    hi = P.vertices.max(axis=0)
    return BoundingBox(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def area(P: Polytope2) -> float:
    v = P.vertices
    if len(v) < 3:
        return 0.0
    a, b = v[:, 0], v[:, 1]
    return 0.5 * float(abs(np.dot(a, np.roll(b, -1)) - np.dot(b, np.roll(a, -1))))


def to_dict(P: Polytope2, halfspaces: bool = False) -> dict:
    """JSON-ready dict; ``halfspaces=True`` also stores ``[n_a, n_b, offset]`` rows.

    The halfspace rows are the exact representation. The vertex ring is
    derived from them and can sit up to ``EPS_GEOM`` off for needle-thin sets.
    """
    # repr-exact floats keep the JSON round trip lossless
    d = {"vertices": [[float(a), float(b)] for a, b in P.vertices]}
    if halfspaces:
        d["halfspaces"] = [[h.normal[0], h.normal[1], h.offset] for h in P.halfspaces]
    return d


def from_dict(data: dict) -> Polytope2:
    if not isinstance(data, dict) or "vertices" not in data:
        raise GeometryError('polytope JSON must be an object with a "vertices" list')
    verts = data["vertices"]
    if not isinstance(verts, list) or any(
        not isinstance(v, (list, tuple)) or len(v) != 2 for v in verts
    ):
        raise GeometryError("vertices must be a list of [a, b] pairs")
    pts = np.asarray(verts, dtype=float).reshape(-1, 2)
    if "halfspaces" in data:
        rows = data["halfspaces"]
        if not isinstance(rows, list) or any(not isinstance(r, (list, tuple)) or len(r) != 3 for r in rows):
            raise GeometryError("halfspaces must be a list of [n_a, n_b, offset] rows")
        if len(pts) == 0:
            return EMPTY
        return Polytope2(tuple(Halfspace((r[0], r[1]), r[2]) for r in rows), pts)
    if len(pts) >= 3 and np.all(np.isfinite(pts)) and _is_ccw_convex(pts):
        # already a clean ring: keep it verbatim so the round trip is exact
        return Polytope2(tuple(_ring_halfspaces(pts)), pts)
    return from_vertices(pts)


def _is_ccw_convex(pts: np.ndarray) -> bool:
    n = len(pts)
    for i in range(n):
        prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % n]
        base = math.hypot(nxt[0] - prev[0], nxt[1] - prev[1])
        if base <= EPS_GEOM or _cross(prev, cur, nxt) <= EPS_GEOM * base:
            return False
    return True


def from_json(text: str) -> Polytope2:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryError(f"malformed polytope JSON: {exc}") from exc
    return from_dict(data)
