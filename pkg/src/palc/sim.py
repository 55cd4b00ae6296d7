"""Closed-loop simulation of the scalar plant ``x+ = a x + b u + w``."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import consistent
from . import polytope2d as geo
from .consistent import InconsistencyError
from .controllers import (
    Mode,
    PalcState,
    PalParams,
    RsfPolicy,
    SrsfSolverParams,
    Variant,
    gamma_rsf,
    pal_gain,
    palc_action,
    srsf_solve,
    v_rsf_lambda,
)
from .margin import ControllabilityError, deadbeat_max_gain, stability_margin
from .oracle import GridSpec, pal_policy, q_horizon
from .polytope2d import Polytope2

CONTROLLERS = ("RSF", "WRSF", "SRSF", "PAL", "PALC")
NOISE_KINDS = ("zero", "uniform", "adversarial")
CSV_COLUMNS = ("n", "x", "u", "w", "lambda", "k_max", "mode")


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class Plant:
    a_true: float
    b_true: float
    eta: float

    def __post_init__(self):
        if self.b_true == 0:
            raise ContractViolation("b_true must be nonzero")
        if self.eta < 0:
            raise ContractViolation("eta must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")


def noise_sample(model: NoiseModel, a_true, b_true, x, u, eta, rng: np.random.Generator | None = None) -> float:
    if model.kind == "zero":
        return 0.0
    if model.kind == "adversarial":
        return eta if a_true * x + b_true * u >= 0 else -eta
    if rng is None:
        raise ValueError("uniform noise needs a generator")
    return float(rng.uniform(-eta, eta))


def step(plant: Plant, x, u, w) -> float:
    if abs(w) > plant.eta * (1 + 1e-12):
        raise ContractViolation(f"|w| = {abs(w)} exceeds eta = {plant.eta}")
    return plant.a_true * x + plant.b_true * u + w


@dataclass(frozen=True)
class Scenario:
    x0: float
    P0: Polytope2
    plant: Plant
    controller: str = "PALC"
    arsf_variant: str = "SRSF"
    pal: PalParams | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    horizon: int = 30
    solver: SrsfSolverParams = field(default_factory=SrsfSolverParams)
    certify: bool = False
    name: str = ""

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {CONTROLLERS}")
        if self.arsf_variant not in ("WRSF", "SRSF"):
            raise ValueError("arsf_variant must be WRSF or SRSF")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.P0.empty:
            raise ValueError("P0 is empty")
        if not geo.contains(self.P0, (self.plant.a_true, self.plant.b_true), geo.EPS_GEOM):
            raise ContractViolation("true parameters lie outside P0")
        if self.controller in ("PAL", "PALC") and self.pal is None:
            raise ValueError(f"{self.controller} needs PalParams")
        if self.controller == "PALC":
            self.pal.check_switched()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "x0": self.x0,
            "P0": geo.to_dict(self.P0),
            "plant": asdict(self.plant),
            "controller": self.controller,
            "arsf_variant": self.arsf_variant,
            "pal": asdict(self.pal) if self.pal else None,
            "noise": asdict(self.noise),
            "horizon": self.horizon,
            "solver": asdict(self.solver),
        }


@dataclass
class StepRecord:
    n: int
    x: float
    u: float
    w: float
    x_next: float
    mode: str
    lam: float
    k_max: float
    gain: float | None
    vertices: list
    bound: float | None = None
    halfspaces: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class TrajectoryRecord:
    scenario: Scenario
    steps: list[StepRecord] = field(default_factory=list)
    final_vertices: list = field(default_factory=list)
    final_halfspaces: list = field(default_factory=list)
    final_lambda: float = math.nan
    final_k_max: float = math.nan
    switch_step: int | None = None
    certified_bound: float | None = None
    error: str | None = None
    warnings: tuple[str, ...] = ()

    @property
    def complete(self) -> bool:
        return self.error is None and len(self.steps) == self.scenario.horizon

    @property
    def xs(self) -> np.ndarray:
        if not self.steps:
            return np.array([self.scenario.x0])
        return np.array([s.x for s in self.steps] + [self.steps[-1].x_next])

    @property
    def us(self) -> np.ndarray:
        return np.array([s.u for s in self.steps])

    @property
    def ws(self) -> np.ndarray:
        return np.array([s.w for s in self.steps])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.steps] + [self.final_lambda])

    @property
    def modes(self) -> list[str]:
        return [s.mode for s in self.steps]

    @property
    def bounds(self) -> list:
        return [s.bound for s in self.steps]

    def _snapshot_dicts(self) -> list[dict]:
        out = [{"vertices": s.vertices, "halfspaces": s.halfspaces} for s in self.steps]
        return out + [{"vertices": self.final_vertices, "halfspaces": self.final_halfspaces}]

    def snapshots(self) -> list[Polytope2]:
        """``P_0 .. P_N`` rebuilt exactly, halfspaces included."""
        return [geo.from_dict(d) for d in self._snapshot_dicts()]

    @property
    def sup_norm(self) -> float:
        xs = self.xs[1:]
        return float(np.abs(xs).max()) if len(xs) else 0.0

    def summary(self) -> dict:
        return {
            "name": self.scenario.name,
            "controller": self.scenario.controller,
            "steps": len(self.steps),
            "sup_norm": self.sup_norm,
            "switch_step": self.switch_step,
            "final_lambda": self.final_lambda,
            "certified_bound": self.certified_bound,
            "error": self.error,
        }

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "final": {
                "x": float(self.xs[-1]),
                "vertices": self.final_vertices,
                "halfspaces": self.final_halfspaces,
                "lambda": self.final_lambda,
                "k_max": self.final_k_max,
            },
            "summary": self.summary(),
            "warnings": list(self.warnings),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for s in self.steps:
            wr.writerow([s.n, repr(s.x), repr(s.u), repr(s.w), repr(s.lam), repr(s.k_max), s.mode])
        wr.writerow([len(self.steps), repr(float(self.xs[-1])), "", "", repr(self.final_lambda), repr(self.final_k_max), ""])
        return buf.getvalue()

    def snapshots_json(self) -> str:
        return json.dumps([{"n": i, **d} for i, d in enumerate(self._snapshot_dicts())])


def _kmax(P: Polytope2) -> float:
    try:
        return deadbeat_max_gain(P)
    except ControllabilityError:
        return math.nan


@lru_cache(maxsize=64)
def _certified(verts: tuple, x0: float, p: float, lambda_star: float, eta: float, grid: int) -> float:
    P0 = geo.from_vertices(verts)
    policy = pal_policy(P0, p, lambda_star)
    best = 0.0
    for v in (abs(x0), p * eta):
        q = q_horizon(v, P0, policy, 2, eta, GridSpec(param_grid=grid))
        best = max(best, v, q.value + q.tolerance)
    return best


def transient_bound(scenario: Scenario, grid: int = 200) -> float:
    """``max_{v in {x0, p eta}} |v| ∨ Q^{1:2}(v, P0, PAL)`` plus lattice tolerance."""
    pal = scenario.pal
    verts = tuple(map(tuple, scenario.P0.vertices))
    return _certified(verts, float(scenario.x0), pal.p, pal.lambda_star, scenario.plant.eta, grid)


def run(scenario: Scenario) -> TrajectoryRecord:
    """Simulate the closed loop; deterministic given the scenario."""
    sc = scenario
    plant = sc.plant
    eta = plant.eta
    rng = np.random.default_rng(sc.noise.seed)
    rec = TrajectoryRecord(sc)
    unc = consistent.initial_state(sc.P0)
    lam0 = stability_margin(sc.P0).lam
    rsf = RsfPolicy.from_set(sc.P0) if sc.controller == "RSF" else None
    palc = None
    if sc.controller == "PALC":
        palc = PalcState(unc, sc.pal, eta, Variant(sc.arsf_variant), sc.solver)

    x = float(sc.x0)
    for n in range(sc.horizon):
        P = unc.polytope
        res = stability_margin(P)
        kmax = _kmax(P)
        gain = None
        bound = None
        mode = ""
        try:
            if sc.controller == "RSF":
                gain = rsf.gain
                u = gain * x
                bound = gamma_rsf(n + 1, sc.x0, lam0, eta)
            elif sc.controller == "WRSF":
                gain = res.gain
                u = gain * x
                bound = v_rsf_lambda(x, res.lam, eta)
            elif sc.controller == "SRSF":
                sol = srsf_solve(x, P, eta, sc.solver)
                u, bound = sol.u, sol.value
            elif sc.controller == "PAL":
                gain = pal_gain(n, P, sc.pal)
                u = gain * x
                mode = Mode.PASSIVE.value
            else:
                palc = replace(palc, uncertainty=unc)
                dec, palc = palc_action(palc, x)
                u, gain, mode = dec.u, dec.gain, dec.mode.value
                if dec.mode is Mode.ADAPTIVE:
                    bound = dec.objective if dec.objective is not None else v_rsf_lambda(x, res.lam, eta)
        except (ValueError, ArithmeticError) as exc:
            rec.error = f"step {n}: {exc}"
            break
        w = noise_sample(sc.noise, plant.a_true, plant.b_true, x, u, eta, rng)
        x_next = step(plant, x, u, w)
        rec.steps.append(
            StepRecord(n, x, float(u), w, x_next, mode, res.lam, kmax, gain, geo.to_dict(P)["vertices"], bound,
                       geo.to_dict(P, halfspaces=True)["halfspaces"])
        )
        try:
            unc = consistent.update(unc, consistent.slab_from_observation(x, u, x_next, eta))
        except InconsistencyError as exc:
            rec.error = str(exc)
            break
        if palc is not None:
            palc = replace(palc, step=n + 1)
        x = x_next

    final = geo.to_dict(unc.polytope, halfspaces=True)
    rec.final_vertices, rec.final_halfspaces = final["vertices"], final["halfspaces"]
    rec.final_lambda = stability_margin(unc.polytope).lam
    rec.final_k_max = _kmax(unc.polytope)
    rec.warnings = unc.warnings
    if palc is not None:
        rec.switch_step = palc.switch_step
        if sc.certify:
            rec.certified_bound = transient_bound(sc)
    return rec


def run_many(scenarios, jobs: int = 1) -> list[TrajectoryRecord]:
    scenarios = list(scenarios)
    if jobs <= 1:
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, scenarios))


# -- presets -----------------------------------------------------------------

REFERENCE_BOX = (-3.0, 3.0, 0.1, 3.0)


def preset(name: str, horizon: int = 30, seed: int = 0, solver: SrsfSolverParams | None = None) -> Scenario:
    """Three reference scenarios on the wide initial box (switched controller, SRSF)."""
    table = {
        "fig1": dict(x0=1.0, a=2.0, b=0.5, noise="uniform"),
        "fig2": dict(x0=1.0, a=3.0, b=3.0, noise="adversarial"),
        "fig3": dict(x0=0.1, a=2.0, b=0.5, noise="zero"),
    }
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(table)}")
    cfg = table[name]
    return Scenario(
        x0=cfg["x0"],
        P0=geo.from_box(*REFERENCE_BOX),
        plant=Plant(cfg["a"], cfg["b"], 1.0),
        controller="PALC",
        arsf_variant="SRSF",
        pal=PalParams(p=10.0, lambda_star=0.5),
        noise=NoiseModel(cfg["noise"], seed),
        horizon=horizon,
        solver=solver or SrsfSolverParams(),
        name=name,
    )
