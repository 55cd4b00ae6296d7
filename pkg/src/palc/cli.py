"""Command-line front end: ``palc simulate|margin|sweep|oracle``.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime or
inconsistency error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import jsonschema

from . import polytope2d as geo
from .controllers import PalParams, SrsfSolverParams
from .margin import ControllabilityError, box_margin, deadbeat_max_gain, stability_margin
from .oracle import GridSpec, brute_margin, linear_policy, pal_policy, q_horizon
from .polytope2d import EmptySetError, GeometryError
from .sim import CONTROLLERS, NOISE_KINDS, NoiseModel, Plant, Scenario, preset, run, run_many

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
CONFIG_VERSION = 1
SWEEP_AXES = ("p", "lambda_star", "eta", "seed")

_NUM = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "x0", "P0", "plant", "controller"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "name": {"type": "string"},
        "x0": _NUM,
        "P0": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "box": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                "vertices": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                },
            },
            "oneOf": [{"required": ["box"]}, {"required": ["vertices"]}],
        },
        "plant": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a", "b", "eta"],
            "properties": {"a": _NUM, "b": _NUM, "eta": {"type": "number", "minimum": 0}},
        },
        "controller": {"enum": list(CONTROLLERS)},
        "arsf_variant": {"enum": ["WRSF", "SRSF"]},
        "pal": {
            "type": "object",
            "additionalProperties": False,
            "required": ["p", "lambda_star"],
            "properties": {"p": _NUM, "lambda_star": _NUM},
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": list(NOISE_KINDS)}, "seed": {"type": "integer"}},
        },
        "horizon": {"type": "integer", "minimum": 1},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "u_grid_points": {"type": "integer", "minimum": 3},
                "x_grid_points": {"type": "integer", "minimum": 3},
                "refine_iters": {"type": "integer", "minimum": 1},
                "u_range_factor": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "certify": {"type": "boolean"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "format": {"enum": ["csv", "json", "both"]},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid config:\n" + "\n".join(lines))


def scenario_from_config(cfg: dict) -> Scenario:
    validate_config(cfg)
    P0cfg = cfg["P0"]
    P0 = geo.from_box(*P0cfg["box"]) if "box" in P0cfg else geo.from_vertices(P0cfg["vertices"])
    pal = PalParams(**cfg["pal"]) if "pal" in cfg else None
    noise = cfg.get("noise", {"kind": "uniform"})
    return Scenario(
        x0=float(cfg["x0"]),
        P0=P0,
        plant=Plant(cfg["plant"]["a"], cfg["plant"]["b"], cfg["plant"]["eta"]),
        controller=cfg["controller"],
        arsf_variant=cfg.get("arsf_variant", "SRSF"),
        pal=pal,
        noise=NoiseModel(noise["kind"], noise.get("seed", 0)),
        horizon=cfg.get("horizon", 30),
        solver=SrsfSolverParams(**cfg.get("solver", {})),
        certify=cfg.get("certify", False),
        name=cfg.get("name", "run"),
    )


def config_from_scenario(sc: Scenario) -> dict:
    """Inverse of :func:`scenario_from_config` (vertices form for ``P0``)."""
    cfg = {
        "version": CONFIG_VERSION,
        "name": sc.name or "run",
        "x0": sc.x0,
        "P0": geo.to_dict(sc.P0),
        "plant": {"a": sc.plant.a_true, "b": sc.plant.b_true, "eta": sc.plant.eta},
        "controller": sc.controller,
        "arsf_variant": sc.arsf_variant,
        "noise": {"kind": sc.noise.kind, "seed": sc.noise.seed},
        "horizon": sc.horizon,
        "solver": {
            "u_grid_points": sc.solver.u_grid_points,
            "x_grid_points": sc.solver.x_grid_points,
            "refine_iters": sc.solver.refine_iters,
            "u_range_factor": sc.solver.u_range_factor,
        },
        "certify": sc.certify,
    }
    if sc.pal is not None:
        cfg["pal"] = {"p": sc.pal.p, "lambda_star": sc.pal.lambda_star}
    return cfg


def _load_scenario(args) -> tuple[Scenario, dict]:
    if args.preset and args.config:
        raise ConfigError("use either --preset or --config, not both")
    if args.preset:
        sc = preset(args.preset)
        out = {}
    elif args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        sc = scenario_from_config(cfg)
        out = cfg.get("output", {})
    else:
        raise ConfigError("one of --preset or --config is required")
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, noise=replace(sc.noise, seed=args.seed))
    if getattr(args, "horizon", None) is not None:
        sc = replace(sc, horizon=args.horizon)
    return sc, out


def _write_record(rec, out_dir: Path, fmt: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = rec.scenario.name or "run"
    written = []
    if fmt in ("csv", "both"):
        p = out_dir / f"{stem}.csv"
        p.write_text(rec.to_csv())
        written.append(p)
    if fmt in ("json", "both"):
        p = out_dir / f"{stem}.json"
        p.write_text(rec.to_json(indent=1))
        written.append(p)
    p = out_dir / f"{stem}_polytopes.json"
    p.write_text(rec.snapshots_json())
    written.append(p)
    return written


def cmd_simulate(args) -> int:
    sc, out = _load_scenario(args)
    rec = run(sc)
    out_dir = Path(args.out or out.get("dir") or ".")
    fmt = args.format or out.get("format") or "both"
    files = _write_record(rec, out_dir, fmt)
    s = rec.summary()
    print(f"scenario     {s['name']}  ({s['controller']}, {s['steps']} steps)")
    print(f"sup |x|      {s['sup_norm']:.6g}")
    print(f"switch step  {s['switch_step']}")
    print(f"final lambda {s['final_lambda']:.6g}")
    for f in files:
        print(f"wrote        {f}")
    if rec.error:
        print(f"error: {rec.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _read_polytope(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return geo.from_json(text)


def cmd_margin(args) -> int:
    try:
        P = _read_polytope(args.polytope)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if P.empty:
        print("error: polytope is empty; margin undefined", file=sys.stderr)
        return EXIT_RUNTIME
    res = stability_margin(P)
    bb = geo.bounding_box(P)
    print(f"lambda       {res.lam!r}")
    print(f"gain K       {res.gain!r}")
    try:
        print(f"k_max        {deadbeat_max_gain(P)!r}")
    except ControllabilityError:
        print("k_max        undefined (b not sign-definite)")
    print(f"bounding box a:[{bb.l_a!r}, {bb.u_a!r}] b:[{bb.l_b!r}, {bb.u_b!r}]")
    try:
        print(f"box lambda   {box_margin(bb).lam!r}")
    except ControllabilityError:
        print("box lambda   undefined (l_b <= 0)")
    return EXIT_OK


def _sweep_one(sc: Scenario, axis: str, value) -> Scenario:
    if axis == "seed":
        return replace(sc, noise=replace(sc.noise, seed=int(value)), name=f"{sc.name}_seed{int(value)}")
    if axis == "eta":
        return replace(sc, plant=replace(sc.plant, eta=float(value)))
    if sc.pal is None:
        raise ConfigError(f"axis {axis} needs a scenario with PAL parameters")
    pal = PalParams(**{**{"p": sc.pal.p, "lambda_star": sc.pal.lambda_star}, axis: float(value)})
    return replace(sc, pal=pal)


def sweep_rows(sc: Scenario, axis: str, values, jobs: int = 1) -> list[dict]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"invalid sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = sorted(float(v) for v in values)
    scenarios = [_sweep_one(sc, axis, v) for v in values]
    recs = run_many(scenarios, jobs)
    rows = []
    for v, rec in zip(values, recs):
        truth = (rec.scenario.plant.a_true, rec.scenario.plant.b_true)
        sound = all(geo.contains(P, truth, 1e-9) for P in rec.snapshots())
        rows.append(
            {
                "value": v,
                "sup_norm": rec.sup_norm,
                "switch_step": "" if rec.switch_step is None else rec.switch_step,
                "final_lambda": rec.final_lambda,
                "sound": sound,
                "error": rec.error or "",
            }
        )
    return rows


def cmd_sweep(args) -> int:
    sc, out = _load_scenario(args)
    try:
        rows = sweep_rows(sc, args.axis, args.values, args.jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out_dir = Path(args.out or out.get("dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{args.axis}.csv"
    with path.open("w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_RUNTIME if any(r["error"] for r in rows) else EXIT_OK


def cmd_oracle(args) -> int:
    try:
        P = _read_polytope(args.polytope)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if P.empty:
        print("error: polytope is empty", file=sys.stderr)
        return EXIT_RUNTIME
    if args.kind == "margin":
        kmax = deadbeat_max_gain(P)
        val = brute_margin(P, -(kmax + 1), kmax + 1, args.step)
        print(f"brute lambda {val!r}  (grid step {args.step})")
        return EXIT_OK
    if args.policy == "pal":
        policy = pal_policy(P, args.p, args.lambda_star)
    else:
        policy = linear_policy(float(args.gain))
    spec = GridSpec(param_grid=args.grid, noise_mode=args.noise, noise_points=args.noise_points)
    q = q_horizon(args.x0, P, policy, args.N, args.eta, spec)
    print(f"Q            {q.value!r}")
    print(f"tolerance    {q.tolerance!r}")
    print(f"lattice      {args.grid}x{args.grid} ({q.n_params} points), {q.n_noise} noise sequences")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="palc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--preset", choices=["fig1", "fig2", "fig3"])
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--out", metavar="DIR")

    p = sub.add_parser("simulate", help="run one closed-loop scenario")
    scenario_flags(p)
    p.add_argument("--format", choices=["csv", "json", "both"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("margin", help="stability margin report for a polytope JSON file")
    p.add_argument("polytope", help='JSON file {"vertices": [[a, b], ...]} or - for stdin')
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("sweep", help="one run per value of a scenario parameter")
    scenario_flags(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force worst-case cost or margin")
    p.add_argument("polytope")
    p.add_argument("--kind", choices=["q", "margin"], default="q")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--policy", choices=["pal", "gain"], default="pal")
    p.add_argument("--gain", type=float, default=0.0)
    p.add_argument("--p", type=float, default=10.0)
    p.add_argument("--lambda-star", dest="lambda_star", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--noise", choices=["corners", "grid"], default="corners")
    p.add_argument("--noise-points", type=int, default=3)
    p.add_argument("--step", type=float, default=1e-4)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, GeometryError, jsonschema.ValidationError) as exc:
        if isinstance(exc, EmptySetError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # PalParams / Scenario invariants
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
