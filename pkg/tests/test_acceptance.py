"""Acceptance criteria, one test each, at their stated tolerances.

Each test appends a PASS/FAIL line that ``conftest.py`` prints in the
terminal summary. Run with ``pytest tests/test_acceptance.py``.
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from palc import polytope2d as geo
from palc.consistent import reach_interval
from palc.controllers import PalParams, SrsfSolverParams, gamma_rsf, gamma_seq, v_rsf_lambda
from palc.margin import box_margin, deadbeat_max_gain, stability_margin
from palc.oracle import brute_margin, sample_polytope
from palc.sim import NoiseModel, Plant, Scenario, preset, run, transient_bound

pytestmark = pytest.mark.acceptance

T_START = time.perf_counter()
WIDE = geo.from_box(-3, 3, 0.1, 3)
SMALL = geo.from_box(-0.4, 0.4, 0.5, 1.5)
PAL = PalParams(10, 0.5)
# lighter than the defaults; bulk runs only need a sound, reasonable ARSF
BULK = SrsfSolverParams(u_grid_points=61, x_grid_points=17, refine_iters=20)
NOISES = ("uniform", "adversarial", "zero")


@contextmanager
def criterion(num, name):
    info = {"detail": ""}
    ok = False
    try:
        yield info
        ok = True
    finally:
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[{num}] {status}  {name}  {info['detail']}".rstrip())


def random_polytope(rng, b_lo, b_hi, a_lim=3.0):
    while True:
        nv = int(rng.integers(3, 9))
        P = geo.from_vertices(rng.uniform([-a_lim, b_lo], [a_lim, b_hi], size=(nv, 2)))
        if len(P) >= 3:
            return P


def random_scenario(rng, controller, horizon, P0=WIDE):
    a, b = sample_polytope(P0, 1, rng)[0]
    return Scenario(
        x0=float(rng.uniform(-5, 5)),
        P0=P0,
        plant=Plant(float(a), float(b), float(rng.choice([0.5, 1.0, 2.0]))),
        controller=controller,
        arsf_variant=str(rng.choice(["WRSF", "SRSF"])),
        pal=PAL,
        noise=NoiseModel(str(rng.choice(NOISES)), int(rng.integers(1 << 30))),
        horizon=horizon,
        solver=BULK,
    )


def test_01_margin_exactness():
    with criterion(1, "margin exact vs brute grid (1000 polytopes, tol 1e-3, < 5 s)") as info:
        rng = np.random.default_rng(101)
        polys = [random_polytope(rng, 0.5, 5.0) for _ in range(1000)]
        t0 = time.perf_counter()
        exact = [stability_margin(P).lam for P in polys]
        elapsed = time.perf_counter() - t0
        worst = 0.0
        for P, lam in zip(polys, exact):
            k = deadbeat_max_gain(P) + 1
            worst = max(worst, abs(lam - brute_margin(P, -k, k, 1e-4)))
        info["detail"] = f"max err {worst:.2e}, exact solver {elapsed:.2f}s"
        assert worst <= 1e-3
        assert elapsed < 5


def test_02_box_formula():
    with criterion(2, "box closed form == exact solver (1000 boxes, tol 1e-9)") as info:
        rng = np.random.default_rng(102)
        worst = 0.0
        for _ in range(1000):
            la, ua = np.sort(rng.uniform(-5, 5, 2))
            lb, ub = np.sort(rng.uniform(1e-3, 5, 2))
            B = geo.from_box(la, ua, lb, ub)
            worst = max(worst, abs(box_margin(geo.bounding_box(B)).lam - stability_margin(B).lam))
        info["detail"] = f"max err {worst:.2e}"
        assert worst <= 1e-9


def test_03_initial_margin():
    with criterion(3, "initial box: lambda = 3, K = 0, k_max = 30") as info:
        res = stability_margin(WIDE)
        kmax = deadbeat_max_gain(WIDE)
        info["detail"] = f"lambda {res.lam!r}, K {res.gain!r}, k_max {kmax!r}"
        assert abs(res.lam - 3) <= 1e-9 and abs(res.gain) <= 1e-9 and abs(kmax - 30) <= 1e-9


def test_04_soundness():
    with criterion(4, "soundness: truth in every P_n (600 runs, all controllers)") as info:
        rng = np.random.default_rng(104)
        violations = runs = 0
        for i in range(600):
            ctrl = ("RSF", "WRSF", "SRSF", "PAL", "PALC")[i % 5]
            P0 = WIDE if i % 2 else random_polytope(rng, 0.1, 3.0)
            sc = random_scenario(rng, ctrl, 12, P0)
            rec = run(sc)
            assert rec.error is None, rec.error
            truth = (sc.plant.a_true, sc.plant.b_true)
            violations += sum(not geo.contains(P, truth, 1e-9) for P in rec.snapshots())
            runs += 1
        info["detail"] = f"{runs} runs, {violations} violations"
        assert violations == 0


def test_05_pal_margin_threshold():
    with criterion(5, "PAL: lambda(P_n) <= 0.5 after two steps with |x| >= p*eta (600 runs)") as info:
        rng = np.random.default_rng(105)
        checked = violations = 0
        worst = 0.0
        for _ in range(600):
            sc = random_scenario(rng, "PAL", 14)
            rec = run(sc)
            assert rec.error is None, rec.error
            xs = np.abs(rec.xs)
            lams = list(rec.lambdas) + [rec.final_lambda]
            thr = PAL.p * sc.plant.eta
            for n in range(2, len(lams)):
                if min(xs[n - 1], xs[n - 2]) >= thr:
                    checked += 1
                    worst = max(worst, lams[n])
                    violations += lams[n] > PAL.lambda_star + 1e-6
        info["detail"] = f"{checked} qualifying steps, worst lambda {worst:.4f}, {violations} violations"
        assert checked > 0 and violations == 0


def _palc_family(rng, count, horizon):
    out = [preset(name, horizon, seed=s, solver=BULK) for name in ("fig1", "fig2", "fig3") for s in range(3)]
    while len(out) < count:
        sc = random_scenario(rng, "PALC", horizon)
        out.append(Scenario(
            x0=float(rng.choice([-2.0, -0.5, 0.1, 1.0, 3.0])), P0=WIDE, plant=Plant(sc.plant.a_true, sc.plant.b_true, 1.0),
            controller="PALC", arsf_variant=sc.arsf_variant, pal=PAL, noise=sc.noise, horizon=horizon, solver=BULK,
        ))
    return out


@pytest.fixture(scope="module")
def palc_runs():
    rng = np.random.default_rng(106)
    return [run(sc) for sc in _palc_family(rng, 220, 25)]


def test_06_transient_bound(palc_runs):
    with criterion(6, "switched law: sup|x| <= certified two-step bound (220 runs)") as info:
        worst_ratio = 0.0
        violations = 0
        for rec in palc_runs:
            assert rec.error is None, rec.error
            bound = transient_bound(rec.scenario)
            worst_ratio = max(worst_ratio, rec.sup_norm / bound)
            violations += rec.sup_norm > bound
        info["detail"] = f"{len(palc_runs)} runs, max sup/bound {worst_ratio:.3f}, {violations} violations"
        assert violations == 0


def test_07_post_switch_decay(palc_runs):
    with criterion(7, "switched law: geometric decay after the switch") as info:
        switched = violations = 0
        for rec in palc_runs:
            n0 = rec.switch_step
            if n0 is None:
                continue
            switched += 1
            xs = np.abs(rec.xs)
            eta = rec.scenario.plant.eta
            for n in range(n0, len(xs)):
                bound = 0.5 ** (n - n0) * xs[n0] + eta / (1 - 0.5) + 1e-6
                violations += xs[n] > bound
        info["detail"] = f"{switched} switching runs, {violations} violations"
        assert switched > 0 and violations == 0


def test_08_gamma_ordering():
    with criterion(8, "gamma ordering SRSF <= WRSF <= RSF and per-step V bounds") as info:
        assert stability_margin(SMALL).lam < 1
        rng = np.random.default_rng(108)
        order_viol = step_viol = steps = 0
        for seed in range(4):
            a, b = sample_polytope(SMALL, 1, rng)[0]
            base = Scenario(4.0, SMALL, Plant(float(a), float(b), 1.0), "WRSF",
                            noise=NoiseModel("uniform", seed), horizon=30, solver=BULK)
            snaps = run(base).snapshots()[:30]
            g_r = gamma_seq("RSF", 4.0, snaps, 1.0)
            g_w = gamma_seq("WRSF", 4.0, snaps, 1.0)
            g_s = gamma_seq("SRSF", 4.0, snaps, 1.0, BULK)
            order_viol += sum(not (s <= w + 1e-9 and w <= r + 1e-9) for r, w, s in zip(g_r, g_w, g_s))
            lam0 = stability_margin(SMALL).lam
            for ctrl in ("RSF", "WRSF", "SRSF"):
                for kind in ("uniform", "adversarial"):
                    sc = Scenario(4.0, SMALL, Plant(float(a), float(b), 1.0), ctrl,
                                  noise=NoiseModel(kind, seed), horizon=30, solver=BULK)
                    for s in run(sc).steps:
                        v = v_rsf_lambda(s.x, lam0, 1.0) if ctrl == "RSF" else s.bound
                        step_viol += abs(s.x_next) > v + 1e-9
                        steps += 1
        info["detail"] = f"{order_viol} ordering violations, {step_viol}/{steps} step violations"
        assert order_viol == 0 and step_viol == 0


def test_09_frozen_gain_envelope():
    with criterion(9, "frozen robust gain: |x_n| <= gamma_n over all {+-eta}^10") as info:
        res = stability_margin(SMALL)
        lam, K = res.lam, res.gain
        eta, x0 = 1.0, 3.0
        noise = np.array(list(itertools.product([-eta, eta], repeat=10)))
        violations = 0
        for a, b in SMALL.vertices:
            x = np.full(len(noise), x0)
            for n in range(10):
                x = a * x + b * K * x + noise[:, n]
                violations += int(np.sum(np.abs(x) > gamma_rsf(n + 1, x0, lam, eta) + 1e-12))
        info["detail"] = f"{len(noise)} sequences x {len(SMALL.vertices)} vertices, {violations} violations"
        assert violations == 0


def test_10_scaling_identity():
    with criterion(10, "one-step reachable set scaling identity (1000 cases, 1e-12 rel)") as info:
        rng = np.random.default_rng(110)
        worst = 0.0
        for _ in range(1000):
            P = geo.from_vertices(rng.uniform(-3, 3, size=(int(rng.integers(1, 8)), 2)))
            x, u = rng.normal(scale=5, size=2)
            eta = rng.uniform(0, 3)
            alpha = float(np.exp(rng.uniform(-3, 3)))
            lhs = reach_interval(alpha * x, alpha * u, P, eta)
            rhs = np.multiply(alpha, reach_interval(x, u, P, eta / alpha))
            scale = max(abs(lhs[0]), abs(lhs[1]), 1e-300)
            worst = max(worst, float(np.max(np.abs(np.subtract(lhs, rhs)))) / scale)
        info["detail"] = f"max rel err {worst:.2e}"
        assert worst <= 1e-12


def test_11_presets_and_runtime():
    with criterion(11, "reference presets reproduce qualitatively; suite < 120 s") as info:
        recs = {name: run(preset(name)) for name in ("fig1", "fig2", "fig3")}
        for rec in recs.values():
            assert rec.complete
            assert np.all(np.diff(list(rec.lambdas) + [rec.final_lambda]) <= 1e-9)
        xs = np.abs(recs["fig2"].xs)
        ready = next((n for n in range(2, len(xs)) if min(xs[n - 1], xs[n - 2]) >= 10), len(xs))
        lams = list(recs["fig2"].lambdas) + [recs["fig2"].final_lambda]
        first_ok = next(n for n, lam in enumerate(lams) if lam <= 0.5)
        assert first_ok <= ready + 2
        passive = [s for s in recs["fig3"].steps if s.mode == "Passive"]
        assert passive and all(s.u != 0 for s in passive)
        elapsed = time.perf_counter() - T_START
        info["detail"] = (
            f"switch steps fig1/2/3 = {[r.switch_step for r in recs.values()]}, "
            f"module runtime {elapsed:.1f}s"
        )
        assert elapsed < 120
