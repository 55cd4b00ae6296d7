import json

import numpy as np
import pytest

from palc import polytope2d as geo
from palc.controllers import PalParams, SrsfSolverParams
from palc.sim import (
    CSV_COLUMNS,
    ContractViolation,
    NoiseModel,
    Plant,
    Scenario,
    noise_sample,
    preset,
    run,
    run_many,
    step,
)

WIDE = geo.from_box(-3, 3, 0.1, 3)
SMALL = geo.from_box(-0.4, 0.4, 0.5, 1.5)
FAST = SrsfSolverParams(u_grid_points=61, x_grid_points=17, refine_iters=20)


def test_noise_models():
    adv = NoiseModel("adversarial")
    assert noise_sample(adv, 2, 0.5, 1, 2, 1.0) == 1.0
    assert noise_sample(adv, 2, 0.5, 1, -4, 0.7) == 0.7
    assert noise_sample(adv, 2, 0.5, -1, 0, 0.7) == -0.7
    assert noise_sample(NoiseModel("zero"), 2, 0.5, 1, 2, 1.0) == 0.0
    rng = np.random.default_rng(0)
    w = [noise_sample(NoiseModel("uniform"), 2, 0.5, 1, 2, 0.3, rng) for _ in range(1000)]
    assert max(map(abs, w)) <= 0.3
    with pytest.raises(ValueError):
        NoiseModel("gaussian")


def test_step_examples():
    plant = Plant(2, 0.5, 1)
    assert step(plant, 1, 7.5, 1) == 6.75
    assert step(plant, 3, -4 * 3, 0) == 0
    assert step(plant, 0, 0, -0.4) == -0.4
    with pytest.raises(ContractViolation):
        step(plant, 0, 0, 1.5)


def test_scenario_validation():
    with pytest.raises(ContractViolation):
        Scenario(1.0, SMALL, Plant(2, 0.5, 1), controller="WRSF")
    with pytest.raises(ValueError):
        Scenario(1.0, WIDE, Plant(2, 0.5, 1), controller="PAL")
    with pytest.raises(ValueError):
        Scenario(1.0, WIDE, Plant(2, 0.5, 1), controller="LQR")
    with pytest.raises(ValueError):
        Scenario(1.0, WIDE, Plant(2, 0.5, 1), controller="WRSF", horizon=0)


def check_record(rec, a, b):
    lam = rec.lambdas
    assert np.all(np.diff(lam) <= 1e-9)
    snaps = rec.snapshots()
    for prev, cur in zip(snaps, snaps[1:]):
        assert all(geo.contains(prev, v, 1e-9) for v in cur.vertices)
    assert all(geo.contains(P, (a, b), 1e-9) for P in snaps)


def test_fig1_preset():
    rec = run(preset("fig1"))
    assert rec.complete and len(rec.steps) == 30
    check_record(rec, 2.0, 0.5)
    assert rec.switch_step is not None
    modes = rec.modes
    assert modes[: rec.switch_step] == ["Passive"] * rec.switch_step
    assert set(modes[rec.switch_step:]) == {"Adaptive"}
    # after switching, the state settles into a noise-sized band
    assert np.abs(rec.xs[-10:]).max() < 10


def test_fig2_preset_switches_fast():
    rec = run(preset("fig2"))
    check_record(rec, 3.0, 3.0)
    xs = np.abs(rec.xs)
    # switch no later than two steps after the state first clears p * eta
    ready = next((n for n in range(2, len(xs)) if min(xs[n - 1], xs[n - 2]) >= 10), len(xs))
    assert rec.switch_step is not None and rec.switch_step <= ready + 2
    assert rec.switch_step <= 2
    modes = rec.modes
    assert modes.count("Passive") == rec.switch_step


def test_fig3_preset_excites_while_passive():
    rec = run(preset("fig3"))
    check_record(rec, 2.0, 0.5)
    passive = [s for s in rec.steps if s.mode == "Passive"]
    assert passive and all(s.u != 0 for s in passive)
    assert all(s.w == 0 for s in rec.steps)


@pytest.mark.parametrize("controller", ["RSF", "WRSF", "SRSF", "PAL", "PALC"])
def test_every_controller_runs_sound(controller):
    pal = PalParams(10, 0.5)
    sc = Scenario(2.0, SMALL, Plant(0.3, 1.2, 1.0), controller, "SRSF", pal, NoiseModel("uniform", 3), 12, FAST)
    rec = run(sc)
    check_record(rec, 0.3, 1.2)
    assert len(rec.steps) == 12


def test_wrsf_and_srsf_per_step_bounds():
    for ctrl in ("WRSF", "SRSF"):
        for seed in range(5):
            sc = Scenario(3.0, SMALL, Plant(-0.2, 0.8, 1.0), ctrl, noise=NoiseModel("uniform", seed), horizon=10, solver=FAST)
            rec = run(sc)
            for s in rec.steps:
                assert abs(s.x_next) <= s.bound + 1e-9


def test_determinism_and_serialization():
    sc = preset("fig1", horizon=12, seed=5, solver=FAST)
    r1, r2 = run(sc), run(sc)
    assert r1.to_json() == r2.to_json()
    assert r1.to_csv() == r2.to_csv()
    assert run_many([sc, sc])[0].to_json() == r1.to_json()
    d = json.loads(r1.to_json())
    assert len(d["steps"]) == 12
    header = r1.to_csv().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    assert len(json.loads(r1.snapshots_json())) == 13


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("fig9")
