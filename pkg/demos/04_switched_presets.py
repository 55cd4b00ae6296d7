"""The switched learner/robust controller on the three reference scenarios.

Start knowing only a in [-3, 3], b in [0.1, 3] with |w| <= 1. While the set
is too wide (margin above 0.5) the controller applies alternating high
gains to learn; once the margin drops below 0.5 it hands over to the
min-max robust feedback for good.
"""

from palc.sim import preset, run

for name, note in (
    ("fig1", "a=2, b=0.5, uniform noise"),
    ("fig2", "a=3, b=3 (a corner of the set), adversarial noise"),
    ("fig3", "a=2, b=0.5, no noise, tiny initial state"),
):
    sc = preset(name, horizon=12)
    rec = run(sc)
    print(f"{name}: {note}")
    print("   n        x          u     lambda  mode")
    for s in rec.steps:
        print(f"  {s.n:2d} {s.x:10.3f} {s.u:10.3f} {s.lam:8.4f}  {s.mode}")
    print(f"  switched at step {rec.switch_step}, sup|x| = {rec.sup_norm:.3f}\n")
