"""Scenario 1: twenty vehicles behind a leader that brakes to a stop.

The leader cruises at 20 m/s and brakes at 5 m/s^2 from t = 15 s.  The
script integrates the closed loop, prints the safety numbers and writes
the three SVG figures next to the trace in ``demo_out/scenario1``.
"""

from pathlib import Path

import numpy as np

from funnelplatoon import integrate, preset, theorem_report, write_trace_csv
from funnelplatoon.plots import KINDS, plot_trace

out = Path("demo_out/scenario1")
out.mkdir(parents=True, exist_ok=True)

cfg = preset("scenario1").replace(rtol=1e-8, atol=1e-8)
trace = integrate(cfg)
print(f"{trace.stats.n_steps} steps, {trace.stats.n_rejected} rejected, smallest step {trace.stats.smallest_step:.2e} s")

rep = theorem_report(trace, cfg)
print(f"gaps stay in [{trace.gap.min():.3f}, {trace.gap.max():.3f}] m, required [{2 + rep.eps1:.3f}, {15 - rep.eps1:.3f}]")
print(f"smallest funnel margin {rep.eps2_emp:.2e} m/s (reached while the platoon comes to rest)")

# velocities before the brake: the platoon is still settling at t = 10 s
for t in (5.0, 10.0, 15.0):
    k = int(round(t / cfg.sample_step))
    print(f"t = {t:4.1f} s  velocity spread {np.ptp(trace.v[k]):.3f} m/s")

print(f"final gaps {np.round(trace.gap[-1, :4], 3)} ... all vehicles at rest: {np.abs(trace.v[-1]).max() < 1e-2}")

write_trace_csv(trace, out / "trace.csv")
for kind in KINDS:
    plot_trace(trace, kind, out / f"{kind}.svg", d_min=cfg.controller.d_min, d_max=cfg.controller.d_max)
print(f"wrote {out}/")
