"""How the funnel controller reacts as a gap approaches the corridor edges.

No simulation here: the script evaluates the control law for one follower
behind a leader at a range of gaps and relative speeds and prints a small
table.  Run with ``python demos/01_barrier_anatomy.py``.
"""

import numpy as np

from funnelplatoon import ControllerParams, DomainError, control_input

cp = ControllerParams()
print(f"corridor ({cp.d_min}, {cp.d_max}) m, psi(0) = {float(cp.funnel(0.0))}")

# At the corridor midpoint the two barrier terms cancel and w is the relative speed.
mid = (cp.d_min + cp.d_max) / 2
for dv in (0.0, 0.5, 1.5):
    d = control_input(0.0, -mid, 20.0 + dv, 0.0, 20.0, cp)
    print(f"gap {mid:5.2f}  dv {dv:4.1f}  w {d.funnel_var:+.4f}  k3 {d.funnel_gain:.4f}  u {d.control:10.1f} N")

# Towards d_min the barrier term 1/xi pushes w up to psi and the funnel term k3*w grows without bound.
print("\napproaching the safety distance with equal speeds")
for gap in (8.0, 4.0, 3.0, 2.6, 2.53, 2.52, 2.515, 2.5):
    try:
        d = control_input(0.0, -gap, 20.0, 0.0, 20.0, cp)
        barrier = d.funnel_gain * d.funnel_var
        print(f"gap {gap:6.3f}  w {d.funnel_var:+.4f}  margin {d.funnel_margin:.4f}  k3*w {barrier:10.2f}  u {d.control:10.1f} N")
    except DomainError as exc:
        print(f"gap {gap:5.2f}  outside the funnel: {exc}")

# The funnel shrinks from 2 to 1, so the same state can leave it later.
ts = np.array([0.0, 0.5, 1.0, 3.0])
print("\nfunnel boundary", np.round(cp.funnel(ts), 4))
