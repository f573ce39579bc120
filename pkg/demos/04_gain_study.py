"""Smaller and larger k2 on Scenario 2, starting from the 2 m_max rule of thumb.

Each run is independent, so they go to a process pool.  For every k2 the
script prints the smallest funnel margin, the largest gap variation and the
peak input over the first 20 s.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from funnelplatoon import ControllerParams, gain_heuristic, integrate, preset
from funnelplatoon.simulator import DomainExit


def run(k2):
    cfg = preset("scenario2")
    cfg = cfg.replace(controller=ControllerParams(gain1=3600.0, gain2=k2), rtol=1e-8, atol=1e-8, horizon=20.0)
    try:
        tr = integrate(cfg)
    except DomainExit as exc:
        return k2, None, str(exc)
    return k2, (tr.margin.min(), np.ptp(tr.gap, axis=0).max(), np.abs(tr.u).max()), ""


if __name__ == "__main__":
    k1, k2 = gain_heuristic(preset("scenario2").masses)
    print(f"rule of thumb: k1 = k2 = {k2:.0f}")
    grid = [k2 / 8, k2 / 2, k2, 2 * k2]
    with ProcessPoolExecutor() as pool:
        for k, res, err in pool.map(run, grid):
            if res is None:
                print(f"k2 = {k:7.0f}: {err}")
            else:
                print(f"k2 = {k:7.0f}: min margin {res[0]:.2e} m/s, gap variation {res[1]:.3f} m, sup|u| {res[2]:.0f} N")
