import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from funnelplatoon.config import preset
from funnelplatoon.plots import KINDS, plot_trace
from funnelplatoon.simulator import integrate


@pytest.fixture(scope="module")
def trace():
    cfg = preset("scenario1")
    cfg = cfg.replace(vehicles=cfg.vehicles[:4], initial_gaps=cfg.initial_gaps[:4],
                      initial_velocities=cfg.initial_velocities[:4], horizon=3.0)
    return integrate(cfg)


def _parse(path):
    return ET.parse(path).getroot()


@pytest.mark.parametrize("kind", KINDS)
def test_plot_valid_and_deterministic(tmp_path, trace, kind):
    a = plot_trace(trace, kind, tmp_path / "a.svg", d_min=2.0, d_max=15.0)
    b = plot_trace(trace, kind, tmp_path / "b.svg", d_min=2.0, d_max=15.0)
    assert a.read_bytes() == b.read_bytes()
    root = _parse(a)
    lines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(lines) == 4
    text = a.read_text()
    assert "time t [s]" in text and re.search(r"\[m(/s(\^2)?)?\]", text)


def test_distance_lines_inside_references(tmp_path, trace):
    root = _parse(plot_trace(trace, "distances", tmp_path / "d.svg", d_min=2.0, d_max=15.0))
    refs = sorted(float(e.get("y1")) for e in root.iter() if e.get("class") == "reference")
    assert len(refs) == 2  # d_max is drawn higher (smaller y) than d_min
    for line in (e for e in root.iter() if e.tag.endswith("polyline")):
        ys = [float(p.split(",")[1]) for p in line.get("points").split()]
        assert refs[0] < min(ys) and max(ys) < refs[1]


def test_single_sample_trace(tmp_path):
    cfg = preset("scenario2")
    tr = integrate(cfg.replace(horizon=0.0))
    root = _parse(plot_trace(tr, "velocities", tmp_path / "v.svg"))
    assert len([e for e in root.iter() if e.tag.endswith("circle")]) == 20


def test_unknown_kind(tmp_path, trace):
    with pytest.raises(ValueError):
        plot_trace(trace, "jerk", tmp_path / "x.svg")
