"""Command line front end.

Subcommands::

    funnelplatoon run      --preset scenario1 --out runs/s1 --plots
    funnelplatoon validate --config my.json
    funnelplatoon sweep    --preset scenario2 --param controller.gain2=900,1800,3600 --jobs 3
    funnelplatoon report   --preset scenario1 --trace runs/s1/trace.csv

Exit codes: 0 integration completed and all enabled checks passed, 2 a
check failed, 3 the integration could not stay in the safety domain (or
produced non-finite values), 4 the config could not be loaded or validated.
``FUNNELPLATOON_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .config import PRESETS, ConfigError, config_from_dict, config_to_dict, load_config, preset, validate_config
from .monitors import assumption_report, report_json, report_text, theorem_report
from .plots import KINDS, plot_trace
from .simulator import DomainExit, NonFiniteState, ScenarioConfig, integrate
from .traceio import read_trace_csv, write_trace_csv

EXIT_OK, EXIT_CHECK, EXIT_DOMAIN, EXIT_CONFIG = 0, 2, 3, 4
OUT_ENV = "FUNNELPLATOON_OUT"


@dataclass
class RunManifest:
    config: str
    out_dir: str
    artifacts: list[str] = field(default_factory=list)
    exit_status: int = EXIT_OK
    wall_seconds: float = 0.0
    message: str = ""


def run(
    cfg: ScenarioConfig,
    out_dir: Path,
    *,
    label: str = "",
    plots: bool = False,
    checks: Optional[bool] = None,
) -> RunManifest:
    """Integrate ``cfg``, write trace and reports (and plots) into ``out_dir``."""
    start = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    man = RunManifest(config=label, out_dir=str(out_dir))
    checks = cfg.checks.enabled if checks is None else checks

    def emit(name: str, text: str):
        (out_dir / name).write_text(text)
        man.artifacts.append(name)

    emit("config.json", json.dumps(config_to_dict(cfg), indent=2) + "\n")
    assumptions = assumption_report(cfg)
    try:
        trace = integrate(cfg)
    except DomainExit as exc:
        man.exit_status = EXIT_DOMAIN
        man.message = str(exc)
        extra = {
            "domain_exit": {
                "t": exc.t,
                "index": exc.index,
                "kind": exc.kind,
                "value": exc.value,
                "history": [list(h) for h in exc.history],
            }
        }
        emit("report.txt", report_text(assumptions, None) + f"domain exit: {exc}\n")
        emit("report.json", report_json(assumptions, None, extra))
    except NonFiniteState as exc:
        man.exit_status = EXIT_DOMAIN
        man.message = str(exc)
        extra = {"non_finite": {"t": exc.t, "positions": exc.last_good.positions.tolist(),
                                "velocities": exc.last_good.velocities.tolist()}}
        emit("report.txt", report_text(assumptions, None) + f"non-finite state: {exc}\n")
        emit("report.json", report_json(assumptions, None, extra))
    else:
        write_trace_csv(trace, out_dir / "trace.csv")
        man.artifacts.append("trace.csv")
        thm = theorem_report(trace, cfg)
        stats = asdict(trace.stats)
        emit("report.txt", report_text(assumptions, thm))
        emit("report.json", report_json(assumptions, thm, {"run_stats": stats}))
        if plots:
            for kind in KINDS:
                plot_trace(trace, kind, out_dir / f"{kind}.svg", d_min=cfg.controller.d_min, d_max=cfg.controller.d_max)
                man.artifacts.append(f"{kind}.svg")
        ok = thm.passed and assumptions.ok
        if checks and not ok:
            man.exit_status = EXIT_CHECK
            man.message = "checks failed; see report.txt"
    man.wall_seconds = time.perf_counter() - start
    (out_dir / "manifest.json").write_text(json.dumps(asdict(man), indent=2) + "\n")
    return man


# -- argument handling -------------------------------------------------------------


def _add_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON scenario config")
    src.add_argument("--preset", choices=PRESETS, help="bundled scenario")
    p.add_argument("--brake-start", type=float, help="brake onset of the scenario1 leader [s]")
    p.add_argument("--sample-step", type=float, help="output sample spacing [s]")
    p.add_argument("--tol", type=float, help="relative and absolute integrator tolerance")
    p.add_argument("--horizon", type=float, help="simulated time span [s]")
    p.add_argument("--method", choices=("rodas4", "dopri5"), help="integration scheme")


def _load(args) -> tuple[ScenarioConfig, str]:
    if args.preset:
        cfg = preset(args.preset, brake_start=args.brake_start)
        label = args.preset
    else:
        cfg = load_config(args.config, validate=False)
        label = args.config
        if args.brake_start is not None:
            if cfg.leader.kind != "brake-profile":
                raise ConfigError("--brake-start", "the config leader is not a brake profile")
            doc = config_to_dict(cfg)
            doc["leader"]["brake_start"] = args.brake_start
            cfg = config_from_dict(doc, validate=False)
    changes = {}
    if args.sample_step is not None:
        changes["sample_step"] = args.sample_step
    if args.tol is not None:
        changes["rtol"] = changes["atol"] = args.tol
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.method is not None:
        changes["method"] = args.method
    if changes:
        try:
            cfg = cfg.replace(**changes)
        except ValueError as exc:
            raise ConfigError("flags", str(exc)) from None
    validate_config(cfg)
    return cfg, label


def _out_dir(args, label: str) -> Path:
    if args.out:
        return Path(args.out)
    base = Path(os.environ.get(OUT_ENV, "runs"))
    return base / Path(label).stem


def _parse_param(spec: str) -> tuple[list[str], list]:
    key, _, values = spec.partition("=")
    if not key or not values:
        raise ConfigError("--param", f"expected section.key=v1,v2,..., got {spec!r}")
    parsed = []
    for v in values.split(","):
        try:
            parsed.append(json.loads(v))
        except json.JSONDecodeError:
            parsed.append(v)
    return key.split("."), parsed


def _set_path(doc: dict, path: list[str], value):
    node = doc
    for k in path[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    if isinstance(node, list):
        node[int(path[-1])] = value
    else:
        node[path[-1]] = value


def _sweep_worker(job):
    doc, out_dir, label, plots, checks = job
    try:
        cfg = config_from_dict(doc)
    except (ConfigError, ValueError, TypeError) as exc:
        return asdict(RunManifest(config=label, out_dir=out_dir, exit_status=EXIT_CONFIG, message=str(exc)))
    return asdict(run(cfg, Path(out_dir), label=label, plots=plots, checks=checks))


def cmd_run(args) -> int:
    cfg, label = _load(args)
    man = run(cfg, _out_dir(args, label), label=label, plots=args.plots, checks=False if args.no_checks else None)
    print((Path(man.out_dir) / "report.txt").read_text(), end="")
    print(f"wrote {', '.join(man.artifacts)} to {man.out_dir} in {man.wall_seconds:.1f} s")
    if man.message:
        print(man.message, file=sys.stderr)
    return man.exit_status


def cmd_validate(args) -> int:
    cfg, _ = _load(args)
    rep = assumption_report(cfg)
    print(report_text(rep, None), end="")
    return EXIT_OK if rep.ok else EXIT_CHECK


def cmd_sweep(args) -> int:
    base, label = _load(args)
    base_doc = config_to_dict(base)
    axes = [_parse_param(p) for p in args.param]
    out_root = _out_dir(args, label)
    jobs = []
    for k, combo in enumerate(itertools.product(*[vals for _, vals in axes])):
        doc = copy.deepcopy(base_doc)
        tag = []
        for (path, _), value in zip(axes, combo):
            try:
                _set_path(doc, path, value)
            except (KeyError, IndexError, ValueError, TypeError) as exc:
                raise ConfigError(".".join(path), f"cannot set: {exc}") from None
            tag.append(f"{'.'.join(path)}={value}")
        jobs.append((doc, str(out_root / f"run_{k:03d}"), " ".join(tag), args.plots, False if args.no_checks else None))
    if args.jobs == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "sweep.json").write_text(json.dumps(results, indent=2) + "\n")
    for r in results:
        print(f"{r['exit_status']}  {r['out_dir']}  {r['config']}  {r['message']}")
    return max((r["exit_status"] for r in results), default=EXIT_OK)


def cmd_report(args) -> int:
    cfg, _ = _load(args)
    trace = read_trace_csv(args.trace)
    if trace.n != cfg.n:
        raise ConfigError("--trace", f"trace has {trace.n} vehicles, config {cfg.n}")
    rep = assumption_report(cfg)
    thm = theorem_report(trace, cfg)
    if args.json:
        print(report_json(rep, thm), end="")
    else:
        print(report_text(rep, thm), end="")
    return EXIT_OK if (thm.passed and rep.ok) or args.no_checks else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funnelplatoon", description="Funnel cruise control platoon simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one scenario and write trace, report and plots")
    _add_source(p)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<name> or runs/<name>)")
    p.add_argument("--plots", action="store_true", help="also write SVG plots")
    p.add_argument("--no-checks", action="store_true", help="do not let failed checks affect the exit code")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config against the standing assumptions")
    _add_source(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="run a grid of parameter variations in parallel")
    _add_source(p)
    p.add_argument("--param", action="append", default=[], help="section.key=v1,v2,... (repeatable)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    p.add_argument("--out", help="root output directory")
    p.add_argument("--plots", action="store_true")
    p.add_argument("--no-checks", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="recompute the checks for an existing trace CSV")
    _add_source(p)
    p.add_argument("--trace", required=True, help="trace CSV written by run")
    p.add_argument("--json", action="store_true", help="print the machine-readable report")
    p.add_argument("--no-checks", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
