"""``peak-aoi`` command line: bounds, simulation, sweeps and the validation suite.

Exit codes: 0 success, 1 validation failure, 2 invalid or unstable model,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import bounds, exact
from .checks import run_suite
from .dist import parse_literal
from .errors import NoPositiveTheta, PeakAoIError, QuadratureFailure, UnstableModel
from .plot import write_svg
from .simulate import SimConfig, export_raw, simulate_peak_aoi
from .theta import QueueModel, dm1, mm1, solve_theta_star

EXIT_OK, EXIT_VALIDATION, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "model": "mm1",
    "lambda_t": None,
    "mu": None,
    "D": None,
    "arrival": None,
    "service": None,
    "d": None,
    "rho": None,
    "seed": 0,
    "packets": 1_000_000,
    "warmup": 10_000,
    "reps": 20,
    "out": None,
    "quick": False,
    "svg": None,
    "mode": "violation",
    "simulate": False,
    "export_raw": None,
    "theta_override": None,
}
QUICK_SIM = {"packets": 200_000, "warmup": 2_000, "reps": 4}
_CONFIG_ALIASES = {"lambda": "lambda_t", "packets": "packets", "model_template": "model"}


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def parse_grid(spec) -> list[float]:
    """``start:stop:step`` (both ends inclusive when step divides), ``a,b,c`` or a number."""
    if spec is None:
        return []
    if isinstance(spec, (int, float)):
        values = [float(spec)]
    elif isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    else:
        text = str(spec).strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must be start:stop:step")
            start, stop, step = map(float, parts)
            if step <= 0 or stop < start:
                raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9))
            values = [round(start + i * step, 12) for i in range(n + 1)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"grid {spec!r} must be strictly increasing")
    return values


def load_config(path) -> dict:
    """Flatten a JSON config (nested sections allowed) onto flag names."""
    with open(path) as fh:
        raw = json.load(fh)
    flat = {}

    def walk(node):
        for key, value in node.items():
            if isinstance(value, dict):
                walk(value)
                continue
            name = key.replace("-", "_")
            name = _CONFIG_ALIASES.get(name, name)
            if name not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r} in {path}")
            flat[name] = value

    walk(raw)
    return flat


def resolve(args) -> argparse.Namespace:
    """Defaults < config file < explicit flags."""
    merged = dict(DEFAULTS)
    if args.quick:
        merged.update(QUICK_SIM)
    if args.config:
        cfg = load_config(args.config)
        if cfg.get("quick"):
            merged.update(QUICK_SIM)
        merged.update(cfg)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            merged[key] = value
    merged["command"] = args.command
    return argparse.Namespace(**merged)


def build_model(a) -> QueueModel:
    if a.model == "mm1":
        if a.lambda_t is None or a.mu is None:
            raise UsageError("--model mm1 needs --lambda and --mu")
        return mm1(float(a.lambda_t), float(a.mu))
    if a.model == "dm1":
        if a.D is None or a.mu is None:
            raise UsageError("--model dm1 needs --D and --mu")
        return dm1(float(a.D), float(a.mu))
    if a.model == "generic":
        if not a.arrival or not a.service:
            raise UsageError("--model generic needs --arrival and --service literals")
        return QueueModel(parse_literal(a.arrival), parse_literal(a.service))
    raise UsageError(f"unknown model template {a.model!r}")


def template_model(template: str, mu: float, rho: float) -> QueueModel:
    if template == "mm1":
        return mm1(mu / rho, mu)
    if template == "dm1":
        return dm1(mu / rho, mu)
    raise UsageError(f"rho sweeps need --model mm1 or dm1, not {template!r}")


def sim_config(a) -> SimConfig:
    return SimConfig(int(a.packets), int(a.warmup), int(a.reps), int(a.seed))


@contextmanager
def output(path):
    if path is None:
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


def write_rows(path, header, rows):
    with output(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_manifest(path, payload):
    if path is None:
        return
    with open(f"{path}.manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_grid(values, flag):
    if not values:
        raise UsageError(f"{flag} grid is required")
    return values


def cmd_bound(a) -> int:
    model = build_model(a)
    grid = _require_grid(parse_grid(a.d), "--d")
    curve = bounds.bound_curve(model, grid)
    write_rows(a.out, ("d", "bound", "method", "theta_star"),
               [(d, b, curve.method, curve.theta.value) for d, b in curve.points])
    if a.svg:
        write_svg(a.svg, {model.describe(): (curve.d, curve.bounds)}, "d", "Pr{P > d} bound", logy=True)
    return EXIT_OK


def cmd_simulate(a) -> int:
    model = build_model(a)
    grid = _require_grid(parse_grid(a.d), "--d")
    cfg = sim_config(a)
    t0 = time.perf_counter()
    res = simulate_peak_aoi(model, cfg, keep_raw=bool(a.export_raw))
    wall = time.perf_counter() - t0
    ests = res.violations(grid)
    write_rows(a.out, ("d", "empirical_p", "stderr", "n_samples", "low_confidence_flag"),
               [(e.d, e.p, e.stderr, e.n_samples, e.low_confidence) for e in ests])
    if a.export_raw:
        export_raw(res, a.export_raw)
    mean, se = res.mean_peak()
    write_manifest(a.out, {
        "command": "simulate",
        "model": model.describe(),
        "base_seed": cfg.base_seed,
        "per_replication_seed": res.per_replication_seed,
        "num_packets": cfg.num_packets,
        "warmup_packets": cfg.warmup_packets,
        "replications": cfg.replications,
        "retained_samples": res.n_samples,
        "mean_peak": mean,
        "mean_peak_stderr": se,
        "wall_time_s": wall,
    })
    return EXIT_OK


def cmd_sweep_rho(a) -> int:
    rhos = _require_grid(parse_grid(a.rho), "--rho")
    mu = float(a.mu if a.mu is not None else 1.0)
    mode = a.mode
    if mode not in ("violation", "mean"):
        raise UsageError("--mode must be violation or mean")
    d = parse_grid(a.d if a.d is not None else 3.0)
    if mode == "violation" and len(d) != 1:
        raise UsageError("violation-mode sweeps take a single threshold --d")
    d = d[0] if d else 3.0
    rows, ok = [], 0
    plot_x, plot_b, plot_e = [], [], []
    for rho in rhos:
        if not 0 < rho < 1:
            print(f"warning: skipping unstable rho={rho:g}", file=sys.stderr)
            rows.append((rho, "skipped") + (None,) * 4)
            continue
        model = template_model(a.model, mu, rho)
        theta = solve_theta_star(model)
        if mode == "violation":
            value = bounds.bound_curve(model, [d], theta).bounds[0]
            emp = se = None
            if a.simulate:
                est = simulate_peak_aoi(model, sim_config(a)).violation(d)
                emp, se = est.p, est.stderr
            rows.append((rho, "ok", value, emp, se, theta.value))
        else:
            value = bounds.mean_bound(model, theta)
            lam = model.interarrival.mean()
            ex = exact.exact_mean_peak_mm1(lam, mu) if a.model == "mm1" else exact.exact_mean_peak_dm1(lam, mu)
            emp = se = None
            if a.simulate:
                emp, se = simulate_peak_aoi(model, sim_config(a)).mean_peak()
            rows.append((rho, "ok", value, ex, emp, se))
            plot_e.append(ex)
        plot_x.append(rho)
        plot_b.append(value)
        ok += 1
    if ok == 0:
        raise UnstableModel("every rho in the grid was unstable")
    if mode == "violation":
        header = ("rho", "status", "bound", "empirical_p", "stderr", "theta_star")
    else:
        header = ("rho", "status", "mean_bound", "exact_mean", "empirical_mean", "stderr")
    write_rows(a.out, header, rows)
    if a.svg:
        series = {f"{a.model} bound": (plot_x, plot_b)}
        if plot_e:
            series[f"{a.model} exact"] = (plot_x, plot_e)
        ylabel = f"Pr{{P > {d:g}}} bound" if mode == "violation" else "mean peak AoI"
        write_svg(a.svg, series, "rho", ylabel, title=f"mu = {mu:g}")
    return EXIT_OK


def cmd_sweep_d(a) -> int:
    grid = _require_grid(parse_grid(a.d), "--d")
    rhos = parse_grid(a.rho)
    if rhos:
        mu = float(a.mu if a.mu is not None else 1.0)
        models = []
        for rho in rhos:
            if not 0 < rho < 1:
                print(f"warning: skipping unstable rho={rho:g}", file=sys.stderr)
                models.append((rho, None))
            else:
                models.append((rho, template_model(a.model, mu, rho)))
    else:
        model = build_model(a)
        models = [(model.rho, model)]
    rows, series = [], {}
    for rho, model in models:
        if model is None:
            rows.append((rho, "skipped", None, None, "", None))
            continue
        curve = bounds.bound_curve(model, grid)
        rows.extend((rho, "ok", d, b, curve.method, curve.theta.value) for d, b in curve.points)
        series[f"rho={rho:g}"] = (curve.d, curve.bounds)
    if not series:
        raise UnstableModel("every rho in the grid was unstable")
    write_rows(a.out, ("rho", "status", "d", "bound", "method", "theta_star"), rows)
    if a.svg:
        write_svg(a.svg, series, "d", "Pr{P > d} bound", logy=True)
    return EXIT_OK


def cmd_compare(a) -> int:
    model = build_model(a)
    grid = _require_grid(parse_grid(a.d), "--d")
    cfg = sim_config(a)
    curve = bounds.bound_curve(model, grid)
    t0 = time.perf_counter()
    res = simulate_peak_aoi(model, cfg)
    wall = time.perf_counter() - t0
    rows = []
    for (d, b), e in zip(curve.points, res.violations(grid)):
        rows.append((d, b, e.p, e.stderr, e.n_samples, e.low_confidence, e.p <= b + 3 * e.stderr))
    write_rows(a.out, ("d", "bound", "empirical_p", "stderr", "n_samples", "low_confidence_flag", "dominated"), rows)
    summary = {"model": model.describe(), "method": curve.method, "theta_star": curve.theta.value}
    mean, se = res.mean_peak()
    summary.update(empirical_mean=mean, empirical_mean_stderr=se)
    if model.is_mm1 or model.is_dm1:
        lam, mu = model.interarrival.mean(), model.service.mean()
        summary["mean_bound"] = bounds.mean_bound(model, curve.theta)
        summary["exact_mean"] = exact.exact_mean_peak_mm1(lam, mu) if model.is_mm1 else exact.exact_mean_peak_dm1(lam, mu)
    for key, value in summary.items():
        print(f"{key}: {value}", file=sys.stderr)
    summary.update(command="compare", base_seed=cfg.base_seed, per_replication_seed=res.per_replication_seed,
                   num_packets=cfg.num_packets, warmup_packets=cfg.warmup_packets,
                   replications=cfg.replications, wall_time_s=wall)
    write_manifest(a.out, summary)
    if a.svg:
        write_svg(a.svg, {"bound": (curve.d, curve.bounds), "empirical": (grid, [r[2] for r in rows])},
                  "d", "Pr{P > d}", logy=True)
    return EXIT_OK


def cmd_validate(a) -> int:
    theta = None if a.theta_override is None else float(a.theta_override)
    results = run_suite(quick=bool(a.quick), theta_override=theta, seed=int(a.seed))
    lines = [r.line() + f"  ({r.seconds:.2f}s)" for r in results]
    failed = [r for r in results if not r.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if a.out:
        Path(a.out).write_text(report)
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "sweep-rho": cmd_sweep_rho,
    "sweep-d": cmd_sweep_d,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=("mm1", "dm1", "generic"))
    common.add_argument("--lambda", dest="lambda_t", type=float, help="mean inter-arrival time (M/M/1)")
    common.add_argument("--mu", type=float, help="mean service time")
    common.add_argument("--D", type=float, help="deterministic inter-arrival time (D/M/1)")
    common.add_argument("--arrival", help="inter-arrival literal, e.g. exp:mean=2.0")
    common.add_argument("--service", help="service literal, e.g. erlang:shape=2,mean=0.8")
    common.add_argument("--d", help="threshold grid start:stop:step, list a,b,c or a single value")
    common.add_argument("--rho", help="utilization grid")
    common.add_argument("--seed", type=int)
    common.add_argument("--packets", type=int)
    common.add_argument("--warmup", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--config", help="JSON file mirroring these flags; flags override it")
    common.add_argument("--quick", action="store_true", help="smaller simulations")
    common.add_argument("--svg", help="also write an SVG line chart here")

    parser = argparse.ArgumentParser(prog="peak-aoi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bound", parents=[common], help="analytic violation bound over a d grid")
    p = sub.add_parser("simulate", parents=[common], help="empirical violation probability")
    p.add_argument("--export-raw", dest="export_raw", help="directory for per-replication raw CSVs")
    p = sub.add_parser("sweep-rho", parents=[common], help="bound (or mean bound) versus utilization")
    p.add_argument("--mode", choices=("violation", "mean"))
    p.add_argument("--simulate", action="store_true", help="add empirical columns")
    sub.add_parser("sweep-d", parents=[common], help="bound surfaces over d for one or more rho")
    sub.add_parser("compare", parents=[common], help="bound versus simulation over a d grid")
    p = sub.add_parser("validate", parents=[common], help="run the invariant suite")
    p.add_argument("--theta-override", dest="theta_override", type=float,
                   help="replace theta* in the feasibility and backlog checks")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        a = resolve(args)
        return COMMANDS[a.command](a)
    except (QuadratureFailure, NoPositiveTheta) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PeakAoIError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
