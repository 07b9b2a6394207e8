"""Batch command-line interface.

Subcommands: validate, analytic, estimate, simulate, sweep, bifurcate,
cross-check.  Every run is fully specified by (config file, flag overrides,
seed); commands that write a CSV also write a JSON run manifest alongside
it.  Exit codes: 0 success, 2 domain/validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .analytic import (
    PriorMismatch,
    fixed_points,
    kind_for,
    propagated_moment_se,
    trajectory_moments,
)
from .core import (
    ComplexQuadratic,
    MomentState,
    Naive,
    SimpleGaussian,
    TeacherRule,
    config_from_dict,
    config_to_dict,
    validate_config,
)
from .learning import ExampleBatch, estimate_complex, estimate_naive, estimate_simple
from .numerics import bin_centers, thresholded_density
from .simulate import FixedGenerations, Plateau, run
from .sweep import (
    InsufficientGrid,
    SweepGrid,
    bifurcation_from_profile,
    run_sweep,
)

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3

_CONFIG_KEYS = (
    "mu_a", "mu_i", "sigma_a", "omega", "lambda", "n",
    "prior.kind", "prior.tau", "prior.a",
    "M", "teachers", "seed", "start_mean", "start_var",
)


def _flatten(nested: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in nested.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat TOML-style configuration file")
    group = parser.add_argument_group("config overrides")
    for key in _CONFIG_KEYS:
        flag = "--" + key.replace(".", "-").replace("_", "-")
        group.add_argument(flag, dest=f"cfg::{key}", default=None, metavar="V")


def _effective_config_dict(args: argparse.Namespace) -> dict:
    d: dict = {}
    if args.config:
        with open(args.config, "rb") as fh:
            d = _flatten(tomllib.load(fh))
    for key in _CONFIG_KEYS:
        value = getattr(args, f"cfg::{key}", None)
        if value is None:
            continue
        if key in ("teachers", "prior.kind"):
            d[key] = value
        elif key in ("n", "M", "seed"):
            d[key] = int(value)
        else:
            d[key] = float(value)
    if d.get("prior.kind") == "naive":
        d.pop("prior.tau", None)
        d.pop("prior.a", None)
    return d


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("ACTUATOR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _fmt(value) -> str:
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: str, header: list[str], rows, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment is not None:
            fh.write("# " + comment + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(
    csv_path: str, command: str, cfg: dict, seed: int | None,
    outputs: list[str], threads: int | None, started: float,
) -> None:
    base, _ = os.path.splitext(csv_path)
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": cfg,
        "seed": seed,
        "outputs": outputs,
        "threads": threads,
        "versions": {
            "actuator": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    with open(base + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_stop(text: str):
    if text.startswith("fixed:"):
        return FixedGenerations(T=int(text.split(":", 1)[1]))
    if text == "plateau":
        return Plateau()
    if text.startswith("plateau:"):
        parts = text.split(":")[1:]
        if len(parts) != 3:
            raise ValueError("expected plateau:WINDOW:DELTA:CAP")
        return Plateau(window=int(parts[0]), delta=float(parts[1]), cap=int(parts[2]))
    raise ValueError(f"unknown stop rule {text!r} (use fixed:T or plateau[:W:D:C])")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        cfg = _effective_config_dict(args)
        model, learn, pop = config_from_dict(cfg)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    violations = validate_config(model, learn, pop)
    if violations:
        for v in violations:
            print(v)
        return EXIT_DOMAIN
    print("valid")
    return EXIT_OK


def _load_or_fail(args):
    """Returns (model, learn, pop, cfg_dict) or an exit code on failure."""
    try:
        cfg = _effective_config_dict(args)
        model, learn, pop = config_from_dict(cfg)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    violations = validate_config(model, learn, pop)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return EXIT_DOMAIN
    return model, learn, pop, cfg


def cmd_analytic(args) -> int:
    started = time.perf_counter()
    loaded = _load_or_fail(args)
    if isinstance(loaded, int):
        return loaded
    model, learn, pop, cfg = loaded
    try:
        kind = kind_for(learn.prior, pop.teachers)
    except PriorMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    start = MomentState(pop.start_mean, pop.start_var)
    moments = trajectory_moments(kind, start, model, learn, args.generations)
    report = fixed_points(kind, model, learn)
    comment = (
        "config: " + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(cfg.items()))
        + f" | fixed_point: mean_fp={report.mean_fp} var_fp={report.var_fp}"
        + f" rate={report.geometric_rate} mean_conserved={report.mean_conserved}"
    )
    rows = [(t + 1, m.mean, m.var) for t, m in enumerate(moments)]
    try:
        _write_csv(args.out, ["t", "mean", "var"], rows, comment=comment)
        _write_manifest(args.out, "analytic", cfg, pop.seed, [args.out], None, started)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out} ({len(rows)} generations)")
    return EXIT_OK


def _read_batch(path: str) -> ExampleBatch:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line.split(",")[0]))
    return ExampleBatch(values=np.array(values))


def cmd_estimate(args) -> int:
    started = time.perf_counter()
    loaded = _load_or_fail(args)
    if isinstance(loaded, int):
        return loaded
    model, learn, pop, cfg = loaded
    try:
        batch = _read_batch(args.batch)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    prior = learn.prior
    if isinstance(prior, Naive):
        c_hat = estimate_naive(batch)
    elif isinstance(prior, SimpleGaussian):
        c_hat = estimate_simple(batch, model, prior.tau)
    else:
        c_hat = estimate_complex(batch, model, prior.a)
    print(_fmt(c_hat))
    if args.out:
        try:
            _write_csv(args.out, ["c_hat"], [(c_hat,)])
            _write_manifest(args.out, "estimate", cfg, pop.seed, [args.out], None, started)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


_TRAJ_HEADER = ["t", "mean", "var", "p05", "p95"] + [f"bin_{i:03d}" for i in range(200)]


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    loaded = _load_or_fail(args)
    if isinstance(loaded, int):
        return loaded
    model, learn, pop, cfg = loaded
    try:
        stop = _parse_stop(args.stop)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    traj = run(model, learn, pop, stop)
    rows = [
        [t + 1, s.mean, s.var, s.p05, s.p95] + list(s.histogram)
        for t, s in enumerate(traj.summaries)
    ]
    outputs = [args.out]
    try:
        _write_csv(args.out, _TRAJ_HEADER, rows)
        if args.density:
            centers = bin_centers(traj.bin_lo, traj.bin_hi)
            density_rows = []
            for t, s in enumerate(traj.summaries):
                dens = thresholded_density(s, traj.bin_lo, traj.bin_hi)
                density_rows.extend(
                    (t + 1, c, d) for c, d in zip(centers, dens)
                )
            _write_csv(args.density, ["t", "bin_center", "thresholded_density"], density_rows)
            outputs.append(args.density)
        _write_manifest(args.out, "simulate", cfg, pop.seed, outputs, _threads(args), started)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out}: {len(rows)} generations, stop_reason={traj.stop_reason}")
    return EXIT_OK


_RULES = {"one": TeacherRule.ONE, "two": TeacherRule.TWO, "all": TeacherRule.ALL}

_DEFAULT_A_VALUES = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05)
_DEFAULT_LAMBDAS = tuple(np.arange(0.0, 2.01, 0.25))


def _load_grid(args) -> SweepGrid:
    with open(args.grid, "rb") as fh:
        raw = _flatten(tomllib.load(fh))
    a_values = tuple(float(x) for x in raw.pop("a_values", _DEFAULT_A_VALUES))
    lambda_values = tuple(float(x) for x in raw.pop("lambda_values", _DEFAULT_LAMBDAS))
    rules_raw = raw.pop("rules", None)
    replicates = int(raw.pop("replicates", 3))
    stop = _parse_stop(str(raw.pop("stop", "fixed:2500")))
    if getattr(args, "seed", None) is not None:
        raw["seed"] = int(args.seed)
    model, learn, pop = config_from_dict(raw)
    rules = (
        tuple(_RULES[str(r)] for r in rules_raw) if rules_raw else (pop.teachers,)
    )
    return SweepGrid(
        a_values=a_values,
        lambda_values=lambda_values,
        teacher_rules=rules,
        replicates=replicates,
        model=model,
        learn=learn,
        pop=pop,
        stop=stop,
    )


_SWEEP_HEADER = [
    "rule", "a", "lambda", "replicate",
    "final_mean", "final_var", "stop_reason", "generations", "seconds",
]


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    try:
        grid = _load_grid(args)
    except (OSError, ValueError, KeyError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    violations = validate_config(grid.model, grid.learn, grid.pop)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return EXIT_DOMAIN
    result = run_sweep(grid, threads=_threads(args))
    rows = [
        (
            r.rule.value, r.a, r.lam, r.replicate,
            r.final_mean, r.final_var, r.stop_reason, r.generations,
            round(r.seconds, 3),
        )
        for r in result.records
    ]
    cfg = config_to_dict(grid.model, grid.learn, grid.pop)
    cfg["a_values"] = list(grid.a_values)
    cfg["lambda_values"] = list(grid.lambda_values)
    cfg["rules"] = [r.value for r in grid.teacher_rules]
    cfg["replicates"] = grid.replicates
    try:
        _write_csv(args.out, _SWEEP_HEADER, rows)
        _write_manifest(args.out, "sweep", cfg, grid.pop.seed, [args.out], _threads(args), started)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    failures = sum(1 for r in result.records if r.error is not None)
    print(f"wrote {args.out}: {len(rows)} cells, {failures} failed")
    return EXIT_OK


def _delta_mu_for(args, sweep_csv: str) -> float | None:
    if args.mu_a is not None and args.mu_i is not None:
        return float(args.mu_a) - float(args.mu_i)
    base, _ = os.path.splitext(sweep_csv)
    manifest_path = base + ".manifest.json"
    if os.path.exists(manifest_path):
        with open(manifest_path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh).get("config", {})
        if "mu_a" in cfg and "mu_i" in cfg:
            return float(cfg["mu_a"]) - float(cfg["mu_i"])
    return None


def cmd_bifurcate(args) -> int:
    started = time.perf_counter()
    delta_mu = _delta_mu_for(args, args.sweep_csv)
    if delta_mu is None:
        print(
            "error: need --mu-a/--mu-i or a sweep manifest to fix the jump threshold",
            file=sys.stderr,
        )
        return EXIT_DOMAIN
    try:
        with open(args.sweep_csv, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            rows = list(reader)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    groups: dict[tuple[str, str], dict[float, list[float]]] = {}
    for row in rows:
        if row["stop_reason"] == "error":
            continue
        key = (row["rule"], row["a"])
        groups.setdefault(key, {}).setdefault(float(row["lambda"]), []).append(
            float(row["final_mean"])
        )
    out_rows = []
    for (rule, a), profile in sorted(groups.items()):
        lambdas = np.array(sorted(profile))
        means = np.array([float(np.mean(profile[lam])) for lam in lambdas])
        try:
            finding = bifurcation_from_profile(lambdas, means, delta_mu)
        except InsufficientGrid as exc:
            print(f"error: rule={rule} a={a}: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        if finding is None:
            jump = float(np.abs(np.diff(means)).max())
            out_rows.append((rule, float(a), "none", jump))
        else:
            out_rows.append((rule, float(a), finding.lambda_star, finding.jump))
    header = ["rule", "a", "lambda_star", "jump"]
    if args.out:
        try:
            _write_csv(args.out, header, out_rows)
            _write_manifest(
                args.out, "bifurcate", {"sweep_csv": args.sweep_csv}, None,
                [args.out], None, started,
            )
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in out_rows:
        writer.writerow([_fmt(v) for v in row])
    return EXIT_OK


def cmd_cross_check(args) -> int:
    started = time.perf_counter()
    loaded = _load_or_fail(args)
    if isinstance(loaded, int):
        return loaded
    model, learn, pop, cfg = loaded
    if isinstance(learn.prior, ComplexQuadratic):
        print(
            "error: no closed-form oracle for the endpoint-weighting prior",
            file=sys.stderr,
        )
        return EXIT_DOMAIN
    if args.agents:
        from dataclasses import replace

        pop = replace(pop, M=int(args.agents))
        cfg["M"] = int(args.agents)
    T = args.generations
    kind = kind_for(learn.prior, pop.teachers)
    traj = run(model, learn, pop, FixedGenerations(T))
    moments = trajectory_moments(
        kind, MomentState(pop.start_mean, pop.start_var), model, learn, T
    )
    mean_se, var_se = propagated_moment_se(kind, pop.start_var, model, learn, pop.M, T)

    def in_se(dev: float, se: float) -> float:
        if se == 0.0:
            return 0.0 if dev == 0.0 else float("inf")
        return dev / se

    report = []
    for t in range(T):
        s = traj.summaries[t]
        dm = in_se(abs(s.mean - moments[t].mean), mean_se[t])
        dv = in_se(abs(s.var - moments[t].var), var_se[t])
        report.append((t + 1, s.mean, moments[t].mean, dm, s.var, moments[t].var, dv))
    worst = max(max(r[3], r[6]) for r in report)
    header = ["t", "mc_mean", "analytic_mean", "mean_dev_se", "mc_var", "analytic_var", "var_dev_se"]
    if args.out:
        try:
            _write_csv(args.out, header, report)
            _write_manifest(args.out, "cross-check", cfg, pop.seed, [args.out], None, started)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    print(f"max deviation {worst:.3f} SE over {T} generations (threshold 4)")
    return EXIT_OK if worst <= 4.0 else EXIT_DOMAIN


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="actuator",
        description="population dynamics of a continuous phonetic parameter",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a configuration file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analytic", help="closed-form moment trajectory and fixed points")
    _add_config_flags(p)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("estimate", help="run one estimator on a batch CSV")
    _add_config_flags(p)
    p.add_argument("--batch", required=True, help="one-column CSV of F1 values")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="agent-based trajectory")
    _add_config_flags(p)
    p.add_argument("--stop", default="fixed:1000", help="fixed:T or plateau[:W:D:C]")
    p.add_argument("--out", required=True)
    p.add_argument("--density", help="optional thresholded-density CSV")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="parameter-grid sweep")
    p.add_argument("--grid", required=True, help="grid spec file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bifurcate", help="locate critical lambda in a sweep CSV")
    p.add_argument("sweep_csv")
    p.add_argument("--out")
    p.add_argument("--mu-a", type=float, dest="mu_a")
    p.add_argument("--mu-i", type=float, dest="mu_i")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("cross-check", help="Monte Carlo vs closed-form moments")
    _add_config_flags(p)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--agents", type=int, help="override population size M")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cross_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
