"""Command-line entry point: ``python3 -m sigmacurv <subcommand> [flags]``.

Exit codes: 0 all checks passed, 1 a check failed (reported), 2 usage or
configuration error, 3 runtime failure (non-convergence, sampling budget).

A config file (``--config PATH``) holds ``key = value`` lines; keys are the
long flag names with or without the leading dashes, ``-`` and ``_`` are
interchangeable, and ``#`` starts a comment.  Flags given on the command
line override the file.  Every JSON report embeds the effective config.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import concavity, cone, diagnostics, geometry, solver
from .errors import (
    AdmissibilityError,
    DomainError,
    NonConvergenceError,
    SamplingError,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

# key -> (type, default); None defaults mean "subcommand decides"
OPTIONS = {
    "n": (int, None),
    "k": (int, None),
    "f_max": (float, None),
    "trials": (int, 10_000),
    "seed": (int, 0),
    "resolution": (int, 16),
    "tol": (float, 1e-8),
    "max_iter": (int, 30),
    "damping_floor": (float, solver.DAMPING_FLOOR),
    "rhs": (str, None),
    "init_radius": (float, None),
    "surface": (str, "ellipsoid:1,1,1.3"),
    "graph": (str, None),
    "N": (float, diagnostics.DEFAULT_N),
    "alpha": (float, None),
    "region": (str, "hypothesis"),
    "workers": (int, 1),
    "out": (str, "."),
}

SUBCOMMANDS = {
    "verify-concavity": ("n", "f_max", "trials", "seed", "region", "workers", "out"),
    "verify-cone": ("n", "k", "trials", "seed", "out"),
    "sample": ("n", "k", "trials", "seed", "out"),
    "solve": ("n", "k", "rhs", "resolution", "tol", "max_iter", "damping_floor", "init_radius", "out"),
    "diagnose": ("n", "resolution", "surface", "graph", "N", "alpha", "f_max", "out"),
    "report": ("out",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sigmacurv", description="Curvature-estimate checks and solves.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, keys in SUBCOMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        for key in keys:
            typ, _ = OPTIONS[key]
            sp.add_argument(_flag(key), dest=key, type=typ, default=None)
        if name == "report":
            sp.add_argument("inputs", nargs="+")
    return p


def read_config(path) -> dict:
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key = key.strip().lstrip("-").replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


@dataclass
class RunConfig:
    command: str
    values: dict
    flags: dict = field(default_factory=dict)
    file_values: dict = field(default_factory=dict)
    config_path: str | None = None

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "effective": self.values,
            "flags": self.flags,
            "config_file": self.config_path,
            "config_file_values": self.file_values,
        }


def resolve_config(args: argparse.Namespace) -> RunConfig:
    keys = SUBCOMMANDS[args.command]
    flags = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
    file_values = read_config(args.config) if args.config else {}
    values = {}
    for key in keys:
        typ, default = OPTIONS[key]
        if key in flags:
            values[key] = flags[key]
        elif key in file_values:
            try:
                values[key] = typ(file_values[key])
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {file_values[key]!r}") from exc
        else:
            values[key] = default
    stray = set(file_values) - set(keys)
    if stray:
        raise UsageError(f"config keys not used by {args.command}: {sorted(stray)}")
    return RunConfig(args.command, values, flags, file_values, args.config)


def _require(cfg: RunConfig, *keys):
    missing = [_flag(k) for k in keys if cfg.values.get(k) is None]
    if missing:
        raise UsageError(f"{cfg.command} needs {', '.join(missing)}")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_to_jsonable(payload), sort_keys=True, indent=2) + "\n")


def _status(ok: bool, text: str) -> None:
    tag = "PASS" if ok else "FAIL"
    if sys.stdout.isatty() and "NO_COLOR" not in os.environ:
        tag = f"\033[{32 if ok else 31}m{tag}\033[0m"
    print(f"{tag} {text}")


# -- subcommands -------------------------------------------------------------


def cmd_verify_concavity(cfg: RunConfig) -> tuple[int, dict]:
    _require(cfg, "n", "f_max")
    rep = concavity.verify(
        cfg.n, cfg.f_max, cfg.trials, seed=cfg.seed, region=cfg.region, workers=cfg.workers
    )
    out = Path(cfg.out)
    if rep.violations:
        out.mkdir(parents=True, exist_ok=True)
        concavity.write_counterexamples_csv(out / "counterexamples.csv", rep.violations)
    payload = rep.to_dict()
    _status(rep.passed, f"verify-concavity n={cfg.n} f_max={cfg.f_max}: {len(rep.violations)} violations")
    return (EXIT_OK if rep.passed else EXIT_FAIL), payload


def cmd_verify_cone(cfg: RunConfig) -> tuple[int, dict]:
    _require(cfg, "n")
    n = cfg.n
    k = cfg.k if cfg.k is not None else n - 1
    rng = np.random.default_rng(cfg.seed)
    lam, attempts = cone.sample_gamma_batch(n, k, cfg.trials, rng)
    ratio = cone.negative_part_ratio(lam, k)
    margin = cone.omitted_positivity(lam, k)
    cnk = cone.cnk_ratio_batch(lam, k)
    ok = bool(ratio.max() <= 1 + 1e-12 and margin.min() > 0 and cnk.min() > 0)
    payload = {
        "n": n,
        "k": k,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "attempts": attempts,
        "max_negative_part_ratio": float(ratio.max()),
        "min_omitted_margin": float(margin.min()),
        "cnk_estimate": float(cnk.min()),
        "passed": ok,
    }
    _status(ok, f"verify-cone n={n} k={k}: worst ratio {ratio.max():.6f}, Cnk estimate {cnk.min():.6f}")
    return (EXIT_OK if ok else EXIT_FAIL), payload


def cmd_sample(cfg: RunConfig) -> tuple[int, dict]:
    _require(cfg, "n")
    n = cfg.n
    k = cfg.k if cfg.k is not None else n - 1
    lam, attempts = cone.sample_gamma_batch(n, k, cfg.trials, np.random.default_rng(cfg.seed))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cone.write_samples_csv(out / "samples.csv", lam)
    print(f"wrote {len(lam)} samples of Gamma_{k} (n={n}) to {out / 'samples.csv'}")
    return EXIT_OK, {"n": n, "k": k, "count": len(lam), "attempts": attempts, "seed": cfg.seed}


def cmd_solve(cfg: RunConfig) -> tuple[int, dict]:
    _require(cfg, "n", "rhs")
    n = cfg.n
    k = cfg.k if cfg.k is not None else n - 1
    rhs = solver.parse_rhs(cfg.rhs, n, k)
    grid = geometry.build_grid(n, cfg.resolution)
    if cfg.init_radius is not None:
        r_init = cfg.init_radius
    else:
        base = rhs.params.get("value", rhs.params.get("base"))
        r_init = solver.round_radius(base, n, k)
    opts = solver.SolveOptions(tol=cfg.tol, max_iter=cfg.max_iter, damping_floor=cfg.damping_floor, k=k)
    res = solver.solve(rhs, geometry.sphere(grid, r_init), opts)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    geometry.write_graph_csv(out / "graph.csv", res.graph)
    payload = res.to_dict()
    payload["initial_radius"] = r_init
    _status(True, f"solve n={n} k={k}: residual {res.residual_max:.3e} in {res.iterations} iterations")
    return EXIT_OK, payload


def _surface(cfg: RunConfig):
    if cfg.graph:
        return geometry.read_graph_csv(cfg.graph)
    _require(cfg, "n")
    grid = geometry.build_grid(cfg.n, cfg.resolution)
    name, _, args = cfg.surface.partition(":")
    try:
        vals = [float(a) for a in args.split(",") if a.strip()]
    except ValueError as exc:
        raise UsageError(f"bad surface {cfg.surface!r}") from exc
    if name == "sphere" and len(vals) == 1:
        return geometry.sphere(grid, vals[0])
    if name == "ellipsoid" and len(vals) == cfg.n + 1:
        return geometry.ellipsoid(grid, vals)
    raise UsageError(f"unknown surface {cfg.surface!r}; expected sphere:R or ellipsoid:a_1,...,a_(n+1)")


def cmd_diagnose(cfg: RunConfig) -> tuple[int, dict]:
    shape = geometry.shape_data(_surface(cfg))
    payload = diagnostics.diagnostics_report(shape, cfg.N, cfg.alpha, cfg.f_max)
    ok = payload["lhs"] is None or payload["lhs"] >= 0 or payload["case"] != "ii"
    note = payload["refusal"] or f"critical residual {payload['critical_residual_norm']:.3e}"
    _status(ok, f"diagnose: argmax node {payload['argmax_node']}, {note}")
    return (EXIT_OK if ok else EXIT_FAIL), payload


SUMMARY_FIELDS = (
    "source",
    "command",
    "n",
    "f_max",
    "trials",
    "seed",
    "n_violations",
    "min_lhs_relative",
    "max_decomposition_error",
    "max_det_error",
    "residual_max",
    "kappa_max",
    "elapsed_seconds",
)


def cmd_report(cfg: RunConfig, inputs) -> tuple[int, dict]:
    rows = []
    for path in inputs:
        data = json.loads(Path(path).read_text())
        flat = {"source": str(path), "command": data.get("config", {}).get("command")}
        for key in SUMMARY_FIELDS[2:]:
            flat[key] = data.get(key)
        rows.append(flat)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"merged {len(rows)} reports into {out / 'summary.csv'}")
    return EXIT_OK, {"inputs": list(inputs), "rows": len(rows)}


HANDLERS = {
    "verify-concavity": cmd_verify_concavity,
    "verify-cone": cmd_verify_cone,
    "sample": cmd_sample,
    "solve": cmd_solve,
    "diagnose": cmd_diagnose,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        if cfg.command == "report":
            code, payload = cmd_report(cfg, args.inputs)
        else:
            code, payload = HANDLERS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, AdmissibilityError, SamplingError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    payload["config"] = cfg.to_dict()
    payload["exit_code"] = code
    payload["elapsed_seconds"] = time.perf_counter() - t0
    if cfg.command != "report":
        write_json(Path(cfg.out) / f"{cfg.command}.json", payload)
    return code


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
