"""Command-line entry point: `tnnfl <command> [options]`.

Exit codes: 0 success, 1 a verification check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .bounds2d import PepsBoundParams, thm2_lower_bound, thm2_thermo_limit
from .errors import TnnflError
from .learning import CSV_COLUMNS, ExperimentConfig, run_experiment
from .moments1d import exact_avg_risk_1d, mpo_bound, quantum_nfl_baseline, thm1_lower_bound

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """'3' -> [3]; '0..4' -> [0, 1, 2, 3, 4] (inclusive)."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise ValueError
            return list(range(lo_i, hi_i + 1))
        return [int(text)]
    except ValueError:
        raise UsageError(f"malformed integer or range {text!r} (expected N or A..B)") from None


def resolve_seed(flag: int | None, config: dict) -> int:
    if flag is not None:
        return flag
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("TNNFL_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"TNNFL_SEED={env!r} is not an integer") from None
    return 0


def load_config(path: str | None, allowed: Sequence[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path!r} not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise UsageError(f"unknown config fields: {', '.join(unknown)}")
    return data


def merge(config: dict, args: argparse.Namespace, keys: Sequence[str]) -> dict:
    """Flags override config values; missing keys stay absent."""
    out = dict(config)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def header(command: str, params: dict) -> str:
    echo = json.dumps({"command": command, "params": params, "version": __version__}, sort_keys=True)
    return f"# tnnfl {__version__} {echo}\n"


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(command: str, params: dict, columns: Sequence[str], rows: Sequence[dict], out: str | None) -> str:
    buf = io.StringIO()
    buf.write(header(command, params))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _require(params: dict, keys: Sequence[str]) -> None:
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise UsageError(f"missing required parameters: {', '.join(missing)}")


# -- commands -----------------------------------------------------------------------------

MPS_KEYS = ("n", "d", "D", "k", "r")


def cmd_bound_mps(args: argparse.Namespace) -> int:
    params = merge(load_config(args.config, MPS_KEYS), args, MPS_KEYS)
    params.setdefault("r", 1)
    _require(params, ("n", "d", "D", "k"))
    n, d, D, r = int(params["n"]), int(params["d"]), int(params["D"]), int(params["r"])
    ks = parse_range(params["k"])
    if n < 2 or d < 2 or D < 1 or r < 1:
        raise UsageError("need n >= 2, d >= 2, D >= 1, r >= 1")
    if any(not 0 <= k <= n for k in ks):
        raise UsageError(f"k must lie in [0, {n}]")
    N = d**n
    rows = []
    for k in ks:
        t = N - d ** (n - k)
        bound = thm1_lower_bound(n, d, D, k)
        rows.append({
            "k": k, "t_k": t,
            "thm1_bound": bound,
            "exact_avg_risk": exact_avg_risk_1d(n, d, D, k),
            "mpo_bound": mpo_bound(n, d, t),
            "quantum_nfl_baseline": quantum_nfl_baseline(N, r, t) if r * t <= N else None,
            "negative": bound < 0,
        })
    cols = ("k", "t_k", "thm1_bound", "exact_avg_risk", "mpo_bound", "quantum_nfl_baseline", "negative")
    write_csv("bound-mps", params, cols, rows, args.out)
    return EXIT_OK


PEPS_KEYS = ("L", "d", "D", "k", "c", "sites")


def _peps_rows(L: int, d: int, D: int, ks: Sequence[int], c: float, sites: int | None) -> list[dict]:
    rows = []
    for k in ks:
        p = PepsBoundParams(L, d, D, k, c, sites)
        lb = thm2_lower_bound(p)
        rows.append({
            "k": k, "t_k": d**p.n_sites - d ** (p.n_sites - k), "l": p.l,
            "thm2_bound": lb, "thm2_thermo_limit": thm2_thermo_limit(p),
            "c": c, "negative": lb < 0,
        })
    return rows


def cmd_bound_peps(args: argparse.Namespace) -> int:
    params = merge(load_config(args.config, PEPS_KEYS), args, PEPS_KEYS)
    params.setdefault("c", 1.0)
    _require(params, ("L", "d", "D", "k"))
    L, d, D, c = int(params["L"]), int(params["d"]), int(params["D"]), float(params["c"])
    sites = params.get("sites")
    sites = int(sites) if sites is not None else None
    if not c >= 0:
        raise UsageError(f"c must be >= 0, got {c}")
    if L < 1 or d < 2 or D < 1:
        raise UsageError("need L >= 1, d >= 2, D >= 1")
    ks = parse_range(params["k"])
    n_sites = sites if sites is not None else L * L
    if any(not 0 <= k <= n_sites for k in ks):
        raise UsageError(f"k must lie in [0, {n_sites}]")
    cols = ("k", "t_k", "l", "thm2_bound", "thm2_thermo_limit", "c", "negative")
    write_csv("bound-peps", params, cols, _peps_rows(L, d, D, ks, c, sites), args.out)
    return EXIT_OK


CURVE_KEYS = ("n", "d", "D", "L", "c", "k")


def cmd_bound_curve(args: argparse.Namespace) -> int:
    """MPS and PEPS bounds against t_k on a common n-site system."""
    params = merge(load_config(args.config, CURVE_KEYS), args, CURVE_KEYS)
    params.setdefault("c", 1.0)
    _require(params, ("n", "d", "D"))
    n, d, D, c = int(params["n"]), int(params["d"]), int(params["D"]), float(params["c"])
    if n < 2 or d < 2 or D < 1 or not c >= 0:
        raise UsageError("need n >= 2, d >= 2, D >= 1, c >= 0")
    L = int(params.get("L") or max(1, round(math.sqrt(n))))
    params["L"] = L
    ks = parse_range(params.get("k", f"1..{n - 1}"))
    if any(not 0 <= k <= n for k in ks):
        raise UsageError(f"k must lie in [0, {n}]")
    rows = []
    for k in ks:
        p = PepsBoundParams(L, d, D, k, c, sites=n)
        rows.append({
            "k": k, "t_k": d**n - d ** (n - k),
            "thm1_bound": thm1_lower_bound(n, d, D, k),
            "thm2_thermo_limit": thm2_thermo_limit(p),
            "thm2_bound": thm2_lower_bound(p),
        })
    cols = ("k", "t_k", "thm1_bound", "thm2_thermo_limit", "thm2_bound")
    write_csv("bound-curve", params, cols, rows, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import SUITES, run_suite

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    if args.budget < 0:
        raise UsageError("budget must be >= 0")
    seed = resolve_seed(args.seed, {})
    report = run_suite(args.suite, args.budget, seed, args.workers or os.cpu_count() or 1)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    for msg in report.get("warnings", []):
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


EXPERIMENT_KEYS = tuple(f.name for f in fields(ExperimentConfig))


def cmd_experiment(args: argparse.Namespace) -> int:
    if not args.config:
        raise UsageError("experiment needs --config")
    params = load_config(args.config, EXPERIMENT_KEYS)
    params["seed"] = resolve_seed(args.seed, params)
    if args.workers is not None:
        params["workers"] = args.workers
    params.setdefault("workers", os.cpu_count() or 1)
    if "k_grid" in params and isinstance(params["k_grid"], str):
        params["k_grid"] = parse_range(params["k_grid"])
    try:
        cfg = ExperimentConfig(**params)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    rows = [r.as_dict() for r in run_experiment(cfg)]
    # workers does not change results, so keep it out of the echo
    echo = {k: v for k, v in sorted(params.items()) if k != "workers"}
    write_csv("experiment", echo, CSV_COLUMNS, rows, args.out)
    if args.plot:
        plot_experiment(rows, args.plot)
    return EXIT_OK


def plot_experiment(rows: Sequence[dict], path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("plotting needs matplotlib (pip install tnnfl[plot])") from None
    pts = [r for r in rows if isinstance(r["k"], int)]
    t = [r["t_k"] for r in pts]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(t, [r["thm1_bound"] for r in pts], "-", color="C0", label="lower bound")
    ax.errorbar(t, [r["mean_risk"] for r in pts], yerr=[r["std_err"] for r in pts],
                fmt="o:", color="C1", capsize=2, label=f"trained ({pts[0]['trainer'] if pts else ''})")
    ax.set_xlabel("training set size $t_k$")
    ax.set_ylabel("average risk")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# -- parser ---------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # keep exit code 2, shorter text
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tnnfl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tnnfl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser, *, out: bool = True) -> None:
        p.add_argument("--config", help="JSON file with parameters; flags override it")
        if out:
            p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("bound-mps", help="MPS lower bound, exact risk and reference bounds")
    for name in ("n", "d", "D", "r"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--k", help="k or inclusive range A..B")
    common(p)
    p.set_defaults(func=cmd_bound_mps)

    p = sub.add_parser("bound-peps", help="PEPS lower bound and its thermodynamic limit")
    for name in ("L", "d", "D", "sites"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--k", help="k or inclusive range A..B")
    p.add_argument("--c", type=float, help="concentration constant (default 1)")
    common(p)
    p.set_defaults(func=cmd_bound_peps)

    p = sub.add_parser("bound-curve", help="MPS and PEPS bounds on a common n-site system")
    for name in ("n", "d", "D", "L"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--k", help="k or inclusive range A..B (default 1..n-1)")
    p.add_argument("--c", type=float)
    common(p)
    p.set_defaults(func=cmd_bound_curve)

    p = sub.add_parser("verify", help="run an oracle-equivalence suite, JSON report")
    p.add_argument("--suite", required=True)
    p.add_argument("--budget", type=int, default=100_000, help="Monte-Carlo samples per check")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="learning experiment from a JSON config, CSV out")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--plot", help="also render a figure to this path")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (UsageError, TnnflError) as exc:
        print(f"tnnfl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
