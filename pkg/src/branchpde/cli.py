"""Command-line front end.

    branchpde solve    --config FILE [--seed N] [--threads K] [--out P] [--format csv|md]
    branchpde gradient --config FILE ...
    branchpde analyze  --config FILE ...
    branchpde table NAME [--seed N] [--threads K] ...
    branchpde kernel-test [--seed N] ...

Problem configuration lives in a TOML file with sections [domain],
[nonlinearity], [boundary], [run]; coefficients refer to registry function
names or numeric constants.  Reports go to stdout or --out as CSV
(RFC-4180-style, UTF-8, "." decimals) or markdown.  BRANCHPDE_SEED serves
as a fallback seed.  Exit codes: 0 success, 2 validation failure, 3 budget
exhaustion.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import certify
from .errors import BudgetExceeded, ConfigError
from .estimator import EstimatorResult, estimate_gradient_1d, estimate_value
from .kernel_suite import run_kernel_suite
from .kernels import Interval
from .problem import MultiIndex, NonlinearityTerm, ParticleBudget, ProblemSpec
from .problems import COSH_REGIME_BOUNDARY, FAMILIES, TABLES
from .rect import Rectangle, cube
from .registry import get as registry_get, resolve

__all__ = ["main", "run_command", "RunConfig", "load_config", "emit_report"]

DEFAULT_SEED = 20_240
_EXIT_OK, _EXIT_VALIDATION, _EXIT_BUDGET = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one problem configuration file."""

    spec: ProblemSpec
    xs: tuple[tuple[float, ...], ...]
    n: int
    seed: Optional[int]
    q: int
    mc_samples: int
    threads: int
    exact: Optional[str]


def _require_keys(section: dict, allowed: set[str], name: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


def _parse_domain(dom: dict) -> Rectangle:
    _require_keys(dom, {"d", "r", "intervals"}, "domain")
    if "intervals" in dom:
        if "r" in dom:
            raise ConfigError("[domain] takes either r or intervals, not both")
        try:
            ivs = tuple(Interval(float(lo), float(hi)) for lo, hi in dom["intervals"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad [domain].intervals: {exc}") from exc
        if "d" in dom and int(dom["d"]) != len(ivs):
            raise ConfigError("[domain].d disagrees with the number of intervals")
        return Rectangle(ivs)
    if "r" not in dom:
        raise ConfigError("[domain] needs r (cube half-width) or intervals")
    d = int(dom.get("d", 1))
    r = float(dom["r"])
    if r <= 0 or d < 1:
        raise ConfigError("[domain] needs r > 0 and d >= 1")
    return cube(d, r)


def _parse_terms(raw, n_marks: int) -> tuple[NonlinearityTerm, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("[nonlinearity].terms must be a nonempty list of tables")
    terms = []
    for i, entry in enumerate(raw):
        _require_keys(entry, {"l", "c", "p"}, f"nonlinearity.terms[{i}]")
        try:
            l = MultiIndex(tuple(int(v) for v in entry["l"]))
            c = resolve(entry["c"])
            p = float(entry["p"])
            terms.append(NonlinearityTerm(l, c, p))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad term {i}: {exc}") from exc
        if len(l.counts) != n_marks + 1:
            raise ConfigError(
                f"term {i}: multi-index length {len(l.counts)} != 1 + {n_marks} direction fields"
            )
    return tuple(terms)


def load_config(path: str) -> RunConfig:
    """Parse and validate a TOML problem configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    _require_keys(raw, {"domain", "nonlinearity", "boundary", "run"}, "config root")
    for section in ("domain", "nonlinearity", "boundary", "run"):
        if section not in raw:
            raise ConfigError(f"missing [{section}] section")

    rect = _parse_domain(raw["domain"])

    nl = raw["nonlinearity"]
    _require_keys(nl, {"beta", "terms", "b"}, "nonlinearity")
    if "beta" not in nl or "terms" not in nl:
        raise ConfigError("[nonlinearity] needs beta and terms")
    b_names = nl.get("b", [])
    b = tuple(registry_get(name) for name in b_names)
    terms = _parse_terms(nl["terms"], len(b))

    bd = raw["boundary"]
    _require_keys(bd, {"h", "exact"}, "boundary")
    if "h" not in bd:
        raise ConfigError("[boundary] needs h")
    h = resolve(bd["h"])
    exact = bd.get("exact")
    if exact is not None:
        registry_get(exact)  # fail early on unknown names

    run = raw["run"]
    _require_keys(
        run,
        {"x", "n", "seed", "q", "mc_samples", "threads",
         "budget_particles", "budget_generations"},
        "run",
    )
    if "x" not in run:
        raise ConfigError("[run] needs x (list of evaluation points)")
    xs = []
    for pt in run["x"]:
        pt = tuple(float(v) for v in (pt if isinstance(pt, list) else [pt]))
        if len(pt) != rect.dim:
            raise ConfigError(f"evaluation point {pt} has wrong dimension (domain d={rect.dim})")
        xs.append(pt)
    n = int(run.get("n", 0))
    if n < 2:
        raise ConfigError("[run].n must be at least 2")
    budget = ParticleBudget(
        max_particles=int(run.get("budget_particles", 1_000_000)),
        max_generations=int(run.get("budget_generations", 10_000)),
    )
    try:
        spec = ProblemSpec(beta=float(nl["beta"]), rect=rect, terms=terms, h=h,
                           b=b, budget=budget)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        spec=spec,
        xs=tuple(xs),
        n=n,
        seed=int(run["seed"]) if "seed" in run else None,
        q=int(run.get("q", 1)),
        mc_samples=int(run.get("mc_samples", 10 ** 6)),
        threads=int(run.get("threads", 1)),
        exact=exact,
    )


def _pick_seed(cli_seed: Optional[int], config_seed: Optional[int]) -> int:
    if cli_seed is not None:
        return cli_seed
    if config_seed is not None:
        return config_seed
    env = os.environ.get("BRANCHPDE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"BRANCHPDE_SEED={env!r} is not an integer") from exc
    return DEFAULT_SEED


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _format_x(x: tuple[float, ...]) -> str:
    if len(x) == 1:
        return f"{x[0]:g}"
    return "(" + ", ".join(f"{v:g}" for v in x) + ")"


def _estimate_row(x, res: EstimatorResult, seed: int, exact_value=None) -> dict:
    row = {
        "x": _format_x(x),
        "estimate": f"{res.mean:.6f}",
        "ci_lo": f"{res.ci99[0]:.6f}",
        "ci_hi": f"{res.ci99[1]:.6f}",
        "std_over_mean": "" if np.isnan(res.std_over_mean()) else f"{res.std_over_mean():.4f}",
        "runtime_s": f"{res.elapsed:.1f}",
        "n": str(res.n),
        "seed": str(seed),
        "version": __version__,
    }
    if exact_value is not None:
        rel = abs(res.mean - exact_value) / abs(exact_value) if exact_value else float("nan")
        row["rel_error"] = f"{100.0 * rel:.4f}%"
    return row


_COLUMN_ORDER = ["x", "estimate", "ci_lo", "ci_hi", "std_over_mean", "rel_error",
                 "runtime_s", "n", "seed", "version"]


def _columns(rows: list[dict]) -> list[str]:
    seen = set().union(*rows) if rows else set()
    return [c for c in _COLUMN_ORDER if c in seen] + sorted(seen - set(_COLUMN_ORDER))


def emit_report(rows: list[dict], fmt: str = "csv", caption: str = "") -> str:
    """Render result rows as CSV or markdown; deterministic in its inputs."""
    if not rows:
        raise ValueError("no result rows to emit")
    cols = _columns(rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "md":
        out = []
        if caption:
            out.append(f"**{caption}**")
            out.append("")
        out.append("| " + " | ".join(cols) + " |")
        out.append("|" + "|".join(["---"] * len(cols)) + "|")
        for row in rows:
            out.append("| " + " | ".join(str(row.get(c, "")) for c in cols) + " |")
        return "\n".join(out) + "\n"
    raise ConfigError(f"unknown report format {fmt!r} (use csv or md)")


def _write_report(text: str, out_path: Optional[str]):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_estimate(args, gradient: bool) -> int:
    cfg = load_config(args.config)
    seed = _pick_seed(args.seed, cfg.seed)
    threads = args.threads or cfg.threads
    exact_fn = registry_get(cfg.exact) if cfg.exact else None
    estimator = estimate_gradient_1d if gradient else estimate_value
    rows = []
    for i, x in enumerate(cfg.xs):
        res = estimator(cfg.spec, np.array(x), cfg.n, seed + i, threads=threads)
        exact_val = None
        if exact_fn is not None and not gradient:
            exact_val = float(exact_fn(np.array(x)[None, :])[0])
        rows.append(_estimate_row(x, res, seed + i, exact_val))
    kind = "gradient" if gradient else "solve"
    _write_report(emit_report(rows, args.format, caption=f"{kind}: n={cfg.n}, seed={seed}"),
                  args.out)
    return _EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    seed = _pick_seed(args.seed, cfg.seed)
    report = certify(cfg.spec, q=cfg.q, mc_samples=cfg.mc_samples, seed=seed)
    rows = [
        {"field": "lambda1", "value": f"{report.lambda1:.6f}"},
        {"field": "extinction_margin", "value": f"{report.extinction_margin:.6f}"},
        {"field": "delta", "value": f"{report.delta:.6f}"},
        {"field": "delta_se", "value": f"{report.delta_se:.2e}"},
        {"field": "gamma", "value": f"{report.gamma:.6f}"},
        {"field": "s_star", "value": f"{report.s_star:.6f}"},
        {"field": "c0", "value": f"{report.c0:.6f}"},
        {"field": "q", "value": str(report.q)},
        {"field": "admissible", "value": str(report.admissible)},
        {"field": "seed", "value": str(seed)},
        {"field": "version", "value": __version__},
    ]
    for i, note in enumerate(report.notes):
        rows.append({"field": f"note_{i}", "value": note})
    _write_report(emit_report(rows, args.format, caption="certification report"), args.out)
    return _EXIT_OK


def _cmd_table(args) -> int:
    if args.name not in TABLES:
        raise ConfigError(f"unknown table {args.name!r}; known: {sorted(TABLES)}")
    tdef = TABLES[args.name]
    seed = _pick_seed(args.seed, None)
    threads = args.threads or 1
    family = FAMILIES[tdef.family]
    exact_fn = registry_get(tdef.exact) if tdef.exact else None
    rows = []
    for i, (r, x) in enumerate(tdef.rows):
        spec = family(r)
        res = estimate_value(spec, np.array(x), tdef.n, seed + i, threads=threads)
        exact_val = None
        if exact_fn is not None:
            exact_val = float(exact_fn(np.array(x)[None, :])[0])
        row = _estimate_row(x, res, seed + i, exact_val)
        if len({rr for rr, _ in tdef.rows}) > 1:
            row["x"] = f"r={r:g}, x={row['x']}"
        rows.append(row)
    caption = f"table {tdef.name}: n={tdef.n}, seed={seed}, version={__version__}"
    if tdef.note:
        caption += f" ({tdef.note})"
    _write_report(emit_report(rows, args.format, caption=caption), args.out)
    return _EXIT_OK


def _cmd_kernel_test(args) -> int:
    results = run_kernel_suite(seed=args.seed if args.seed is not None else DEFAULT_SEED)
    all_pass = True
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        all_pass &= res.passed
        lines.append(f"[{status}] {res.name}: {res.detail}")
    text = "\n".join(lines) + "\n"
    _write_report(text, args.out)
    return _EXIT_OK if all_pass else _EXIT_VALIDATION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchpde",
        description="Branching Brownian Monte Carlo solver for semi-linear "
                    "elliptic Dirichlet problems on rectangles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML problem configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "md"), default="csv")

    common(sub.add_parser("solve", help="estimate the solution at the configured points"))
    common(sub.add_parser("gradient", help="estimate the 1D solution derivative"))
    common(sub.add_parser("analyze", help="certification report (thresholds, admissibility)"))
    p_table = sub.add_parser("table", help="reproduce a named report table")
    p_table.add_argument("name", help=f"one of {sorted(TABLES)}")
    common(p_table, config=False)
    p_kt = sub.add_parser("kernel-test", help="run the interval-kernel statistical suite")
    common(p_kt, config=False)
    return parser


def run_command(argv) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_VALIDATION if exc.code not in (0, None) else 0
    try:
        if args.command == "solve":
            return _cmd_estimate(args, gradient=False)
        if args.command == "gradient":
            return _cmd_estimate(args, gradient=True)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "table":
            return _cmd_table(args)
        if args.command == "kernel-test":
            return _cmd_kernel_test(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_BUDGET
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
