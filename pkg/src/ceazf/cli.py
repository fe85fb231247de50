"""Command-line front end: ``ceazf run|coverage|fit-genggamma|validate``.

Config files are flat ``key = value`` text in two sections::

    [experiment]
    K = 10
    alpha = 4
    [output]
    out_dir = results

Exit codes: 0 success, 1 usage, config or I/O error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import typing
from pathlib import Path

import numpy as np

from .analysis import EMPIRICAL, MEAN, coverage_cea, coverage_ceu, genggamma_fit
from .errors import CeazfError, ConfigError, ParameterError
from .montecarlo import ExperimentConfig, kprime_histogram
from .presets import PRESETS, build_id
from .svg import line_chart

__all__ = ["parse_config", "run_preset", "main", "CONFIG_KEYS", "OUTPUT_KEYS"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

# file key -> ExperimentConfig field
_ALIASES = {"lambda": "lambda_"}
_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
CONFIG_KEYS = sorted({k for k in _FIELDS if k != "lambda_"} | set(_ALIASES))
OUTPUT_KEYS = ("out_dir", "svg")


def _convert(field, raw):
    hint = typing.get_type_hints(ExperimentConfig)[field]
    default = _FIELDS[field].default
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if field == "theta_db":
            return tuple(float(p) for p in parts)
        return tuple(parts)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or hint in ("float", "float | None"):
        return None if raw.lower() == "none" else float(raw)
    return raw


def _split(line, where):
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'key = value', got {line.strip()!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def _read_entries(text, source):
    """``(section, key, value, where)`` tuples from a config text, in order."""
    section = None
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        where = f"{source}:{n}"
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in ("experiment", "output"):
                raise ConfigError(f"{where}: unknown section [{section}]")
            continue
        if section is None:
            raise ConfigError(f"{where}: key outside of a section")
        key, value = _split(line, where)
        out.append((section, key, value, where))
    return out


def parse_config(path=None, overrides=(), defaults=None, text=None):
    """Build an :class:`ExperimentConfig` and output options.

    Precedence: dataclass defaults < ``defaults`` (preset) < file < ``overrides``.
    ``overrides`` are ``key=value`` strings for the experiment section. Returns
    ``(config, output_options)``.
    """
    entries = []
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text is not None:
        entries += _read_entries(text, str(path or "<config>"))
    for j, o in enumerate(overrides, 1):
        key, value = _split(o, f"--set #{j}")
        entries.append(("experiment", key, value, f"--set #{j}"))

    values = dict(defaults or {})
    output = {"out_dir": "results", "svg": True}
    for section, key, value, where in entries:
        if section == "output":
            if key not in OUTPUT_KEYS:
                raise ConfigError(f"{where}: unknown key {key!r} in [output]; known: {', '.join(OUTPUT_KEYS)}")
            output[key] = value if key == "out_dir" else value.lower() in ("1", "true", "yes", "on")
            continue
        field = _ALIASES.get(key, key)
        if field not in _FIELDS or field == "lambda_" and key != "lambda":
            raise ConfigError(f"{where}: unknown key {key!r}; known: {', '.join(CONFIG_KEYS)}")
        try:
            values[field] = _convert(field, value)
        except ValueError as exc:
            raise ConfigError(f"{where}: key {key!r}: cannot parse {value!r} ({exc})") from exc
    try:
        cfg = ExperimentConfig(**values)
    except ParameterError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg, output


def run_preset(name, cfg, out_dir, overrides=(), svg=True):
    """Run a preset and write its CSV tables and SVG charts; returns the written paths."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables, charts = PRESETS[name].run(cfg)
    written = []
    for t in tables:
        p = out / f"{t.name}.csv"
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(t.to_csv(overrides))
        written.append(p)
    if svg:
        meta = "\n".join(tables[0].metadata(overrides)) if tables else ""
        for c in charts:
            p = out / f"{c.name}.svg"
            line_chart(p, c.series, c.title, c.xlabel, c.ylabel, c.logx, c.logy, comment=meta)
            written.append(p)
    return written


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="config file with [experiment] and [output] sections")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override an experiment key")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: $CEAZF_WORKERS or 1)")


def build_parser():
    parser = _Parser(prog="ceazf", description="CEA-ZF and CEU-ZF precoding in Poisson massive-MIMO networks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a named preset and write CSV and SVG files")
    run.add_argument("preset")
    run.add_argument("--out", help="output directory (overrides [output] out_dir)")
    run.add_argument("--no-svg", action="store_true")
    _common(run)

    cov = sub.add_parser("coverage", help="analytical coverage at given thresholds")
    cov.add_argument("--theta-db", type=float, nargs="+", required=True)
    cov.add_argument("--scheme", choices=("ceu", "cea", "both"), default="both")
    cov.add_argument("--kprime-mode", choices=(MEAN.lower(), EMPIRICAL.lower()), default="mean")
    cov.add_argument("--kprime-draws", type=int, default=2000, help="K' draws for the empirical mode")
    _common(cov)

    fit = sub.add_parser("fit-genggamma", help="generalized-gamma parameters of R_k")
    fit.add_argument("--k", type=int, required=True)
    fit.add_argument("--alpha", type=float, default=4.0)
    fit.add_argument("--lambda", dest="lambda_", type=float, default=1e-6)

    sub.add_parser("validate", help="run the invariant suite")
    sub.add_parser("list", help="list presets")
    return parser


def _config_from(args, defaults=None):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    cfg, output = parse_config(args.config, overrides, defaults)
    return cfg, output, overrides


def _cmd_run(args):
    if args.preset not in PRESETS:
        print(f"unknown preset {args.preset!r}; available presets:", file=sys.stderr)
        for p in PRESETS.values():
            print(f"  {p.name:22s} {p.description}", file=sys.stderr)
        return EXIT_USAGE
    cfg, output, overrides = _config_from(args, PRESETS[args.preset].defaults)
    out_dir = args.out or output["out_dir"]
    try:
        paths = run_preset(args.preset, cfg, out_dir, overrides, svg=output["svg"] and not args.no_svg)
    except OSError as exc:
        print(f"ceazf: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_coverage(args):
    cfg, _, _ = _config_from(args)
    mode = args.kprime_mode.upper()
    pmf = kprime_histogram(cfg, args.kprime_draws) if mode == EMPIRICAL else None
    schemes = ("ceu", "cea") if args.scheme == "both" else (args.scheme,)
    print("theta_db," + ",".join(f"cov_ana_{s}" for s in schemes))
    for tdb in args.theta_db:
        th = 10 ** (tdb / 10)
        vals = []
        for s in schemes:
            if s == "ceu":
                vals.append(coverage_ceu(th, cfg.N, cfg.K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi))
            else:
                vals.append(coverage_cea(th, cfg.N, cfg.K, cfg.lambda_, cfg.alpha, cfg.F, cfg.csi, mode, pmf))
        print(repr(float(tdb)) + "," + ",".join(repr(v) for v in vals))
    return EXIT_OK


def _cmd_fit(args):
    p = genggamma_fit(args.k, args.lambda_, args.alpha)
    print("mu,eta,omega")
    print(f"{p.mu!r},{p.eta!r},{p.omega!r}")
    return EXIT_OK


def _cmd_validate(args):
    from .validation import run_invariants

    checks = run_invariants()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERICAL


def _cmd_list(args):
    for p in PRESETS.values():
        print(f"{p.name:22s} {p.description}")
    print(f"build {build_id()}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "coverage": _cmd_coverage, "fit-genggamma": _cmd_fit,
               "validate": _cmd_validate, "list": _cmd_list}[args.command]
    try:
        return handler(args)
    except (ConfigError, ParameterError) as exc:
        print(f"ceazf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CeazfError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ceazf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
