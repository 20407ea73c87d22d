"""Command-line front end.

One subcommand per experiment family; flags mirror the configuration fields,
and a flat key=value config file can seed any of them (explicit flags win).
Exit status: 0 on success, 1 for an invalid configuration, 2 for a numerical
or contract failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, SzegoError
from .experiments import (
    FAMILIES,
    SYMBOL_TASKS,
    ExperimentConfig,
    run_experiment,
    write_report,
)


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="flat key=value file; flags override it")
    sub.add_argument("--d", type=int, help="lattice dimension")
    sub.add_argument("--k", type=float, help="potential growth exponent")
    sub.add_argument("--theta", type=float, help="trust-window safety fraction")
    sub.add_argument("--L", type=int, help="box radius (omit to size automatically)")
    sub.add_argument("--lambda-start", type=float, dest="lambda_start")
    sub.add_argument("--lambda-factor", type=float, dest="lambda_factor")
    sub.add_argument("--lambda-count", type=int, dest="lambda_count")
    sub.add_argument("--symbol", help="trig-poly | shifted-cosine | diagonal")
    sub.add_argument("--symbol-param", action="append", default=None,
                     metavar="KEY=VAL", dest="symbol_param")
    sub.add_argument("--f", help="poly:c0,c1,... or a named function")
    sub.add_argument("--kappa", type=float, help="commutator damping exponent")
    sub.add_argument("--m", type=int, help="resolvent power")
    sub.add_argument("--x-grid", type=int, dest="x_grid",
                     help="x-grid points per axis (power of two)")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"))
    sub.add_argument("--plot", action="store_true", default=None,
                     help="also render the family figure next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="szegolab",
        description="Spectral-average limit experiments for lattice "
                    "Schrodinger operators")
    subs = parser.add_subparsers(dest="family", required=True)
    for family in FAMILIES:
        sub = subs.add_parser(family, help=f"run the {family} experiment family")
        _add_common(sub)
        if family == "ls-bound":
            sub.add_argument("--r-exponents", dest="r_exponents",
                             help="comma list of exponents e; windows r = lambda^e")
        if family == "symbol":
            sub.add_argument("--symbol-task", dest="symbol_task",
                             choices=SYMBOL_TASKS)
            sub.add_argument("--power-k", type=int, dest="power_k")
            sub.add_argument("--compose-order", type=int, dest="compose_order")
            sub.add_argument("--class-m", type=float, dest="class_m")
            sub.add_argument("--alpha-max", type=int, dest="alpha_max")
            sub.add_argument("--beta-max", type=int, dest="beta_max")
            sub.add_argument("--symbol-b", dest="symbol_b")
            sub.add_argument("--symbol-b-param", action="append", default=None,
                             metavar="KEY=VAL", dest="symbol_b_param")
    return parser


def _parse_kv(pairs, field: str) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(field, f"expected KEY=VAL, got '{pair}'")
        key, val = pair.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_config_file(path: str) -> dict:
    """Flat key=value text; '#' starts a comment; repeated symbol_param merges."""
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read config file {path}: {exc}") from exc
    for ln, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{ln}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in ("symbol_param", "symbol_b_param"):
            values.setdefault(key, []).append(val)
        else:
            values[key] = val
    return values


_INT_KEYS = {"d", "L", "lambda_count", "m", "x_grid", "power_k",
             "compose_order", "alpha_max", "beta_max"}
_FLOAT_KEYS = {"k", "theta", "lambda_start", "lambda_factor", "kappa", "class_m"}
_BOOL_KEYS = {"plot"}


def _coerce(key: str, value):
    if isinstance(value, str):
        try:
            if key in _INT_KEYS:
                return int(value)
            if key in _FLOAT_KEYS:
                return float(value)
            if key in _BOOL_KEYS:
                return value.lower() in ("1", "true", "yes", "on")
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse '{value}'") from exc
    return value


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {"family": args.family}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for key, val in vars(args).items():
        if key in ("family", "config") or val is None:
            continue
        values[key] = val
    values = {k: _coerce(k, v) for k, v in values.items()}
    if "symbol_param" in values:
        values["symbol_params"] = _parse_kv(values.pop("symbol_param"), "symbol_param")
    if "symbol_b_param" in values:
        values["symbol_b_params"] = _parse_kv(values.pop("symbol_b_param"),
                                              "symbol_b_param")
    if isinstance(values.get("r_exponents"), str):
        try:
            values["r_exponents"] = tuple(float(x) for x in
                                          values["r_exponents"].split(","))
        except ValueError as exc:
            raise ConfigError("r_exponents", "expected comma list of floats") from exc
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = make_config(args)
        report = run_experiment(config)
        if config.out:
            write_report(report, config.out, config.format)
            print(f"wrote {config.out}")
            if config.plot:
                from .plots import render_report
                png = config.out.rsplit(".", 1)[0] + ".png"
                render_report(report, png)
                print(f"wrote {png}")
        else:
            text = report.to_csv() if config.format == "csv" else report.to_json()
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SzegoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
