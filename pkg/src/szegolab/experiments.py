"""Declarative experiment configuration, orchestration, and report emission.

Each experiment family sweeps an ascending geometric threshold grid inside
the trust window of an automatically (or explicitly) sized box and emits a
:class:`Report`: a metadata echo, named columns, rows in ascending threshold
order, and per-family verdicts.  Identical configurations produce
bit-identical data sections; timestamps only ever enter the metadata.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, SzegoError
from .lattice import (
    LatticeBox,
    Potential,
    SymmetricOperator,
    assemble_hamiltonian,
    truncation_radius,
)
from .spectral import SpectralData, counting, hamiltonian_spectrum
from .symbols import (
    NAMED_SYMBOLS,
    ToroidalSymbol,
    class_probe,
    compose,
    compose_oracle,
    decay_fit,
    make_named_symbol,
    power_symbol_expansion,
    quantize,
)
from .szego import (
    TestFunction,
    convergence_sweep,
    default_kappa,
    trace_inequality_check,
    poly_of_quantized,
)
from .tauberian import resolvent_ratio, weighted_resolvent_ratio, normalized_trace_comparison

FAMILIES = ("weyl", "szego", "szego2", "ls-bound", "tauberian", "symbol")
SYMBOL_TASKS = ("power", "compose", "class-probe")

CSV_SCHEMAS = {
    "weyl": ("lambda", "count", "weyl", "ratio"),
    "szego": ("lambda", "rank", "lhs", "rhs", "abs_err", "rel_err"),
    "szego2": ("lambda", "rank", "lhs", "rhs", "abs_err", "rel_err"),
    "ls-bound": ("lambda", "r", "lhs_diff", "rhs_bound", "holds"),
    "tauberian": ("lambda", "plain_ratio", "plain_bound", "weighted_ratio",
                  "weighted_bound", "h_side", "v_side"),
    "symbol": None,  # task-dependent
}


def parse_test_function(spec: str) -> TestFunction:
    """'poly:c0,c1,...' or a named smooth function ('exp', 'sin', 'cos')."""
    spec = spec.strip()
    if spec.startswith("poly:"):
        try:
            coeffs = [float(c) for c in spec[5:].split(",")]
        except ValueError as exc:
            raise ConfigError("f", f"bad polynomial coefficients in '{spec}'") from exc
        try:
            return TestFunction.poly(coeffs)
        except ValueError as exc:
            raise ConfigError("f", str(exc)) from exc
    try:
        return TestFunction.named(spec)
    except ValueError as exc:
        raise ConfigError("f", str(exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one experiment run."""

    family: str
    d: int = 1
    k: float = 2.0
    theta: float = 0.5
    L: int | None = None  # None -> sized from the top of the lambda grid
    lambda_start: float = 125.0
    lambda_factor: float = 2.0
    lambda_count: int = 5
    symbol: str = "trig-poly"
    symbol_params: dict = field(default_factory=dict)
    f: str = "poly:0,0,1"
    kappa: float | None = None
    m: int = 1
    x_grid: int = 256
    r_exponents: tuple = (0.5, 0.7)
    symbol_task: str = "power"
    power_k: int = 2
    compose_order: int = 0
    class_m: float = 0.0
    alpha_max: int = 2
    beta_max: int = 3
    symbol_b: str = "trig-poly"
    symbol_b_params: dict = field(default_factory=lambda: {"coeffs": "0,1"})
    out: str | None = None
    format: str = "csv"
    plot: bool = False

    # -- derived quantities -------------------------------------------------

    def lambdas(self) -> list:
        return [self.lambda_start * self.lambda_factor ** j
                for j in range(self.lambda_count)]

    def box_radius(self) -> int:
        if self.L is not None:
            return self.L
        return truncation_radius(max(self.lambdas()), self.k, self.theta)

    def resolved_kappa(self) -> float:
        return self.kappa if self.kappa is not None else default_kappa(self.k)

    def validate(self) -> "ExperimentConfig":
        if self.family not in FAMILIES:
            raise ConfigError("family", f"unknown family '{self.family}'; "
                                        f"choose from {FAMILIES}")
        if self.d < 1:
            raise ConfigError("d", f"dimension must be >= 1, got {self.d}")
        if self.k <= 0:
            raise ConfigError("k", f"growth exponent must be positive, got {self.k}")
        if not (0.0 < self.theta < 1.0):
            raise ConfigError("theta", f"safety fraction must lie in (0,1), got {self.theta}")
        if self.lambda_start <= 0 or self.lambda_factor <= 1.0 or self.lambda_count < 1:
            raise ConfigError("lambda_grid",
                              "need lambda_start > 0, lambda_factor > 1, lambda_count >= 1")
        if self.L is not None and self.L < 1:
            raise ConfigError("L", f"box radius must be >= 1, got {self.L}")
        if self.symbol not in NAMED_SYMBOLS:
            raise ConfigError("symbol", f"unknown symbol '{self.symbol}'; "
                                        f"choose from {NAMED_SYMBOLS}")
        if self.m < 1:
            raise ConfigError("m", f"resolvent power must be >= 1, got {self.m}")
        if self.kappa is not None and not (0.0 < self.kappa < 1.0):
            raise ConfigError("kappa", f"kappa must lie in (0,1), got {self.kappa}")
        if self.x_grid < 8 or self.x_grid & (self.x_grid - 1):
            raise ConfigError("x_grid", f"x-grid must be a power of two >= 8, got {self.x_grid}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", f"format must be csv or json, got '{self.format}'")
        if self.family == "symbol" and self.symbol_task not in SYMBOL_TASKS:
            raise ConfigError("symbol_task",
                              f"unknown task '{self.symbol_task}'; choose from {SYMBOL_TASKS}")
        f = parse_test_function(self.f)
        lam_max = max(self.lambdas())
        limit = self.theta * float(self.box_radius()) ** self.k
        if self.family in ("weyl", "szego", "szego2", "ls-bound") and lam_max > limit:
            raise SzegoError(
                "untrusted-window",
                f"lambda grid reaches {lam_max} beyond the trusted window; "
                f"maximal admissible threshold is {limit}")
        margin = self._symbol_margin(f)
        est = (self.x_grid ** self.d) * (2 * (self.box_radius() + margin) + 1) ** self.d * 8
        if est > 2_000_000_000:
            raise ConfigError("x_grid",
                              f"symbol sample tensor would need ~{est / 1e9:.1f} GB; "
                              "reduce the x-grid or the box")
        return self

    def _symbol_bandwidth_hint(self) -> int:
        if self.symbol == "trig-poly":
            raw = self.symbol_params.get("coeffs", "2,1")
            ncoef = len(str(raw).split(",")) if isinstance(raw, str) else len(raw)
            return max(ncoef - 1, 1)
        return 1 if self.symbol == "shifted-cosine" else 0

    def _symbol_margin(self, f: TestFunction) -> int:
        if self.family == "ls-bound":
            return (f.degree or 1) * max(self._symbol_bandwidth_hint(), 1)
        return 1


@dataclass
class Report:
    """Tabular experiment result with a determinism-friendly data section."""

    metadata: dict
    columns: tuple
    rows: list
    verdicts: dict

    @staticmethod
    def _fmt(value) -> str:
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, float):
            return f"{value:.17g}"
        return str(value)

    def data_text(self) -> str:
        """Header plus rows; the part of the report that must be bit-stable.

        Verdicts ride along as trailing comment lines so the table itself
        stays rectangular and plot-ready.
        """
        lines = [",".join(self.columns)]
        lines += [",".join(self._fmt(v) for v in row) for row in self.rows]
        lines += [f"# verdict {name} = {int(bool(ok))}"
                  for name, ok in sorted(self.verdicts.items())]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        meta = "".join(f"# {key} = {self.metadata[key]}\n" for key in sorted(self.metadata))
        return meta + self.data_text()

    def to_json(self) -> str:
        doc = {
            "metadata": {k: str(v) for k, v in sorted(self.metadata.items())},
            "columns": list(self.columns),
            "rows": [[self._fmt(v) for v in row] for row in self.rows],
            "verdicts": {k: bool(v) for k, v in sorted(self.verdicts.items())},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _metadata(config: ExperimentConfig) -> dict:
    meta = {
        "family": config.family,
        "d": config.d,
        "k": config.k,
        "theta": config.theta,
        "L": config.box_radius(),
        "lambda_grid": ",".join(f"{x:g}" for x in config.lambdas()),
        "symbol": config.symbol,
        "symbol_params": json.dumps(config.symbol_params, sort_keys=True),
        "f": config.f,
        "kappa": config.resolved_kappa(),
        "m": config.m,
        "x_grid": config.x_grid,
        "version": __version__,
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    return meta


@dataclass(frozen=True)
class Frame:
    """Shared heavy state: the truncated Hamiltonian and its decomposition."""

    box: LatticeBox
    pot: Potential
    h: SymmetricOperator
    spec: SpectralData
    theta: float


def build_frame(d: int, k: float, L: int, theta: float) -> Frame:
    box = LatticeBox(d, L)
    pot = Potential(k)
    h = assemble_hamiltonian(box, pot)
    spec = hamiltonian_spectrum(h, pot, theta)
    return Frame(box, pot, h, spec, theta)


def _build_symbol(config: ExperimentConfig, radius: int) -> ToroidalSymbol:
    return make_named_symbol(config.symbol, config.symbol_params,
                             LatticeBox(config.d, radius), config.x_grid)


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def run_experiment(config: ExperimentConfig) -> Report:
    """Dispatch a validated configuration to its family runner."""
    config = config.validate()
    runner = {
        "weyl": _run_weyl,
        "szego": _run_szego,
        "szego2": _run_szego,
        "ls-bound": _run_ls_bound,
        "tauberian": _run_tauberian,
        "symbol": _run_symbol,
    }[config.family]
    return runner(config)


def _run_weyl(config: ExperimentConfig) -> Report:
    frame = build_frame(config.d, config.k, config.box_radius(), config.theta)
    rows = []
    devs = []
    for lam in config.lambdas():
        c = counting(frame.spec, lam)
        weyl = 2.0 ** config.d * lam ** (config.d / config.k)
        rows.append((lam, c, weyl, c / weyl))
        devs.append(abs(c / weyl - 1.0))
    trend = np.polyfit(np.log([r[0] for r in rows]), np.log(np.maximum(devs, 1e-16)), 1)[0]
    verdicts = {
        "deviation_strictly_decreasing": _strictly_decreasing(devs),
        "deviation_trend_decreasing": bool(trend < 0.0 and devs[-1] < devs[0]),
    }
    return Report(_metadata(config), CSV_SCHEMAS["weyl"], rows, verdicts)


def _run_szego(config: ExperimentConfig) -> Report:
    frame = build_frame(config.d, config.k, config.box_radius(), config.theta)
    f = parse_test_function(config.f)
    sym = _build_symbol(config, frame.box.L + 1)
    b_op = quantize(sym, frame.box)
    samples = convergence_sweep(frame.spec, b_op, sym, f, config.lambdas(),
                                frame.pot, config.resolved_kappa())
    rows = [(s.lam, s.rank, s.lhs, s.rhs, s.abs_err, s.rel_err) for s in samples]
    verdicts = {"rel_err_decreasing": _strictly_decreasing([s.rel_err for s in samples])}
    meta = _metadata(config)
    meta["sym_defect"] = b_op.sym_defect
    return Report(meta, CSV_SCHEMAS["szego"], rows, verdicts)


def _run_ls_bound(config: ExperimentConfig) -> Report:
    frame = build_frame(config.d, config.k, config.box_radius(), config.theta)
    f = parse_test_function(config.f)
    sym = _build_symbol(config, frame.box.L + config._symbol_margin(f))
    b_op = quantize(sym, frame.box)
    f_of_b = poly_of_quantized(sym, frame.box, f) if f.kind == "poly" else None
    kappa = config.resolved_kappa()
    rows = []
    all_hold = True
    for lam in config.lambdas():
        for expo in config.r_exponents:
            res = trace_inequality_check(frame.spec, b_op, f, lam, lam ** expo, kappa,
                                 f_of_b=f_of_b)
            rows.append((lam, res.r, res.lhs_diff, res.rhs_bound, res.holds))
            all_hold = all_hold and res.holds
    return Report(_metadata(config), CSV_SCHEMAS["ls-bound"], rows,
                  {"inequality_holds_everywhere": all_hold})


def _run_tauberian(config: ExperimentConfig) -> Report:
    frame = build_frame(config.d, config.k, config.box_radius(), config.theta)
    sym = _build_symbol(config, frame.box.L + 1)
    b_op = quantize(sym, frame.box)
    lams = config.lambdas()
    prop_rows = normalized_trace_comparison(frame.spec, frame.pot, b_op,
                                            config.m, lams)
    rows = []
    l1_ok = l2_ok = True
    for lam, prop in zip(lams, prop_rows):
        r1 = resolvent_ratio(frame.spec, frame.pot, lam, config.m)
        r2 = weighted_resolvent_ratio(frame.spec, frame.pot, b_op, lam, config.m)
        l1_ok = l1_ok and r1.within(1.1)
        l2_ok = l2_ok and r2.within(1.1)
        rows.append((lam, r1.ratio, r1.bound, r2.ratio, r2.bound,
                     prop.h_side, prop.v_side))
    gaps = [p.gap for p in prop_rows]
    verdicts = {
        "plain_ratio_within_bound": l1_ok,
        "weighted_ratio_within_bound": l2_ok,
        "side_gap_decreasing": _strictly_decreasing(gaps),
    }
    return Report(_metadata(config), CSV_SCHEMAS["tauberian"], rows, verdicts)


def _symbol_b(config: ExperimentConfig, radius: int) -> ToroidalSymbol:
    return make_named_symbol(config.symbol_b, config.symbol_b_params,
                             LatticeBox(config.d, radius), config.x_grid)


def _run_symbol(config: ExperimentConfig) -> Report:
    radius = config.box_radius()
    sym = _build_symbol(config, radius)
    meta = _metadata(config)
    if config.symbol_task == "class-probe":
        report = class_probe(sym, config.class_m, config.alpha_max, config.beta_max)
        rows = [(";".join(map(str, r.alpha)), ";".join(map(str, r.beta)),
                 r.exponent, r.constant, r.residual) for r in report.rows]
        return Report(meta, ("alpha", "beta", "exponent", "constant", "residual"),
                      rows, {"member": report.member})

    if config.symbol_task == "power":
        _, err = power_symbol_expansion(sym, config.power_k)
        margin = max(2 * config.power_k, 2)
    else:  # compose
        other = _symbol_b(config, radius)
        truncated = compose(sym, other, config.compose_order)
        oracle = compose_oracle(sym, other)
        shared = truncated.n_box
        diff = (oracle.samples[..., oracle.n_box.indices_of(shared.sites)]
                - truncated.samples)
        err = ToroidalSymbol(sym.d, sym.n_x, shared,
                             np.ascontiguousarray(np.abs(diff)))
        margin = max(config.compose_order + 2, 2)
    n_hi = err.n_box.L - margin
    n_lo = max(2, n_hi // 8)
    profile = err.sup_profile()
    radii = np.max(np.abs(err.n_box.sites), axis=1)
    rows = []
    for shell in range(n_lo, n_hi + 1):
        vals = profile[radii == shell]
        if len(vals):
            rows.append((shell, float(np.max(vals))))
    if max(v for _, v in rows) <= 1e-12:
        # error vanished identically (e.g. n-independent input); nothing to fit
        meta["fit_slope"] = "-inf"
        meta["fit_residual"] = 0.0
        return Report(meta, ("n", "sup_err"), rows, {"decay_slope_ok": True})
    fit = decay_fit(err, n_lo, n_hi)
    meta["fit_slope"] = fit.slope
    meta["fit_residual"] = fit.residual
    return Report(meta, ("n", "sup_err"), rows,
                  {"decay_slope_ok": fit.slope <= -0.8})


def write_report(report: Report, path: str, fmt: str = "csv") -> str:
    """Serialize a report; CSV keeps metadata as '#' comments above the data."""
    text = report.to_csv() if fmt == "csv" else report.to_json()
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SzegoError("io-failure", f"cannot write report to {path}: {exc}") from exc
    return path
