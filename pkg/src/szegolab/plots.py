"""Figure rendering for experiment reports.

Each family gets one PNG summarizing its convergence story, written next to
the delimited output.  Rendering is optional (``--plot``); the data section
of a report never depends on whether a figure was produced.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import Report


def _column(report: Report, name: str) -> np.ndarray:
    idx = report.columns.index(name)
    return np.array([float(row[idx]) for row in report.rows])


def _plot_weyl(report: Report, ax_top, ax_bot):
    lam = _column(report, "lambda")
    ax_top.loglog(lam, _column(report, "count"), "o-", label="counting")
    ax_top.loglog(lam, _column(report, "weyl"), "--", label="leading term")
    ax_top.set_ylabel("eigenvalue count")
    ax_top.legend()
    dev = np.abs(_column(report, "ratio") - 1.0)
    ax_bot.loglog(lam, np.maximum(dev, 1e-16), "s-", color="tab:red")
    ax_bot.set_xlabel("threshold")
    ax_bot.set_ylabel("|count/leading - 1|")


def _plot_szego(report: Report, ax_top, ax_bot):
    lam = _column(report, "lambda")
    ax_top.semilogx(lam, _column(report, "lhs"), "o-", label="trace ratio")
    ax_top.semilogx(lam, _column(report, "rhs"), "--", label="limit value")
    ax_top.set_ylabel("normalized trace")
    ax_top.legend()
    ax_bot.loglog(lam, np.maximum(_column(report, "rel_err"), 1e-16), "s-",
                  color="tab:red")
    ax_bot.set_xlabel("threshold")
    ax_bot.set_ylabel("relative error")


def _plot_ls(report: Report, ax_top, ax_bot):
    lhs = np.maximum(_column(report, "lhs_diff"), 1e-16)
    rhs = np.maximum(_column(report, "rhs_bound"), 1e-16)
    lo = min(lhs.min(), rhs.min())
    hi = max(lhs.max(), rhs.max())
    ax_top.loglog([lo, hi], [lo, hi], "--", color="gray", label="equality")
    ax_top.loglog(rhs, lhs, "o", color="tab:blue")
    ax_top.set_xlabel("bound")
    ax_top.set_ylabel("trace difference")
    ax_top.legend()
    lam = _column(report, "lambda")
    ax_bot.loglog(lam, rhs / lhs, "s-", color="tab:green")
    ax_bot.set_xlabel("threshold")
    ax_bot.set_ylabel("bound / difference")


def _plot_tauberian(report: Report, ax_top, ax_bot):
    lam = _column(report, "lambda")
    for name, style in (("plain", "o-"), ("weighted", "s-")):
        dev = np.abs(_column(report, f"{name}_ratio") - 1.0)
        ax_top.loglog(lam, np.maximum(dev, 1e-16), style, label=f"{name} |ratio-1|")
    ax_top.loglog(lam, _column(report, "plain_bound"), "--", color="gray",
                  label="bound")
    ax_top.set_ylabel("deviation")
    ax_top.legend()
    ax_bot.semilogx(lam, _column(report, "h_side"), "o-", label="h-side")
    ax_bot.semilogx(lam, _column(report, "v_side"), "--", label="v-side")
    ax_bot.set_xlabel("threshold")
    ax_bot.set_ylabel("weighted trace ratio")
    ax_bot.legend()


def _plot_symbol(report: Report, ax_top, ax_bot):
    if report.columns[0] != "n":
        ax_top.axis("off")
        ax_bot.axis("off")
        ax_top.set_title("class probe: see tabular output")
        return
    n = _column(report, "n")
    err = np.maximum(_column(report, "sup_err"), 1e-18)
    ax_top.loglog(n, err, "o-", label="sup error")
    slope = report.metadata.get("fit_slope")
    if slope not in (None, "-inf"):
        s = float(slope)
        ax_top.loglog(n, err[0] * (n / n[0]) ** s, "--",
                      label=f"slope {s:.2f}")
    ax_top.set_xlabel("|n|")
    ax_top.set_ylabel("sup error")
    ax_top.legend()
    ax_bot.axis("off")


_RENDERERS = {
    "weyl": _plot_weyl,
    "szego": _plot_szego,
    "szego2": _plot_szego,
    "ls-bound": _plot_ls,
    "tauberian": _plot_tauberian,
    "symbol": _plot_symbol,
}


def render_report(report: Report, path: str, dpi: int = 150) -> str:
    """Render the family figure for a report to ``path`` (PNG)."""
    family = report.metadata.get("family", "szego")
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(7, 8))
    _RENDERERS[family](report, ax_top, ax_bot)
    title = f"{family}  (d={report.metadata.get('d')}, k={report.metadata.get('k')})"
    fig.suptitle(title)
    for ax in (ax_top, ax_bot):
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
