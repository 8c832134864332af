"""Figure specifications and rendering over the sweep CSV schema.

The input CSV is the output of the simulation sweep tool: one row per
(protocol, N, lambda, alpha, beta, seed) cell with measured metrics.
Every plotted point is the plain mean over replicate seeds, with a stddev
band; no resampling or smoothing, so plotted values equal CSV aggregates
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


class PlotError(Exception):
    """Bad input: missing columns, unknown figure, empty selection."""


#: columns the sweep CSV must provide
REQUIRED_COLUMNS = [
    "protocol", "N", "lambda", "alpha", "beta", "seed",
    "success_rate", "avg_delay_s", "drops",
]

Y_LABELS = {
    "success_rate": "success rate (%)",
    "avg_delay_s": "average delay (s)",
    "drops": "dropped packets",
}
X_LABELS = {"N": "number of nodes", "lambda": "event generation rate (1/s)"}


@dataclass(frozen=True)
class FigureSpec:
    """One figure: a metric against a swept axis at fixed other parameters.

    ``filters`` pins the non-swept parameters; a filter column whose value
    does not occur in the CSV is an error rather than an empty plot.
    """

    name: str
    x: str  # "N" or "lambda"
    y: str  # "success_rate", "avg_delay_s" or "drops"
    title: str
    filters: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.x not in X_LABELS:
            raise PlotError(f"unknown x-axis {self.x!r}")
        if self.y not in Y_LABELS:
            raise PlotError(f"unknown y-axis {self.y!r}")


FIGSETS: Dict[str, FigureSpec] = {
    "fig5": FigureSpec(
        "fig5", x="N", y="success_rate",
        title="Success rate vs node density",
        filters={"lambda": 5.0, "alpha": 1.0, "beta": 0.0},
    ),
    "fig6": FigureSpec(
        "fig6", x="N", y="avg_delay_s",
        title="Average delay vs node density",
        filters={"lambda": 5.0, "alpha": 1.0, "beta": 0.0},
    ),
    "fig7": FigureSpec(
        "fig7", x="lambda", y="success_rate",
        title="Success rate vs event generation rate",
        filters={"N": 1000, "alpha": 1.0, "beta": 0.0},
    ),
    "fig8": FigureSpec(
        "fig8", x="N", y="success_rate",
        title="Success rate vs node density (traffic-adaptive)",
        filters={"lambda": 5.0, "alpha": 1.0, "beta": 1.0},
    ),
    "fig9": FigureSpec(
        "fig9", x="N", y="avg_delay_s",
        title="Average delay vs node density (traffic-adaptive)",
        filters={"lambda": 5.0, "alpha": 1.0, "beta": 1.0},
    ),
    "fig10": FigureSpec(
        "fig10", x="lambda", y="drops",
        title="Dropped packets vs event generation rate",
        filters={"N": 1000, "alpha": 1.0, "beta": 0.0},
    ),
}

_STYLE = {"arbp": "o-", "ibsp": "s-", "daibsp": "^-"}


def load_csv(path) -> pd.DataFrame:
    """Load a sweep CSV, checking the schema ('#' lines are comments)."""
    try:
        df = pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PlotError(f"cannot read sweep CSV {path}: {e}") from e
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise PlotError(f"sweep CSV {path} is missing columns: {', '.join(missing)}")
    if df.empty:
        raise PlotError(f"sweep CSV {path} has no data rows")
    return df


def _select(df: pd.DataFrame, spec: FigureSpec) -> pd.DataFrame:
    out = df
    for col, val in spec.filters.items():
        out = out[out[col] == val]
        if out.empty:
            raise PlotError(
                f"{spec.name}: no rows with {col} == {val!r} in the CSV"
            )
    return out


def aggregate(df: pd.DataFrame, spec: FigureSpec) -> pd.DataFrame:
    """Mean and stddev of the figure's metric over replicate seeds.

    Returns one row per (protocol, x value) with ``mean`` and ``std``
    columns; this is exactly what ``render`` draws.
    """
    sel = _select(df, spec)
    g = sel.groupby(["protocol", spec.x])[spec.y].agg(["mean", "std", "count"])
    return g.reset_index().fillna({"std": 0.0})


def render(csv_path, spec: FigureSpec, out_dir) -> Path:
    """Render one figure to ``<out_dir>/<spec.name>.png`` and return the path."""
    df = load_csv(csv_path)
    agg = aggregate(df, spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for proto, sub in agg.groupby("protocol"):
        sub = sub.sort_values(spec.x)
        style = _STYLE.get(str(proto), "x-")
        ax.errorbar(
            sub[spec.x], sub["mean"], yerr=sub["std"],
            fmt=style, capsize=3, label=str(proto),
        )
    ax.set_xlabel(X_LABELS[spec.x])
    ax.set_ylabel(Y_LABELS[spec.y])
    fixed = ", ".join(f"{k}={v:g}" for k, v in spec.filters.items())
    ax.set_title(f"{spec.title}\n({fixed})" if fixed else spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = out_dir / f"{spec.name}.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
