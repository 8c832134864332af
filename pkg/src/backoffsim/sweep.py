"""Parameter sweeps: one CSV row per (protocol, N, lambda, alpha, beta, seed).

The CSV carries a fixed header plus '#'-prefixed provenance comments so the
plotting side and golden tests can diff data rows byte-for-byte
(wall_time_s is excluded from such comparisons).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import time
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

from . import __version__
from .engine import run_sim
from .metrics import ConfigError, SimConfig

CSV_COLUMNS = [
    "protocol",
    "N",
    "lambda",
    "alpha",
    "beta",
    "seed",
    "success_rate",
    "avg_delay_s",
    "drops",
    "tx_count",
    "fallbacks",
    "wall_time_s",
]


@dataclasses.dataclass
class SweepGrid:
    """Cartesian experiment grid over a base configuration."""

    base: SimConfig
    protocols: Sequence[str] = ("arbp", "ibsp", "daibsp")
    n_nodes: Sequence[int] = (1000,)
    lambdas: Sequence[float] = (5.0,)
    alphas: Sequence[float] = (1.0,)
    betas: Sequence[float] = (0.0,)
    seeds: Sequence[int] = tuple(range(10))

    def cells(self) -> List[SimConfig]:
        out = []
        for proto, n, lam, a, b, seed in itertools.product(
            self.protocols, self.n_nodes, self.lambdas, self.alphas, self.betas, self.seeds
        ):
            out.append(
                replace(
                    self.base,
                    protocol=proto,
                    n_nodes=n,
                    lam=lam,
                    alpha=a,
                    beta=b,
                    seed=seed,
                )
            )
        return out

    @classmethod
    def from_file(cls, path: str) -> "SweepGrid":
        """Load a grid from a JSON file; unknown base keys are rejected."""
        with open(path) as fh:
            raw = json.load(fh)
        base_kwargs = raw.pop("base", {})
        known = {f.name for f in dataclasses.fields(SimConfig)}
        bad = set(base_kwargs) - known
        if bad:
            raise ConfigError(f"unknown base config keys: {sorted(bad)}")
        base = SimConfig(**base_kwargs)
        kwargs = {}
        for key in ("protocols", "n_nodes", "lambdas", "alphas", "betas", "seeds"):
            if key in raw:
                kwargs[key] = raw.pop(key)
        if raw:
            raise ConfigError(f"unknown grid keys: {sorted(raw)}")
        return cls(base=base, **kwargs)


def run_cell(cfg: SimConfig) -> Dict[str, object]:
    """Run one grid cell and shape it as a CSV row."""
    t0 = time.perf_counter()
    metrics = run_sim(cfg)
    wall = time.perf_counter() - t0
    rate = metrics.success_rate() if metrics.data_sent else 0.0
    return {
        "protocol": cfg.protocol,
        "N": cfg.n_nodes,
        "lambda": cfg.lam,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "seed": cfg.seed,
        "success_rate": f"{rate:.6f}",
        "avg_delay_s": f"{metrics.avg_delay():.6f}",
        "drops": metrics.drops,
        "tx_count": metrics.tx_count,
        "fallbacks": metrics.fallback_count,
        "wall_time_s": f"{wall:.3f}",
    }


def _grid_digest(cells: Sequence[SimConfig]) -> str:
    blob = json.dumps([dataclasses.asdict(c) for c in cells], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_rows(
    rows: Iterable[Dict[str, object]],
    out: TextIO,
    digest: str = "",
) -> None:
    out.write(f"# backoffsim {__version__}\n")
    if digest:
        out.write(f"# grid sha256:{digest}\n")
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def run_sweep(
    grid: SweepGrid,
    out_path: str,
    progress: Optional[callable] = None,
) -> List[Dict[str, object]]:
    """Run every cell of the grid (deterministic order) and write the CSV.

    A cell whose configuration fails validation is skipped with a comment
    row; other cells still run.
    """
    cells = grid.cells()
    rows: List[Dict[str, object]] = []
    errors: List[str] = []
    for i, cfg in enumerate(cells):
        try:
            cfg.validate()
        except ConfigError as exc:
            errors.append(f"# skipped cell {i}: {exc}")
            continue
        rows.append(run_cell(cfg))
        if progress:
            progress(i + 1, len(cells), rows[-1])
    with open(out_path, "w", newline="") as fh:
        write_rows(rows, fh, _grid_digest(cells))
        for err in errors:
            fh.write(err + "\n")
    return rows
