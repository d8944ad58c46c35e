"""Seeded experiment sweeps, CSV output and SVG charts.

A sweep runs every (n, alpha, r, ell) point for ``trials`` independent
networks and every named algorithm on each network. The network of
trial ``k`` is drawn from a seed derived from ``(master_seed, n, k)``,
so different ranges, energy ratios and caps share placements (common
random numbers). A disconnected draw is replaced by the next derived
seed and the number of replacements is recorded in the row.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .flowbound import lp_upper_bound
from .lifetime import (FullyAggregated, PartiallyAggregated, QueryModel, Unaggregated,
                       tree_lifetime)
from .mdst import aggregated_tree
from .topology import NetworkGraph, is_connected, random_network
from .treesearch import ecrt, local_opt, min_hop_tree

CSV_VERSION = "# lifetree-csv v1"
ALGORITHMS = ("min-hop", "aggregated-tree", "ecrt", "local-opt", "ecrt+lo")
QUERIES = ("full", "unagg", "partial")
MAX_RESAMPLES = 10_000
THREADS_ENV = "LIFETREE_THREADS"


class ConfigError(ValueError):
    pass


def _as_list(x) -> list:
    if isinstance(x, (list, tuple)):
        return list(x)
    return [x]


@dataclass(frozen=True)
class SweepConfig:
    n: int | Sequence[int] = 50
    area_side: float = 100.0
    r_values: Sequence[float] = (1.5,)
    alpha: float | Sequence[float] = 1.0
    mean_energy: float = 1000.0
    c_r: float = 0.5
    query: str = "full"
    ell_values: Sequence[int] | None = None
    algorithms: Sequence[str] = ("min-hop",)
    trials: int = 20
    master_seed: int = 0
    include_rx: bool = False
    root_position: str = "random"

    def __post_init__(self):
        q = self.query
        if q.startswith("partial:"):
            object.__setattr__(self, "query", "partial")
            object.__setattr__(self, "ell_values", [int(float(q.split(":", 1)[1]))])
        self.validate()

    @property
    def n_values(self) -> list[int]:
        return [int(n) for n in _as_list(self.n)]

    @property
    def alpha_values(self) -> list[float]:
        return [float(a) for a in _as_list(self.alpha)]

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.query not in QUERIES:
            raise ConfigError(f"unknown query {self.query!r}; expected one of {QUERIES}")
        if not self.algorithms:
            raise ConfigError("no algorithms given")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; expected one of {ALGORITHMS}")
            if a == "aggregated-tree" and self.query != "full":
                raise ConfigError("aggregated-tree only handles the full query")
            if a in ("ecrt", "local-opt", "ecrt+lo") and self.query == "full":
                raise ConfigError(f"{a} handles unagg and partial queries only")
        if self.query == "partial":
            if not self.ell_values:
                raise ConfigError("partial query needs ell values")
            for ell in self.ell_values:
                if int(ell) != ell or ell < 1:
                    raise ConfigError(f"ell must be a positive integer, got {ell}")
        elif self.ell_values:
            raise ConfigError("ell values only apply to the partial query")
        if not self.r_values:
            raise ConfigError("no r values given")
        if any(n < 2 for n in self.n_values):
            raise ConfigError("every n must be >= 2")
        if any(a < 1 for a in self.alpha_values):
            raise ConfigError("alpha must be >= 1")
        if not 0 <= self.c_r < 1:
            raise ConfigError(f"c_r must satisfy 0 <= c_r < 1, got {self.c_r}")

    def model(self, ell: int | None) -> QueryModel:
        rx = self.c_r if self.include_rx else 0.0
        if self.query == "full":
            return FullyAggregated(self.c_r)
        if self.query == "unagg":
            return Unaggregated(self.include_rx, rx)
        return PartiallyAggregated(int(ell), self.include_rx, rx)

    @property
    def wants_lp(self) -> bool:
        # the flow bound only covers transmit-only unaggregated lifetimes
        return self.query == "unagg" and not self.include_rx

    def points(self) -> list[tuple[int, float, float, int | None]]:
        ells = [int(e) for e in self.ell_values] if self.query == "partial" else [None]
        return [(n, a, float(r), ell) for n, a, r, ell in
                product(self.n_values, self.alpha_values, self.r_values, ells)]


def _r_grid(lo: float, hi: float, step: float) -> list[float]:
    k = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(k + 1)]


PRESETS = {
    "fig4": dict(n=50, alpha=[1.0, 4.0], r_values=_r_grid(1.5, 4.0, 0.25),
                 query="full", algorithms=["min-hop", "aggregated-tree"]),
    "fig5": dict(n=400, alpha=1.0, r_values=_r_grid(1.5, 4.0, 0.25), query="unagg",
                 algorithms=["min-hop", "ecrt", "local-opt", "ecrt+lo"]),
    "fig6": dict(n=400, alpha=[1.0, 2.0, 3.0, 4.0], r_values=_r_grid(1.5, 4.0, 0.5),
                 query="unagg", algorithms=["ecrt", "local-opt"]),
    "fig7": dict(n=[50, 100, 200, 400], alpha=1.0, r_values=[3.0], query="unagg",
                 algorithms=["ecrt", "local-opt", "ecrt+lo"]),
    "fig8": dict(n=100, alpha=[1.0, 4.0], r_values=[3.0], query="partial",
                 ell_values=[1, 2, 5, 10, 20, 50, 100],
                 algorithms=["min-hop", "ecrt", "local-opt"]),
}

# chart layout per preset: x column, y quantity, series columns, split column
PRESET_CHARTS = {
    "fig4": dict(x="r", y="lifetime", series=("algorithm", "alpha")),
    "fig5": dict(x="r", y="lifetime", series=("algorithm",), show_lp=True),
    "fig6": dict(x="r", y="lifetime", series=("algorithm", "alpha")),
    "fig7": dict(x="n", y="ratio", series=("algorithm",)),
    "fig8": dict(x="ell", y="lifetime", series=("algorithm",), split="alpha", log_x=True),
}


def preset(name: str, **overrides) -> SweepConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig(**kw)


@dataclass(frozen=True)
class ResultRow:
    seed: int
    n: int
    r: float
    alpha: float
    c_r: float
    query: str
    ell: int | None
    algorithm: str
    lifetime: float
    t_lp: float | None
    runtime_ms: float
    resamples: int


COLUMNS = tuple(f.name for f in fields(ResultRow))


def trial_seed(master: int, n: int, trial: int, attempt: int) -> int:
    ss = np.random.SeedSequence([master, n, trial, attempt])
    return int(ss.generate_state(1, np.uint32)[0])


def draw_network(cfg: SweepConfig, n: int, alpha: float, r: float,
                 trial: int) -> tuple[NetworkGraph, int, int]:
    """Connected network for one trial, with its seed and the number of rejected draws."""
    for attempt in range(MAX_RESAMPLES):
        seed = trial_seed(cfg.master_seed, n, trial, attempt)
        g = random_network(n, cfg.area_side, r, alpha, cfg.mean_energy, seed, cfg.root_position)
        if is_connected(g):
            return g, seed, attempt
    raise RuntimeError(f"no connected network after {MAX_RESAMPLES} draws "
                       f"(n={n}, r={r}); the range is below the connectivity threshold")


def solve(g: NetworkGraph, algorithm: str, model: QueryModel):
    """Run one named algorithm; returns the tree."""
    if algorithm == "min-hop":
        return min_hop_tree(g)
    if algorithm == "aggregated-tree":
        if not isinstance(model, FullyAggregated):
            raise ConfigError("aggregated-tree only handles the full query")
        return aggregated_tree(g, model.c_r).tree
    if algorithm == "ecrt":
        return ecrt(g, model)
    if algorithm == "local-opt":
        return local_opt(g, min_hop_tree(g), model)
    if algorithm == "ecrt+lo":
        return local_opt(g, ecrt(g, model), model)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _run_task(task) -> list[ResultRow]:
    cfg, (n, alpha, r, ell), trial = task
    g, seed, resamples = draw_network(cfg, n, alpha, r, trial)
    model = cfg.model(ell)
    t_lp = lp_upper_bound(g) if cfg.wants_lp else None
    rows = []
    for alg in cfg.algorithms:
        t0 = time.perf_counter()
        tree = solve(g, alg, model)
        ms = (time.perf_counter() - t0) * 1000.0
        rows.append(ResultRow(seed, n, r, alpha, cfg.c_r, cfg.query, ell, alg,
                              tree_lifetime(tree, g, model), t_lp, ms, resamples))
    return rows


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[ResultRow]:
    """All rows of a sweep, ordered by parameter point, trial and algorithm."""
    cfg.validate()
    tasks = [(cfg, pt, k) for pt in cfg.points() for k in range(cfg.trials)]
    w = min(worker_count(workers), len(tasks))
    if w > 1:
        with ProcessPoolExecutor(max_workers=w) as pool:
            chunks = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * w))))
    else:
        chunks = [_run_task(t) for t in tasks]
    # pool.map already preserves task order; rows never depend on the schedule
    return [row for chunk in chunks for row in chunk]


# -- CSV ----------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v)


def rows_to_csv(rows: Iterable[ResultRow], exclude: Sequence[str] = ()) -> str:
    cols = [c for c in COLUMNS if c not in exclude]
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in cols])
    return buf.getvalue()


def write_csv(rows: Iterable[ResultRow], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def read_csv(path: str | Path) -> list[ResultRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_VERSION:
        raise ValueError(f"{path}: missing '{CSV_VERSION}' header")
    reader = csv.DictReader(lines[1:])
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"{path}: expected columns {COLUMNS}")
    out = []
    for d in reader:
        out.append(ResultRow(
            seed=int(d["seed"]), n=int(d["n"]), r=float(d["r"]), alpha=float(d["alpha"]),
            c_r=float(d["c_r"]), query=d["query"],
            ell=int(d["ell"]) if d["ell"] else None, algorithm=d["algorithm"],
            lifetime=float(d["lifetime"]), t_lp=float(d["t_lp"]) if d["t_lp"] else None,
            runtime_ms=float(d["runtime_ms"]), resamples=int(d["resamples"])))
    return out


# -- summaries ------------------------------------------------------------------

class Stat(NamedTuple):
    mean: float
    se: float
    count: int


def mean_se(values: Sequence[float]) -> Stat:
    if not values:
        raise ValueError("no values")
    m = statistics.fmean(values)
    se = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return Stat(m, se, len(values))


def group_stats(rows: Iterable[ResultRow], keys: Sequence[str], value: str = "lifetime") -> dict:
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        k = tuple(getattr(row, c) for c in keys)
        groups.setdefault(k, []).append(_value(row, value))
    return {k: mean_se(v) for k, v in sorted(groups.items(), key=lambda kv: _sort_key(kv[0]))}


def _sort_key(k):
    return tuple((0, x) if isinstance(x, (int, float)) else (1, str(x)) for x in k)


def _value(row: ResultRow, what: str) -> float:
    if what == "ratio":
        if row.t_lp is None:
            raise ValueError(f"row for {row.algorithm} (seed {row.seed}) has no t_lp")
        return row.lifetime / row.t_lp
    return float(getattr(row, what))


def performance_ratio(rows: Iterable[ResultRow],
                      by: Sequence[str] = ("n", "algorithm")) -> dict[tuple, Stat]:
    """Mean and standard error of lifetime / t_lp per group."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows")
    return group_stats(rows, by, "ratio")


# -- charts ---------------------------------------------------------------------

@dataclass(frozen=True)
class ChartSpec:
    x: str = "r"
    y: str = "lifetime"
    series: tuple[str, ...] = ("algorithm",)
    out: str = "chart.svg"
    split: str | None = None
    show_lp: bool = False
    log_x: bool = False
    title: str | None = None
    extra: dict = field(default_factory=dict)


def _label(keys: Sequence[str], values: tuple) -> str:
    parts = []
    for k, v in zip(keys, values):
        parts.append(str(v) if k == "algorithm" else f"{k}={_fmt(v)}")
    return ", ".join(parts)


def emit_chart(rows: Iterable[ResultRow], spec: ChartSpec) -> list[Path]:
    """Line chart of mean ``y`` against ``x`` with standard-error bars.

    One SVG per value of ``spec.split`` (suffixed file names), or a
    single file. Output bytes depend only on the rows.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(rows)
    if not rows:
        raise ValueError("no rows to chart")
    for col in (spec.x, *spec.series, *([spec.split] if spec.split else [])):
        if col not in COLUMNS:
            raise ValueError(f"unknown column {col!r}")
    if spec.y != "ratio" and spec.y not in COLUMNS:
        raise ValueError(f"unknown column {spec.y!r}")

    if spec.split:
        parts = {}
        for row in rows:
            parts.setdefault(getattr(row, spec.split), []).append(row)
        groups = sorted(parts.items(), key=lambda kv: _sort_key((kv[0],)))
    else:
        groups = [(None, rows)]

    out = Path(spec.out)
    paths = []
    with matplotlib.rc_context({"svg.hashsalt": "lifetree", "svg.fonttype": "none",
                                "font.family": "DejaVu Sans"}):
        for split_val, part in groups:
            fig, ax = plt.subplots(figsize=(6.0, 4.2))
            stats = group_stats(part, (*spec.series, spec.x), spec.y)
            series: dict[tuple, list] = {}
            for key, st in stats.items():
                series.setdefault(key[:-1], []).append((key[-1], st))
            for skey in sorted(series, key=_sort_key):
                pts = sorted(series[skey], key=lambda p: p[0])
                ax.errorbar([p[0] for p in pts], [p[1].mean for p in pts],
                            yerr=[p[1].se for p in pts], marker="o", markersize=3,
                            capsize=3, label=_label(spec.series, skey))
            if spec.show_lp:
                lp_rows = [r for r in part if r.t_lp is not None]
                if lp_rows:
                    lp = group_stats(lp_rows, (spec.x,), "t_lp")
                    xs = sorted(lp, key=_sort_key)
                    ax.errorbar([k[0] for k in xs], [lp[k].mean for k in xs],
                                yerr=[lp[k].se for k in xs], linestyle="--", color="black",
                                capsize=3, label="LP bound")
            if spec.log_x:
                ax.set_xscale("log")
            ax.set_xlabel(spec.x)
            ax.set_ylabel("lifetime / T_LP" if spec.y == "ratio" else spec.y)
            title = spec.title or ""
            if split_val is not None:
                title = f"{title} {spec.split}={_fmt(split_val)}".strip()
            if title:
                ax.set_title(title)
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize=8)
            fig.tight_layout()
            path = out if split_val is None else out.with_name(
                f"{out.stem}_{spec.split}{_fmt(split_val)}{out.suffix}")
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(path)
    return paths


def preset_chart(name: str, out: str | Path) -> ChartSpec:
    if name not in PRESET_CHARTS:
        raise ConfigError(f"unknown preset {name!r}")
    return ChartSpec(out=str(out), title=name, **PRESET_CHARTS[name])
