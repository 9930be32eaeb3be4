"""Decoherence sweeps: CSV rows, per-figure curve files and gnuplot scripts."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .wmrwm import Scenario, ScenarioPoint, Variant, scenario_points

WORKERS_ENV = "TELEPROTECT_WORKERS"
FIGURE_STEPS = 201
FIGURE_P = 0.1

CSV_HEADER = (
    "scenario", "variant", "d", "p", "q_star", "concurrence", "fef", "tf",
    "entropy_a", "entropy_b", "entropy_ab", "mutual_info", "cc", "cc_theta",
    "cc_phi", "success_prob",
)


@dataclass(frozen=True)
class SweepConfig:
    scenario: Scenario
    d_start: float = 0.0
    d_end: float = 1.0
    d_steps: int = FIGURE_STEPS
    p: float = 0.0
    variants: tuple[Variant, ...] = (Variant.NONE,)
    seed: int = 0  # sweeps are deterministic; kept so configs round-trip
    output_path: str = "-"

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "variants", tuple(Variant(v) for v in self.variants))
        if not 0.0 <= self.d_start < self.d_end <= 1.0:
            raise ValueError("need 0 <= d_start < d_end <= 1")
        if not 2 <= self.d_steps <= 10001:
            raise ValueError("d_steps must lie in [2, 10001]")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")

    def grid(self) -> np.ndarray:
        return np.linspace(self.d_start, self.d_end, self.d_steps)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _chunk(args):
    scenario, ds, p, variant = args
    return scenario_points(scenario, ds, p, variant)


def compute_points(
    scenario: Scenario, ds: Sequence[float], p: float, variant: Variant, workers: int | None = None
) -> list[ScenarioPoint]:
    """Scenario points in grid order; identical output for any worker count."""
    workers = worker_count() if workers is None else workers
    ds = [float(d) for d in ds]
    if workers <= 1 or len(ds) < 2:
        return scenario_points(scenario, ds, p, variant)
    chunks = [list(c) for c in np.array_split(np.array(ds), min(workers, len(ds)))]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_chunk, [(scenario, c, p, variant) for c in chunks])
        return [pt for part in parts for pt in part]


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if x == 0.0:
        x = 0.0  # no "-0"
    return f"{x:.12g}"


def point_row(pt: ScenarioPoint) -> list[str]:
    r = pt.report
    return [
        pt.scenario.value, pt.variant.value, fmt(pt.d), fmt(pt.p), fmt(pt.q_star),
        fmt(r.concurrence), fmt(r.fef), fmt(r.tf), fmt(r.entropy_a), fmt(r.entropy_b),
        fmt(r.entropy_ab), fmt(r.mutual_info), fmt(r.cc), fmt(r.cc_argmax.theta),
        fmt(r.cc_argmax.phi), fmt(pt.success_prob),
    ]


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[ScenarioPoint]:
    """All points of a sweep, ordered by d and then by the order of ``cfg.variants``."""
    grid = cfg.grid()
    per_variant = [compute_points(cfg.scenario, grid, cfg.p, v, workers) for v in cfg.variants]
    return [pts[i] for i in range(len(grid)) for pts in per_variant]


def sweep_csv(points: Iterable[ScenarioPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for pt in points:
        w.writerow(point_row(pt))
    return buf.getvalue()


# -- figures -------------------------------------------------------------------

PANELS = {
    "a": ("concurrence", "Concurrence"),
    "b": ("tf", "Teleportation fidelity"),
    "c": ("cc", "Classical correlation"),
    "d": ("success_prob", "Success probability"),
}


@dataclass(frozen=True)
class Curve:
    name: str
    scenario: Scenario
    variant: Variant
    p: float = 0.0
    style: str = "lines"


@dataclass(frozen=True)
class FigureSpec:
    number: int
    panels: tuple[str, ...]
    curves: tuple[Curve, ...] = field(default_factory=tuple)


FIGURES = {
    1: FigureSpec(1, ("a", "b", "c"), (
        Curve("single", Scenario.I_BARE, Variant.NONE, style="lines dt 2"),
        Curve("both", Scenario.II_BARE, Variant.NONE),
    )),
    2: FigureSpec(2, ("a", "b", "c", "d"), (
        Curve("bare", Scenario.I_BARE, Variant.NONE),
        Curve("tfmax", Scenario.I_WMRWM, Variant.TF_MAX, FIGURE_P, "lines dt 2"),
        Curve("cmax", Scenario.I_WMRWM, Variant.C_MAX, FIGURE_P, "lines dt 3"),
    )),
    3: FigureSpec(3, ("a", "b", "c", "d"), (
        Curve("bare", Scenario.II_BARE, Variant.NONE),
        Curve("tfmax", Scenario.II_WMRWM, Variant.TF_MAX, FIGURE_P, "lines dt 2"),
        Curve("cmax", Scenario.II_WMRWM, Variant.C_MAX, FIGURE_P, "lines dt 3"),
    )),
}


def _panel_value(pt: ScenarioPoint, key: str) -> float:
    return pt.success_prob if key == "success_prob" else getattr(pt.report, key)


def curve_csv(points: Sequence[ScenarioPoint], panel: str) -> str:
    key = PANELS[panel][0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "p", "q_star", key])
    for pt in points:
        w.writerow([fmt(pt.d), fmt(pt.p), fmt(pt.q_star), fmt(_panel_value(pt, key))])
    return buf.getvalue()


def plot_script(spec: FigureSpec) -> str:
    lines = [
        "# gnuplot script; run with: gnuplot " + f"fig{spec.number}.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 1600,400",
        f"set output 'fig{spec.number}.png'",
        f"set multiplot layout 1,{len(spec.panels)}",
        "set xlabel 'D'",
        "set key bottom left",
    ]
    for panel in spec.panels:
        key, title = PANELS[panel]
        lines.append(f"set title '({panel}) {title}'")
        plots = [
            f"'fig{spec.number}_{panel}_{c.name}.csv' using 1:4 with {c.style} title '{c.name}'"
            for c in spec.curves
        ]
        if key == "tf":
            plots.append("2.0/3.0 with lines lc 'black' title 'classical bound 2/3'")
        lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def write_figure(number: int, out_dir: str | Path, steps: int = FIGURE_STEPS,
                 workers: int | None = None) -> list[Path]:
    """Write one CSV per (panel, curve) plus ``fig<k>.gp``; returns the paths."""
    spec = FIGURES[number]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0.0, 1.0, steps)
    written = []
    for curve in spec.curves:
        pts = compute_points(curve.scenario, grid, curve.p, curve.variant, workers)
        for panel in spec.panels:
            path = out / f"fig{number}_{panel}_{curve.name}.csv"
            path.write_text(curve_csv(pts, panel))
            written.append(path)
    gp = out / f"fig{number}.gp"
    gp.write_text(plot_script(spec))
    written.append(gp)
    return written
