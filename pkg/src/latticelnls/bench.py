"""Benchmark harness: ground-energy estimation, relative error,
median/confidence aggregation of burn-down traces, annealing budget
sweeps, and CSV/SVG report emission."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .ising import IsingModel
from .samplers import SaRun, brute_force, run_sa


class BenchError(ValueError):
    pass


def relative_error(e0: float, e: float) -> float:
    """r = (E0 - H) / E0; zero at the estimated ground energy, one at
    the zero-energy level of uniform random states."""
    if e0 >= 0:
        raise BenchError(
            f"relative error requires a negative ground estimate, got {e0}")
    return float((e0 - e) / e0)


@dataclass(frozen=True)
class GroundEstimate:
    e0: float
    provenance: str              # planted-exact | brute-force | long-SA
    budget: tuple = ()           # (n, sweeps) pairs used for long SA

    def check_dominates(self, observed: float, label: str = "method"):
        """Every studied method must stay at or above E0; a violation
        means the estimate is stale and the study must be redone."""
        if observed < self.e0 - 1e-9:
            raise BenchError(
                f"{label} reached energy {observed} below the ground "
                f"estimate {self.e0}; refresh the estimate and re-run "
                "the study")


DEFAULT_E0_BUDGET = ((4, 1 << 18),)


def estimate_e0(model: IsingModel, budget=DEFAULT_E0_BUDGET,
                seed: int = 0) -> GroundEstimate:
    """Best-known ground energy for one instance.

    Planted instances carry their exact optimum; tiny instances are
    solved exhaustively; everything else gets long annealing runs at the
    configured (n, sweeps) budgets.  Use identical budgets for every
    instance of a study to avoid estimator bias between instances.
    """
    planted = model.meta.get("planted_energy")
    if planted is not None:
        return GroundEstimate(float(planted), "planted-exact")
    if model.n <= 20:
        _, e = brute_force(model)
        return GroundEstimate(e, "brute-force")
    best = math.inf
    for n, sweeps in budget:
        _, e, _ = run_sa(model, SaRun(n, sweeps, seed=seed))
        best = min(best, e)
    return GroundEstimate(best, "long-SA", tuple(tuple(b) for b in budget))


@dataclass(frozen=True)
class AggregateCurve:
    label: str
    times: np.ndarray            # median time coordinate per point (ms)
    median: np.ndarray           # median relative error per point
    ci_low: np.ndarray
    ci_high: np.ndarray

    def __post_init__(self):
        if not (np.all(self.ci_low <= self.median + 1e-12)
                and np.all(self.median <= self.ci_high + 1e-12)):
            raise BenchError("confidence band must contain the median")


def median_ci_ranks(n: int, level: float = 0.68) -> tuple:
    """0-based sorted-sample ranks (lo, hi) of a distribution-free
    confidence interval for the median, from binomial(n, 1/2) order
    statistics."""
    alpha = (1.0 - level) / 2.0
    lo = int(binom.ppf(alpha, n, 0.5))
    hi = int(binom.isf(alpha, n, 0.5))
    return max(lo, 0), min(hi, n - 1)


def _median_with_ci(values: np.ndarray) -> tuple:
    s = np.sort(values)
    lo, hi = median_ci_ranks(len(s))
    return float(np.median(s)), float(s[lo]), float(s[hi])


def aggregate_median(traces, e0s, label: str = "",
                     time_axis: str = "sim_ms") -> AggregateCurve:
    """Median relative error and 68% band per iteration across paired
    (trace, ground-estimate) runs."""
    if not traces:
        raise BenchError("no traces to aggregate")
    if len(traces) != len(e0s):
        raise BenchError("one ground estimate required per trace")
    counts = {t.iterations for t in traces}
    if len(counts) != 1:
        raise BenchError(f"traces disagree on iteration count: {counts}")
    (iters,) = counts
    times = np.empty(iters)
    med = np.empty(iters)
    lo = np.empty(iters)
    hi = np.empty(iters)
    for it in range(iters):
        errs = np.array([relative_error(_e0_value(e0), t.energies[it])
                         for t, e0 in zip(traces, e0s)])
        med[it], lo[it], hi[it] = _median_with_ci(errs)
        times[it] = np.median([getattr(t, time_axis)[it] for t in traces])
    return AggregateCurve(label, times, med, lo, hi)


def _e0_value(e0) -> float:
    return e0.e0 if isinstance(e0, GroundEstimate) else float(e0)


def sa_hull_sweep(models, e0s, budgets, ratios, seed: int = 0) -> list:
    """Grid of annealing parameterizations n = 2^x, sweeps = budget / n.

    Returns one row per (budget, x): dict with n, sweeps, median
    relative error over the instances, and median measured wall time in
    ms.  The hull of these rows is the best-achievable error-vs-time
    front for plain annealing.
    """
    rows = []
    for budget in budgets:
        for x in ratios:
            n = 1 << x
            if n > budget:
                continue
            sweeps = budget // n
            errs, walls = [], []
            for idx, (model, e0) in enumerate(zip(models, e0s)):
                t0 = time.perf_counter()
                _, e, _ = run_sa(model, SaRun(n, sweeps,
                                              seed=seed * 1000 + idx))
                walls.append((time.perf_counter() - t0) * 1e3)
                errs.append(relative_error(_e0_value(e0), e))
            rows.append({
                "n": n, "sweeps": sweeps, "budget": budget,
                "median_r": float(np.median(errs)),
                "median_wall_ms": float(np.median(walls)),
            })
    return rows


# --- baseline burn-down traces ---

def sgd_burn_down(model: IsingModel, restarts: int, seed: int,
                  ns_per_update: float = 33.0):
    """Best-so-far greedy-descent trajectory over independent restarts.

    Modeled time charges each descent step one full-lattice scan of
    spin updates; measured wall time is recorded alongside.
    """
    from .lnls import BurnDownRecord
    from .ising import random_state
    from .samplers import greedy_descent_from
    rng0 = np.random.default_rng(np.random.SeedSequence([seed, 40]))
    x0 = random_state(model.n, rng0)
    best = energy_of(model, x0)
    energies, sims, walls = [], [], []
    sim = 0.0
    t_start = time.perf_counter()
    for idx in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx, 41]))
        x, flips = greedy_descent_from(model, random_state(model.n, rng))
        e = energy_of(model, x)
        best = min(best, e)
        sim += max(flips, 1) * model.n * ns_per_update * 1e-6
        energies.append(best)
        sims.append(sim)
        walls.append((time.perf_counter() - t_start) * 1e3)
    return BurnDownRecord(best if not energies else energies[0],
                          np.array(energies),
                          np.ones(restarts, dtype=bool),
                          np.array(sims), np.zeros(restarts),
                          np.array(walls))


def sa_burn_down(model: IsingModel, points: int, base_sweeps: int,
                 seed: int, ns_per_update: float = 33.0):
    """Best-so-far annealing trajectory over doubling sweep budgets
    (single-sample runs at sweeps = base * 2^k)."""
    from .lnls import BurnDownRecord
    best = math.inf
    energies, sims, walls = [], [], []
    sim = 0.0
    t_start = time.perf_counter()
    for k in range(points):
        sweeps = base_sweeps << k
        _, e, updates = run_sa(model, SaRun(1, sweeps, seed=seed * 997 + k))
        best = min(best, e)
        sim += updates * ns_per_update * 1e-6
        energies.append(best)
        sims.append(sim)
        walls.append((time.perf_counter() - t_start) * 1e3)
    return BurnDownRecord(energies[0], np.array(energies),
                          np.ones(points, dtype=bool), np.array(sims),
                          np.zeros(points), np.array(walls))


def energy_of(model: IsingModel, state) -> float:
    from .ising import energy
    return energy(model, state)


# --- E0 sidecar files ---

def write_e0(estimate: GroundEstimate, path):
    with open(path, "w") as f:
        f.write("# latticelnls e0 v1\n")
        f.write(f"e0 {repr(float(estimate.e0))}\n")
        f.write(f"provenance {estimate.provenance}\n")
        budget = ";".join(f"{n}x{s}" for n, s in estimate.budget)
        f.write(f"budget {budget}\n")


def read_e0(path) -> GroundEstimate:
    with open(path) as f:
        header = f.readline()
        if not header.startswith("# latticelnls e0"):
            raise BenchError(f"not a ground-estimate file: {path}")
        e0 = float(f.readline().split()[1])
        provenance = f.readline().split()[1]
        parts = f.readline().split()
        budget = ()
        if len(parts) > 1:
            budget = tuple(tuple(int(v) for v in b.split("x"))
                           for b in parts[1].split(";"))
    return GroundEstimate(e0, provenance, budget)


# --- report emission ---

def write_curves_csv(curves, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["series", "time_ms", "median_r", "ci_low", "ci_high"])
        for c in curves:
            for t, m, lo, hi in zip(c.times, c.median, c.ci_low, c.ci_high):
                w.writerow([c.label, repr(float(t)), repr(float(m)),
                            repr(float(lo)), repr(float(hi))])


def read_curves_csv(path) -> list:
    series = {}
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header[:2] != ["series", "time_ms"]:
            raise BenchError(f"not a curves file: {path}")
        for label, t, m, lo, hi in r:
            series.setdefault(label, []).append(
                (float(t), float(m), float(lo), float(hi)))
    out = []
    for label, rows in series.items():
        arr = np.array(rows)
        out.append(AggregateCurve(label, arr[:, 0], arr[:, 1],
                                  arr[:, 2], arr[:, 3]))
    return out


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f")


def _log_scale(values, lo, hi, out_lo, out_hi):
    span = math.log10(hi) - math.log10(lo)
    if span <= 0:
        span = 1.0
    return [out_lo + (math.log10(v) - math.log10(lo)) / span
            * (out_hi - out_lo) for v in values]


def write_curves_svg(curves, path, width=640, height=440):
    """Log-log burn-down plot with one polyline per series (points
    joined by straight segments on the logarithmic scale)."""
    floor = 1e-12
    xs = [max(float(t), floor) for c in curves for t in c.times]
    ys = [max(float(v), floor) for c in curves
          for v in np.concatenate([c.median, c.ci_low, c.ci_high])]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (1.0, 10.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (1e-3, 1.0)
    if x_lo == x_hi:
        x_hi = x_lo * 10
    if y_lo == y_hi:
        y_hi = y_lo * 10
    margin, legend_h = 60, 18 * max(len(curves), 1)
    plot_w, plot_h = width - 2 * margin, height - 2 * margin - legend_h
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}">',
        f'<rect x="{margin}" y="{margin}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333"/>',
        f'<text x="{width // 2}" y="{height - legend_h - 8}" '
        'text-anchor="middle" font-size="12">time (ms, log)</text>',
        f'<text x="14" y="{margin + plot_h // 2}" font-size="12" '
        f'transform="rotate(-90 14 {margin + plot_h // 2})" '
        'text-anchor="middle">median relative error (log)</text>',
    ]
    for i, c in enumerate(curves):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        px = _log_scale([max(float(t), floor) for t in c.times],
                        x_lo, x_hi, margin, margin + plot_w)
        py = _log_scale([max(float(v), floor) for v in c.median],
                        y_lo, y_hi, margin + plot_h, margin)
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
        lines.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = height - legend_h + 14 * i + 4
        lines.append(f'<line x1="{margin}" y1="{ly}" x2="{margin + 24}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        lines.append(f'<text x="{margin + 30}" y="{ly + 4}" '
                     f'font-size="11">{c.label}</text>')
    lines.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def emit_report(curves, fmt: str, path):
    if fmt == "csv":
        write_curves_csv(curves, path)
    elif fmt == "svg":
        write_curves_svg(curves, path)
    else:
        raise BenchError(f"unknown report format {fmt!r}")
