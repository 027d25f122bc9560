"""Whole-problem classical solvers: simulated annealing with a geometric
schedule plus terminal quench, steepest greedy descent, and a brute-force
oracle for small models.

Inner loops are numba-compiled; a single run is single-threaded.
Determinism: (model, parameters, seed) fully determine all outputs.
Per-sample randomness is derived from (seed, sample index) so results do
not depend on how samples are distributed over workers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .ising import IsingModel, energy, random_state


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class SaSchedule:
    """Geometric temperature schedule; sweep s of S runs at
    T_max (T_min/T_max)^(s/S) for s = 1..S-1, then one quench sweep."""
    t_max: float
    t_min: float

    def __post_init__(self):
        if not (self.t_max > self.t_min > 0):
            raise SamplerError(
                f"require T_max > T_min > 0, got {self.t_max}, {self.t_min}")

    def temperatures(self, sweeps: int) -> np.ndarray:
        if sweeps < 1:
            raise SamplerError("sweep count must be >= 1")
        s = np.arange(1, sweeps, dtype=np.float64)
        temps = self.t_max * (self.t_min / self.t_max) ** (s / sweeps)
        return np.concatenate([temps, [0.0]])


@dataclass(frozen=True)
class SaRun:
    n: int               # independent samples (restarts)
    sweeps: int          # sweeps per sample, including the quench sweep
    schedule: SaSchedule | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.sweeps < 1:
            raise SamplerError("n and sweeps must be >= 1")


def default_schedule(model: IsingModel) -> SaSchedule:
    """Conservative bounds: T_max = k/ln 2 (fast mixing at connectivity
    k), T_min = 2/ln(100 N) (rare excitations in the final sweeps)."""
    k = model.topology.connectivity
    n = model.n
    return SaSchedule(k / math.log(2.0), 2.0 / math.log(100.0 * n))


@njit(cache=True)
def _sweep_kernel(indptr, indices, weights, h, x, temps, seed):
    np.random.seed(seed)
    n = h.shape[0]
    f = h.copy()
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += weights[p] * x[indices[p]]
        f[i] += acc
    for t in range(temps.shape[0]):
        temp = temps[t]
        if temp > 0.0:
            beta = 1.0 / temp
            for i in range(n):
                d_e = -2.0 * x[i] * f[i]
                if d_e > 0.0 and np.random.random() >= np.exp(-d_e * beta):
                    continue
                old = x[i]
                x[i] = -old
                for p in range(indptr[i], indptr[i + 1]):
                    f[indices[p]] -= 2.0 * weights[p] * old
        else:
            for i in range(n):
                if -2.0 * x[i] * f[i] < 0.0:
                    old = x[i]
                    x[i] = -old
                    for p in range(indptr[i], indptr[i + 1]):
                        f[indices[p]] -= 2.0 * weights[p] * old
    return x


@njit(cache=True)
def _trace_kernel(indptr, indices, weights, h, x, temps, seed, out):
    np.random.seed(seed)
    n = h.shape[0]
    f = h.copy()
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += weights[p] * x[indices[p]]
        f[i] += acc
    for t in range(temps.shape[0]):
        beta = 1.0 / temps[t]
        for i in range(n):
            d_e = -2.0 * x[i] * f[i]
            if d_e > 0.0 and np.random.random() >= np.exp(-d_e * beta):
                continue
            old = x[i]
            x[i] = -old
            for p in range(indptr[i], indptr[i + 1]):
                f[indices[p]] -= 2.0 * weights[p] * old
        for i in range(n):
            out[t, i] = x[i]


@njit(cache=True)
def _sgd_kernel(indptr, indices, weights, h, x):
    n = h.shape[0]
    f = h.copy()
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += weights[p] * x[indices[p]]
        f[i] += acc
    flips = 0
    while True:
        best = -1
        best_d = 0.0
        for i in range(n):
            d_e = -2.0 * x[i] * f[i]
            if d_e < best_d:
                best_d = d_e
                best = i
        if best < 0:
            break
        old = x[best]
        x[best] = -old
        for p in range(indptr[best], indptr[best + 1]):
            f[indices[p]] -= 2.0 * weights[p] * old
        flips += 1
    return flips


@njit(cache=True)
def _brute_kernel(indptr, indices, weights, h):
    n = h.shape[0]
    x = np.full(n, -1, dtype=np.int8)
    f = h.copy()
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += weights[p] * x[indices[p]]
        f[i] += acc
    e = 0.0
    for i in range(n):
        e += 0.5 * x[i] * (f[i] - h[i]) + h[i] * x[i]
    best_e = e
    best_x = x.copy()
    total = np.int64(1) << n
    for t in range(1, total):
        tt = t
        i = 0
        while tt & 1 == 0:
            tt >>= 1
            i += 1
        e += -2.0 * x[i] * f[i]
        old = x[i]
        x[i] = -old
        for p in range(indptr[i], indptr[i + 1]):
            f[indices[p]] -= 2.0 * weights[p] * old
        if e < best_e - 1e-12:
            best_e = e
            best_x = x.copy()
        elif e <= best_e + 1e-12:
            for q in range(n):
                if x[q] != best_x[q]:
                    if x[q] < best_x[q]:
                        best_x = x.copy()
                    break
    return best_x, best_e


def _sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def anneal_from(model: IsingModel, state: np.ndarray, temps: np.ndarray,
                seed: int) -> np.ndarray:
    """Run Metropolis sweeps at the given temperature sequence starting
    from `state` (fixed ascending visit order)."""
    indptr, indices, weights = model.weighted_csr()
    x = np.array(state, dtype=np.int8)
    _sweep_kernel(indptr, indices, weights, model.h,
                  x, np.asarray(temps, dtype=np.float64), seed & 0xFFFFFFFF)
    return x


def run_sa(model: IsingModel, run: SaRun):
    """Best state over n independent annealing samples.

    Returns (best_state, best_energy, spin_updates) with
    spin_updates = n * sweeps * N.  Ties between samples break to the
    lowest sample index.
    """
    schedule = run.schedule or default_schedule(model)
    temps = schedule.temperatures(run.sweeps)
    best_x, best_e = None, np.inf
    for idx in range(run.n):
        rng = np.random.default_rng(np.random.SeedSequence([run.seed, idx, 1]))
        x0 = random_state(model.n, rng)
        x = anneal_from(model, x0, temps, _sample_seed(run.seed, idx))
        e = energy(model, x)
        if e < best_e:
            best_x, best_e = x, e
    return best_x, best_e, run.n * run.sweeps * model.n


def metropolis_trace(model: IsingModel, temperature: float, sweeps: int,
                     seed: int) -> np.ndarray:
    """Fixed-temperature chain; returns the state after each sweep
    (sweeps, N).  Used for distribution-level checks on small models."""
    indptr, indices, weights = model.weighted_csr()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0, 1]))
    x = random_state(model.n, rng)
    out = np.empty((sweeps, model.n), dtype=np.int8)
    temps = np.full(sweeps, float(temperature))
    _trace_kernel(indptr, indices, weights, model.h, x, temps,
                  _sample_seed(seed, 0), out)
    return out


def greedy_descent_from(model: IsingModel, state: np.ndarray):
    """Steepest single-bit-flip descent to a strict local minimum.
    Ties break to the lowest vertex id.  Returns (state, flips)."""
    indptr, indices, weights = model.weighted_csr()
    x = np.array(state, dtype=np.int8)
    flips = _sgd_kernel(indptr, indices, weights, model.h, x)
    return x, int(flips)


def run_sgd(model: IsingModel, n_restarts: int, seed: int):
    """Best-of-restarts steepest greedy descent from uniform random
    starts.  Returns (best_state, best_energy, total_flips)."""
    if n_restarts < 1:
        raise SamplerError("n_restarts must be >= 1")
    best_x, best_e, total = None, np.inf, 0
    for idx in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx, 2]))
        x, flips = greedy_descent_from(model, random_state(model.n, rng))
        total += flips
        e = energy(model, x)
        if e < best_e:
            best_x, best_e = x, e
    return best_x, best_e, total


BRUTE_FORCE_LIMIT = 24


def brute_force(model: IsingModel):
    """Exhaustive minimum over 2^N states; ties resolve to the
    lexicographically smallest state (with -1 < +1)."""
    if model.n > BRUTE_FORCE_LIMIT:
        raise SamplerError(
            f"brute force limited to N <= {BRUTE_FORCE_LIMIT}, got {model.n}")
    indptr, indices, weights = model.weighted_csr()
    x, e = _brute_kernel(indptr, indices, weights, model.h)
    return x, float(e)


def measure_update_rate(model: IsingModel, sweeps: int = 1 << 14,
                        seed: int = 0) -> float:
    """Nanoseconds per spin update of a single SA sample at the default
    schedule.  A short warmup run amortizes JIT compilation."""
    if sweeps < (1 << 14):
        raise SamplerError("sweeps must be >= 2^14 to amortize startup")
    run_sa(model, SaRun(1, 64, seed=seed))  # warmup/compile
    t0 = time.perf_counter()
    run_sa(model, SaRun(1, sweeps, seed=seed))
    elapsed = time.perf_counter() - t0
    return elapsed * 1e9 / (sweeps * model.n)
