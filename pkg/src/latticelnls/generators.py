"""Problem instance generators.

Three ensembles: random +/-1 couplers, the uniform ferromagnet, and
tile-planted cubic instances whose ground state and ground energy are
known by construction.  All generators return immutable models with
provenance recorded in `meta`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .ising import IsingModel, gauge_transform, random_state
from .lattice import LatticeTopology


class GeneratorError(ValueError):
    pass


def gen_pm_j(topology: LatticeTopology, seed: int) -> IsingModel:
    """Couplers drawn uniformly from {-1, +1}; no fields."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 10]))
    j = rng.integers(0, 2, topology.n_edges).astype(np.float64) * 2 - 1
    return IsingModel(topology, np.zeros(topology.n_vertices), j,
                      {"ensemble": "pmj", "seed": seed})


def gen_ferromagnet(topology: LatticeTopology) -> IsingModel:
    """All couplers -1; ground states are the two uniform states with
    energy -E (one per edge)."""
    return IsingModel(topology, np.zeros(topology.n_vertices),
                      np.full(topology.n_edges, -1.0),
                      {"ensemble": "ferro"})


# --- tile planting on periodic cubic lattices ---
#
# Cubes anchored at corners with all-equal coordinate parity partition
# the edge set exactly (L even): L^3/4 cubes, each vertex shared by two,
# each edge owned by one.  A cube coupler assignment is admissible when
# the uniform all-up state attains its minimum; planting an admissible
# tile on every cube makes all-up a global ground state with energy
# equal to the sum of tile minima.

_CUBE_VERTS = tuple(itertools.product((0, 1), repeat=3))


def _cube_edges():
    vid = {v: i for i, v in enumerate(_CUBE_VERTS)}
    out = []
    for v in _CUBE_VERTS:
        for ax in range(3):
            if v[ax] == 0:
                w = list(v)
                w[ax] = 1
                out.append((vid[v], vid[tuple(w)]))
    return sorted(out)

_CUBE_EDGES = tuple(_cube_edges())


@dataclass(frozen=True)
class TileSet:
    """Admissible cube coupler assignments: configs is (n, 12) in
    {-1,+1} ordered lexicographically, energies the planted minima."""
    configs: np.ndarray
    energies: np.ndarray

    @property
    def n(self) -> int:
        return len(self.configs)


def enumerate_tile_classes() -> TileSet:
    """Exhaust all 2^12 cube assignments, keeping those whose minimum
    over the 2^8 cube states is attained by the all-up state."""
    e = np.array(_CUBE_EDGES)
    states = np.array(list(itertools.product((-1, 1), repeat=8)),
                      dtype=np.float64)
    prod = states[:, e[:, 0]] * states[:, e[:, 1]]
    configs, energies = [], []
    for bits in itertools.product((-1, 1), repeat=12):
        j = np.array(bits, dtype=np.float64)
        planted = j.sum()
        if (prod @ j).min() >= planted - 1e-9:
            configs.append(bits)
            energies.append(planted)
    return TileSet(np.array(configs, dtype=np.int8),
                   np.array(energies, dtype=np.float64))


@dataclass(frozen=True)
class TileDistribution:
    tiles: TileSet
    weights: np.ndarray       # probability per config
    lam: float                # exponential tilt parameter
    per_spin_energy: float    # planted ground energy per spin


def solve_tile_distribution(tiles: TileSet,
                            per_spin_energy: float) -> TileDistribution:
    """Maximum-entropy distribution over admissible tiles at a fixed
    mean tile energy.

    Each vertex belongs to two cubes of eight vertices, so the planted
    energy per spin is (mean tile energy) / 4; the achievable range is
    the open interval (-3, -1.5).  The tilt parameter solves
    <e>_lam = 4 * per_spin_energy by bisection (the mean is monotone).
    """
    target = 4.0 * per_spin_energy
    es = tiles.energies
    lo, hi = es.min(), es.max()
    if not (lo < target < hi):
        raise GeneratorError(
            f"per-spin energy {per_spin_energy} outside achievable "
            f"range ({lo / 4.0}, {hi / 4.0})")

    def mean_at(lam):
        w = np.exp(-lam * (es - lo))
        return float(w @ es / w.sum())

    span = 1.0
    while not (mean_at(span) < target < mean_at(-span)):
        span *= 2.0
        if span > 1e6:
            raise GeneratorError("tilt parameter search failed to bracket")
    lam = bisect(lambda l: mean_at(l) - target, -span, span, xtol=1e-13)
    w = np.exp(-lam * (es - lo))
    return TileDistribution(tiles, w / w.sum(), float(lam), per_spin_energy)


def cube_corners(L: int):
    """Anchor corners of the edge-partitioning cubes."""
    return [c for c in itertools.product(range(L), repeat=3)
            if c[0] % 2 == c[1] % 2 == c[2] % 2]


def gen_tile_planted(topology: LatticeTopology,
                     distribution: TileDistribution,
                     seed: int) -> IsingModel:
    """Draw one admissible tile per cube, plant the all-up state, then
    hide it behind a uniformly random gauge.

    meta carries the exact planted ground energy and the planted state
    (after the gauge) for verification.
    """
    if topology.kind != "cubic":
        raise GeneratorError("tile planting requires a cubic lattice")
    L = topology.L
    if L % 2 != 0:
        raise GeneratorError("tile planting requires even L")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    tiles = distribution.tiles
    j = np.zeros(topology.n_edges)
    edge_index = {}
    for i, (a, b) in enumerate(topology.edges):
        edge_index[(int(a), int(b))] = i
    ground = 0.0
    for corner in cube_corners(L):
        pick = rng.choice(tiles.n, p=distribution.weights)
        config = tiles.configs[pick]
        ground += tiles.energies[pick]
        vids = [topology.vertex_id(tuple((corner[k] + d[k]) % L
                                         for k in range(3)))
                for d in _CUBE_VERTS]
        for (la, lb), jv in zip(_CUBE_EDGES, config):
            a, b = vids[la], vids[lb]
            j[edge_index[(min(a, b), max(a, b))]] = jv
    model = IsingModel(topology, np.zeros(topology.n_vertices), j,
                       {"ensemble": "tile-planted", "seed": seed})
    gauge = random_state(topology.n_vertices, rng)
    hidden = gauge_transform(model, gauge)
    meta = dict(hidden.meta)
    meta["ensemble"] = "tile-planted"
    meta["seed"] = seed
    meta["planted_energy"] = float(ground)
    meta["per_spin_energy"] = distribution.per_spin_energy
    return IsingModel(hidden.topology, hidden.h, hidden.j, meta), gauge


def generate(topology: LatticeTopology, ensemble: str, seed: int,
             per_spin_energy: float = -1.8) -> IsingModel:
    """Ensemble dispatcher used by the command-line interface."""
    if ensemble == "pmj":
        return gen_pm_j(topology, seed)
    if ensemble == "ferro":
        return gen_ferromagnet(topology)
    if ensemble == "tile-planted":
        dist = solve_tile_distribution(enumerate_tile_classes(),
                                       per_spin_energy)
        model, _ = gen_tile_planted(topology, dist, seed)
        return model
    raise GeneratorError(f"unknown ensemble {ensemble!r}")
