"""Greedy large-neighborhood local search.

Each iteration re-optimizes one randomly placed lattice subspace
conditioned on the rest of the state, accepting the subsolver's best
proposal only when it strictly lowers the energy.  Subsolvers are
pluggable: direct classical solvers on the subproblem, or annealer-style
solvers on a programmed hardware model with a simulated access-time
clock.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .embedding import HardwareGraph, OriginEmbedding, program, readout
from .ising import IsingModel, Subproblem, energy, random_state
from .lattice import origin_members, subspace_offsets
from numba import njit

from .samplers import _sgd_kernel, _sweep_kernel

SUBSOLVER_KINDS = ("sa", "greedy", "brute-force", "programmed-sa",
                   "programmed-random")
VARIANTS = ("default", "post-process", "parallel-process")


class LnlsError(ValueError):
    pass


@dataclass(frozen=True)
class SubsolverSpec:
    kind: str = "sa"
    sweeps: int = 198            # annealing sweeps per read
    reads: int = 1               # proposals per call (n_r)
    chain_strength: float = 2.0  # programmed kinds only
    clock: str | None = None     # "classical" | "qpu"; default per kind

    def __post_init__(self):
        if self.kind not in SUBSOLVER_KINDS:
            raise LnlsError(f"unknown subsolver kind {self.kind!r}")
        if self.sweeps < 1 or self.reads < 1:
            raise LnlsError("sweeps and reads must be >= 1")
        if self.clock not in (None, "classical", "qpu"):
            raise LnlsError(f"unknown clock {self.clock!r}")

    @property
    def effective_clock(self) -> str:
        if self.clock is not None:
            return self.clock
        return "qpu" if self.kind.startswith("programmed") else "classical"


@dataclass(frozen=True)
class TimingModel:
    """Simulated annealer access time per call is
    t_p + (t_ro + t_a) * n_r + network_overhead (all ms); classical
    subsolvers are charged spin updates times ns_per_update."""
    t_p: float = 10.0
    t_ro: float = 0.2
    t_a: float = 0.1
    network_overhead: float = 0.0
    ns_per_update: float = 33.0

    def __post_init__(self):
        for name in ("t_p", "t_ro", "t_a", "network_overhead",
                     "ns_per_update"):
            if getattr(self, name) < 0:
                raise LnlsError(f"{name} must be non-negative")


def accumulate_qpu_time(timing: TimingModel, n_r: int) -> float:
    """Access time in ms for one subsolver call with n_r reads."""
    return timing.t_p + (timing.t_ro + timing.t_a) * n_r \
        + timing.network_overhead


@dataclass(frozen=True)
class LnlsConfig:
    shapes: tuple = ()           # SubspaceShape choices (direct subsolvers)
    embeddings: tuple = ()       # OriginEmbedding choices (programmed kinds)
    hardware: HardwareGraph | None = None
    e_target: float = -math.inf
    max_iterations: int = 128
    subsolver: SubsolverSpec = SubsolverSpec()
    timing: TimingModel = TimingModel()
    variant: str = "default"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise LnlsError("max_iterations must be >= 1")
        if self.variant not in VARIANTS:
            raise LnlsError(f"unknown workflow variant {self.variant!r}")
        programmed = self.subsolver.kind.startswith("programmed")
        if programmed and (not self.embeddings or self.hardware is None):
            raise LnlsError(
                "programmed subsolvers require embeddings and hardware")
        if not programmed and not self.shapes and not self.embeddings:
            raise LnlsError("no subspace shapes or embeddings configured")


@dataclass
class BurnDownRecord:
    """Per-iteration trace: energy after the update, acceptance, and
    cumulative clocks.  sim_ms is the method's own time axis (access
    time for annealer-clocked runs, modeled CPU time otherwise)."""
    initial_energy: float
    energies: np.ndarray
    accepted: np.ndarray
    sim_ms: np.ndarray           # cumulative simulated clock
    qpu_ms: np.ndarray           # cumulative simulated access time
    wall_ms: np.ndarray          # cumulative measured wall clock
    subsolver_wall_ms: float = 0.0
    offsets: tuple = ()

    @property
    def iterations(self) -> int:
        return len(self.energies)

    @property
    def final_energy(self) -> float:
        if len(self.energies) == 0:
            return self.initial_energy
        return float(self.energies[-1])

    def iterations_to(self, target: float):
        """First iteration (1-based) reaching energy <= target, or None."""
        hits = np.nonzero(self.energies <= target)[0]
        return int(hits[0]) + 1 if len(hits) else None


def _descend(sub: Subproblem, start: np.ndarray):
    indptr, indices, weights = sub.weighted_csr()
    x = np.array(start, dtype=np.int8)
    flips = _sgd_kernel(indptr, indices, weights, sub.h_eff, x)
    return x, int(flips)


@njit(cache=True)
def _restricted_energy_kernel(e0, e1, j, h, y):
    acc = 0.0
    for i in range(j.shape[0]):
        acc += j[i] * y[e0[i]] * y[e1[i]]
    for i in range(h.shape[0]):
        acc += h[i] * y[i]
    return acc


@dataclass(frozen=True)
class _PlacementTemplate:
    """Offset-invariant structure of a subspace placement.

    Displacements are lattice automorphisms, so the member-local inner
    edge list, its adjacency layout, and the pattern of conditioning
    cross-edges are identical at every offset; only coupler values and
    the conditioning spins change.
    """
    origin: np.ndarray           # member ids at offset zero
    offsets: tuple
    inner: np.ndarray            # (Ei, 2) member-local
    cross_p: np.ndarray          # member-local endpoint of each cross edge
    cross_out: np.ndarray        # outside endpoint ids at offset zero
    indptr: np.ndarray
    indices: np.ndarray
    slot_edge: np.ndarray        # CSR slot -> inner edge index
    coord_cols: tuple            # coordinate arrays of origin + cross_out
    inner0: np.ndarray           # contiguous inner endpoint columns
    inner1: np.ndarray
    base_eid: np.ndarray         # model edge ids of inner + cross edges


def _make_template(model: IsingModel, origin: np.ndarray,
                   offsets) -> _PlacementTemplate:
    top = model.topology
    n = len(origin)
    local = np.full(top.n_vertices, -1, dtype=np.int64)
    local[origin] = np.arange(n)
    e = top.edges
    la, lb = local[e[:, 0]], local[e[:, 1]]
    both = (la >= 0) & (lb >= 0)
    inner = np.stack([la[both], lb[both]], axis=1)
    ca = (la >= 0) & (lb < 0)
    cb = (lb >= 0) & (la < 0)
    cross_p = np.concatenate([la[ca], lb[cb]])
    cross_out = np.concatenate([e[ca, 1], e[cb, 0]])
    n_inner = len(inner)
    src = np.concatenate([inner[:, 0], inner[:, 1]])
    dst = np.concatenate([inner[:, 1], inner[:, 0]])
    eid = np.concatenate([np.arange(n_inner), np.arange(n_inner)])
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    all_ids = np.concatenate([origin, cross_out])
    coord_cols = tuple(np.asarray(c) for c in top.coords_from_ids(all_ids))
    base_eid = _edge_indices(
        model,
        np.concatenate([origin[inner[:, 0]], origin[cross_p]]),
        np.concatenate([origin[inner[:, 1]], cross_out]))
    return _PlacementTemplate(origin, tuple(offsets), inner, cross_p,
                              cross_out, indptr, dst[order], eid[order],
                              coord_cols,
                              np.ascontiguousarray(inner[:, 0]),
                              np.ascontiguousarray(inner[:, 1]),
                              base_eid)


def _displaced_ids(top, template: _PlacementTemplate, offset) -> np.ndarray:
    """Ids of origin members followed by cross-edge outside vertices,
    shifted by `offset` (precomputed-coordinate fast path)."""
    L = top.L
    if top.kind == "cubic":
        i1, i2, i3 = template.coord_cols
        d1, d2, d3 = offset
        return ((i1 + d1) % L) * (L * L) + ((i2 + d2) % L) * L + (i3 + d3) % L
    u, w, k, z = template.coord_cols
    dw, dz = offset
    wn = (w + np.where(u == 0, dw, dz)) % L
    zn = (z + np.where(u == 0, dz, dw)) % L
    return ((u * L + wn) * 12 + k) * L + zn


def _edge_indices(model: IsingModel, a: np.ndarray, b: np.ndarray):
    """Positions of vertex-id pairs in the model's edge array."""
    n = model.n
    cache = model._cache
    if "edge_keys" not in cache:
        e = model.topology.edges
        cache["edge_keys"] = e[:, 0] * n + e[:, 1]
    keys = cache["edge_keys"]
    q = np.minimum(a, b) * n + np.maximum(a, b)
    pos = np.searchsorted(keys, q)
    if np.any(pos >= len(keys)) or np.any(keys[pos] != q):
        raise LnlsError("displaced pair is not a topology edge")
    return pos.astype(np.int32)


def _edge_perms(model: IsingModel):
    """Per-axis edge-index permutations of elementary translations.

    Translations commute, so the permutation of any offset is the
    composition of one permutation per axis; this turns per-iteration
    coupler lookup into plain gathers.
    """
    cache = model._cache
    if "edge_perms" not in cache:
        top = model.topology
        e = top.edges
        n_axes = 3 if top.kind == "cubic" else 2
        axes = []
        for ax in range(n_axes):
            perms = []
            for d in range(top.L):
                disp = tuple(d if i == ax else 0 for i in range(n_axes))
                perms.append(_edge_indices(
                    model, top.displace_ids(e[:, 0], disp),
                    top.displace_ids(e[:, 1], disp)))
            axes.append(perms)
        cache["edge_perms"] = axes
    return cache["edge_perms"]


def _subproblem_at(model: IsingModel, state: np.ndarray,
                   template: _PlacementTemplate, offset) -> Subproblem:
    top = model.topology
    ids = _displaced_ids(top, template, offset)
    n_m = len(template.origin)
    members = ids[:n_m]
    outside = ids[n_m:]
    axes = _edge_perms(model)
    eid = template.base_eid
    for ax, d in enumerate(offset):
        if d:
            eid = axes[ax][d][eid]
    j_all = model.j[eid]
    n_inner = len(template.inner)
    j_inner = j_all[:n_inner]
    j_cross = j_all[n_inner:]
    h_eff = model.h[members] + np.bincount(
        template.cross_p, weights=j_cross * state[outside], minlength=n_m)
    sub = Subproblem(members, template.inner, j_inner, h_eff, state.copy())
    sub._cache["csr"] = (template.indptr, template.indices,
                         j_inner[template.slot_edge])
    return sub


def subsolve(sub: Subproblem, spec: SubsolverSpec, timing: TimingModel,
             rng: np.random.Generator,
             embedding: OriginEmbedding | None = None,
             hardware: HardwareGraph | None = None,
             connectivity: int = 6):
    """Produce a proposal set for one conditioned subproblem.

    Returns (proposals, sim_ms, qpu_ms): proposals is (reads, |R|) in
    {-1,+1}; sim_ms is the time charged to the method clock and qpu_ms
    the access-time portion of it.
    """
    kind = spec.kind
    if kind.startswith("programmed") and (embedding is None
                                          or hardware is None):
        raise LnlsError(f"subsolver {kind!r} requires an embedding "
                        "and a hardware graph")
    updates = 0
    if kind == "sa":
        indptr, indices, weights = sub.weighted_csr()
        t_max = connectivity / math.log(2.0)
        t_min = 2.0 / math.log(100.0 * sub.n)
        s = np.arange(1, spec.sweeps, dtype=np.float64)
        temps = np.concatenate(
            [t_max * (t_min / t_max) ** (s / spec.sweeps), [0.0]])
        proposals = np.empty((spec.reads, sub.n), dtype=np.int8)
        for r in range(spec.reads):
            x = random_state(sub.n, rng)
            _sweep_kernel(indptr, indices, weights, sub.h_eff, x, temps,
                          int(rng.integers(1 << 32)))
            proposals[r] = x
        updates = spec.reads * spec.sweeps * sub.n
    elif kind == "greedy":
        proposals = np.empty((spec.reads, sub.n), dtype=np.int8)
        for r in range(spec.reads):
            x, flips = _descend(sub, random_state(sub.n, rng))
            proposals[r] = x
            updates += flips * sub.n    # each step scans all variables
    elif kind == "brute-force":
        if sub.n > 24:
            raise LnlsError(
                f"brute-force subsolver limited to 24 variables, "
                f"got {sub.n}")
        grid = np.array(
            np.meshgrid(*([[-1, 1]] * sub.n), indexing="ij"),
            dtype=np.int8).reshape(sub.n, -1).T
        best = int(np.argmin(sub.energies(grid)))
        proposals = grid[best][None, :]
        updates = 1 << sub.n
    elif kind == "programmed-sa":
        pp = program(sub, embedding, hardware, spec.chain_strength)
        pm = pp.as_model()
        indptr, indices, weights = pm.weighted_csr()
        t_max = connectivity / math.log(2.0)
        t_min = 2.0 / math.log(100.0 * pm.n)
        s = np.arange(1, spec.sweeps, dtype=np.float64)
        temps = np.concatenate(
            [t_max * (t_min / t_max) ** (s / spec.sweeps), [0.0]])
        samples = np.empty((spec.reads, pm.n), dtype=np.int8)
        for r in range(spec.reads):
            x = random_state(pm.n, rng)
            _sweep_kernel(indptr, indices, weights, pm.h, x, temps,
                          int(rng.integers(1 << 32)))
            samples[r] = x
        proposals = readout(samples, pp)
    else:  # programmed-random
        pp = program(sub, embedding, hardware, spec.chain_strength)
        samples = (rng.integers(0, 2, (spec.reads, pp.n_qubits),
                                dtype=np.int8) * 2 - 1)
        proposals = readout(samples, pp)
    if spec.effective_clock == "qpu":
        qpu_ms = accumulate_qpu_time(timing, spec.reads)
        return proposals, qpu_ms, qpu_ms
    sim_ms = updates * timing.ns_per_update * 1e-6
    return proposals, sim_ms, 0.0


def run_lnls(model: IsingModel, config: LnlsConfig):
    """Greedy LNLS driver: returns (final_state, BurnDownRecord).

    Per iteration: pick a subspace placement uniformly at random, solve
    the conditioned subproblem, and adopt the best proposal only if it
    strictly lowers the energy.  Stops at the energy target or the
    iteration cap.
    """
    top = model.topology
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 30]))
    state = random_state(model.n, rng)
    current = energy(model, state)
    record = BurnDownRecord(current, np.empty(0), np.empty(0, dtype=bool),
                            np.empty(0), np.empty(0), np.empty(0))
    if current <= config.e_target:
        return state, record

    # Precompute origin footprints and offset grids per choice.  An
    # embedding contributes its non-vacant variables; a bare shape
    # contributes its member block.
    choices = []
    for emb in config.embeddings:
        if emb.lattice_kind != top.kind:
            raise LnlsError("embedding lattice kind does not match model")
        origin = emb.variables[emb.active_positions()]
        offs = [(dw, dz) for dw in range(top.L) for dz in range(top.L)] \
            if top.kind == "toric-pegasus" else \
            [(d1, d2, d3) for d1 in range(top.L) for d2 in range(top.L)
             for d3 in range(top.L)]
        choices.append((None, emb, _make_template(model, origin, offs)))
    for shape in config.shapes:
        choices.append((shape, None,
                        _make_template(model, origin_members(top, shape),
                                       subspace_offsets(top, shape))))
    if not choices:
        raise LnlsError("no subspace shapes or embeddings configured")

    energies, accepted, sims, qpus, walls, offsets = [], [], [], [], [], []
    sim_total = qpu_total = 0.0
    subsolver_wall = 0.0
    wall_start = time.perf_counter()
    for it in range(config.max_iterations):
        shape, emb, template = choices[rng.integers(len(choices))]
        offset = template.offsets[rng.integers(len(template.offsets))]
        sub = _subproblem_at(model, state, template, offset)
        members = sub.members
        t0 = time.perf_counter()
        proposals, sim_ms, qpu_ms = subsolve(
            sub, config.subsolver, config.timing, rng,
            embedding=emb, hardware=config.hardware,
            connectivity=top.connectivity)
        subsolver_wall += time.perf_counter() - t0
        tm = template
        prop_es = [_restricted_energy_kernel(tm.inner0, tm.inner1, sub.j,
                                             sub.h_eff, p.astype(np.float64))
                   for p in proposals]
        best = int(np.argmin(prop_es))
        proposal, prop_e = proposals[best], float(prop_es[best])
        if config.variant == "post-process":
            refined, flips = _descend(sub, proposal)
            refined_e = _restricted_energy_kernel(
                tm.inner0, tm.inner1, sub.j, sub.h_eff,
                refined.astype(np.float64))
            if refined_e < prop_e:
                proposal, prop_e = refined, float(refined_e)
        held_e = _restricted_energy_kernel(
            tm.inner0, tm.inner1, sub.j, sub.h_eff,
            state[members].astype(np.float64))
        ok = prop_e < held_e - 0.0
        if ok:
            state[members] = proposal
            current += prop_e - held_e
        if config.variant == "parallel-process":
            refined = _full_descent(model, state)
            refined_e = energy(model, refined)
            if refined_e < current:
                state = refined
                current = refined_e
                ok = True
        sim_total += sim_ms
        qpu_total += qpu_ms
        energies.append(current)
        accepted.append(bool(ok))
        sims.append(sim_total)
        qpus.append(qpu_total)
        walls.append((time.perf_counter() - wall_start) * 1e3)
        offsets.append(tuple(offset))
        if current <= config.e_target:
            break
    record = BurnDownRecord(
        record.initial_energy, np.array(energies),
        np.array(accepted, dtype=bool), np.array(sims), np.array(qpus),
        np.array(walls), subsolver_wall * 1e3, tuple(offsets))
    return state, record


def _full_descent(model: IsingModel, state: np.ndarray):
    indptr, indices, weights = model.weighted_csr()
    x = np.array(state, dtype=np.int8)
    _sgd_kernel(indptr, indices, weights, model.h, x)
    return x


def run_workflow_variant(model: IsingModel, config: LnlsConfig):
    """Run LNLS under an explicit workflow variant (validated)."""
    if config.variant not in VARIANTS:
        raise LnlsError(f"unknown workflow variant {config.variant!r}")
    return run_lnls(model, config)
