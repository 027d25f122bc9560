"""Hardware-graph modeling and subspace embeddings.

A bounded Pegasus fabric graph P[m] plays the hardware role.  Origin
embeddings map the variables of an origin-rooted lattice subspace to
short qubit chains; the same embedding serves every displaced subspace
because displacement is a lattice automorphism.  Defective qubits or
couplers are absorbed by vacating a minimal set of variables.

Correctness is defined by the validator, not by any particular
construction recipe: embeddings may be built here or loaded from files,
and anything passing `validate_embedding` is acceptable downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .ising import Subproblem
from .lattice import (PEGASUS_CELL_PLANES, LatticeTopology, PegasusCoord,
                      SubspaceShape, _finish, pegasus_fabric)


class EmbeddingError(ValueError):
    pass


def qubit_id(m: int, coord) -> int:
    """Dense id of a Pegasus coordinate on P[m] hardware."""
    u, w, k, z = coord
    return ((u * m + w) * 12 + k) * (m - 1) + z


def qubit_coord(m: int, qid: int) -> PegasusCoord:
    z = qid % (m - 1)
    k = (qid // (m - 1)) % 12
    w = (qid // (12 * (m - 1))) % m
    u = qid // (12 * (m - 1) * m)
    return PegasusCoord(u, w, k, z)


@dataclass(frozen=True)
class DefectSpec:
    """Unyielded hardware elements: explicit lists and/or i.i.d. random
    draws at the given rates."""
    qubits: tuple = ()
    couplers: tuple = ()
    qubit_rate: float = 0.0
    coupler_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for r in (self.qubit_rate, self.coupler_rate):
            if not (0.0 <= r <= 1.0):
                raise EmbeddingError(f"defect rate {r} outside [0, 1]")


@dataclass(frozen=True)
class HardwareGraph:
    m: int
    qubits: frozenset            # yielded-universe qubit ids
    couplers: frozenset          # sorted qubit-id pairs
    dead_qubits: frozenset
    dead_couplers: frozenset
    h_range: tuple = (-4.0, 4.0)
    j_range: tuple = (-2.0, 1.0)
    _adj: dict = field(default=None, repr=False, hash=False, compare=False)

    def __post_init__(self):
        if not self.dead_qubits <= self.qubits:
            raise EmbeddingError("dead qubits outside the qubit set")
        if not self.dead_couplers <= self.couplers:
            raise EmbeddingError("dead couplers outside the coupler set")

    @property
    def alive_qubits(self) -> frozenset:
        return self.qubits - self.dead_qubits

    def alive_couplers(self) -> set:
        dq = self.dead_qubits
        return {c for c in self.couplers - self.dead_couplers
                if c[0] not in dq and c[1] not in dq}

    def coupler_alive(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        return (key in self.couplers and key not in self.dead_couplers
                and a not in self.dead_qubits and b not in self.dead_qubits)

    def has_coupler(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        return key in self.couplers


def build_hardware(m: int, defect_spec: DefectSpec | None = None,
                   h_range=(-4.0, 4.0), j_range=(-2.0, 1.0)) -> HardwareGraph:
    """P[m] fabric graph with an applied yield mask."""
    coords, edges = pegasus_fabric(m)
    qubits = frozenset(qubit_id(m, c) for c in coords)
    couplers = frozenset(tuple(sorted((qubit_id(m, a), qubit_id(m, b))))
                         for a, b in edges)
    dead_q, dead_c = set(), set()
    if defect_spec is not None:
        dead_q.update(defect_spec.qubits)
        dead_c.update(tuple(sorted(c)) for c in defect_spec.couplers)
        if defect_spec.qubit_rate > 0 or defect_spec.coupler_rate > 0:
            rng = np.random.default_rng(
                np.random.SeedSequence([defect_spec.seed, 20]))
            if defect_spec.qubit_rate > 0:
                for q in sorted(qubits):
                    if rng.random() < defect_spec.qubit_rate:
                        dead_q.add(q)
            if defect_spec.coupler_rate > 0:
                for c in sorted(couplers):
                    if rng.random() < defect_spec.coupler_rate:
                        dead_c.add(c)
        if not dead_q <= qubits:
            raise EmbeddingError("explicit dead qubit not on the hardware")
        if not dead_c <= couplers:
            raise EmbeddingError("explicit dead coupler not on the hardware")
    return HardwareGraph(m, qubits, couplers, frozenset(dead_q),
                         frozenset(dead_c), tuple(h_range), tuple(j_range))


@dataclass(frozen=True)
class OriginEmbedding:
    """Origin-rooted subspace embedding.

    `variables` are global lattice vertex ids of the origin placement in
    a fixed order; `chains[i]` is the ordered qubit chain of variable i.
    `vacancies` are positions into `variables` dropped to absorb
    defects.  The first chain qubit carries the programmed field and the
    readout value.
    """
    lattice_kind: str
    label: str
    variables: np.ndarray
    chains: tuple
    max_chain: int
    vacancies: frozenset = frozenset()
    flags: tuple = ()

    def __post_init__(self):
        if len(self.chains) != len(self.variables):
            raise EmbeddingError("one chain required per variable")

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def active_positions(self) -> np.ndarray:
        return np.array([i for i in range(len(self.variables))
                         if i not in self.vacancies], dtype=np.int64)


def _subspace_edges(topology: LatticeTopology, variables: np.ndarray):
    """Lattice edges between embedded variables, as position pairs."""
    pos = {int(v): i for i, v in enumerate(variables)}
    out = []
    for a, b in topology.edges:
        ia = pos.get(int(a))
        ib = pos.get(int(b))
        if ia is not None and ib is not None:
            out.append((ia, ib))
    return out


def _chains_coupled(hardware: HardwareGraph, ca, cb, alive=True) -> bool:
    check = hardware.coupler_alive if alive else hardware.has_coupler
    return any(check(p, q) for p in ca for q in cb)


def validate_embedding(embedding: OriginEmbedding,
                       hardware: HardwareGraph,
                       topology: LatticeTopology) -> list:
    """Machine check of all embedding invariants; returns violation
    messages (empty means valid)."""
    problems = []
    if topology.kind != embedding.lattice_kind:
        problems.append(
            f"lattice kind mismatch: embedding {embedding.lattice_kind}, "
            f"topology {topology.kind}")
        return problems
    active = embedding.active_positions()
    alive = hardware.alive_qubits
    seen = {}
    for i in active:
        chain = embedding.chains[i]
        if not (1 <= len(chain) <= embedding.max_chain):
            problems.append(f"variable {i}: chain length {len(chain)} "
                            f"exceeds maximum {embedding.max_chain}")
        for q in chain:
            if q not in alive:
                problems.append(f"variable {i}: qubit {q} is not yielded")
            if q in seen:
                problems.append(
                    f"qubit {q} shared by variables {seen[q]} and {i}")
            seen[q] = i
        for p, q in zip(chain, chain[1:]):
            if not hardware.coupler_alive(p, q):
                problems.append(
                    f"variable {i}: chain link ({p},{q}) is not yielded")
    active_set = set(int(i) for i in active)
    for ia, ib in _subspace_edges(topology, embedding.variables):
        if ia in active_set and ib in active_set:
            if not _chains_coupled(hardware, embedding.chains[ia],
                                   embedding.chains[ib]):
                problems.append(
                    f"edge ({ia},{ib}): no yielded coupler between chains")
    return problems


# --- defect trimming via minimum vertex cover of the conflict graph ---

EXACT_COVER_LIMIT = 30


def minimum_vertex_cover(edges) -> tuple:
    """Exact minimum vertex cover; among minimum covers, returns the
    lexicographically smallest vertex tuple.  Branch on an endpoint of
    the smallest uncovered edge, with memoization."""
    memo = {}

    def solve(es):
        if not es:
            return ()
        if es in memo:
            return memo[es]
        a, b = min(es)
        ca = tuple(sorted((a,) + solve(
            frozenset(e for e in es if a not in e))))
        cb = tuple(sorted((b,) + solve(
            frozenset(e for e in es if b not in e))))
        best = ca if (len(ca), ca) <= (len(cb), cb) else cb
        memo[es] = best
        return best

    return solve(frozenset(tuple(sorted(e)) for e in edges))


def greedy_vertex_cover(edges) -> tuple:
    """Highest-degree-first cover (ties to the lowest id); used only
    when a conflict component is too large for the exact solver."""
    es = {tuple(sorted(e)) for e in edges}
    cover = []
    while es:
        deg = {}
        for a, b in es:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        v = min(deg, key=lambda q: (-deg[q], q))
        cover.append(v)
        es = {e for e in es if v not in e}
    return tuple(sorted(cover))


def _conflict_components(edges):
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        parent[find(a)] = find(b)
    groups = {}
    for a, b in edges:
        groups.setdefault(find(a), []).append((a, b))
    return list(groups.values())


def trim_for_defects(embedding: OriginEmbedding,
                     hardware: HardwareGraph,
                     topology: LatticeTopology) -> OriginEmbedding:
    """Vacate variables hit by defects.

    Chains with a dead qubit or dead chain link become vacancies
    directly.  Variable edges between intact chains whose realizing
    couplers are all dead form a conflict graph; a minimum vertex cover
    of it (exact for components up to EXACT_COVER_LIMIT vertices, else
    greedy with a flag) supplies the remaining vacancies.
    """
    alive = hardware.alive_qubits
    vac = set(int(i) for i in embedding.vacancies)
    for i, chain in enumerate(embedding.chains):
        if i in vac:
            continue
        if any(q not in alive for q in chain):
            vac.add(i)
            continue
        if any(not hardware.coupler_alive(p, q)
               for p, q in zip(chain, chain[1:])):
            vac.add(i)
    conflicts = []
    for ia, ib in _subspace_edges(topology, embedding.variables):
        if ia in vac or ib in vac:
            continue
        if not _chains_coupled(hardware, embedding.chains[ia],
                               embedding.chains[ib]):
            conflicts.append((ia, ib))
    flags = list(embedding.flags)
    for component in _conflict_components(conflicts):
        verts = {v for e in component for v in e}
        if len(verts) <= EXACT_COVER_LIMIT:
            vac.update(minimum_vertex_cover(component))
        else:
            vac.update(greedy_vertex_cover(component))
            flags.append(f"greedy-cover:{len(verts)}")
    return replace(embedding, vacancies=frozenset(vac), flags=tuple(flags))


# --- simplified programming and readout rules ---

@dataclass(frozen=True)
class ProgrammedProblem:
    """Hardware-side model of one conditioned subproblem.

    `qubits` orders the used qubit ids; `couplers` are index pairs into
    that order with programmed values `j`; `first_pos[v]` is the
    position of variable v's first chain qubit (readout convention).
    """
    qubits: np.ndarray
    h: np.ndarray
    couplers: np.ndarray
    j: np.ndarray
    chain_strength: float
    first_pos: np.ndarray
    chain_pos: tuple             # qubit positions per variable

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def as_model(self):
        """The programmed problem as a standalone model (for classical
        subsolvers standing in for the annealer)."""
        from .ising import IsingModel
        coords = tuple((int(q),) for q in self.qubits)
        edge_set = {tuple(sorted((int(a), int(b))))
                    for a, b in self.couplers}
        top = _finish("programmed", 0, coords, edge_set, 0)
        j = np.zeros(top.n_edges)
        index = {tuple(e): i for i, e in enumerate(top.edges.tolist())}
        for (a, b), jv in zip(self.couplers, self.j):
            j[index[(min(a, b), max(a, b))]] += jv
        return IsingModel(top, self.h.copy(), j, {"ensemble": "programmed"})


def program(subproblem: Subproblem, embedding: OriginEmbedding,
            hardware: HardwareGraph,
            chain_strength: float = 2.0) -> ProgrammedProblem:
    """Place each effective field on the first chain qubit, the full
    coupler value on the first yielded realization of each variable
    edge, and -chain_strength on every chain link."""
    active = embedding.active_positions()
    if subproblem.n != len(active):
        raise EmbeddingError(
            f"subproblem has {subproblem.n} variables; embedding exposes "
            f"{len(active)} non-vacant variables")
    if chain_strength <= 0:
        raise EmbeddingError("chain strength must be positive")
    used = []
    chain_pos = []
    pos_of = {}
    for v in active:
        positions = []
        for q in embedding.chains[v]:
            pos_of[q] = len(used)
            positions.append(len(used))
            used.append(q)
        chain_pos.append(tuple(positions))
    used = np.array(used, dtype=np.int64)
    h = np.zeros(len(used))
    lo_h, hi_h = hardware.h_range
    for p, hv in enumerate(subproblem.h_eff):
        if not (lo_h <= hv <= hi_h):
            raise EmbeddingError(
                f"variable {p}: effective field {hv} outside "
                f"h_range [{lo_h}, {hi_h}]")
        h[chain_pos[p][0]] = hv
    coupler_index = {}
    couplers = []
    values = []
    used_set = set(int(q) for q in used)
    for key in sorted(hardware.alive_couplers()):
        if key[0] in used_set and key[1] in used_set:
            coupler_index[key] = len(couplers)
            couplers.append((pos_of[key[0]], pos_of[key[1]]))
            values.append(0.0)
    lo_j, hi_j = hardware.j_range
    if not (lo_j <= -chain_strength <= hi_j):
        raise EmbeddingError(
            f"chain coupler {-chain_strength} outside "
            f"J_range [{lo_j}, {hi_j}]")
    for p in range(subproblem.n):
        chain = embedding.chains[active[p]]
        for qa, qb in zip(chain, chain[1:]):
            values[coupler_index[tuple(sorted((qa, qb)))]] = -chain_strength
    for (pa, pb), jv in zip(subproblem.edges, subproblem.j):
        if not (lo_j <= jv <= hi_j):
            raise EmbeddingError(
                f"edge ({pa},{pb}): coupler {jv} outside "
                f"J_range [{lo_j}, {hi_j}]")
        realizations = sorted(
            tuple(sorted((qa, qb)))
            for qa in embedding.chains[active[pa]]
            for qb in embedding.chains[active[pb]]
            if hardware.coupler_alive(qa, qb))
        if not realizations:
            raise EmbeddingError(
                f"edge ({pa},{pb}): no yielded realization "
                "(embedding not trimmed for these defects?)")
        values[coupler_index[realizations[0]]] = jv
    first = np.array([chain_pos[p][0] for p in range(subproblem.n)],
                     dtype=np.int64)
    return ProgrammedProblem(used, h, np.array(couplers, dtype=np.int64),
                             np.array(values), float(chain_strength),
                             first, tuple(chain_pos))


def readout(samples: np.ndarray, programmed: ProgrammedProblem) -> np.ndarray:
    """Each variable takes its chain's first-qubit state (no majority
    vote); broken chains resolve the same way."""
    samples = np.atleast_2d(np.asarray(samples))
    if samples.shape[1] != programmed.n_qubits:
        raise EmbeddingError(
            f"sample width {samples.shape[1]} does not match "
            f"{programmed.n_qubits} programmed qubits")
    return samples[:, programmed.first_pos]


# --- origin embedding constructors ---

def _identity_pegasus_embedding(hardware: HardwareGraph,
                                topology: LatticeTopology) -> OriginEmbedding:
    m = hardware.m
    if topology.L < m:
        raise EmbeddingError(
            f"identity embedding needs lattice scale >= m={m}, "
            f"got L={topology.L}")
    qids = sorted(hardware.qubits)
    variables = []
    chains = []
    for q in qids:
        u, w, k, z = qubit_coord(m, q)
        variables.append(topology.vertex_id((u, w, k, z)))
        chains.append((q,))
    return OriginEmbedding("toric-pegasus", f"pegasus-identity-m{m}",
                           np.array(variables, dtype=np.int64),
                           tuple(chains), 1)


def _cell_chain(m: int, t: int, cw: int, cz: int, a: int, b: int):
    """Chain (vertical qubit, horizontal qubit) of slot (a, b) in
    K_{4,4} cell (t, cw, cz)."""
    kv, kh, ws, zs = PEGASUS_CELL_PLANES[t]
    vq = qubit_id(m, (0, cw, kv + a, cz))
    hq = qubit_id(m, (1, cz + ws, kh + b, cw + zs))
    return (vq, hq)


def _cubic_slot_matchings(hardware: HardwareGraph):
    """Assign each of the 12 layer slots a (vertical, horizontal) track
    pair so that consecutive slots' chains are coupled across plane
    boundaries; searched once at a generic cell (translation-invariant).
    """
    m = hardware.m
    x, y = 1, 1

    def coupled(chain_a, chain_b):
        return _chains_coupled(hardware, chain_a, chain_b, alive=False)

    def cell(t):
        return (t, x + (1 if t == 2 else 0), y)

    choices = range(4)
    for a03, b03 in itertools.product(choices, choices):
        c0 = _cell_chain(m, *cell(0), a03, b03)
        for a10, b10, a13, b13 in itertools.product(*(choices,) * 4):
            if a10 == a13 or b10 == b13:
                continue
            if not coupled(c0, _cell_chain(m, *cell(1), a10, b10)):
                continue
            c13 = _cell_chain(m, *cell(1), a13, b13)
            for a20, b20 in itertools.product(choices, choices):
                if not coupled(c13, _cell_chain(m, *cell(2), a20, b20)):
                    continue
                slots = []
                for t, (first, last) in enumerate(
                        [(None, (a03, b03)), ((a10, b10), (a13, b13)),
                         ((a20, b20), None)]):
                    fixed = [p for p in (first, last) if p is not None]
                    free_a = [v for v in choices
                              if v not in {p[0] for p in fixed}]
                    free_b = [v for v in choices
                              if v not in {p[1] for p in fixed}]
                    middle = [(va, vb) for va, vb
                              in zip(free_a, free_b)]
                    order = ([first] if first else []) + middle \
                        + ([last] if last else [])
                    slots.extend((t, va, vb) for va, vb in order)
                return slots
    raise EmbeddingError("no chain-2 slot matching found on this hardware")


def _cubic_chain_embedding(hardware: HardwareGraph,
                           topology: LatticeTopology,
                           shape: SubspaceShape) -> OriginEmbedding:
    m = hardware.m
    a, b, c = shape.extent
    axes = [0, 1, 2]
    layer_axis = None
    for ax in (2, 1, 0):
        if shape.extent[ax] <= 12 and layer_axis is None:
            layer_axis = ax
    if layer_axis is None:
        raise EmbeddingError(
            f"cuboid {shape.extent} has no axis of extent <= 12 "
            "for the layer direction")
    plane_axes = [ax for ax in axes if ax != layer_axis]
    for ax in plane_axes:
        if shape.extent[ax] > m - 1:
            raise EmbeddingError(
                f"cuboid {shape.extent} exceeds the {m - 1} cells per "
                "side of this hardware")
    if any(shape.extent[ax] == topology.L for ax in axes):
        raise EmbeddingError(
            "cuboid extent equal to the lattice scale wraps around; "
            "hardware cells cannot realize wrap edges")
    slots = _cubic_slot_matchings(hardware)
    variables = []
    chains = []
    for coord in itertools.product(range(a), range(b), range(c)):
        x = coord[plane_axes[0]]
        y = coord[plane_axes[1]]
        layer = coord[layer_axis]
        t, va, vb = slots[layer]
        variables.append(topology.vertex_id(coord))
        chains.append(_cell_chain(m, t, x + (1 if t == 2 else 0), y,
                                  va, vb))
    label = "cuboid-" + "x".join(str(e) for e in shape.extent)
    return OriginEmbedding("cubic", label,
                           np.array(variables, dtype=np.int64),
                           tuple(chains), 2)


def make_origin_embeddings(hardware: HardwareGraph,
                           topology: LatticeTopology,
                           shape: SubspaceShape | None = None) -> list:
    """Construct origin embeddings and trim them for hardware defects.

    Pegasus lattices get the single identity embedding over the fabric;
    cubic lattices get one chain-length-2 embedding per distinct cuboid
    orientation.
    """
    if topology.kind == "toric-pegasus":
        raw = [_identity_pegasus_embedding(hardware, topology)]
    elif topology.kind == "cubic":
        if shape is None:
            raise EmbeddingError("cubic embeddings require a cuboid shape")
        raw = [_cubic_chain_embedding(hardware, topology, rot)
               for rot in shape.rotations()]
    else:
        raise EmbeddingError(f"unknown lattice kind {topology.kind!r}")
    out = []
    for emb in raw:
        trimmed = trim_for_defects(emb, hardware, topology)
        leftover = validate_embedding(trimmed, hardware, topology)
        if leftover:
            raise EmbeddingError(
                "constructed embedding failed validation: " + leftover[0])
        out.append(trimmed)
    return out


# --- embedding file format ---

def write_embedding(embedding: OriginEmbedding, topology: LatticeTopology,
                    hardware: HardwareGraph, path):
    with open(path, "w") as f:
        f.write("# latticelnls embedding v1\n")
        f.write(f"lattice {embedding.lattice_kind}\n")
        f.write(f"L {topology.L}\n")
        f.write(f"label {embedding.label}\n")
        f.write(f"hardware pegasus {hardware.m}\n")
        f.write(f"max_chain {embedding.max_chain}\n")
        vac = " ".join(str(v) for v in sorted(embedding.vacancies))
        f.write(f"vacancies {vac}\n")
        f.write(f"variables {embedding.n_variables}\n")
        for vid, chain in zip(embedding.variables, embedding.chains):
            coord = topology.coords[int(vid)]
            f.write(" ".join(str(x) for x in coord) + " : "
                    + " ".join(str(q) for q in chain) + "\n")


def read_embedding(path, topology: LatticeTopology) -> OriginEmbedding:
    with open(path) as f:
        header = f.readline()
        if not header.startswith("# latticelnls embedding"):
            raise EmbeddingError(f"not an embedding file: {path}")
        kind = f.readline().split()[1]
        L = int(f.readline().split()[1])
        label = f.readline().split()[1]
        f.readline()  # hardware line (informational)
        max_chain = int(f.readline().split()[1])
        vac = frozenset(int(v) for v in f.readline().split()[1:])
        if kind != topology.kind or L != topology.L:
            raise EmbeddingError(
                f"embedding is for {kind} L={L}, not "
                f"{topology.kind} L={topology.L}")
        count = int(f.readline().split()[1])
        variables, chains = [], []
        for _ in range(count):
            left, right = f.readline().split(" : ")
            coord = tuple(int(x) for x in left.split())
            variables.append(topology.vertex_id(coord))
            chains.append(tuple(int(q) for q in right.split()))
    return OriginEmbedding(kind, label, np.array(variables, dtype=np.int64),
                           tuple(chains), max_chain, vac)
