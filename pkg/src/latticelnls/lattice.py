"""Lattice topologies: periodic simple cubic and toric-Pegasus graphs.

Vertices carry geometric coordinates and dense integer ids assigned in
lexicographic coordinate order.  Topologies are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Pegasus coupler offsets (canonical published adjacency).  Vertical
# qubits (u=0) are grouped in three blocks of four k-values sharing an
# offset; same for horizontal qubits (u=1).  This block assignment is the
# unique family (up to relabeling) whose crossing rule pairs each vertical
# block with exactly one horizontal block, producing the three K_{4,4}
# cell grids of the nice subgraph.
PEGASUS_VERTICAL_OFFSETS = (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6)
PEGASUS_HORIZONTAL_OFFSETS = (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10)

# K_{4,4} cell grids ("planes"): plane t pairs one vertical k-block with
# one horizontal k-block.  Entries are (vertical k-block start,
# horizontal k-block start, horizontal w-shift, horizontal z-shift): the
# cell (t, cw, cz) holds vertical qubits (0, cw, kv..kv+3, cz) and
# horizontal qubits (1, cz + ws, kh..kh+3, cw + zs).
PEGASUS_CELL_PLANES = (
    (4, 4, 1, 0),    # t = 0
    (8, 0, 1, 0),    # t = 1
    (0, 8, 0, -1),   # t = 2
)


class LatticeError(ValueError):
    """Invalid lattice construction or subspace request."""


class CubicCoord(NamedTuple):
    i1: int
    i2: int
    i3: int


class PegasusCoord(NamedTuple):
    u: int
    w: int
    k: int
    z: int


@dataclass(frozen=True)
class LatticeTopology:
    kind: str                 # "cubic" | "toric-pegasus"
    L: int
    coords: tuple             # coordinate tuple per vertex id
    edges: np.ndarray         # (E, 2) int array, first < second
    connectivity: int
    _id_of: dict = field(repr=False, hash=False, compare=False, default=None)
    _csr: tuple = field(repr=False, hash=False, compare=False, default=None)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_id(self, coord) -> int:
        return self._id_of[tuple(coord)]

    def neighbors_csr(self):
        """Adjacency as (indptr, indices) arrays; built once, cached."""
        return self._csr

    def neighbors(self, vid: int) -> np.ndarray:
        indptr, indices = self._csr
        return indices[indptr[vid]:indptr[vid + 1]]

    def degree(self, vid: int) -> int:
        indptr, _ = self._csr
        return int(indptr[vid + 1] - indptr[vid])

    # --- coordinate/id arithmetic (vectorized) ---

    def ids_from_coords(self, coord_arrays) -> np.ndarray:
        L = self.L
        if self.kind == "cubic":
            i1, i2, i3 = coord_arrays
            return (i1 % L) * L * L + (i2 % L) * L + (i3 % L)
        u, w, k, z = coord_arrays
        return (((u % 2) * L + (w % L)) * 12 + k) * L + (z % L)

    def coords_from_ids(self, ids: np.ndarray):
        L = self.L
        ids = np.asarray(ids)
        if self.kind == "cubic":
            return ids // (L * L), (ids // L) % L, ids % L
        z = ids % L
        k = (ids // L) % 12
        w = (ids // (12 * L)) % L
        u = ids // (12 * L * L)
        return u, w, k, z

    def displace_ids(self, ids: np.ndarray, disp) -> np.ndarray:
        """Shift vertices by a lattice displacement vector.

        Cubic vectors are (d1, d2, d3).  Toric-Pegasus vectors are
        (dw, dz) at cellular level; the shift acts orientation-wise
        (vertical qubits move (w+dw, z+dz), horizontal (w+dz, z+dw)) so
        that the shift is a graph automorphism.
        """
        if self.kind == "cubic":
            i1, i2, i3 = self.coords_from_ids(ids)
            d1, d2, d3 = disp
            return self.ids_from_coords((i1 + d1, i2 + d2, i3 + d3))
        u, w, k, z = self.coords_from_ids(ids)
        dw, dz = disp
        wn = np.where(u == 0, w + dw, w + dz)
        zn = np.where(u == 0, z + dz, z + dw)
        return self.ids_from_coords((u, wn, k, zn))


def _finish(kind, L, coords, edge_set, connectivity) -> LatticeTopology:
    edges = np.array(sorted(edge_set), dtype=np.int64).reshape(-1, 2)
    n = len(coords)
    deg = np.bincount(edges.ravel(), minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    cursor = indptr[:-1].copy()
    for a, b in edges:
        indices[cursor[a]] = b
        cursor[a] += 1
        indices[cursor[b]] = a
        cursor[b] += 1
    for v in range(n):
        indices[indptr[v]:indptr[v + 1]].sort()
    top = LatticeTopology(kind, L, tuple(coords), edges, connectivity)
    object.__setattr__(top, "_id_of", {c: i for i, c in enumerate(coords)})
    object.__setattr__(top, "_csr", (indptr, indices))
    return top


def build_cubic(L: int) -> LatticeTopology:
    """Periodic simple cubic lattice: L^3 vertices, degree 6."""
    if L < 3:
        raise LatticeError(
            f"cubic lattice requires L >= 3 (got L={L}); smaller L collapses "
            "wrap-around neighbors into duplicate edges")
    coords = [CubicCoord(i1, i2, i3)
              for i1 in range(L) for i2 in range(L) for i3 in range(L)]
    vid = lambda a, b, c: (a % L) * L * L + (b % L) * L + (c % L)
    edge_set = set()
    for i1, i2, i3 in coords:
        a = vid(i1, i2, i3)
        for b in (vid(i1 + 1, i2, i3), vid(i1, i2 + 1, i3), vid(i1, i2, i3 + 1)):
            edge_set.add((min(a, b), max(a, b)))
    return _finish("cubic", L, coords, edge_set, 6)


def _pegasus_internal_neighbor(w, k, z, kp):
    """For vertical qubit (0,w,k,z), the horizontal internal neighbor at
    track index kp is (1, w', kp, z') per the crossing rule."""
    o0 = PEGASUS_VERTICAL_OFFSETS
    o1 = PEGASUS_HORIZONTAL_OFFSETS
    wp = z + (1 if kp < o0[k] else 0)
    zp = w - (1 if k < o1[kp] else 0)
    return wp, kp, zp


def build_toric_pegasus(L: int) -> LatticeTopology:
    """Toric-Pegasus lattice: 24 L^2 vertices, degree 15.

    Built from the Pegasus coordinate adjacency with both the w and z
    directions made periodic (contract w=L into w=0, close the z
    boundary with external couplers).
    """
    if L < 2:
        raise LatticeError(f"toric-Pegasus lattice requires L >= 2 (got L={L})")
    coords = [PegasusCoord(u, w, k, z)
              for u in range(2) for w in range(L)
              for k in range(12) for z in range(L)]
    vid = lambda u, w, k, z: ((u * L + (w % L)) * 12 + k) * L + (z % L)
    edge_set = set()
    for u in range(2):
        for w in range(L):
            for k in range(12):
                for z in range(L):
                    a = vid(u, w, k, z)
                    b = vid(u, w, k, z + 1)                    # external
                    if a != b:
                        edge_set.add((min(a, b), max(a, b)))
                    b = vid(u, w, k ^ 1, z)                    # odd pair
                    edge_set.add((min(a, b), max(a, b)))
    for w in range(L):
        for k in range(12):
            for z in range(L):
                a = vid(0, w, k, z)
                for kp in range(12):                           # internal
                    wp, kp2, zp = _pegasus_internal_neighbor(w, k, z, kp)
                    b = vid(1, wp, kp2, zp)
                    edge_set.add((min(a, b), max(a, b)))
    return _finish("toric-pegasus", L, coords, edge_set, 15)


# --- bounded Pegasus graph P[m] (hardware-side helper) ---

def pegasus_coordinate_list(m: int):
    """All coordinates of the bounded Pegasus graph P[m] before fabric
    trimming: u in {0,1}, w in [0,m-1], k in [0,11], z in [0,m-2]."""
    return [PegasusCoord(u, w, k, z)
            for u in range(2) for w in range(m)
            for k in range(12) for z in range(m - 1)]


def pegasus_fabric(m: int):
    """Vertices and edges of the fabric Pegasus graph P[m].

    Coordinates whose internal-coupler count is zero (the 8(m-1) boundary
    half-tracks) are dropped, reproducing the published vertex count
    24 m (m-1) - 8 (m-1).
    Returns (coords, edges) with edges as coordinate pairs.
    """
    if m < 2:
        raise LatticeError(f"Pegasus graph requires m >= 2 (got m={m})")
    edges = []
    internal_deg = {}
    coords = pegasus_coordinate_list(m)
    coord_set = set(coords)
    for u, w, k, z in coords:
        internal_deg.setdefault((u, w, k, z), 0)
    for w in range(m):
        for k in range(12):
            for z in range(m - 1):
                a = PegasusCoord(0, w, k, z)
                for kp in range(12):
                    wp, kp2, zp = _pegasus_internal_neighbor(w, k, z, kp)
                    if 0 <= wp < m and 0 <= zp < m - 1:
                        b = PegasusCoord(1, wp, kp2, zp)
                        edges.append((a, b))
                        internal_deg[a] += 1
                        internal_deg[b] += 1
    keep = {c for c in coords if internal_deg[c] > 0}
    for u, w, k, z in coords:
        a = PegasusCoord(u, w, k, z)
        if a not in keep:
            continue
        b = PegasusCoord(u, w, k, z + 1)
        if b in coord_set and b in keep:
            edges.append((a, b))
        if k % 2 == 0:
            b = PegasusCoord(u, w, k + 1, z)
            if b in keep:
                edges.append((a, b))
    edges = [e for e in edges if e[0] in keep and e[1] in keep]
    kept = sorted(keep)
    return kept, edges


def pegasus_cell_coords(t: int, cw: int, cz: int):
    """The eight qubit coordinates of K_{4,4} cell (t, cw, cz).

    Coordinates are raw (unreduced); callers apply modular reduction for
    toric lattices or range checks for bounded hardware graphs.
    """
    kv, kh, ws, zs = PEGASUS_CELL_PLANES[t]
    cell = [PegasusCoord(0, cw, kv + j, cz) for j in range(4)]
    cell += [PegasusCoord(1, cz + ws, kh + j, cw + zs) for j in range(4)]
    return cell


def pegasus_window_cells(ms: int):
    """Cell indices of the origin-rooted square window of extent ms.

    Plane t=2 is shifted one cell in w so that an identity mapping onto a
    bounded P[m] hardware graph stays in range (matching the nice
    subgraph for ms = m-1).
    """
    return [(t, cw + (1 if t == 2 else 0), cz)
            for t in range(3) for cw in range(ms) for cz in range(ms)]


# --- subspaces ---

@dataclass(frozen=True)
class SubspaceShape:
    """Geometric extent of a subspace: (a, b, c) cuboid for cubic
    lattices, (m_s,) square cell window for toric-Pegasus."""
    kind: str
    extent: tuple

    def __post_init__(self):
        if self.kind == "cubic":
            if len(self.extent) != 3 or any(e < 1 for e in self.extent):
                raise LatticeError(f"bad cubic shape extent {self.extent}")
        elif self.kind == "toric-pegasus":
            if len(self.extent) != 1 or self.extent[0] < 1:
                raise LatticeError(f"bad Pegasus shape extent {self.extent}")
        else:
            raise LatticeError(f"unknown shape kind {self.kind!r}")

    def rotations(self):
        """Distinct axis rotations (cubic cuboids only)."""
        if self.kind != "cubic":
            return [self]
        seen, out = set(), []
        a, b, c = self.extent
        for ext in ((a, b, c), (a, c, b), (c, a, b)):
            if ext not in seen:
                seen.add(ext)
                out.append(SubspaceShape("cubic", ext))
        return out


@dataclass(frozen=True)
class SubspaceSelection:
    shape: SubspaceShape
    offset: tuple
    members: np.ndarray          # vertex ids, deterministic order
    boundary: np.ndarray         # vertex ids outside, adjacent to members

    @property
    def member_set(self):
        return frozenset(int(v) for v in self.members)


def _check_shape_fits(topology: LatticeTopology, shape: SubspaceShape):
    if shape.kind != topology.kind:
        raise LatticeError(
            f"shape kind {shape.kind!r} does not match lattice {topology.kind!r}")
    L = topology.L
    if any(e > L for e in shape.extent):
        raise LatticeError(
            f"shape extent {shape.extent} exceeds lattice scale L={L}")


def origin_members(topology: LatticeTopology, shape: SubspaceShape) -> np.ndarray:
    """Member ids of the shape rooted at the origin (offset zero)."""
    _check_shape_fits(topology, shape)
    L = topology.L
    if shape.kind == "cubic":
        a, b, c = shape.extent
        g = np.mgrid[0:a, 0:b, 0:c].reshape(3, -1)
        return topology.ids_from_coords((g[0], g[1], g[2]))
    (ms,) = shape.extent
    ids = []
    for t, cw, cz in pegasus_window_cells(ms):
        for u, w, k, z in pegasus_cell_coords(t, cw, cz):
            ids.append(((u * L + (w % L)) * 12 + k) * L + (z % L))
    return np.array(ids, dtype=np.int64)


def subspace_offsets(topology: LatticeTopology, shape: SubspaceShape) -> list:
    _check_shape_fits(topology, shape)
    L = topology.L
    if shape.kind == "cubic":
        return [(d1, d2, d3) for d1 in range(L) for d2 in range(L)
                for d3 in range(L)]
    return [(dw, dz) for dw in range(L) for dz in range(L)]


def members_at(topology, shape, offset) -> np.ndarray:
    return topology.displace_ids(origin_members(topology, shape), offset)


def boundary_of(topology: LatticeTopology, members: np.ndarray) -> np.ndarray:
    indptr, indices = topology.neighbors_csr()
    in_r = np.zeros(topology.n_vertices, dtype=bool)
    in_r[members] = True
    out = set()
    for v in members:
        for nb in indices[indptr[v]:indptr[v + 1]]:
            if not in_r[nb]:
                out.add(int(nb))
    return np.array(sorted(out), dtype=np.int64)


def selection_at(topology, shape, offset) -> SubspaceSelection:
    members = members_at(topology, shape, offset)
    return SubspaceSelection(shape, tuple(offset), members,
                             boundary_of(topology, members))


def enumerate_subspaces(topology, shape) -> list:
    """One SubspaceSelection per distinct member set over all offsets."""
    seen = set()
    out = []
    for off in subspace_offsets(topology, shape):
        members = members_at(topology, shape, off)
        key = frozenset(int(v) for v in members)
        if key in seen:
            continue
        seen.add(key)
        out.append(SubspaceSelection(shape, off, members,
                                     boundary_of(topology, members)))
    return out


# --- export ---

def export_topology(topology: LatticeTopology, path):
    """Write the topology as structured text: header, vertex lines
    (id + coordinates), edge lines (coordinate pairs)."""
    with open(path, "w") as f:
        f.write("# latticelnls topology v1\n")
        f.write(f"kind {topology.kind}\n")
        f.write(f"L {topology.L}\n")
        f.write(f"vertices {topology.n_vertices}\n")
        for i, c in enumerate(topology.coords):
            f.write(f"{i} " + " ".join(str(x) for x in c) + "\n")
        f.write(f"edges {topology.n_edges}\n")
        for a, b in topology.edges:
            ca = topology.coords[a]
            cb = topology.coords[b]
            f.write(" ".join(str(x) for x in ca) + "  "
                    + " ".join(str(x) for x in cb) + "\n")


def build(kind: str, L: int) -> LatticeTopology:
    if kind == "cubic":
        return build_cubic(L)
    if kind == "toric-pegasus":
        return build_toric_pegasus(L)
    raise LatticeError(f"unknown lattice kind {kind!r}")
