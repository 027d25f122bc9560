"""Ising models over lattice topologies.

Energy convention: H(x) = sum_{i<j} J_ij x_i x_j + sum_i h_i x_i with
x in {-1,+1}^N.  Couplers are stored per topology edge; fields per
vertex.  Models are immutable; states are plain int8 numpy arrays owned
by one worker at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeTopology, SubspaceSelection, build


class IsingError(ValueError):
    pass


@dataclass(frozen=True)
class IsingModel:
    topology: LatticeTopology
    h: np.ndarray      # (N,) float64
    j: np.ndarray      # (E,) float64, aligned with topology.edges
    meta: dict = field(default_factory=dict, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.h) != self.topology.n_vertices:
            raise IsingError("field vector length does not match vertex count")
        if len(self.j) != self.topology.n_edges:
            raise IsingError("coupler vector length does not match edge count")

    @property
    def n(self) -> int:
        return self.topology.n_vertices

    def weighted_csr(self):
        """Adjacency with coupler weights: (indptr, indices, weights)."""
        if "csr" not in self._cache:
            indptr, indices = self.topology.neighbors_csr()
            weights = np.zeros(len(indices))
            edges = self.topology.edges
            for (a, b), jv in zip(edges, self.j):
                ia = indptr[a] + np.searchsorted(
                    indices[indptr[a]:indptr[a + 1]], b)
                ib = indptr[b] + np.searchsorted(
                    indices[indptr[b]:indptr[b + 1]], a)
                weights[ia] = jv
                weights[ib] = jv
            self._cache["csr"] = (indptr, indices, weights)
        return self._cache["csr"]

    def edge_values(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coupler values for vertex-id pairs (vectorized lookup)."""
        if "edge_keys" not in self._cache:
            n = self.n
            e = self.topology.edges
            self._cache["edge_keys"] = e[:, 0] * n + e[:, 1]
        keys = self._cache["edge_keys"]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        q = lo * self.n + hi
        pos = np.searchsorted(keys, q)
        if np.any(pos >= len(keys)) or np.any(keys[pos] != q):
            raise IsingError("pair is not a topology edge")
        return self.j[pos]


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.integers(0, 2, n, dtype=np.int8) * 2 - 1).astype(np.int8)


def check_state(model: IsingModel, state: np.ndarray):
    state = np.asarray(state)
    if state.shape != (model.n,):
        raise IsingError(
            f"state has shape {state.shape}, expected ({model.n},)")
    if not np.all(np.abs(state) == 1):
        raise IsingError("state values must be -1 or +1")
    return state


def energy(model: IsingModel, state: np.ndarray) -> float:
    state = check_state(model, state)
    e = model.topology.edges
    x = state.astype(np.float64)
    return float(model.j @ (x[e[:, 0]] * x[e[:, 1]]) + model.h @ x)


def local_fields(model: IsingModel, state: np.ndarray) -> np.ndarray:
    """f_i = h_i + sum_j J_ij x_j; flipping i changes H by -2 x_i f_i."""
    e = model.topology.edges
    x = state.astype(np.float64)
    f = model.h.copy()
    np.add.at(f, e[:, 0], model.j * x[e[:, 1]])
    np.add.at(f, e[:, 1], model.j * x[e[:, 0]])
    return f


@dataclass(frozen=True)
class Subproblem:
    """Conditional minimization over a subspace R: internal couplers plus
    effective fields h_i + sum_{j not in R} J_ij x_j."""
    members: np.ndarray        # global vertex ids
    edges: np.ndarray          # (Ei, 2) member-local indices
    j: np.ndarray              # (Ei,)
    h_eff: np.ndarray          # (|R|,)
    conditioned_on: np.ndarray  # snapshot of the conditioning state
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.members)

    def weighted_csr(self):
        """Inner-graph adjacency with coupler weights."""
        if "csr" not in self._cache:
            n = self.n
            e = self.edges
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
            w = np.concatenate([self.j, self.j])
            order = np.argsort(src, kind="stable")
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
            self._cache["csr"] = (indptr, dst[order], w[order])
        return self._cache["csr"]

    def energies(self, assignments: np.ndarray) -> np.ndarray:
        """H_R(y) for each row of assignments, shape (k, |R|)."""
        y = np.atleast_2d(assignments).astype(np.float64)
        quad = (y[:, self.edges[:, 0]] * y[:, self.edges[:, 1]]) @ self.j
        return quad + y @ self.h_eff

    def energy(self, assignment: np.ndarray) -> float:
        return float(self.energies(assignment)[0])


def build_subproblem(model: IsingModel, state: np.ndarray,
                     selection: SubspaceSelection) -> Subproblem:
    state = check_state(model, state)
    members = selection.members
    n = model.n
    local = np.full(n, -1, dtype=np.int64)
    local[members] = np.arange(len(members))
    e = model.topology.edges
    la = local[e[:, 0]]
    lb = local[e[:, 1]]
    both = (la >= 0) & (lb >= 0)
    inner_edges = np.stack([la[both], lb[both]], axis=1)
    inner_j = model.j[both]
    h_eff = model.h[members].astype(np.float64).copy()
    x = state.astype(np.float64)
    cross_a = (la >= 0) & (lb < 0)     # member in column 0
    cross_b = (lb >= 0) & (la < 0)
    np.add.at(h_eff, la[cross_a], model.j[cross_a] * x[e[cross_a, 1]])
    np.add.at(h_eff, lb[cross_b], model.j[cross_b] * x[e[cross_b, 0]])
    return Subproblem(members, inner_edges, inner_j, h_eff, state.copy())


def apply_proposal(model: IsingModel, state: np.ndarray,
                   selection: SubspaceSelection,
                   assignment: np.ndarray):
    """Replace the subspace restriction by `assignment`; return the new
    state and the exact energy change."""
    state = check_state(model, state)
    assignment = np.asarray(assignment, dtype=np.int8)
    if assignment.shape != (len(selection.members),):
        raise IsingError(
            f"assignment length {assignment.shape} does not cover the "
            f"member set of size {len(selection.members)}")
    if not np.all(np.abs(assignment) == 1):
        raise IsingError("assignment values must be -1 or +1")
    sub = build_subproblem(model, state, selection)
    delta = sub.energy(assignment) - sub.energy(state[selection.members])
    new_state = state.copy()
    new_state[selection.members] = assignment
    return new_state, float(delta)


def gauge_transform(model: IsingModel, sign_vector: np.ndarray) -> IsingModel:
    """h'_i = s_i h_i, J'_ij = s_i s_j J_ij; the map x -> s*x preserves
    the energy spectrum."""
    s = np.asarray(sign_vector)
    if s.shape != (model.n,) or not np.all(np.abs(s) == 1):
        raise IsingError("sign vector must be +/-1 of length N")
    s = s.astype(np.float64)
    e = model.topology.edges
    return IsingModel(model.topology, model.h * s,
                      model.j * s[e[:, 0]] * s[e[:, 1]],
                      dict(model.meta))


# --- instance file format ---

def _fmt(v: float) -> str:
    return repr(float(v))


def write_instance(model: IsingModel, path):
    """Structured-text instance file; round-trips bit-exactly."""
    top = model.topology
    with open(path, "w") as f:
        f.write("# latticelnls instance v1\n")
        f.write(f"kind {top.kind}\n")
        f.write(f"L {top.L}\n")
        f.write(f"ensemble {model.meta.get('ensemble', 'unknown')}\n")
        f.write(f"seed {model.meta.get('seed', '-')}\n")
        f.write(f"fields {top.n_vertices}\n")
        for c, hv in zip(top.coords, model.h):
            f.write(" ".join(str(x) for x in c) + " " + _fmt(hv) + "\n")
        f.write(f"couplers {top.n_edges}\n")
        for (a, b), jv in zip(top.edges, model.j):
            f.write(" ".join(str(x) for x in top.coords[a]) + "  "
                    + " ".join(str(x) for x in top.coords[b]) + " "
                    + _fmt(jv) + "\n")


def read_instance(path) -> IsingModel:
    with open(path) as f:
        header = f.readline()
        if not header.startswith("# latticelnls instance"):
            raise IsingError(f"not an instance file: {path}")
        kind = f.readline().split()[1]
        L = int(f.readline().split()[1])
        ensemble = f.readline().split()[1]
        seed = f.readline().split()[1]
        top = build(kind, L)
        nf = int(f.readline().split()[1])
        h = np.zeros(top.n_vertices)
        for _ in range(nf):
            parts = f.readline().split()
            coord = tuple(int(x) for x in parts[:-1])
            h[top.vertex_id(coord)] = float(parts[-1])
        ne = int(f.readline().split()[1])
        if ne != top.n_edges:
            raise IsingError("coupler count does not match topology")
        j = np.zeros(top.n_edges)
        nc = 3 if kind == "cubic" else 4
        edge_index = {(int(a), int(b)): i
                      for i, (a, b) in enumerate(top.edges)}
        for _ in range(ne):
            parts = f.readline().split()
            ca = tuple(int(x) for x in parts[:nc])
            cb = tuple(int(x) for x in parts[nc:2 * nc])
            a = top.vertex_id(ca)
            b = top.vertex_id(cb)
            j[edge_index[(min(a, b), max(a, b))]] = float(parts[-1])
    meta = {"ensemble": ensemble}
    meta["seed"] = seed if seed == "-" else int(seed)
    if seed == "-":
        meta.pop("seed")
    return IsingModel(top, h, j, meta)
