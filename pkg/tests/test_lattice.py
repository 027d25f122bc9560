import numpy as np
import pytest

from latticelnls.lattice import (LatticeError, SubspaceShape, build,
                                 build_cubic, build_toric_pegasus,
                                 enumerate_subspaces, export_topology,
                                 origin_members, pegasus_fabric,
                                 selection_at, subspace_offsets)


def test_cubic_counts_and_degree():
    for L in (3, 4, 5):
        top = build_cubic(L)
        assert top.n_vertices == L ** 3
        assert top.n_edges == 3 * L ** 3
        assert all(top.degree(v) == 6 for v in range(top.n_vertices))


def test_toric_pegasus_counts_and_degree():
    for L in (3, 4):
        top = build_toric_pegasus(L)
        assert top.n_vertices == 24 * L ** 2
        assert top.n_edges == 180 * L ** 2
        assert all(top.degree(v) == 15 for v in range(top.n_vertices))


def test_toric_pegasus_minimum_scale_degeneracy():
    # At L=2 the two wrap directions identify some neighbor pairs, so a
    # few parallel edges collapse and the graph is not 15-regular.
    top = build_toric_pegasus(2)
    assert top.n_vertices == 96
    assert top.n_edges < 180 * 4
    assert all(top.degree(v) < 15 for v in range(96))


def test_minimum_scale_rejected():
    with pytest.raises(LatticeError):
        build_cubic(2)
    with pytest.raises(LatticeError):
        build_toric_pegasus(1)
    with pytest.raises(LatticeError):
        build("hex", 4)


def test_vertex_id_coordinate_round_trip():
    for kind, L in (("cubic", 4), ("toric-pegasus", 3)):
        top = build(kind, L)
        ids = np.arange(top.n_vertices)
        cols = top.coords_from_ids(ids)
        assert np.array_equal(top.ids_from_coords(cols), ids)
        for v in (0, 7, top.n_vertices - 1):
            assert top.vertex_id(top.coords[v]) == v


def test_displacement_is_automorphism():
    for kind, L, disps in (
            ("cubic", 3, [(1, 0, 0), (0, 2, 1), (2, 2, 2)]),
            ("toric-pegasus", 2, [(1, 0), (0, 1), (1, 1)])):
        top = build(kind, L)
        edge_set = {tuple(e) for e in top.edges.tolist()}
        for disp in disps:
            a = top.displace_ids(top.edges[:, 0], disp)
            b = top.displace_ids(top.edges[:, 1], disp)
            moved = {(min(x, y), max(x, y)) for x, y in zip(a.tolist(),
                                                            b.tolist())}
            assert moved == edge_set


def test_pegasus_fabric_published_counts():
    # P[16] fabric: 5640 qubits, 40484 couplers.
    coords, edges = pegasus_fabric(16)
    assert len(coords) == 5640
    assert len(set(map(tuple, (tuple(sorted(e)) for e in edges)))) == 40484
    coords2, _ = pegasus_fabric(2)
    assert len(coords2) == 24 * 2 * 1 - 8 * 1


def test_origin_members_sizes():
    top = build_cubic(5)
    shape = SubspaceShape("cubic", (2, 3, 4))
    assert len(origin_members(top, shape)) == 24
    ptop = build_toric_pegasus(3)
    pshape = SubspaceShape("toric-pegasus", (2,))
    members = origin_members(ptop, pshape)
    assert len(members) == 24 * 4
    assert len(set(members.tolist())) == len(members)


def test_shape_validation():
    with pytest.raises(LatticeError):
        SubspaceShape("cubic", (2, 2))
    with pytest.raises(LatticeError):
        SubspaceShape("toric-pegasus", (0,))
    top = build_cubic(3)
    with pytest.raises(LatticeError):
        origin_members(top, SubspaceShape("cubic", (4, 2, 2)))
    with pytest.raises(LatticeError):
        origin_members(top, SubspaceShape("toric-pegasus", (1,)))


def test_rotations():
    assert len(SubspaceShape("cubic", (2, 2, 2)).rotations()) == 1
    rots = SubspaceShape("cubic", (4, 4, 2)).rotations()
    assert {r.extent for r in rots} == {(4, 4, 2), (4, 2, 4), (2, 4, 4)}
    assert len(SubspaceShape("toric-pegasus", (2,)).rotations()) == 1


def test_selection_boundary():
    top = build_cubic(4)
    sel = selection_at(top, SubspaceShape("cubic", (2, 2, 2)), (1, 2, 3))
    member_set = set(sel.members.tolist())
    boundary = set(sel.boundary.tolist())
    assert not member_set & boundary
    indptr, indices = top.neighbors_csr()
    for v in boundary:
        nbrs = set(indices[indptr[v]:indptr[v + 1]].tolist())
        assert nbrs & member_set
    reachable = set()
    for v in member_set:
        reachable |= set(indices[indptr[v]:indptr[v + 1]].tolist())
    assert reachable - member_set == boundary


def test_enumerate_subspaces_dedupes_offsets():
    top = build_cubic(4)
    assert len(enumerate_subspaces(top, SubspaceShape("cubic", (4, 4, 4)))) == 1
    assert len(enumerate_subspaces(top, SubspaceShape("cubic", (4, 4, 1)))) == 4
    assert len(subspace_offsets(top, SubspaceShape("cubic", (2, 2, 2)))) == 64


def test_displaced_members_cover_lattice():
    top = build_toric_pegasus(2)
    shape = SubspaceShape("toric-pegasus", (1,))
    covered = set()
    for off in subspace_offsets(top, shape):
        sel = selection_at(top, shape, off)
        covered |= set(sel.members.tolist())
    assert covered == set(range(top.n_vertices))


def test_export_topology(tmp_path):
    top = build_cubic(3)
    path = tmp_path / "topo.txt"
    export_topology(top, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# latticelnls topology")
    assert f"vertices {top.n_vertices}" in lines
    assert f"edges {top.n_edges}" in lines
    assert len(lines) == 5 + top.n_vertices + top.n_edges
