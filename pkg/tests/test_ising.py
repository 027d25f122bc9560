import numpy as np
import pytest

from conftest import all_states, batch_energies, random_graph_model
from latticelnls.generators import gen_pm_j
from latticelnls.ising import (IsingError, apply_proposal, build_subproblem,
                               check_state, energy, gauge_transform,
                               local_fields, random_state, read_instance,
                               write_instance)
from latticelnls.lattice import SubspaceShape, build, selection_at


def test_energy_matches_explicit_sum(rng):
    model = random_graph_model(12, rng)
    x = random_state(model.n, rng)
    acc = sum(model.h[i] * x[i] for i in range(model.n))
    for (a, b), jv in zip(model.topology.edges, model.j):
        acc += jv * x[a] * x[b]
    assert energy(model, x) == pytest.approx(acc, abs=1e-12)


def test_local_fields_predict_flip_deltas(rng):
    model = random_graph_model(10, rng)
    x = random_state(model.n, rng)
    f = local_fields(model, x)
    base = energy(model, x)
    for i in range(model.n):
        y = x.copy()
        y[i] = -y[i]
        assert energy(model, y) - base == pytest.approx(-2.0 * x[i] * f[i],
                                                        abs=1e-12)


def test_check_state_rejects_bad_states(rng):
    model = random_graph_model(6, rng)
    with pytest.raises(IsingError):
        check_state(model, np.ones(5, dtype=np.int8))
    with pytest.raises(IsingError):
        check_state(model, np.zeros(6, dtype=np.int8))


def test_model_shape_validation(rng):
    model = random_graph_model(6, rng)
    from latticelnls.ising import IsingModel
    with pytest.raises(IsingError):
        IsingModel(model.topology, np.zeros(5), model.j)
    with pytest.raises(IsingError):
        IsingModel(model.topology, model.h, model.j[:-1])


def test_weighted_csr_symmetric(rng):
    model = random_graph_model(9, rng)
    indptr, indices, weights = model.weighted_csr()
    for (a, b), jv in zip(model.topology.edges, model.j):
        sl = slice(indptr[a], indptr[a + 1])
        assert weights[sl][indices[sl] == b][0] == jv
        sl = slice(indptr[b], indptr[b + 1])
        assert weights[sl][indices[sl] == a][0] == jv


def test_edge_values_lookup(rng):
    model = random_graph_model(8, rng)
    e = model.topology.edges
    assert np.array_equal(model.edge_values(e[:, 1], e[:, 0]), model.j)
    edge_set = {tuple(pair) for pair in e.tolist()}
    non = next((a, b) for a in range(8) for b in range(a + 1, 8)
               if (a, b) not in edge_set)
    with pytest.raises(IsingError):
        model.edge_values(np.array([non[0]]), np.array([non[1]]))


def test_subproblem_energy_differs_by_constant(rng):
    # H(full state with members replaced by y) - H_R(y) must not depend
    # on y: the subproblem captures every y-dependent term.
    top = build("cubic", 4)
    model = gen_pm_j(top, 3)
    sel = selection_at(top, SubspaceShape("cubic", (2, 3, 2)), (1, 0, 2))
    state = random_state(model.n, rng)
    sub = build_subproblem(model, state, sel)
    consts = []
    for _ in range(8):
        y = random_state(sub.n, rng)
        full = state.copy()
        full[sel.members] = y
        consts.append(energy(model, full) - sub.energy(y))
    assert np.ptp(consts) < 1e-12


def test_subproblem_batch_energies(rng):
    top = build("cubic", 3)
    model = gen_pm_j(top, 5)
    sel = selection_at(top, SubspaceShape("cubic", (2, 2, 2)), (0, 1, 1))
    state = random_state(model.n, rng)
    sub = build_subproblem(model, state, sel)
    ys = all_states(sub.n)
    singles = np.array([sub.energy(y) for y in ys[:16]])
    assert np.allclose(sub.energies(ys[:16]), singles, atol=1e-12)


def test_apply_proposal_delta(rng):
    top = build("cubic", 3)
    model = gen_pm_j(top, 1)
    sel = selection_at(top, SubspaceShape("cubic", (2, 2, 1)), (2, 2, 0))
    state = random_state(model.n, rng)
    proposal = random_state(len(sel.members), rng)
    new_state, delta = apply_proposal(model, state, sel, proposal)
    assert energy(model, new_state) - energy(model, state) == \
        pytest.approx(delta, abs=1e-12)
    assert np.array_equal(new_state[sel.members], proposal)
    with pytest.raises(IsingError):
        apply_proposal(model, state, sel, proposal[:-1])


def test_gauge_transform_preserves_spectrum(rng):
    model = random_graph_model(8, rng)
    s = random_state(model.n, rng)
    gauged = gauge_transform(model, s)
    states = all_states(model.n)
    original = np.sort(batch_energies(model, states))
    transformed = np.sort(batch_energies(gauged, states))
    assert np.allclose(original, transformed, atol=1e-12)
    x = random_state(model.n, rng)
    assert energy(gauged, s * x) == pytest.approx(energy(model, x),
                                                  abs=1e-12)


def test_instance_file_round_trip(tmp_path, rng):
    for kind, L in (("cubic", 3), ("toric-pegasus", 2)):
        top = build(kind, L)
        model = gen_pm_j(top, 7)
        model = type(model)(top, rng.uniform(-1, 1, top.n_vertices),
                            model.j, dict(model.meta))
        path = tmp_path / f"{kind}.txt"
        write_instance(model, path)
        loaded = read_instance(path)
        assert np.array_equal(loaded.h, model.h)
        assert np.array_equal(loaded.j, model.j)
        assert loaded.meta["ensemble"] == "pmj"
        assert loaded.meta["seed"] == 7
        assert loaded.topology.kind == kind


def test_read_instance_rejects_other_files(tmp_path):
    path = tmp_path / "bogus.txt"
    path.write_text("# something else\n")
    with pytest.raises(IsingError):
        read_instance(path)
