import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphwave.dynamics import (
    NodeCondition,
    SimulationError,
    action,
    energies,
    node_residual,
    read_control_csv,
    read_trajectory_csv,
    simulate,
    stencil_residual,
    step,
    write_control_csv,
    write_trajectory_csv,
)
from graphwave.graph import GraphSpec, build_graph, interval_graph, path_graph, star_graph

from star_tables import BY_CONDITION, as_float


def cyclic_graph():
    """Six vertices with a 2-3-4 cycle; v1, v5 controlled, v6 clamped."""
    spec = GraphSpec(
        edges=[(1, 1, 2, 3), (2, 2, 3, 4), (3, 3, 4, 2), (4, 4, 2, 5), (5, 3, 5, 3), (6, 4, 6, 2)],
        boundary={1: "control", 5: "control", 6: "clamped"},
    )
    return build_graph(spec)


CONDITIONS = ["direct", "unit-mass", "matched", "mass=0.3", "mass=-0.4"]


def test_presets():
    g = star_graph([3, 3, 3])
    assert NodeCondition.direct_kirchhoff(g).mass(4) == -1.0
    assert NodeCondition.unit_mass(g).mass(4) == 0.0
    assert NodeCondition.matched(g).mass(4) == 0.5
    assert NodeCondition.parse("mass=0.25", g).mass(4) == 0.25
    with pytest.raises(SimulationError):
        NodeCondition.parse("kirchhoff", g)
    with pytest.raises(SimulationError):
        NodeCondition({4: -1.0 + 1e-12})


@pytest.mark.parametrize("name", ["direct", "unit-mass", "matched"])
def test_star_tables(name):
    g = star_graph([3, 3, 3])
    traj = simulate(g, NodeCondition.parse(name, g), {1: [1.0]}, 6)
    expected = as_float(BY_CONDITION[name])
    for row, t in zip(expected, range(6, -2, -1)):
        got = [traj.u(1, j, t) for j in range(4)] + [traj.u(2, j, t) for j in (2, 1, 0)]
        assert np.allclose(got, row, rtol=0, atol=1e-12), (name, t)
        assert np.allclose([traj.u(3, j, t) for j in (2, 1, 0)], row[4:], rtol=0, atol=1e-12)


def test_matched_centre_update_is_two_thirds_rule():
    g = star_graph([3, 3, 3])
    c = NodeCondition.matched(g)
    traj = simulate(g, c, {1: [1.0]}, 6)
    centre = traj.node(4)
    for t in range(0, 6):
        nb = sum(traj.u(e, 2, t) for e in (1, 2, 3))
        assert centre[t + 2] == pytest.approx(2 / 3 * nb - centre[t], abs=1e-15)
    assert centre[3 + 1] == pytest.approx(2 / 3, abs=1e-12)


def test_unit_mass_centre_resonance():
    g = star_graph([3, 3, 3])
    traj = simulate(g, NodeCondition.unit_mass(g), {1: [1.0]}, 6)
    assert np.allclose(traj.node(4)[4:], [1, -1, 2, -4], atol=1e-12)


def test_single_step_matches_simulate(rng):
    g = cyclic_graph()
    c = NodeCondition.matched(g)
    controls = {1: rng.standard_normal(9), 5: rng.standard_normal(9)}
    traj = simulate(g, c, controls, 8)
    for t in range(0, 8):
        nxt = step(g, c, traj.layer(t), traj.layer(t - 1), controls, t)
        np.testing.assert_allclose(nxt, traj.layer(t + 1), rtol=0, atol=1e-14)


def test_rest_is_fixed_point():
    g = cyclic_graph()
    traj = simulate(g, NodeCondition.matched(g), {1: [], 5: [0.0, 0.0]}, 10)
    assert not traj.field.any()
    for t in range(1, 11):
        r = energies(traj, t)
        assert r.kinetic == 0.0 and r.potential == 0.0


def test_potential_energy_after_one_step():
    g = interval_graph(3)
    traj = simulate(g, NodeCondition.matched(g), {1: [1.0]}, 3)
    assert list(traj.edge_array(1)[:, 2]) == [0.0, 1.0, 0.0, 0.0]
    assert energies(traj, 1).potential == 1.0
    # site 1 rises 0 -> 1, v1 falls 1 -> 0
    assert energies(traj, 1).kinetic == 1.0


def test_simulate_errors():
    g = cyclic_graph()
    c = NodeCondition.matched(g)
    with pytest.raises(SimulationError, match="missing control"):
        simulate(g, c, {1: [1.0]}, 3)
    with pytest.raises(SimulationError, match="not a controlled"):
        simulate(g, c, {1: [1.0], 5: [0.0], 6: [1.0]}, 3)
    with pytest.raises(SimulationError, match="horizon"):
        simulate(g, c, {1: [1.0], 5: [0.0]}, -1)
    with pytest.raises(SimulationError, match="no nodal mass"):
        simulate(g, NodeCondition({2: 0.5}), {1: [1.0], 5: [0.0]}, 3)
    with pytest.raises(IndexError):
        energies(simulate(g, c, {1: [1.0], 5: [0.0]}, 3), 0)


def test_controls_extend_by_zero():
    g = interval_graph(4)
    c = NodeCondition.matched(g)
    a = simulate(g, c, {1: [1.0, 2.0]}, 12)
    b = simulate(g, c, {1: [1.0, 2.0] + [0.0] * 20}, 12)
    np.testing.assert_array_equal(a.field, b.field)


@pytest.mark.parametrize("name", CONDITIONS)
def test_residuals_vanish(name, rng):
    g = cyclic_graph()
    c = NodeCondition.parse(name, g)
    traj = simulate(g, c, {1: rng.standard_normal(25), 5: rng.standard_normal(25)}, 24)
    # resonant conditions grow, so the bound scales with the field
    scale = max(1.0, np.max(np.abs(traj.field)))
    assert np.max(np.abs(stencil_residual(traj))) <= 1e-12 * scale
    for res in node_residual(traj, c).values():
        assert np.max(np.abs(res)) <= 1e-12 * scale


def test_batched_run_equals_individual_runs(rng):
    g = cyclic_graph()
    c = NodeCondition.matched(g)
    f1 = rng.standard_normal((15, 4))
    f5 = rng.standard_normal(15)
    batched = simulate(g, c, {1: f1, 5: f5}, 14)
    for b in range(4):
        single = simulate(g, c, {1: f1[:, b], 5: f5}, 14)
        np.testing.assert_allclose(batched.field[..., b], single.field, rtol=0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    st.sampled_from(CONDITIONS),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.integers(0, 2**32 - 1),
)
def test_linearity(name, alpha, beta, seed):
    rng = np.random.default_rng(seed)
    g = cyclic_graph()
    c = NodeCondition.parse(name, g)
    f = {1: rng.standard_normal(13), 5: rng.standard_normal(13)}
    h = {1: rng.standard_normal(13), 5: rng.standard_normal(13)}
    mix = {v: alpha * f[v] + beta * h[v] for v in f}
    a, b, m = (simulate(g, c, x, 12).field for x in (f, h, mix))
    scale = max(1.0, np.max(np.abs(a)), np.max(np.abs(b)))
    assert np.max(np.abs(m - (alpha * a + beta * b))) <= 1e-12 * scale


def site_distance(g, source):
    dist = g.lattice_distance(source)
    out = {}
    for e in g.edges.values():
        for j in range(e.n + 1):
            out[e.id, j] = min(dist[e.start] + j, dist[e.end] + e.n - j)
    return out


@pytest.mark.parametrize("name", ["unit-mass", "matched", "mass=0.3"])
def test_finite_propagation_speed(name, rng):
    g = cyclic_graph()
    traj = simulate(g, NodeCondition.parse(name, g), {1: rng.standard_normal(20) + 3, 5: []}, 19)
    for (e, j), d in site_distance(g, 1).items():
        for t in range(-1, min(d, 20)):
            assert traj.u(e, j, t) == 0.0, (e, j, t)
        if d <= 19 and (e, j) not in ((5, 3), (6, 2)):
            assert traj.u(e, j, d) != 0.0


def test_direct_condition_crosses_vertex_one_step_early():
    g = star_graph([3, 3, 3])
    traj = simulate(g, NodeCondition.direct_kirchhoff(g), {1: [1.0]}, 4)
    # lattice distance to the centre is 3, yet it moves at t = 2
    assert traj.node(4)[2 + 1] == pytest.approx(1 / 3)


@pytest.mark.parametrize("lengths", [(3, 4), (2, 2), (5, 2)])
def test_degree_two_matched_vertex_merges(lengths, rng):
    n1, n2 = lengths
    path = path_graph(lengths)
    line = interval_graph(n1 + n2)
    f = rng.standard_normal(40)
    a = simulate(path, NodeCondition.matched(path), {1: f}, 39)
    b = simulate(line, NodeCondition.matched(line), {1: f}, 39)
    merged = np.concatenate([a.edge_array(1), a.edge_array(2)[1:]])
    np.testing.assert_array_equal(merged, b.edge_array(1))


def test_time_reversal_of_interior_stencil(rng):
    g = path_graph([6, 5])
    f = rng.integers(-5, 6, 30).astype(float)
    traj = simulate(g, NodeCondition.matched(g), {1: f}, 29)
    for e in g.edges:
        u = traj.edge_array(e)  # [j, t + 1]
        for t in range(0, 29):
            rebuilt = u[2:, t + 1] + u[:-2, t + 1] - u[1:-1, t + 2]
            np.testing.assert_array_equal(rebuilt, u[1:-1, t])


def test_time_reversal_generic_graph(rng):
    g = cyclic_graph()
    c = NodeCondition.matched(g)
    traj = simulate(g, c, {1: rng.standard_normal(20), 5: rng.standard_normal(20)}, 19)
    for e in g.edges:
        u = traj.edge_array(e)  # [j, t + 1]
        for t in range(1, 19):
            rebuilt = u[2:, t + 1] + u[:-2, t + 1] - u[1:-1, t + 2]
            np.testing.assert_allclose(rebuilt, u[1:-1, t], rtol=0, atol=1e-12)


def _interior_perturbation(g, horizon, site, t, eps=1.0):
    h = np.zeros((horizon + 2, g.n_sites))
    h[t + 1, site] = eps
    return h


def _bilinear(traj, h, c):
    from graphwave.dynamics import Trajectory

    plus = Trajectory(traj.graph, traj.field + h)
    minus = Trajectory(traj.graph, traj.field - h)
    return (action(plus, c) - action(minus, c)) / 2


@pytest.mark.parametrize("name", ["direct", "unit-mass", "matched", "mass=0.3"])
def test_action_is_stationary(name, rng):
    from graphwave.dynamics import Trajectory

    g = cyclic_graph()
    c = NodeCondition.parse(name, g)
    T = 12
    traj = simulate(g, c, {1: rng.standard_normal(T + 1), 5: rng.standard_normal(T + 1)}, T)
    free = [s for s in range(g.n_sites) if s not in {g.vertex_site(v) for v in g.boundary}]
    s0 = action(traj, c)
    for site in free:
        for t in (1, T // 2, T - 1):
            h = _interior_perturbation(g, T, site, t)
            assert abs(_bilinear(traj, h, c)) <= 1e-10
            eps = 1e-6
            moved = action(Trajectory(g, traj.field + eps * h), c)
            quad = action(Trajectory(g, h), c)
            rounding = 8 * np.finfo(float).eps * abs(s0) / eps
            assert abs((moved - s0) / eps - eps * quad) <= 1e-6 + rounding
    # random admissible direction
    h = rng.standard_normal(traj.field.shape)
    h[[0, 1, T + 1]] = 0.0
    h[:, [g.vertex_site(v) for v in g.boundary]] = 0.0
    assert abs(_bilinear(traj, h, c)) <= 1e-9


def test_final_layer_perturbation_changes_action(rng):
    g = cyclic_graph()
    c = NodeCondition.matched(g)
    T = 12
    traj = simulate(g, c, {1: rng.standard_normal(T + 1), 5: rng.standard_normal(T + 1)}, T)
    site = int(g.edge_sites(2)[2])
    h = _interior_perturbation(g, T, site, T)
    assert abs(_bilinear(traj, h, c)) > 1e-6


def test_trajectory_csv(rng, tmp_path):
    g = star_graph([3, 2, 4])
    traj = simulate(g, NodeCondition.matched(g), {1: rng.standard_normal(6)}, 5)
    text = write_trajectory_csv(traj)
    lines = text.splitlines()
    assert lines[0] == "edge,j,t,value"
    keys = [tuple(int(x) for x in ln.split(",")[:3]) for ln in lines[1:]]
    assert keys == sorted(keys, key=lambda k: (k[0], k[2], k[1]))
    assert len(keys) == sum(e.n + 1 for e in g.edges.values()) * 7
    back = read_trajectory_csv(g, text)
    np.testing.assert_array_equal(back.field, traj.field)


def test_control_csv_round_trip():
    sig = np.array([0.5, 0.0, -1.25])
    np.testing.assert_array_equal(read_control_csv(write_control_csv(sig)), sig)
    assert read_control_csv("t,value\n").size == 0
    np.testing.assert_array_equal(read_control_csv("t,value\n3,2\n"), [0, 0, 0, 2])
    with pytest.raises(SimulationError):
        read_control_csv("time,value\n0,1\n")
    with pytest.raises(SimulationError):
        read_control_csv("t,value\n0,abc\n")
