import math

import numpy as np
import pytest

from oracles import kron, thermal_state_eigenbasis, w_matrix
from thermalcluster import bounds as b

W_STAR = math.sqrt(2) - 1


def _check_density(rho):
    assert np.allclose(rho, rho.T.conj(), atol=1e-12)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


@pytest.mark.parametrize("omega", [0.0, 0.2, W_STAR, 0.7, 1.0])
def test_bond_state_spectrum(omega):
    rho = b.bond_state(omega)
    _check_density(rho)
    expected = sorted([(1 + omega) ** 2 / 4, (1 - omega) ** 2 / 4, (1 - omega**2) / 4, (1 - omega**2) / 4])
    assert np.allclose(np.linalg.eigvalsh(rho), expected, atol=1e-14)


def test_bond_state_limits():
    assert np.allclose(b.bond_state(0.0), np.eye(4) / 4)
    rho = b.bond_state(1.0)
    assert np.allclose(rho @ rho, rho)
    with pytest.raises(ValueError):
        b.bond_state(1.2)


def test_min_pt_eigenvalue_examples():
    assert b.min_pt_eigenvalue(b.bond_state(0.0)) == pytest.approx(0.25, abs=1e-15)
    assert abs(b.min_pt_eigenvalue(b.bond_state(W_STAR))) < 1e-12
    assert b.min_pt_eigenvalue(b.bond_state(1.0)) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(ValueError):
        b.min_pt_eigenvalue(np.triu(np.ones((4, 4))) / 4)


def test_pt_sign_on_dense_grid():
    for omega in np.linspace(0, 1, 801):
        sep = b.min_pt_eigenvalue(b.bond_state(omega)) >= -1e-14
        assert sep == (omega <= W_STAR + 1e-12)


def test_separability_threshold():
    w = b.separability_threshold()
    assert 0.414213561 <= w <= 0.414213563
    assert abs(w - W_STAR) < 1e-9
    assert b.min_pt_eigenvalue(b.bond_state(w - 1e-6)) > 0
    assert b.min_pt_eigenvalue(b.bond_state(w + 1e-6)) < 0


def test_temperatures():
    assert b.upper_bound_temperature(1.0) == pytest.approx(1.13459265710651, rel=1e-12)
    assert b.upper_bound_temperature(2.0) == pytest.approx(2 * b.upper_bound_temperature(1.0))
    T = b.upper_bound_temperature(1.0)
    assert math.tanh(1.0 / (2 * T)) == pytest.approx(W_STAR, abs=1e-12)
    assert W_STAR**6 == pytest.approx(0.00505063, abs=1e-8)
    assert b.complete_separability_temperature(2.0) == pytest.approx(197.99, abs=0.01)
    assert b.complete_separability_temperature(1.0) > b.upper_bound_temperature(1.0)
    with pytest.raises(ValueError):
        b.upper_bound_temperature(0.0)


def test_temperature_bounds_ordering():
    tb = b.TemperatureBounds.from_threshold(0.033)
    assert tb.T_lower == pytest.approx(0.296, abs=0.003)
    with pytest.raises(ValueError):
        b.TemperatureBounds(2.0, 1.0, 3.0)


def test_vbs_examples():
    g1 = b.GraphSpec.path(2)
    assert np.allclose(b.build_vbs_state(g1, b.WeightAssignment.uniform(g1, 0.3)), b.bond_state(0.3))
    g3 = b.GraphSpec.path(3)
    mixed = b.build_vbs_state(g3, b.WeightAssignment.uniform(g3, 0.0))
    assert np.allclose(mixed, np.eye(16) / 16)
    pure = b.build_vbs_state(g3, b.WeightAssignment.uniform(g3, 1.0))
    _check_density(pure)
    assert np.linalg.matrix_rank(pure, tol=1e-10) == 1


def test_vbs_qubit_order():
    # path 0-1-2: domains 0.{1}, 1.{0,2}, 2.{1}; bond (0,1) on virtual qubits 0,1 and bond (1,2) on 2,3
    g = b.GraphSpec.path(3)
    w = b.WeightAssignment(g, {(0, 1): 0.3, (1, 2): 0.8})
    assert g.virtual_qubits() == [(0, 1), (1, 0), (1, 2), (2, 1)]
    assert np.allclose(b.build_vbs_state(g, w), kron(b.bond_state(0.3), b.bond_state(0.8)))


def test_two_vertex_path_is_thermal_pair():
    g = b.GraphSpec.path(2)
    t = math.tanh(0.4)
    rho = b.apply_W(g, b.build_vbs_state(g, b.WeightAssignment.uniform(g, t)))
    assert np.abs(rho - thermal_state_eigenbasis(2, g.edges, [t, t])).max() < 1e-12


def _domains(g):
    order = g.virtual_qubits()
    return [[k for k, (u, _) in enumerate(order) if u == x] for x in range(g.n)]


def _random_connected_graph(rng, n, max_virtual):
    while True:
        edges = [(a, bb) for a in range(n) for bb in range(a + 1, n) if rng.random() < 0.5]
        g = b.GraphSpec(n, tuple(edges))
        if edges and g.is_connected() and g.n_virtual <= max_virtual:
            return g


def test_apply_w_matches_explicit_projection_and_eta_formula():
    rng = np.random.default_rng(0)
    for _ in range(25):
        g = _random_connected_graph(rng, int(rng.integers(2, 6)), 10)
        w = b.WeightAssignment(g, {e: float(rng.uniform(0, 0.999)) for e in g.edges})
        vbs = b.build_vbs_state(g, w)
        W = w_matrix(g.n, _domains(g))
        explicit = W.T @ vbs @ W
        explicit /= np.trace(explicit)
        got = b.apply_W(g, vbs)
        assert np.abs(got - explicit).max() < 1e-12
        assert np.abs(got - thermal_state_eigenbasis(g.n, g.edges, w.eta())).max() < 1e-10
        _check_density(got)


@pytest.mark.parametrize(
    "graph",
    [
        b.GraphSpec.path(3),
        b.GraphSpec.cycle(4),
        b.GraphSpec.lattice_patch([(1, 0, 1), (2, 0, 1), (1, 1, 1), (2, 1, 1)]),
        b.GraphSpec.lattice_patch([(2, 1, 2), (1, 1, 2), (3, 1, 2), (2, 0, 2), (2, 2, 2), (2, 1, 1)]),
    ],
    ids=["path3", "cycle4", "patch2x2x1", "star3d"],
)
def test_theorem1_random_assignments(graph):
    rng = np.random.default_rng(7)
    for _ in range(5):
        w = b.WeightAssignment(graph, {e: float(rng.uniform(0.2, 1.0)) for e in graph.edges})
        # a target no hotter than the coldest vertex allows
        beta = math.atanh(w.eta().min() * rng.uniform(0.3, 1.0))
        rep = b.verify_theorem1(graph, beta, w)
        assert rep.ok(), rep
        assert (rep.beta_u >= beta - 1e-12).all()


def test_eta_examples():
    t = math.tanh(0.5)
    g3 = b.GraphSpec.path(3)
    rep = b.verify_theorem1(g3, 0.5, b.WeightAssignment.uniform(g3, math.sqrt(t)))
    assert rep.eta[1] == pytest.approx(t)
    assert rep.eta[0] == rep.eta[2] == pytest.approx(math.sqrt(t))
    assert rep.ok()
    assert rep.q[1] == pytest.approx(0.0) and rep.q[0] > 0
    c4 = b.GraphSpec.cycle(4)
    assert np.allclose(b.WeightAssignment.uniform(c4, 0.6).eta(), 0.36)


def test_flattening_against_dense_channel():
    g = b.GraphSpec.path(3)
    eta = np.array([0.9, 0.7, 0.8])
    beta = math.atanh(0.5)
    q = b.flattening_probabilities(eta, beta)
    assert np.allclose((1 - 2 * q) * eta, 0.5)
    rho = thermal_state_eigenbasis(3, g.edges, eta)
    # channel applied by hand: rho -> (1-q) rho + q Z rho Z, qubit by qubit
    Z = np.diag([1.0, -1.0])
    for u in range(3):
        zu = kron(*[Z if v == u else np.eye(2) for v in range(3)])
        rho = (1 - q[u]) * rho + q[u] * zu @ rho @ zu
    assert np.abs(rho - thermal_state_eigenbasis(3, g.edges, [0.5] * 3)).max() < 1e-12
    with pytest.raises(ValueError):
        b.flattening_probabilities(eta, math.atanh(0.95))


def test_pure_limit_and_cut_assignment():
    g = b.GraphSpec.cycle(4)
    rep = b.verify_theorem1(g, math.inf, b.WeightAssignment.uniform(g, 1.0))
    assert rep.projection_error < 1e-12 and rep.flattening_error < 1e-12
    cut = b.cut_assignment(g, [(0, 1), (2, 3)], 0.3)
    assert b.satisfies_div(cut, 0.3)
    assert np.allclose(cut.eta(), math.tanh(0.3))
    assert b.verify_theorem1(g, 0.3, cut).ok()


def test_default_assignment_satisfies_div():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = _random_connected_graph(rng, int(rng.integers(2, 7)), 14)
        beta = float(rng.uniform(0.05, 2.0))
        w = b.WeightAssignment.for_beta(g, beta)
        assert b.satisfies_div(w, beta)
        assert (np.arctanh(np.minimum(w.eta(), 1 - 1e-16)) >= beta - 1e-9).all()


def test_guards():
    big = b.GraphSpec.cycle(8)  # 16 virtual qubits
    with pytest.raises(ValueError):
        b.build_vbs_state(big, b.WeightAssignment.uniform(big, 0.5))
    g = b.GraphSpec(3, ((0, 1),))
    with pytest.raises(ValueError):
        b.apply_W(g, b.build_vbs_state(g, b.WeightAssignment.uniform(g, 0.5)))
    with pytest.raises(ValueError):
        b.WeightAssignment(b.GraphSpec.path(3), {(0, 1): 0.5})
