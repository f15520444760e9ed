import numpy as np
import pytest

from oracles import graph_state_vector, pauli_matrix
from thermalcluster.tableau import PauliOp, Tableau, gf2_rank


def _random_graph(rng, n, p=0.4):
    return [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]


def _dense(p: PauliOp):
    xs = set(np.flatnonzero(p.x))
    zs = set(np.flatnonzero(p.z))
    m = pauli_matrix(xs, zs, p.n)
    # a Y site is X Z up to a factor i; fold it in so the operator is Hermitian
    ny = len(xs & zs)
    return p.sign * (1j) ** ny * m


def _random_pauli(rng, n):
    return PauliOp(rng.random(n) < 0.5, rng.random(n) < 0.5, 1 if rng.random() < 0.5 else -1)


def test_pauli_algebra_matches_matrices():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = _random_pauli(rng, 4), _random_pauli(rng, 4)
        A, B = _dense(a), _dense(b)
        assert a.commutes(b) == np.allclose(A @ B, B @ A)
        if a.commutes(b):
            assert np.allclose(_dense(a * b), A @ B)
        else:
            with pytest.raises(ValueError):
                a * b


def test_graph_state_stabilizers():
    rng = np.random.default_rng(2)
    for n in (3, 5, 6):
        edges = _random_graph(rng, n)
        t = Tableau.graph_state(n, edges)
        t.check_valid()
        psi = graph_state_vector(n, edges)
        for p in t.stabilizers():
            assert np.allclose(_dense(p) @ psi, psi)


def test_expectations_match_dense():
    rng = np.random.default_rng(3)
    n = 5
    edges = _random_graph(rng, n)
    t = Tableau.graph_state(n, edges)
    psi = graph_state_vector(n, edges)
    for _ in range(300):
        p = _random_pauli(rng, n)
        assert t.expectation(p) == pytest.approx(np.vdot(psi, _dense(p) @ psi).real, abs=1e-12)


def test_measurement_statistics_and_collapse():
    t0 = Tableau.graph_state(2, [(0, 1)])
    outs = []
    for seed in range(200):
        t = t0.copy()
        val, random = t.measure_z(0, np.random.default_rng(seed))
        assert random
        # after measuring Z0 the neighbour is an X eigenstate with sign val
        assert t.expectation(PauliOp.from_support(2, xs=[1])) == val
        again, random2 = t.measure_z(0, np.random.default_rng(seed + 1))
        assert again == val and not random2
        outs.append(val)
    assert 70 < outs.count(1) < 130


def test_forced_outcomes():
    t = Tableau.zero_state(1)
    with pytest.raises(ValueError):
        t.measure_z(0, outcome=-1)
    assert t.measure_z(0, outcome=1) == (1, False)
    t = Tableau.zero_state(1)
    t.h(0)
    assert t.measure_z(0, outcome=-1) == (-1, True)
    assert t.measure_x(0, outcome=None, rng=np.random.default_rng(0))[1]


def test_z_error_flips_neighbouring_stabilizer():
    t = Tableau.graph_state(3, [(0, 1), (1, 2)])
    k0 = PauliOp.from_support(3, xs=[0], zs=[1])
    k1 = PauliOp.from_support(3, xs=[1], zs=[0, 2])
    t.apply_z(1)
    assert t.expectation(k0) == 1
    assert t.expectation(k1) == -1


def test_gf2_rank():
    m = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=bool)
    assert gf2_rank(m) == 2
    assert gf2_rank(np.eye(4, dtype=bool)) == 4
    assert gf2_rank(np.zeros((3, 3), dtype=bool)) == 0
