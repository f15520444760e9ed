"""Separability bounds on the thermal cluster state.

Everything here is dense linear algebra on small graphs.  Inverse
temperatures follow the convention of the VBS construction: ``beta`` is the
dimensionless ``beta_phys * gap / 2``, so a thermal cluster state reads
``2^-n prod_u (I + tanh(beta) K_u)``.  Temperatures returned by the
``*_temperature`` functions are in units of the gap (k_B = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_VIRTUAL_QUBITS = 14
SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.diag([1.0, -1.0])


def _kron(*ops):
    return reduce(np.kron, ops)


# -- two-qubit bond state ----------------------------------------------------------


def bond_state(omega: float) -> np.ndarray:
    """``(1/4)(I + w X1 Z2)(I + w Z1 X2)`` as a real 4x4 matrix."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    I4 = np.eye(4)
    return (I4 + omega * np.kron(X, Z)) @ (I4 + omega * np.kron(Z, X)) / 4.0


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose over the second qubit of a two-qubit operator."""
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def min_pt_eigenvalue(rho: np.ndarray, atol: float = 1e-12) -> float:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError("expected a 4x4 two-qubit operator")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("operator is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise ValueError("operator does not have unit trace")
    return float(np.linalg.eigvalsh(partial_transpose(rho)).min())


def separability_threshold(tol: float = 1e-12) -> float:
    """Largest bond weight whose state has a positive partial transpose, by bisection."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min_pt_eigenvalue(bond_state(mid)) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- temperatures --------------------------------------------------------------------


def upper_bound_temperature(gap: float = 1.0) -> float:
    """Above this temperature the state is bi-separable across any plane cut."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    return gap / (2.0 * math.atanh(SQRT2_MINUS_1))


def complete_separability_temperature(gap: float = 1.0) -> float:
    """Above this temperature every bond can be made separable (tanh beta < w*^6)."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    return gap / (2.0 * math.atanh(SQRT2_MINUS_1**6))


@dataclass(frozen=True)
class TemperatureBounds:
    T_lower: float
    T_upper_biseparable: float
    T_complete_separable: float
    gap: float = 1.0
    note: str = "temperatures in units of the gap, k_B = 1; multiply by 2 for units where gap/2 = 1"

    def __post_init__(self):
        if not self.T_lower < self.T_upper_biseparable < self.T_complete_separable:
            raise ValueError("bounds are not ordered")

    @classmethod
    def from_threshold(cls, p_threshold: float, gap: float = 1.0) -> "TemperatureBounds":
        from .noise import temperature_from_error_rate

        return cls(
            temperature_from_error_rate(p_threshold, gap),
            upper_bound_temperature(gap),
            complete_separability_temperature(gap),
            gap,
        )


# -- graphs and VBS states ------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    """Small simple graph; vertex ``u`` owns one virtual qubit per incident edge."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = tuple(sorted((min(a, b), max(a, b)) for a, b in self.edges))
        if len(set(norm)) != len(norm) or any(a == b or a < 0 or b >= self.n for a, b in norm):
            raise ValueError("edges must be distinct pairs of distinct vertices in range")
        object.__setattr__(self, "edges", norm)

    def neighbors(self, u: int) -> list[int]:
        return sorted([b for a, b in self.edges if a == u] + [a for a, b in self.edges if b == u])

    def degree(self, u: int) -> int:
        return len(self.neighbors(u))

    @property
    def n_virtual(self) -> int:
        return 2 * len(self.edges)

    def virtual_qubits(self) -> list[tuple[int, int]]:
        """Virtual qubit ``u.v`` listed domain by domain."""
        return [(u, v) for u in range(self.n) for v in self.neighbors(u)]

    def is_connected(self) -> bool:
        seen, stack = {0}, [0]
        while stack:
            for v in self.neighbors(stack.pop()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    @classmethod
    def path(cls, n: int) -> "GraphSpec":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "GraphSpec":
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def lattice_patch(cls, sites) -> "GraphSpec":
        """Nearest-neighbour graph of a set of integer lattice sites."""
        sites = [tuple(s) for s in sites]
        pos = {s: i for i, s in enumerate(sites)}
        edges = []
        for s, i in pos.items():
            for ax in range(len(s)):
                t = list(s)
                t[ax] += 1
                j = pos.get(tuple(t))
                if j is not None:
                    edges.append((i, j))
        return cls(len(sites), tuple(edges))


@dataclass
class WeightAssignment:
    """Bond weight per edge of a :class:`GraphSpec`."""

    graph: GraphSpec
    omega: dict[tuple[int, int], float]

    def __post_init__(self):
        self.omega = {(min(a, b), max(a, b)): float(w) for (a, b), w in self.omega.items()}
        if set(self.omega) != set(self.graph.edges):
            raise ValueError("weights must cover exactly the graph's edges")
        if any(not 0.0 <= w <= 1.0 for w in self.omega.values()):
            raise ValueError("weights must lie in [0, 1]")

    def __getitem__(self, edge) -> float:
        a, b = edge
        return self.omega[(min(a, b), max(a, b))]

    def eta(self) -> np.ndarray:
        """Per-vertex ``prod_v w_(u,v)``."""
        return np.array([math.prod(self[(u, v)] for v in self.graph.neighbors(u)) for u in range(self.graph.n)])

    @classmethod
    def uniform(cls, g: GraphSpec, omega: float) -> "WeightAssignment":
        return cls(g, {e: omega for e in g.edges})

    @classmethod
    def for_beta(cls, g: GraphSpec, beta: float) -> "WeightAssignment":
        """``w_e = tanh(beta)^(1/max(deg))``; meets the divisibility condition at every vertex."""
        t = math.tanh(beta)
        return cls(g, {(a, b): t ** (1.0 / max(g.degree(a), g.degree(b))) for a, b in g.edges})


def satisfies_div(w: WeightAssignment, beta: float, atol: float = 1e-12) -> bool:
    return bool((w.eta() >= math.tanh(beta) - atol).all())


def cut_assignment(g: GraphSpec, cut_edges, beta: float) -> WeightAssignment:
    """``tanh(beta)`` on edges crossing the cut, 1 on the rest."""
    cut = {(min(a, b), max(a, b)) for a, b in cut_edges}
    t = math.tanh(beta)
    return WeightAssignment(g, {e: (t if e in cut else 1.0) for e in g.edges})


def _guard(g: GraphSpec):
    if g.n_virtual > MAX_VIRTUAL_QUBITS:
        raise ValueError(f"{g.n_virtual} virtual qubits exceeds the dense guard of {MAX_VIRTUAL_QUBITS}")


def build_vbs_state(g: GraphSpec, w: WeightAssignment) -> np.ndarray:
    """Product of bond states over edges, qubits ordered as ``g.virtual_qubits()``."""
    _guard(g)
    order = g.virtual_qubits()
    m = len(order)
    if m == 0:
        return np.ones((1, 1))
    rho = _kron(*(bond_state(w[e]) for e in g.edges))
    # kron order is (a.b, b.a) per edge; permute into domain order
    kron_order = [q for a, b in g.edges for q in ((a, b), (b, a))]
    perm = [kron_order.index(q) for q in order]
    t = rho.reshape((2,) * (2 * m)).transpose(perm + [m + p for p in perm])
    return t.reshape(2**m, 2**m)


def _domain_index(g: GraphSpec) -> np.ndarray:
    """Virtual basis index of each physical bitstring under ``|b> -> |b...b>``."""
    order = g.virtual_qubits()
    m = len(order)
    idx = np.zeros(2**g.n, dtype=np.int64)
    for s in range(2**g.n):
        bits = [(s >> (g.n - 1 - u)) & 1 for u in range(g.n)]
        idx[s] = sum(bits[u] << (m - 1 - k) for k, (u, _) in enumerate(order))
    return idx


def apply_W(g: GraphSpec, rho_vbs: np.ndarray) -> np.ndarray:
    """``W^dag rho W`` with ``W_u = |0..0><0| + |1..1><1|`` per domain, renormalised.

    Isolated vertices own no virtual qubits and come out maximally mixed.
    """
    _guard(g)
    if rho_vbs.shape != (2**g.n_virtual,) * 2:
        raise ValueError("state does not live on the graph's virtual qubits")
    iso = [u for u in range(g.n) if g.degree(u) == 0]
    if iso:
        raise ValueError(f"isolated vertices {iso} have empty domains")
    idx = _domain_index(g)
    out = rho_vbs[np.ix_(idx, idx)]
    tr = np.trace(out)
    if abs(tr) < 1e-300:
        raise ValueError("projected state has zero trace")
    return out / tr


# -- thermal cluster states ---------------------------------------------------------------


def stabilizer_matrix(g: GraphSpec, u: int) -> np.ndarray:
    """``K_u = X_u prod_{v in nb(u)} Z_v`` as a dense matrix."""
    nb = set(g.neighbors(u))
    return _kron(*(X if v == u else Z if v in nb else I2 for v in range(g.n)))


def thermal_cluster_state(g: GraphSpec, eta) -> np.ndarray:
    """``2^-n prod_u (I + eta_u K_u)``; a scalar ``eta`` means uniform temperature."""
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (g.n,))
    dim = 2**g.n
    rho = np.eye(dim)
    for u in range(g.n):
        rho = rho @ (np.eye(dim) + eta[u] * stabilizer_matrix(g, u))
    return rho / dim


def z_flip(rho: np.ndarray, n: int, u: int, q: float) -> np.ndarray:
    zu = _kron(*(Z if v == u else I2 for v in range(n)))
    return (1.0 - q) * rho + q * zu @ rho @ zu


def flattening_probabilities(eta: np.ndarray, beta: float) -> np.ndarray:
    """Z-flip rates that bring every vertex down to ``tanh(beta)``: ``(1 - 2 q_u) eta_u = tanh(beta)``."""
    eta = np.asarray(eta, dtype=float)
    t = math.tanh(beta)
    if (eta < t - 1e-12).any():
        raise ValueError("some vertex is already hotter than the target")
    q = np.where(eta > 0, (1.0 - t / np.where(eta > 0, eta, 1.0)) / 2.0, 0.0)
    return np.clip(q, 0.0, 0.5)


def flatten(g: GraphSpec, rho: np.ndarray, q) -> np.ndarray:
    for u, qu in enumerate(q):
        if qu:
            rho = z_flip(rho, g.n, u, float(qu))
    return rho


@dataclass
class Theorem1Report:
    beta: float
    eta: np.ndarray
    beta_u: np.ndarray
    q: np.ndarray
    projection_error: float
    flattening_error: float
    div_ok: bool
    notes: list[str] = field(default_factory=list)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.div_ok and self.projection_error <= tol and self.flattening_error <= tol


def verify_theorem1(g: GraphSpec, beta: float, w: WeightAssignment | None = None) -> Theorem1Report:
    """Check that W maps the VBS state to a locally thermal cluster state and that
    local Z-flips then flatten it to uniform ``tanh(beta)``.

    ``beta = inf`` is allowed and means a pure cluster state.
    """
    w = WeightAssignment.for_beta(g, beta) if w is None else w
    eta = w.eta()
    rho = apply_W(g, build_vbs_state(g, w))
    proj_err = float(np.abs(rho - thermal_cluster_state(g, eta)).max())
    div_ok = satisfies_div(w, beta)
    with np.errstate(divide="ignore"):
        beta_u = np.arctanh(np.minimum(eta, 1.0))
    notes = []
    if div_ok:
        q = flattening_probabilities(eta, beta)
        flat = flatten(g, rho, q)
        flat_err = float(np.abs(flat - thermal_cluster_state(g, math.tanh(beta))).max())
    else:
        q = np.full(g.n, np.nan)
        flat_err = math.inf
        notes.append("weights violate the divisibility condition; flattening skipped")
    return Theorem1Report(beta, eta, beta_u, q, proj_err, flat_err, div_ok, notes)


def bounds_summary(p_threshold: float = 0.033, gap: float = 1.0) -> dict:
    b = TemperatureBounds.from_threshold(p_threshold, gap)
    return {
        "omega_star": separability_threshold(),
        "p_threshold": p_threshold,
        "gap": gap,
        "T_lower": b.T_lower,
        "T_upper_biseparable": b.T_upper_biseparable,
        "T_complete_separable": b.T_complete_separable,
        # the same temperatures measured in units of gap/2
        "T_lower_half_gap_units": 2.0 * b.T_lower / gap,
        "T_upper_biseparable_half_gap_units": 2.0 * b.T_upper_biseparable / gap,
        "T_complete_separable_half_gap_units": 2.0 * b.T_complete_separable / gap,
        "units": b.note,
    }
