"""Exact stabilizer simulation of the measurement pattern on small clusters.

The oracle runs the single-qubit measurement pattern on a cluster-state
tableau (optionally after injecting Z errors), reads the face stabilizer
eigenvalues and Bell correlators off the post-measurement state, and
evaluates every syndrome constraint from the recorded outcomes.  A separate
dense state-vector simulation cross-checks the tableau on the same branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .lattice import (
    Basis,
    Boundary,
    Coord,
    Face,
    LatticeSpec,
    Sector,
    build_sector_graph,
    classify_site,
    face_sites,
)
from .tableau import PauliOp, Tableau

MAX_TABLEAU_QUBITS = 400
MAX_DENSE_FREE_QUBITS = 24


def init_cluster_state(spec: LatticeSpec) -> Tableau:
    if spec.n_sites > MAX_TABLEAU_QUBITS:
        raise ValueError(f"{spec.n_sites} qubits exceeds the oracle size guard ({MAX_TABLEAU_QUBITS})")
    edges = []
    for u in spec.sites():
        i = spec.index(u)
        for v in spec.neighbors(u):
            j = spec.index(v)
            if i < j:
                edges.append((i, j))
    return Tableau.graph_state(spec.n_sites, edges)


def apply_z_error(t: Tableau, spec: LatticeSpec, u: Coord) -> Tableau:
    if not spec.contains(u):
        raise IndexError(f"site {u} outside the lattice")
    t.apply_z(spec.index(u))
    return t


# -- operators on the unmeasured faces ------------------------------------


def _face_of(spec: LatticeSpec, u3: int) -> Face:
    return Face.L if u3 == 1 else Face.R


def _inner(spec: LatticeSpec, u3: int) -> int:
    """Layer adjacent to a face: 2 for u3 = 1, d - 1 for u3 = d."""
    return 2 if u3 == 1 else spec.d - 1


def plaquette_op(spec: LatticeSpec, u: Coord) -> PauliOp:
    """Z on ``nb(u)`` within the face, for a face site ``u = (e, e, 1 or d)``."""
    face = _face_of(spec, u[2])
    sup = [spec.index(v) for v in spec.neighbors(u) if classify_site(v, spec).face is face]
    return PauliOp.from_support(spec.n_sites, zs=sup)


def site_op(spec: LatticeSpec, u: Coord) -> PauliOp:
    """X on ``nb(u)`` within the face, for ``u = (o, o, 1 or d)``."""
    face = _face_of(spec, u[2])
    sup = [spec.index(v) for v in spec.neighbors(u) if classify_site(v, spec).face is face]
    return PauliOp.from_support(spec.n_sites, xs=sup)


def logical_xx(spec: LatticeSpec, u2: int) -> PauliOp:
    sup = [spec.index((u1, u2, u3)) for u3 in (1, spec.d) for u1 in range(1, spec.l + 1, 2)]
    return PauliOp.from_support(spec.n_sites, xs=sup)


def logical_zz(spec: LatticeSpec, u1: int) -> PauliOp:
    sup = [spec.index((u1, u2, u3)) for u3 in (1, spec.d) for u2 in range(0, spec.l, 2)]
    return PauliOp.from_support(spec.n_sites, zs=sup)


def plaquette_sites(spec: LatticeSpec) -> list[Coord]:
    return [
        (u1, u2, u3)
        for u3 in (1, spec.d)
        for u2 in range(0, spec.l, 2)
        for u1 in range(2, spec.l, 2)
    ]


def site_sites(spec: LatticeSpec) -> list[Coord]:
    return [
        (u1, u2, u3)
        for u3 in (1, spec.d)
        for u2 in range(1, spec.l - 1, 2)
        for u1 in range(1, spec.l + 1, 2)
    ]


# -- measurement pattern -----------------------------------------------------


@dataclass
class MeasurementRecord:
    spec: LatticeSpec
    outcomes: dict[Coord, int]
    basis: dict[Coord, Basis]
    seed: int | None = None
    lam_p: dict[Coord, int] = field(default_factory=dict)
    lam_s: dict[Coord, int] = field(default_factory=dict)

    def x(self, u: Coord) -> int:
        """X outcome, 1 outside the cluster or for non-X sites."""
        if self.basis.get(u) is Basis.X:
            return self.outcomes[u]
        return 1

    def z(self, u: Coord) -> int:
        if self.basis.get(u) is Basis.Z:
            return self.outcomes[u]
        return 1


@dataclass
class PatternResult:
    record: MeasurementRecord
    tableau: Tableau

    def expectation(self, p: PauliOp) -> int:
        return self.tableau.expectation(p)

    def reduced(self) -> list[PauliOp]:
        """Generators of the stabilizer group of the unmeasured face qubits."""
        spec = self.record.spec
        keep = [spec.index(u) for u in face_sites(spec, Face.L) + face_sites(spec, Face.R)]
        return self.tableau.restricted(keep)


def measurement_order(spec: LatticeSpec) -> list[Coord]:
    return [u for u in spec.sites() if classify_site(u, spec).basis is not Basis.NONE]


def run_pattern(
    t: Tableau,
    spec: LatticeSpec,
    rng: np.random.Generator | None = None,
    *,
    seed: int | None = None,
    order: list[Coord] | None = None,
    forced: dict[Coord, int] | None = None,
) -> PatternResult:
    """Measure vertex sites in Z and non-face edge sites in X.

    Random branches come from ``rng`` (or a fresh generator from ``seed``);
    ``forced`` pins outcomes to replay a branch.  The tableau is consumed.
    """
    if spec.boundary is not Boundary.PLANAR:
        raise ValueError("the measurement pattern needs a planar lattice")
    if rng is None:
        rng = np.random.default_rng(seed)
    forced = forced or {}
    outcomes: dict[Coord, int] = {}
    basis: dict[Coord, Basis] = {}
    for u in order if order is not None else measurement_order(spec):
        b = classify_site(u, spec).basis
        a = spec.index(u)
        if b is Basis.Z:
            val, _ = t.measure_z(a, rng, forced.get(u))
        elif b is Basis.X:
            val, _ = t.measure_x(a, rng, forced.get(u))
        else:
            raise ValueError(f"face site {u} is not measured")
        outcomes[u] = val
        basis[u] = b
    rec = MeasurementRecord(spec, outcomes, basis, seed)
    for u in plaquette_sites(spec):
        rec.lam_p[u] = t.expectation(plaquette_op(spec, u))
    for u in site_sites(spec):
        rec.lam_s[u] = t.expectation(site_op(spec, u))
    return PatternResult(rec, t)


# -- eigenvalue formulas -----------------------------------------------------


def _nb_sub(spec: LatticeSpec, u: Coord) -> list[Coord]:
    """Sublattice neighbours: sites at distance 2 along an axis, in range."""
    out = []
    for axis in range(3):
        for step in (-2, 2):
            v = list(u)
            v[axis] += step
            v = (v[0], v[1], v[2])
            if spec.contains(v):
                out.append(v)
    return out


def _self_z(rec: MeasurementRecord, u: Coord) -> int:
    # Z_u survives in prod_{v in nb(u)} K_v only when u has an odd number of in-range neighbours
    return rec.z(u) if len(rec.spec.neighbors(u)) % 2 else 1


def lambda_p(rec: MeasurementRecord, u: Coord) -> int:
    """Predicted plaquette eigenvalue at ``u = (e, e, 1 or d)``."""
    return rec.x(u) * rec.z((u[0], u[1], _inner(rec.spec, u[2])))


def lambda_s(rec: MeasurementRecord, u: Coord) -> int:
    """Predicted site eigenvalue at ``u = (o, o, 1 or d)``."""
    spec = rec.spec
    inner = rec.x((u[0], u[1], _inner(spec, u[2])))
    return inner * _self_z(rec, u) * prod(rec.z(v) for v in _nb_sub(spec, u))


def lambda_xx(rec: MeasurementRecord, u2: int) -> int:
    spec = rec.spec
    zs = prod(
        rec.z((u1, w2, u3))
        for w2 in (u2 - 1, u2 + 1)
        for u3 in range(1, spec.d + 1, 2)
        for u1 in range(1, spec.l + 1, 2)
    )
    # slice sites off the faces: u3 odd, 1 < u3 < d
    xs = prod(rec.x((u1, u2, u3)) for u3 in range(3, spec.d, 2) for u1 in range(1, spec.l + 1, 2))
    return zs * xs


def lambda_zz(rec: MeasurementRecord, u1: int) -> int:
    spec = rec.spec
    zs = prod(
        rec.z((w1, u2, u3))
        for w1 in (u1 - 1, u1 + 1)
        for u3 in range(2, spec.d, 2)
        for u2 in range(0, spec.l, 2)
    )
    xs = prod(rec.x((u1, u2, u3)) for u3 in range(2, spec.d, 2) for u2 in range(0, spec.l, 2))
    return zs * xs


# -- syndrome constraints ----------------------------------------------------


@dataclass
class ConstraintBits:
    """Violated-constraint bits aligned with the sector graphs.

    ``to`` and ``te`` follow the vertex order of the respective sector graph;
    ``sy5`` follows the excluded (face) edges of the ``Te`` graph.
    """

    to: np.ndarray
    te: np.ndarray
    sy5: np.ndarray
    sy5_sites: list[Coord]


def check_constraints(rec: MeasurementRecord) -> ConstraintBits:
    spec = rec.spec
    g_to = build_sector_graph(spec, Sector.TO)
    g_te = build_sector_graph(spec, Sector.TE)

    def bulk(u: Coord) -> int:
        return (
            prod(rec.x(v) for v in spec.neighbors(u))
            * prod(rec.z(w) for w in _nb_sub(spec, u))
            * _self_z(rec, u)
        )

    to_bits = np.zeros(g_to.n_vertices, dtype=bool)
    for i, v in enumerate(g_to.vertices):
        u = (int(v[0]), int(v[1]), int(v[2]))
        if 1 < u[2] < spec.d:
            val = bulk(u)
        else:
            val = rec.lam_s[u] * lambda_s(rec, u)
        to_bits[i] = val < 0

    te_bits = np.zeros(g_te.n_vertices, dtype=bool)
    for i, v in enumerate(g_te.vertices):
        te_bits[i] = bulk((int(v[0]), int(v[1]), int(v[2]))) < 0

    sy5_sites = [tuple(int(c) for c in e) for e in g_te.edges[g_te.excluded]]
    sy5 = np.array([rec.lam_p[u] * lambda_p(rec, u) < 0 for u in sy5_sites], dtype=bool)
    return ConstraintBits(to_bits, te_bits, sy5, sy5_sites)  # type: ignore[arg-type]


def is_face_edge(spec: LatticeSpec, u: Coord) -> bool:
    """``(e, e, 1)`` / ``(e, e, d)`` edges, whose errors Sy5 flags individually."""
    return u[0] % 2 == 0 and u[1] % 2 == 0 and u[2] in (1, spec.d)


def errors_to_chains(spec: LatticeSpec, errors) -> dict[Sector, np.ndarray]:
    """Split a set of Z-error sites into per-sector chains (Z-measured sites drop out)."""
    out = {}
    for sector in Sector:
        g = build_sector_graph(spec, sector)
        chain = np.zeros(g.n_edges, dtype=bool)
        for u in errors:
            k = g.edge_index.get(tuple(u))
            if k is not None:
                chain[k] ^= True
        out[sector] = chain
    return out


# -- dense cross-check -------------------------------------------------------


@dataclass
class DenseResult:
    outcomes: dict[Coord, int]
    free: list[Coord]
    state: np.ndarray

    def expectation(self, spec: LatticeSpec, p: PauliOp) -> float:
        """``<psi|P|psi>`` for a Pauli supported on the remaining qubits."""
        psi = self.state
        out = psi.copy()
        m = len(self.free)
        for axis, u in enumerate(self.free):
            a = spec.index(u)
            if p.z[a]:
                shape = [1] * m
                shape[axis] = 2
                out = out * np.array([1.0, -1.0]).reshape(shape)
            if p.x[a]:
                out = np.flip(out, axis=axis)
            if p.x[a] and p.z[a]:
                raise NotImplementedError("Y not needed here")
        if p.x[[spec.index(u) for u in self.outcomes]].any() or p.z[[spec.index(u) for u in self.outcomes]].any():
            raise ValueError("operator acts on measured qubits")
        return float(p.sign * np.vdot(psi, out).real)


def dense_pattern(
    spec: LatticeSpec,
    errors=(),
    rng: np.random.Generator | None = None,
    order: list[Coord] | None = None,
) -> DenseResult:
    """Naive state-vector run of the pattern.

    The Z-basis outcomes are drawn first (uniform for any Z-error pattern) and
    their bits substituted into the cluster amplitude
    ``(-1)^(sum_edges b_u b_v + sum_errors b_u)``, leaving a dense vector over
    the remaining qubits that is then X-measured qubit by qubit.
    """
    rng = rng if rng is not None else np.random.default_rng()
    order = order if order is not None else measurement_order(spec)
    roles = {u: classify_site(u, spec) for u in spec.sites()}
    zsites = [u for u in order if roles[u].basis is Basis.Z]
    xsites = [u for u in order if roles[u].basis is Basis.X]
    free = [u for u in spec.sites() if roles[u].basis is not Basis.Z]
    if len(free) > MAX_DENSE_FREE_QUBITS:
        raise ValueError(f"{len(free)} free qubits exceeds the dense guard ({MAX_DENSE_FREE_QUBITS})")

    outcomes: dict[Coord, int] = {}
    fixed: dict[Coord, int] = {}
    for u in zsites:
        bit = int(rng.integers(2))
        fixed[u] = bit
        outcomes[u] = -1 if bit else 1

    m = len(free)
    pos = {u: k for k, u in enumerate(free)}
    idx = np.arange(2**m, dtype=np.uint32)

    def bit(u):
        # axis k of the C-ordered tensor is the (m-1-k)-th bit of the flat index
        return ((idx >> np.uint32(m - 1 - pos[u])) & 1).astype(np.uint8)

    parity = np.zeros(2**m, dtype=np.uint8)
    for u in spec.sites():
        for v in spec.neighbors(u):
            if spec.index(u) >= spec.index(v):
                continue
            if u in pos and v in pos:
                parity ^= bit(u) & bit(v)
            elif u in pos and fixed.get(v):
                parity ^= bit(u)
            elif v in pos and fixed.get(u):
                parity ^= bit(v)
    for u in errors:
        u = tuple(u)
        if u in pos:
            parity ^= bit(u)
    psi = np.where(parity, -1.0, 1.0) / np.sqrt(2.0**m)
    psi = psi.reshape((2,) * m)

    remaining = list(free)
    for u in xsites:
        axis = remaining.index(u)
        a0 = np.take(psi, 0, axis=axis)
        a1 = np.take(psi, 1, axis=axis)
        plus = (a0 + a1) / np.sqrt(2)
        minus = (a0 - a1) / np.sqrt(2)
        p_plus = float(np.vdot(plus, plus).real)
        p_minus = float(np.vdot(minus, minus).real)
        if rng.random() < p_plus / (p_plus + p_minus):
            psi, outcomes[u] = plus / np.sqrt(p_plus), 1
        else:
            psi, outcomes[u] = minus / np.sqrt(p_minus), -1
        remaining.pop(axis)
    return DenseResult(outcomes, remaining, psi)


# -- identity suite -----------------------------------------------------------


def sy5_adjusted(bits: ConstraintBits, g_te) -> np.ndarray:
    """Te syndrome after undoing the face-edge errors that Sy5 identifies.

    A flagged face edge is corrected by Z on that qubit, which also flips the
    syndrome bit at its one in-lattice endpoint.
    """
    te = bits.te.copy()
    for site, flagged in zip(bits.sy5_sites, bits.sy5):
        if flagged:
            for v in g_te.endpoints[g_te.edge_index[site]]:
                if v >= 0:
                    te[v] ^= True
    return te


@dataclass
class SuiteResult:
    """Per-check ``[passed, total]`` counts."""

    checks: dict[str, list[int]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        c = self.checks.setdefault(name, [0, 0])
        c[0] += int(ok)
        c[1] += 1
        if not ok and len(self.failures) < 50:
            self.failures.append(f"{name}: {detail}")

    @property
    def ok(self) -> bool:
        return all(p == t for p, t in self.checks.values())


def _single_error_bits(spec: LatticeSpec, u: Coord, g_to, g_te):
    """Bits a lone Z error at ``u`` should flip, read off the edge's endpoints."""
    to = np.zeros(g_to.n_vertices, dtype=bool)
    te = np.zeros(g_te.n_vertices, dtype=bool)
    sy5 = np.zeros(int(g_te.excluded.sum()), dtype=bool)
    for g, bits in ((g_to, to), (g_te, te)):
        k = g.edge_index.get(u)
        if k is None:
            continue
        for v in g.endpoints[k]:
            if v >= 0:
                bits[v] ^= True
        if g.excluded[k]:
            sy5[int(np.flatnonzero(g.excluded).tolist().index(k))] = True
    return to, te, sy5


def _check_branch(res: SuiteResult, spec: LatticeSpec, out: PatternResult, errors, graphs) -> None:
    from .decoder import decode, extract_syndrome

    rec = out.record
    bits = check_constraints(rec)
    chains = errors_to_chains(spec, errors)
    tag = f"seed={rec.seed} errors={sorted(errors)}"
    g_to, g_te = graphs[Sector.TO][0], graphs[Sector.TE][1]

    if not errors:
        res.record("a_error_free_constraints", not (bits.to.any() or bits.te.any() or bits.sy5.any()), tag)
        res.record("c_lambda_p", all(rec.lam_p[u] == lambda_p(rec, u) for u in plaquette_sites(spec)), tag)
        res.record("c_lambda_s", all(rec.lam_s[u] == lambda_s(rec, u) for u in site_sites(spec)), tag)
    if len(errors) == 1:
        to, te, sy5 = _single_error_bits(spec, errors[0], g_to, g_te)
        ok = np.array_equal(bits.to, to) and np.array_equal(bits.te, te) and np.array_equal(bits.sy5, sy5)
        res.record("b_single_error_bits", bool(ok), tag)

    te_chain = chains[Sector.TE] & ~g_te.excluded
    exp_sy5 = chains[Sector.TE][g_te.excluded]
    same = (
        np.array_equal(bits.to, extract_syndrome(chains[Sector.TO], g_to))
        and np.array_equal(sy5_adjusted(bits, g_te), extract_syndrome(te_chain, g_te))
        and np.array_equal(bits.sy5, exp_sy5)
    )
    res.record("d_syndrome_equivalence", bool(same), tag)

    # correlator signs: raw slice parity and residual parity after decoding
    corr = {Sector.TO: decode(chains[Sector.TO], g_to).correction, Sector.TE: decode(te_chain, g_te).correction}
    for sector, op, lam in ((Sector.TO, logical_xx, lambda_xx), (Sector.TE, logical_zz, lambda_zz)):
        for idx, g in graphs[sector].items():
            flipped = out.expectation(op(spec, idx)) * lam(rec, idx) < 0
            chain = chains[sector] if sector is Sector.TO else te_chain
            if not errors:
                res.record("c_lambda_correlators", not flipped, f"{tag} {sector.value}{idx}")
            res.record("e_slice_parity", flipped == bool(g.plane_parity(chain)[0]), f"{tag} {sector.value}{idx}")
            residual_odd = bool(g.plane_parity(chain ^ corr[sector])[0])
            corrected = flipped ^ bool(g.plane_parity(corr[sector])[0])
            res.record("e_residual_parity", corrected == residual_odd, f"{tag} {sector.value}{idx}")


def identity_suite(
    spec: LatticeSpec | None = None,
    n_branches: int = 100,
    n_error_sets: int = 200,
    seed: int = 0,
    error_rate: float = 0.15,
) -> SuiteResult:
    """Exact checks of the constraint and eigenvalue formulas on random branches.

    Runs ``n_branches`` error-free branches, one single-error run per site
    (the predicted bits of each error on its own), and ``n_error_sets``
    random error sets, each on a fresh random branch.
    """
    spec = spec or LatticeSpec.planar(3, 3)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0AC1E]))
    graphs = {
        Sector.TO: {u2: build_sector_graph(spec, Sector.TO, u2) for u2 in range(0, spec.l, 2)},
        Sector.TE: {u1: build_sector_graph(spec, Sector.TE, u1) for u1 in range(1, spec.l + 1, 2)},
    }
    res = SuiteResult()
    sites = list(spec.sites())

    def run(errors, branch_seed):
        t = init_cluster_state(spec)
        for u in errors:
            apply_z_error(t, spec, u)
        out = run_pattern(t, spec, seed=branch_seed)
        _check_branch(res, spec, out, errors, graphs)
        return out

    for _ in range(n_branches):
        run([], int(rng.integers(2**63)))
    for u in sites:
        run([u], int(rng.integers(2**63)))
    for _ in range(n_error_sets):
        errors = [u for u in sites if rng.random() < error_rate]
        run(errors, int(rng.integers(2**63)))
    return res


def dense_crosscheck(spec: LatticeSpec, errors=(), seed: int = 0) -> bool:
    """Replay a dense-simulation branch on the tableau and compare every face observable."""
    rng = np.random.default_rng(seed)
    dense = dense_pattern(spec, errors, rng)
    t = init_cluster_state(spec)
    for u in errors:
        apply_z_error(t, spec, tuple(u))
    out = run_pattern(t, spec, forced=dense.outcomes)
    ops = [plaquette_op(spec, u) for u in plaquette_sites(spec)] + [site_op(spec, u) for u in site_sites(spec)]
    ops += [logical_xx(spec, u2) for u2 in range(0, spec.l, 2)]
    ops += [logical_zz(spec, u1) for u1 in range(1, spec.l + 1, 2)]
    return all(abs(dense.expectation(spec, p) - out.expectation(p)) < 1e-9 for p in ops)
