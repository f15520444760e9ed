"""Cluster lattice geometry and the two decoding sublattices.

Coordinates follow the convention ``u1 in [1, l]``, ``u2 in [0, l-1]``,
``u3 in [1, d]``.  Every cluster site is either a vertex or an edge of one of
the double-spacing sublattices ``To`` (vertices at odd/odd/odd) or ``Te``
(vertices at even/even/even).  Sites that are vertices are measured in the Z
basis, edge sites in the X basis, except the face qubits ``L`` (u3 = 1) and
``R`` (u3 = d) which stay unmeasured and carry the encoded Bell pair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

Coord = tuple[int, int, int]


class Boundary(enum.Enum):
    PLANAR = "planar"
    TORIC = "toric"


class Sector(enum.Enum):
    TO = "To"
    TE = "Te"


class Role(enum.Enum):
    VERTEX_TE = "VertexTe"
    VERTEX_TO = "VertexTo"
    EDGE_TE = "EdgeTe"
    EDGE_TO = "EdgeTo"


class Basis(enum.Enum):
    Z = "MeasureZ"
    X = "MeasureX"
    NONE = "Unmeasured"


class Face(enum.Enum):
    NONE = "None"
    L = "L"
    R = "R"


@dataclass(frozen=True)
class LatticeSpec:
    """Extents of the cluster ``C``.

    In toric mode the extents follow the finite-size convention ``l = 2L`` and
    ``d = 2 d_toric + 1``; use :meth:`toric` to build one from ``(L, d_toric)``.
    """

    l: int
    d: int
    boundary: Boundary = Boundary.PLANAR

    def __post_init__(self):
        if self.boundary is Boundary.PLANAR:
            if self.l < 3 or self.d < 3 or self.l % 2 == 0 or self.d % 2 == 0:
                raise ValueError(f"planar lattice needs odd l, d >= 3, got l={self.l}, d={self.d}")
        else:
            if self.l % 2 or self.l < 6:
                raise ValueError(f"toric lattice needs l = 2L with L >= 3, got l={self.l}")
            if self.d % 2 == 0 or self.d < 7:
                raise ValueError(f"toric lattice needs d = 2*d_toric + 1 with d_toric >= 3, got d={self.d}")

    @classmethod
    def planar(cls, l: int, d: int) -> "LatticeSpec":
        return cls(l, d, Boundary.PLANAR)

    @classmethod
    def toric(cls, L: int, d_toric: int) -> "LatticeSpec":
        return cls(2 * L, 2 * d_toric + 1, Boundary.TORIC)

    @property
    def L(self) -> int:
        return self.l // 2

    @property
    def d_toric(self) -> int:
        return (self.d - 1) // 2

    @property
    def n_sites(self) -> int:
        return self.l * self.l * self.d

    def contains(self, u: Coord) -> bool:
        u1, u2, u3 = u
        return 1 <= u1 <= self.l and 0 <= u2 <= self.l - 1 and 1 <= u3 <= self.d

    def index(self, u: Coord) -> int:
        """Linear site index, u3-major."""
        u1, u2, u3 = u
        return ((u3 - 1) * self.l + u2) * self.l + (u1 - 1)

    def coord(self, index: int) -> Coord:
        rest, i1 = divmod(index, self.l)
        i3, u2 = divmod(rest, self.l)
        return (i1 + 1, u2, i3 + 1)

    def sites(self) -> Iterator[Coord]:
        for i in range(self.n_sites):
            yield self.coord(i)

    def neighbors(self, u: Coord) -> list[Coord]:
        """In-range nearest neighbours in the cluster (no wrap-around)."""
        out = []
        for axis in range(3):
            for step in (-1, 1):
                v = list(u)
                v[axis] += step
                v = (v[0], v[1], v[2])
                if self.contains(v):
                    out.append(v)
        return out


@dataclass(frozen=True)
class SiteRole:
    coordinate: Coord
    role: Role
    basis: Basis
    face: Face


def _parity_role(u: Coord) -> Role:
    odd = [c % 2 for c in u]
    n_odd = sum(odd)
    if n_odd == 0:
        return Role.VERTEX_TE
    if n_odd == 3:
        return Role.VERTEX_TO
    # one odd coordinate -> edge of Te, two odd -> edge of To
    return Role.EDGE_TE if n_odd == 1 else Role.EDGE_TO


def classify_site(u: Coord, spec: LatticeSpec) -> SiteRole:
    if not spec.contains(u):
        raise IndexError(f"site {u} outside the lattice l={spec.l}, d={spec.d}")
    role = _parity_role(u)
    face = Face.NONE
    if spec.boundary is Boundary.PLANAR and (u[0] + u[1]) % 2 == 1:
        if u[2] == 1:
            face = Face.L
        elif u[2] == spec.d:
            face = Face.R
    if role in (Role.VERTEX_TE, Role.VERTEX_TO):
        basis = Basis.Z
    elif face is Face.NONE:
        basis = Basis.X
    else:
        basis = Basis.NONE
    return SiteRole(u, role, basis, face)


def face_sites(spec: LatticeSpec, face: Face) -> list[Coord]:
    u3 = 1 if face is Face.L else spec.d
    return [
        (u1, u2, u3)
        for u2 in range(spec.l)
        for u1 in range(1, spec.l + 1)
        if (u1 + u2) % 2 == 1
    ]


def _edge_axis(u: Coord, sector: Sector) -> int:
    # the axis along which an edge site's parity differs from the sector's vertices
    want = 1 if sector is Sector.TO else 0
    (axis,) = [a for a in range(3) if u[a] % 2 != want]
    return axis


@dataclass
class SectorGraph:
    """One decoding sector: syndrome vertices joined by error-support edges.

    ``endpoints[k]`` holds the two vertex indices of edge ``k``; ``-1`` stands
    for the boundary node and only occurs on rough or excluded edges.
    """

    spec: LatticeSpec
    sector: Sector
    vertices: np.ndarray  # (n_v, 3) cluster coordinates
    edges: np.ndarray  # (n_e, 3)
    endpoints: np.ndarray  # (n_e, 2) int
    rough: np.ndarray  # (n_e,) bool
    excluded: np.ndarray  # (n_e,) bool
    edge_axis: np.ndarray  # (n_e,) int
    plane_masks: np.ndarray  # (n_obs, n_e) bool: test plane (planar) or wrap planes (toric)
    test_plane: tuple[int, int] = field(default=(0, 0))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def eligible(self) -> np.ndarray:
        return ~self.excluded

    @cached_property
    def vertex_index(self) -> dict[Coord, int]:
        return {tuple(int(c) for c in v): i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[Coord, int]:
        return {tuple(int(c) for c in e): i for i, e in enumerate(self.edges)}

    @cached_property
    def incidence(self):
        """Sparse vertex-by-edge incidence matrix over GF(2), excluded edges dropped."""
        from scipy.sparse import csr_matrix

        rows, cols = [], []
        for k, (a, b) in enumerate(self.endpoints):
            if self.excluded[k]:
                continue
            for v in (a, b):
                if v >= 0:
                    rows.append(v)
                    cols.append(k)
        data = np.ones(len(rows), dtype=np.uint8)
        return csr_matrix((data, (rows, cols)), shape=(self.n_vertices, self.n_edges))

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per vertex: sorted ``(neighbour, edge)`` pairs; neighbour -1 is the boundary."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for k, (a, b) in enumerate(self.endpoints):
            if self.excluded[k]:
                continue
            if a >= 0:
                adj[a].append((int(b), k))
            if b >= 0:
                adj[b].append((int(a), k))
        for row in adj:
            row.sort()
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for _ in self.adjacency[v])

    def plane_parity(self, chain: np.ndarray) -> np.ndarray:
        """Crossing parity of ``chain`` with every observable plane."""
        chain = np.asarray(chain, dtype=np.uint8)
        return (chain @ self.plane_masks.T.astype(np.uint8)) % 2 == 1


def build_sector_graph(spec: LatticeSpec, sector: Sector, test_index: int | None = None) -> SectorGraph:
    """Sublattice graph for one sector.

    In planar mode ``test_index`` selects the homology test plane (an even u2
    for ``To``, an odd u1 for ``Te``); the default is the lowest valid one.
    """
    if spec.boundary is Boundary.TORIC:
        return _build_toric(spec, sector)

    vert_parity = 1 if sector is Sector.TO else 0
    edge_role = Role.EDGE_TO if sector is Sector.TO else Role.EDGE_TE
    vertices, edges = [], []
    for u in spec.sites():
        if all(c % 2 == vert_parity for c in u):
            vertices.append(u)
        elif _parity_role(u) is edge_role:
            edges.append(u)
    vindex = {v: i for i, v in enumerate(vertices)}

    endpoints = np.full((len(edges), 2), -1, dtype=np.int64)
    rough = np.zeros(len(edges), dtype=bool)
    excluded = np.zeros(len(edges), dtype=bool)
    axes = np.zeros(len(edges), dtype=np.int64)
    for k, e in enumerate(edges):
        axis = _edge_axis(e, sector)
        axes[k] = axis
        for j, step in enumerate((-1, 1)):
            v = list(e)
            v[axis] += step
            endpoints[k, j] = vindex.get((v[0], v[1], v[2]), -1)
        if (endpoints[k] < 0).any():
            if sector is Sector.TE and axis == 2:
                excluded[k] = True
            else:
                rough[k] = True

    # rough faces: To at the u2 extremes, Te at the u1 extremes
    plane_axis = 1 if sector is Sector.TO else 0
    if test_index is None:
        test_index = 0 if sector is Sector.TO else 1
    _check_slice_index(spec, sector, test_index)
    E = np.array(edges, dtype=np.int64)
    mask = (E[:, plane_axis] == test_index) & (axes == plane_axis)
    return SectorGraph(
        spec=spec,
        sector=sector,
        vertices=np.array(vertices, dtype=np.int64),
        edges=E,
        endpoints=endpoints,
        rough=rough,
        excluded=excluded,
        edge_axis=axes,
        plane_masks=mask[None, :],
        test_plane=(plane_axis, test_index),
    )


def _build_toric(spec: LatticeSpec, sector: Sector) -> SectorGraph:
    # L x L x d_toric vertices on a 3-torus with cluster periods (2L, 2L, 2 d_toric)
    L, T = spec.L, spec.d_toric
    periods = (2 * L, 2 * L, 2 * T)
    offsets = (1, 1, 1) if sector is Sector.TO else (2, 0, 2)
    shape = (L, L, T)

    def vid(i, j, k):
        return (k % T) * L * L + (j % L) * L + (i % L)

    vertices = np.zeros((L * L * T, 3), dtype=np.int64)
    for k in range(T):
        for j in range(L):
            for i in range(L):
                vertices[vid(i, j, k)] = [offsets[0] + 2 * i, offsets[1] + 2 * j, offsets[2] + 2 * k]

    edges, endpoints, axes = [], [], []
    for k in range(T):
        for j in range(L):
            for i in range(L):
                base = (i, j, k)
                for axis in range(3):
                    c = [offsets[a] + 2 * base[a] for a in range(3)]
                    c[axis] += 1
                    nxt = list(base)
                    nxt[axis] += 1
                    edges.append(_wrap_coord(c, periods))
                    endpoints.append((vid(*base), vid(*nxt)))
                    axes.append(axis)
    E = np.array(edges, dtype=np.int64)
    axes = np.array(axes, dtype=np.int64)
    masks = []
    for axis in (0, 1):
        # one crossing plane per wrap direction: the edges leaving the first layer
        first = offsets[axis] + 1
        masks.append((axes == axis) & (E[:, axis] == _wrap_coord_1(first, periods[axis], axis)))
    return SectorGraph(
        spec=spec,
        sector=sector,
        vertices=vertices,
        edges=E,
        endpoints=np.array(endpoints, dtype=np.int64),
        rough=np.zeros(len(E), dtype=bool),
        excluded=np.zeros(len(E), dtype=bool),
        edge_axis=axes,
        plane_masks=np.array(masks),
        test_plane=(0, 0),
    )


def _wrap_coord_1(c: int, period: int, axis: int) -> int:
    # u1, u3 live in [1, period]; u2 lives in [0, period - 1]
    lo = 0 if axis == 1 else 1
    return (c - lo) % period + lo


def _wrap_coord(c, periods) -> Coord:
    return tuple(_wrap_coord_1(c[a], periods[a], a) for a in range(3))  # type: ignore[return-value]


@dataclass(frozen=True)
class CorrelatorSlice:
    sector: Sector
    index: int
    sites: tuple[Coord, ...]


def _check_slice_index(spec: LatticeSpec, sector: Sector, index: int) -> None:
    if sector is Sector.TO:
        if index % 2 or not 0 <= index <= spec.l - 1:
            raise ValueError(f"XX slice needs an even u2 in [0, {spec.l - 1}], got {index}")
    else:
        if index % 2 == 0 or not 1 <= index <= spec.l:
            raise ValueError(f"ZZ slice needs an odd u1 in [1, {spec.l}], got {index}")


def correlator_slice(spec: LatticeSpec, sector: Sector, index: int) -> CorrelatorSlice:
    """Sites of the XX slice ``(odd, u2, odd)`` or the ZZ slice ``(u1, even, even)``."""
    _check_slice_index(spec, sector, index)
    if sector is Sector.TO:
        sites = [
            (u1, index, u3)
            for u3 in range(1, spec.d + 1, 2)
            for u1 in range(1, spec.l + 1, 2)
        ]
    else:
        sites = [
            (index, u2, u3)
            for u3 in range(2, spec.d + 1, 2)
            for u2 in range(0, spec.l, 2)
        ]
    return CorrelatorSlice(sector, index, tuple(sites))
