"""Minimum-weight perfect-matching decoding of sector error chains.

Two routes share the same graph:

* the reference route builds the explicit matching problem (all defect pairs
  plus one boundary image per defect), solves it with a blossom matcher and
  lays shortest paths to form the correction;
* :class:`MatchingDecoder` hands the same graph to PyMatching and predicts
  logical flips for whole batches of chains, which is what the Monte Carlo
  harness uses.

A chain fails when ``chain + correction`` crosses an observable plane an odd
number of times (the fixed test plane in planar mode, either wrap plane in
toric mode).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import pymatching
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .lattice import Boundary, SectorGraph

BOUNDARY = -1


def _check_chain(chain: np.ndarray, graph: SectorGraph) -> np.ndarray:
    chain = np.asarray(chain, dtype=bool)
    if chain.shape[-1] != graph.n_edges:
        raise ValueError(f"chain has {chain.shape[-1]} bits, graph has {graph.n_edges} edges")
    if (chain & graph.excluded).any():
        raise ValueError("chain has errors on excluded edges")
    return chain


def extract_syndrome(chain: np.ndarray, graph: SectorGraph) -> np.ndarray:
    """Boundary of the chain: per-vertex parity of incident chain edges.

    Works on a single chain or a ``(shots, n_edges)`` batch.
    """
    chain = _check_chain(chain, graph)
    syn = graph.incidence @ chain.astype(np.uint8).T
    return np.asarray(syn).T % 2 == 1


# -- distances --------------------------------------------------------------


@dataclass
class _Distances:
    pair: np.ndarray  # (n_v, n_v) graph distances, boundary not traversed
    to_boundary: np.ndarray | None  # (n_v,) distance to the nearest rough face


def _distances(graph: SectorGraph) -> _Distances:
    cached = graph.__dict__.get("_distances")
    if cached is not None:
        return cached
    n = graph.n_vertices
    rows, cols = [], []
    rough_vertices = set()
    for k, (a, b) in enumerate(graph.endpoints):
        if graph.excluded[k]:
            continue
        if a >= 0 and b >= 0:
            rows += [a, b]
            cols += [b, a]
        else:
            rough_vertices.add(int(max(a, b)))
    # extra node n stands for the boundary
    brows = rows + [n] * len(rough_vertices) + list(rough_vertices)
    bcols = cols + list(rough_vertices) + [n] * len(rough_vertices)
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    pair = shortest_path(adj, unweighted=True, directed=False)
    to_b = None
    if graph.spec.boundary is Boundary.PLANAR:
        badj = csr_matrix((np.ones(len(brows)), (brows, bcols)), shape=(n + 1, n + 1))
        to_b = shortest_path(badj, unweighted=True, directed=False, indices=[n])[0, :n]
    out = _Distances(pair, to_b)
    graph.__dict__["_distances"] = out
    return out


# -- matching problem ----------------------------------------------------------


@dataclass
class MatchingProblem:
    """Complete graph over defects; ``boundary_weights`` is None in toric mode."""

    defects: np.ndarray
    pair_weights: np.ndarray
    boundary_weights: np.ndarray | None

    @property
    def size(self) -> int:
        return len(self.defects)


@dataclass
class Pairing:
    """Matched defect positions; ``(i, BOUNDARY)`` sends defect ``i`` to a rough face."""

    pairs: list[tuple[int, int]]
    cost: float


def build_matching_problem(syndrome: np.ndarray, graph: SectorGraph) -> MatchingProblem:
    defects = np.flatnonzero(np.asarray(syndrome, dtype=bool))
    dist = _distances(graph)
    if dist.to_boundary is None and len(defects) % 2:
        raise RuntimeError(f"odd number of defects ({len(defects)}) on a closed lattice")
    pair = dist.pair[np.ix_(defects, defects)]
    bw = None if dist.to_boundary is None else dist.to_boundary[defects]
    return MatchingProblem(defects, pair, bw)


def mwpm(problem: MatchingProblem) -> Pairing:
    """Minimum-weight perfect matching with optional per-defect boundary images.

    Boundary images are mutually joined at zero cost so the matching stays
    perfect whatever number of defects go to the boundary.
    """
    k = problem.size
    if k == 0:
        return Pairing([], 0.0)
    weights = {}
    for i in range(k):
        for j in range(i + 1, k):
            weights[(i, j)] = problem.pair_weights[i, j]
    if problem.boundary_weights is not None:
        for i in range(k):
            weights[(i, k + i)] = problem.boundary_weights[i]
            for j in range(i + 1, k):
                weights[(k + i, k + j)] = 0.0
    finite = [w for w in weights.values() if np.isfinite(w)]
    top = (max(finite) if finite else 0.0) + 1.0
    g = nx.Graph()
    for (i, j), w in sorted(weights.items()):
        if np.isfinite(w):
            g.add_edge(i, j, weight=top - w)
    matching = nx.max_weight_matching(g, maxcardinality=True)
    pairs = []
    cost = 0.0
    for a, b in matching:
        a, b = min(a, b), max(a, b)
        if a >= k:
            continue
        if b >= k:
            pairs.append((a, BOUNDARY))
            cost += problem.boundary_weights[a]  # type: ignore[index]
        else:
            pairs.append((a, b))
            cost += problem.pair_weights[a, b]
    covered = {a for a, _ in pairs} | {b for _, b in pairs if b != BOUNDARY}
    if len(covered) != k:
        raise RuntimeError("matching is not perfect")
    pairs.sort()
    return Pairing(pairs, float(cost))


# -- corrections ---------------------------------------------------------------


def _bfs_path(graph: SectorGraph, src: int, dst: int) -> list[int]:
    """Edges of a shortest path; ties go to the lexicographically first neighbour.

    ``dst == BOUNDARY`` walks to the nearest rough face.
    """
    adj = graph.adjacency
    parent: dict[int, tuple[int, int]] = {src: (-2, -1)}
    queue = deque([src])
    end_edge = None
    end = None
    while queue:
        v = queue.popleft()
        if dst == BOUNDARY:
            rough = [e for nb, e in adj[v] if nb == BOUNDARY]
            if rough:
                end, end_edge = v, min(rough)
                break
        elif v == dst:
            end = v
            break
        for nb, e in adj[v]:
            if nb != BOUNDARY and nb not in parent:
                parent[nb] = (v, e)
                queue.append(nb)
    if end is None:
        raise RuntimeError(f"no path from vertex {src} to {dst}")
    path = [] if end_edge is None else [end_edge]
    v = end
    while v != src:
        v, e = parent[v]
        path.append(e)
    return path


def correction_from_pairing(pairing: Pairing, problem: MatchingProblem, graph: SectorGraph) -> np.ndarray:
    corr = np.zeros(graph.n_edges, dtype=bool)
    for a, b in pairing.pairs:
        dst = BOUNDARY if b == BOUNDARY else int(problem.defects[b])
        for e in _bfs_path(graph, int(problem.defects[a]), dst):
            corr[e] ^= True
    return corr


def homology_class(residual: np.ndarray, graph: SectorGraph) -> bool:
    """True when a cycle is homologically nontrivial."""
    residual = _check_chain(residual, graph)
    if extract_syndrome(residual, graph).any():
        raise ValueError("residual chain has a nonzero boundary")
    return bool(graph.plane_parity(residual).any())


@dataclass
class DecodeOutcome:
    correction: np.ndarray
    residual_nontrivial: bool
    matched_pairs: list[tuple[int, int]] = field(default_factory=list)
    weight: float = 0.0

    @property
    def success(self) -> bool:
        return not self.residual_nontrivial


def decode(chain: np.ndarray, graph: SectorGraph) -> DecodeOutcome:
    """Reference decoder: syndrome, explicit matching, shortest-path correction, homology."""
    chain = _check_chain(chain, graph)
    syndrome = extract_syndrome(chain, graph)
    problem = build_matching_problem(syndrome, graph)
    pairing = mwpm(problem)
    corr = correction_from_pairing(pairing, problem, graph)
    residual = chain ^ corr
    return DecodeOutcome(corr, homology_class(residual, graph), pairing.pairs, pairing.cost)


# -- batch decoder -------------------------------------------------------------


class MatchingDecoder:
    """PyMatching on the sector graph, unit edge weights."""

    def __init__(self, graph: SectorGraph):
        self.graph = graph
        self._obs = self._build(observables=True)
        self._edges: pymatching.Matching | None = None

    def _build(self, observables: bool) -> pymatching.Matching:
        g = self.graph
        m = pymatching.Matching()
        for k, (a, b) in enumerate(g.endpoints):
            if g.excluded[k]:
                continue
            fids = set(np.flatnonzero(g.plane_masks[:, k]).tolist()) if observables else {k}
            if a >= 0 and b >= 0:
                m.add_edge(int(a), int(b), fault_ids=fids, weight=1.0, merge_strategy="keep-original")
            else:
                m.add_boundary_edge(int(max(a, b)), fault_ids=fids, weight=1.0, merge_strategy="keep-original")
        n_fault = g.plane_masks.shape[0] if observables else g.n_edges
        m.ensure_num_fault_ids(n_fault)
        return m

    def logical_failures(self, chains: np.ndarray, return_weights: bool = False):
        """Per-shot failure flags for a ``(shots, n_edges)`` batch of chains."""
        chains = _check_chain(chains, self.graph)
        if chains.ndim == 1:
            chains = chains[None]
        syndromes = extract_syndrome(chains, self.graph).astype(np.uint8)
        pred, weights = self._obs.decode_batch(syndromes, return_weights=True)
        actual = self.graph.plane_parity(chains)
        fails = (pred.astype(bool) != actual).any(axis=1)
        return (fails, weights) if return_weights else fails

    def decode(self, chain: np.ndarray) -> DecodeOutcome:
        chain = _check_chain(chain, self.graph)
        if self._edges is None:
            self._edges = self._build(observables=False)
        syndrome = extract_syndrome(chain, self.graph).astype(np.uint8)
        corr, weight = self._edges.decode(syndrome, return_weight=True)
        corr = corr.astype(bool)
        return DecodeOutcome(corr, homology_class(chain ^ corr, self.graph), [], float(weight))
