"""Thermal Z-noise: temperature/error-rate conversion and error-chain sampling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .lattice import SectorGraph


class NoiseKind(enum.Enum):
    DEPHASING_Z = "z"
    DEPOLARIZING_BCC = "depol-bcc"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 0.5:
            raise ValueError(f"rate must lie in [0, 1/2], got {self.rate}")

    @property
    def edge_rate(self) -> float:
        """Effective Z-flip probability on a sector edge.

        On the bcc-reduced lattice X errors are absorbed by the X measurements
        and Y acts as Z, so only 2/3 of the depolarizing rate survives.
        """
        if self.kind is NoiseKind.DEPOLARIZING_BCC:
            return 2.0 * self.rate / 3.0
        return self.rate


def error_rate_from_temperature(T: float, gap: float = 1.0) -> float:
    """Z-flip probability ``1 / (1 + exp(gap / T))`` of the thermal cluster state."""
    if T <= 0 or gap <= 0:
        raise ValueError("temperature and gap must be positive")
    if math.isinf(T):
        return 0.5
    # written in exp(-x) so that tiny T does not overflow
    w = math.exp(-gap / T)
    return w / (1.0 + w)


def temperature_from_error_rate(p: float, gap: float = 1.0) -> float:
    if not 0.0 < p < 0.5:
        raise ValueError(f"error rate must lie in (0, 1/2), got {p}")
    if gap <= 0:
        raise ValueError("gap must be positive")
    return gap / math.log((1.0 - p) / p)


def _stream_key(seed: int, stream: tuple[int, ...]) -> np.ndarray:
    return np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(2, dtype=np.uint64)


class ChainSampler:
    """Counter-based sampler: edge ``k`` of trial ``t`` always consumes the
    same Philox output for a given ``(seed, stream)``, however trials are
    batched or split across workers.
    """

    def __init__(self, graph: SectorGraph, model: NoiseModel, seed: int, stream: tuple[int, ...] = ()):
        self.graph = graph
        self.model = model
        self.key = _stream_key(seed, stream)
        self.n_edges = graph.n_edges
        self._blocks = -(-self.n_edges // 4)
        self._eligible = graph.eligible

    def uniforms(self, start: int, count: int) -> np.ndarray:
        bitgen = np.random.Philox(key=self.key, counter=[start * self._blocks, 0, 0, 0])
        u = np.random.Generator(bitgen).random((count, 4 * self._blocks))
        return u[:, : self.n_edges]

    def batch(self, start: int, count: int) -> np.ndarray:
        """Chains for trials ``start .. start+count-1``, shape ``(count, n_edges)``."""
        rate = self.model.edge_rate
        if rate == 0.0:
            return np.zeros((count, self.n_edges), dtype=bool)
        return (self.uniforms(start, count) < rate) & self._eligible

    def sample(self, trial: int) -> np.ndarray:
        return self.batch(trial, 1)[0]


def sample_error_chain(
    graph: SectorGraph, model: NoiseModel, seed: int, trial: int = 0, stream: tuple[int, ...] = ()
) -> np.ndarray:
    return ChainSampler(graph, model, seed, stream).sample(trial)
