"""Monte Carlo harness: failure rates, Bell-pair fidelity, threshold crossings, fits."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import bounds
from .decoder import MatchingDecoder
from .lattice import Boundary, LatticeSpec, Sector, build_sector_graph
from .noise import ChainSampler, NoiseKind, NoiseModel, temperature_from_error_rate

log = logging.getLogger(__name__)

CHUNK = 4096
FIDELITY_DEFINITION = "F = Pr[no logical flip in To] * Pr[no logical flip in Te]"
DECODER_NOTE = "MWPM decoder: targets the 2.9% matching threshold, not the optimal 3.3%"

CSV_COLUMNS = [
    "run_id", "boundary", "noise", "l", "d", "p", "trials",
    "fail_to", "fail_te", "fail_rate_to", "fail_rate_te", "stderr_to", "stderr_te", "fidelity",
]


@lru_cache(maxsize=64)
def _decoder(spec: LatticeSpec, sector: Sector) -> MatchingDecoder:
    return MatchingDecoder(build_sector_graph(spec, sector))


def _stream(spec: LatticeSpec, sector: Sector, kind: NoiseKind) -> tuple[int, ...]:
    # the rate is deliberately not part of the stream: neighbouring grid points share random numbers
    return (spec.l, spec.d, list(Boundary).index(spec.boundary), list(Sector).index(sector), list(NoiseKind).index(kind))


def count_failures(spec: LatticeSpec, model: NoiseModel, seed: int, start: int, count: int) -> tuple[int, int]:
    """Logical failures per sector over trials ``start .. start+count-1``."""
    out = []
    for sector in (Sector.TO, Sector.TE):
        dec = _decoder(spec, sector)
        sampler = ChainSampler(dec.graph, model, seed, _stream(spec, sector, model.kind))
        fails = 0
        for s in range(start, start + count, CHUNK):
            n = min(CHUNK, start + count - s)
            fails += int(dec.logical_failures(sampler.batch(s, n)).sum())
        out.append(fails)
    return out[0], out[1]


def _count_job(args):
    return count_failures(*args)


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ExperimentStats:
    spec: LatticeSpec
    model: NoiseModel
    seed: int
    trials: int
    fail_to: int
    fail_te: int

    @property
    def fail_rate_to(self) -> float:
        return self.fail_to / self.trials

    @property
    def fail_rate_te(self) -> float:
        return self.fail_te / self.trials

    @property
    def stderr_to(self) -> float:
        p = self.fail_rate_to
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def stderr_te(self) -> float:
        p = self.fail_rate_te
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def fidelity(self) -> float:
        return (1 - self.fail_rate_to) * (1 - self.fail_rate_te)

    @property
    def fidelity_stderr(self) -> float:
        return math.hypot((1 - self.fail_rate_te) * self.stderr_to, (1 - self.fail_rate_to) * self.stderr_te)

    @property
    def wilson_to(self) -> tuple[float, float]:
        return wilson_interval(self.fail_to, self.trials)

    @property
    def wilson_te(self) -> tuple[float, float]:
        return wilson_interval(self.fail_te, self.trials)

    @property
    def run_id(self) -> str:
        return f"{self.spec.boundary.value}-{self.model.kind.value}-l{self.spec.l}-d{self.spec.d}-p{self.model.rate:.6g}-s{self.seed}"

    def csv_row(self) -> dict:
        return {
            "run_id": self.run_id,
            "boundary": self.spec.boundary.value,
            "noise": self.model.kind.value,
            "l": self.spec.l,
            "d": self.spec.d,
            "p": repr(self.model.rate),
            "trials": self.trials,
            "fail_to": self.fail_to,
            "fail_te": self.fail_te,
            "fail_rate_to": repr(self.fail_rate_to),
            "fail_rate_te": repr(self.fail_rate_te),
            "stderr_to": repr(self.stderr_to),
            "stderr_te": repr(self.stderr_te),
            "fidelity": repr(self.fidelity),
        }


def _partition(n_trials: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n_trials))
    bounds_ = np.linspace(0, n_trials, parts + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(bounds_[:-1], bounds_[1:]) if b > a]


def run_trials(spec: LatticeSpec, model: NoiseModel, n_trials: int, seed: int, workers: int = 1) -> ExperimentStats:
    """Sample and decode both sectors ``n_trials`` times.

    Trial ``t`` draws from a counter-based stream keyed by ``(seed, t)``, so
    the counts do not depend on ``workers``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    jobs = [(spec, model, seed, a, n) for a, n in _partition(n_trials, workers)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_job, jobs))
    else:
        parts = [_count_job(j) for j in jobs]
    fail_to = sum(p[0] for p in parts)
    fail_te = sum(p[1] for p in parts)
    log.info("%s: %d/%d To, %d/%d Te failures", spec, fail_to, n_trials, fail_te, n_trials)
    return ExperimentStats(spec, model, seed, n_trials, fail_to, fail_te)


@dataclass
class TrialRecord:
    seed: int
    trial: int
    spec: LatticeSpec
    model: NoiseModel
    success_to: bool
    success_te: bool
    errors_to: int
    errors_te: int


def run_single_trial(spec: LatticeSpec, model: NoiseModel, seed: int, trial: int = 0) -> TrialRecord:
    res = {}
    for sector in (Sector.TO, Sector.TE):
        dec = _decoder(spec, sector)
        chain = ChainSampler(dec.graph, model, seed, _stream(spec, sector, model.kind)).sample(trial)
        res[sector] = (not bool(dec.logical_failures(chain)[0]), int(chain.sum()))
    return TrialRecord(seed, trial, spec, model, res[Sector.TO][0], res[Sector.TE][0], res[Sector.TO][1], res[Sector.TE][1])


# -- threshold crossings -------------------------------------------------------


@dataclass
class ThresholdResult:
    sizes: list[LatticeSpec]
    p_grid: list[float]
    curves: list[list[ExperimentStats]]
    pair_crossings: list[float | None]
    estimate: float | None
    ci: tuple[float, float] | None
    inconclusive: bool
    metric: str = "bell-pair infidelity 1 - F"
    boot_failures: int = 0

    def summary(self) -> dict:
        return {
            "threshold": self.estimate,
            "ci95": list(self.ci) if self.ci else None,
            "pair_crossings": self.pair_crossings,
            "inconclusive": self.inconclusive,
            "metric": self.metric,
            "decoder": DECODER_NOTE,
            "sizes": [{"l": s.l, "d": s.d, "boundary": s.boundary.value} for s in self.sizes],
            "p_grid": self.p_grid,
        }


def _infidelity(f_to: np.ndarray, f_te: np.ndarray) -> np.ndarray:
    return 1 - (1 - f_to) * (1 - f_te)


def _crossing(p: np.ndarray, small: np.ndarray, large: np.ndarray) -> float | None:
    """Root of a straight-line fit to ``large - small`` over the grid, if inside it."""
    diff = large - small
    slope, icept = np.polyfit(p, diff, 1)
    if slope <= 0:
        return None
    root = -icept / slope
    if not p.min() <= root <= p.max():
        return None
    return float(root)


def _crossings(p: np.ndarray, curves: np.ndarray) -> list[float | None]:
    return [_crossing(p, curves[i], curves[i + 1]) for i in range(len(curves) - 1)]


def threshold_scan(
    sizes: list[LatticeSpec],
    p_grid,
    kind: NoiseKind,
    n_trials: int,
    seed: int,
    workers: int = 1,
    n_boot: int = 1000,
) -> ThresholdResult:
    """Crossing of Bell-pair infidelity curves of neighbouring sizes.

    Each neighbouring pair contributes the root of a straight-line fit to the
    difference of their curves; the estimate is the mean of those roots, with
    a 95% percentile interval from a parametric bootstrap over the failure
    counts.  Any missing crossing marks the scan inconclusive.
    """
    if len(sizes) < 3 or len(p_grid) < 4:
        raise ValueError("need at least 3 sizes and 4 grid points")
    sizes = sorted(sizes, key=lambda s: (s.l, s.d))
    p = np.asarray(p_grid, dtype=float)
    curves = [[run_trials(s, NoiseModel(kind, float(q)), n_trials, seed, workers) for q in p] for s in sizes]
    f_to = np.array([[c.fail_rate_to for c in row] for row in curves])
    f_te = np.array([[c.fail_rate_te for c in row] for row in curves])
    crossings = _crossings(p, _infidelity(f_to, f_te))
    if any(c is None for c in crossings):
        return ThresholdResult(sizes, p.tolist(), curves, crossings, None, None, True)
    estimate = float(np.mean(crossings))

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB007]))
    n = np.array([[c.trials for c in row] for row in curves])
    boot, failed = [], 0
    for _ in range(n_boot):
        bt = rng.binomial(n, f_to) / n
        be = rng.binomial(n, f_te) / n
        cs = _crossings(p, _infidelity(bt, be))
        if any(c is None for c in cs):
            failed += 1
            continue
        boot.append(np.mean(cs))
    ci = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5))) if boot else None
    return ThresholdResult(sizes, p.tolist(), curves, crossings, estimate, ci, False, boot_failures=failed)


# -- fidelity model ----------------------------------------------------------------


@dataclass
class FitResult:
    """``ln(-ln F) = a ln d + b - k2 l``; k1, k2 come from the slope-one fit."""

    k1: float
    k2: float
    d_coefficient: float
    r_squared: float
    r_squared_slope_one: float
    grid: list[tuple[int, int, float]] = field(default_factory=list)
    excluded: list[tuple[int, int, float]] = field(default_factory=list)


def fidelity_fit(grid) -> FitResult:
    """Least-squares fit of the finite-size fidelity model to ``(l, d, F)`` cells.

    Cells with ``F`` of exactly 0 or 1 carry no information on the log scale
    and are dropped with a warning.
    """
    cells = [(int(l), int(d), float(F)) for l, d, F in grid]
    keep = [c for c in cells if 0.0 < c[2] < 1.0]
    dropped = [c for c in cells if c not in keep]
    if dropped:
        warnings.warn(f"dropping {len(dropped)} cells with F in {{0, 1}}: {dropped}", RuntimeWarning, stacklevel=2)
    if len(keep) < 3:
        raise ValueError("need at least three usable cells")
    l = np.array([c[0] for c in keep], dtype=float)
    lnd = np.log([c[1] for c in keep])
    y = np.log(-np.log([c[2] for c in keep]))

    def r2(pred):
        ss_res = float(((y - pred) ** 2).sum())
        ss_tot = float(((y - y.mean()) ** 2).sum())
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    A = np.column_stack([lnd, np.ones_like(l), -l])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    B = np.column_stack([np.ones_like(l), -l])
    c1, *_ = np.linalg.lstsq(B, y - lnd, rcond=None)
    return FitResult(
        k1=float(np.exp(c1[0])),
        k2=float(c1[1]),
        d_coefficient=float(coef[0]),
        r_squared=r2(A @ coef),
        r_squared_slope_one=r2(B @ c1 + lnd),
        grid=keep,
        excluded=dropped,
    )


def fidelity_grid(Ls, d_torics, p: float, n_trials: int, seed: int, workers: int = 1, kind=NoiseKind.DEPHASING_Z):
    """Toric-mode grid of Bell-pair fidelities and the model fit over it."""
    stats = [
        run_trials(LatticeSpec.toric(L, dt), NoiseModel(kind, p), n_trials, seed, workers)
        for L in Ls
        for dt in d_torics
    ]
    fit = fidelity_fit([(s.spec.l, s.spec.d, s.fidelity) for s in stats])
    return stats, fit


# -- reporting -----------------------------------------------------------------------


def temperature_report(p_threshold: float, gap: float = 1.0, ci: tuple[float, float] | None = None) -> dict:
    """Lower bound from an error-rate threshold next to the separability bounds."""
    out = bounds.bounds_summary(p_threshold, gap)
    if ci is not None:
        # T is increasing in p
        out["T_lower_ci95"] = [temperature_from_error_rate(ci[0], gap), temperature_from_error_rate(ci[1], gap)]
    return out


def write_csv(path, stats: list[ExperimentStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for s in stats:
            w.writerow(s.csv_row())


def fit_summary(fit: FitResult) -> dict:
    d = asdict(fit)
    d["model"] = "ln(-ln F) = ln d + ln k1 - k2 l"
    d["fidelity_definition"] = FIDELITY_DEFINITION
    return d
