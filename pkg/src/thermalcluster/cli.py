"""Command-line entry point: ``thermalcluster <subcommand> ...``.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 inconclusive threshold scan.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, experiments, oracle
from .lattice import Boundary, LatticeSpec
from .noise import NoiseKind, NoiseModel

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _p_grid(text: str) -> list[float]:
    try:
        a, b, n = text.split(":")
        grid = np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from exc
    if int(n) < 2:
        raise argparse.ArgumentTypeError("grid needs at least two points")
    return [float(x) for x in grid]


def _sizes(args) -> list[LatticeSpec]:
    """Lattices from ``--L/--d-toric`` (toric only) or explicit ``--l/--d``."""
    boundary = Boundary(args.boundary)
    if args.L:
        if boundary is not Boundary.TORIC:
            raise ConfigError("--L is only meaningful with --boundary toric")
        dts = args.d_toric or list(args.L)
        if len(dts) == 1:
            dts = dts * len(args.L)
        if len(dts) != len(args.L):
            raise ConfigError("--d-toric needs one value or one per --L")
        return [LatticeSpec.toric(L, dt) for L, dt in zip(args.L, dts)]
    if not args.l:
        raise ConfigError("give lattice sizes with --l/--d or --L")
    ds = args.d or list(args.l)
    if len(ds) == 1:
        ds = ds * len(args.l)
    if len(ds) != len(args.l):
        raise ConfigError("--d needs one value or one per --l")
    return [LatticeSpec(l, d, boundary) for l, d in zip(args.l, ds)]


def _grid(args) -> list[float]:
    if args.p_grid:
        return args.p_grid
    if args.p:
        return list(args.p)
    raise ConfigError("give --p or --p-grid")


def _emit(summary: dict, out: Path | None, stats=None) -> None:
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        if stats is not None:
            experiments.write_csv(out, stats)
            out = out.with_suffix(".json")
        out.write_text(json.dumps(summary, indent=2, default=str) + "\n", encoding="utf-8")
    print(json.dumps(summary, indent=2, default=str))


def cmd_threshold(args) -> int:
    sizes = _sizes(args)
    grid = _grid(args)
    res = experiments.threshold_scan(
        sizes, grid, NoiseKind(args.noise), args.trials, args.seed, args.workers, n_boot=args.bootstrap
    )
    summary = res.summary()
    summary.update(noise=args.noise, trials=args.trials, seed=args.seed)
    if res.estimate is not None:
        summary["temperature"] = experiments.temperature_report(res.estimate, args.delta, res.ci)
    _emit(summary, args.out, [s for row in res.curves for s in row])
    return EXIT_INCONCLUSIVE if res.inconclusive else EXIT_OK


def cmd_fidelity(args) -> int:
    if Boundary(args.boundary) is not Boundary.TORIC:
        raise ConfigError("the fidelity grid runs on toric lattices")
    args.p = args.p or [0.01]
    if len(args.p) != 1:
        raise ConfigError("give a single --p")
    Ls = args.L or [3, 4, 5, 6]
    dts = args.d_toric or [4, 8, 16]
    stats, fit = experiments.fidelity_grid(Ls, dts, args.p[0], args.trials, args.seed, args.workers, NoiseKind(args.noise))
    summary = experiments.fit_summary(fit)
    summary.update(p=args.p[0], trials=args.trials, seed=args.seed, L=Ls, d_toric=dts)
    _emit(summary, args.out, stats)
    return EXIT_OK


def cmd_trial(args) -> int:
    sizes = _sizes(args)
    if len(sizes) != 1 or not args.p or len(args.p) != 1:
        raise ConfigError("a single trial takes one lattice size and one --p")
    rec = experiments.run_single_trial(sizes[0], NoiseModel(NoiseKind(args.noise), args.p[0]), args.seed, args.trial_index)
    d = asdict(rec)
    d["spec"] = {"l": rec.spec.l, "d": rec.spec.d, "boundary": rec.spec.boundary.value}
    d["model"] = {"noise": rec.model.kind.value, "p": rec.model.rate}
    _emit(d, args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    p = args.p[0] if args.p else 0.033
    _emit(bounds.bounds_summary(p, args.delta), args.out)
    return EXIT_OK


def cmd_oracle_verify(args) -> int:
    l = args.l[0] if args.l else 3
    d = args.d[0] if args.d else 3
    spec = LatticeSpec.planar(l, d)
    res = oracle.identity_suite(spec, args.branches, args.error_sets, args.seed)
    summary = {"l": l, "d": d, "checks": res.checks, "ok": res.ok, "failures": res.failures}
    if args.dense:
        rng = np.random.default_rng(args.seed)
        sites = list(spec.sites())
        dense_ok = [
            oracle.dense_crosscheck(spec, [u for u in sites if rng.random() < 0.15], args.seed + k)
            for k in range(args.dense)
        ]
        summary["dense"] = [sum(dense_ok), len(dense_ok)]
        summary["ok"] = res.ok and all(dense_ok)
    _emit(summary, args.out)
    return EXIT_OK if summary["ok"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--l", type=int, nargs="+", help="transverse extent(s); toric lattices use l = 2L")
    common.add_argument("--d", type=int, nargs="+", help="separation extent(s); toric lattices use d = 2 d_toric + 1")
    common.add_argument("--L", type=int, nargs="+", help="toric linear size(s)")
    common.add_argument("--d-toric", type=int, nargs="+", help="toric time extent(s); defaults to L")
    common.add_argument("--p", type=float, nargs="+", help="physical error rate(s)")
    common.add_argument("--p-grid", type=_p_grid, help="linear grid a:b:n")
    common.add_argument("--trials", type=int, help="trials per point (20000; 10000 for fidelity)")
    common.add_argument("--seed", type=int, default=2024)
    common.add_argument("--boundary", choices=[b.value for b in Boundary], default="toric")
    common.add_argument("--noise", choices=[k.value for k in NoiseKind], default="z")
    common.add_argument("--delta", type=float, default=1.0, help="energy gap; temperatures are in these units")
    common.add_argument("--out", type=Path, help="output path (CSV for scans, with a JSON summary beside it)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="thermalcluster", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("threshold", parents=[common], help="threshold crossing scan")
    t.add_argument("--bootstrap", type=int, default=1000, help="bootstrap resamples for the CI")
    t.set_defaults(func=cmd_threshold)
    f = sub.add_parser("fidelity", parents=[common], help="finite-size fidelity grid and fit")
    f.set_defaults(func=cmd_fidelity)
    r = sub.add_parser("trial", parents=[common], help="one sampled and decoded trial")
    r.add_argument("--trial-index", type=int, default=0)
    r.set_defaults(func=cmd_trial)
    b = sub.add_parser("bounds", parents=[common], help="separability and temperature bounds")
    b.set_defaults(func=cmd_bounds)
    o = sub.add_parser("oracle-verify", parents=[common], help="exact stabilizer identity suite")
    o.add_argument("--branches", type=int, default=100)
    o.add_argument("--error-sets", type=int, default=200)
    o.add_argument("--dense", type=int, default=0, help="number of dense state-vector cross-checks")
    o.set_defaults(func=cmd_oracle_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trials is None:
        args.trials = 10000 if args.command == "fidelity" else 20000
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.trials < 1 or args.workers < 1 or args.delta <= 0:
        print("error: --trials and --workers must be positive, --delta > 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
