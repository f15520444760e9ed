import math
import warnings

import numpy as np
import pytest

from thermalcluster import experiments as ex
from thermalcluster.lattice import LatticeSpec
from thermalcluster.noise import NoiseKind, NoiseModel

Z = NoiseKind.DEPHASING_Z


def test_wilson_interval_known_values():
    lo, hi = ex.wilson_interval(10, 100)
    assert lo == pytest.approx(0.0552, abs=1e-4)
    assert hi == pytest.approx(0.1744, abs=1e-4)
    assert ex.wilson_interval(0, 50)[0] == 0.0
    assert ex.wilson_interval(0, 0) == (0.0, 1.0)


def test_stats_fields():
    s = ex.ExperimentStats(LatticeSpec.toric(3, 3), NoiseModel(Z, 0.02), 1, 1000, 100, 50)
    assert s.fail_rate_to == 0.1 and s.fail_rate_te == 0.05
    assert s.fidelity == pytest.approx(0.9 * 0.95)
    assert s.stderr_to == pytest.approx(math.sqrt(0.09 / 1000))
    row = s.csv_row()
    assert list(row) == ex.CSV_COLUMNS
    assert row["l"] == 6 and row["d"] == 7 and row["boundary"] == "toric"


def test_worker_partition_invariance():
    spec = LatticeSpec.toric(3, 3)
    model = NoiseModel(Z, 0.03)
    one = ex.run_trials(spec, model, 3001, seed=5, workers=1)
    three = ex.run_trials(spec, model, 3001, seed=5, workers=3)
    assert (one.fail_to, one.fail_te) == (three.fail_to, three.fail_te)
    parts = [ex.count_failures(spec, model, 5, a, n) for a, n in [(0, 1000), (1000, 1), (1001, 2000)]]
    assert (sum(p[0] for p in parts), sum(p[1] for p in parts)) == (one.fail_to, one.fail_te)


def test_single_trial_matches_batch():
    spec = LatticeSpec.planar(5, 5)
    model = NoiseModel(Z, 0.08)
    recs = [ex.run_single_trial(spec, model, 3, t) for t in range(200)]
    stats = ex.run_trials(spec, model, 200, seed=3)
    assert sum(not r.success_to for r in recs) == stats.fail_to
    assert sum(not r.success_te for r in recs) == stats.fail_te


def test_sectors_share_statistics_on_torus():
    # the two toric sector graphs are isomorphic, so failure rates agree within noise
    s = ex.run_trials(LatticeSpec.toric(4, 4), NoiseModel(Z, 0.03), 20000, seed=1)
    diff = s.fail_rate_to - s.fail_rate_te
    assert abs(diff) < 4 * math.hypot(s.stderr_to, s.stderr_te)


def test_crossing_of_synthetic_curves():
    p = np.linspace(0.02, 0.04, 6)
    small = 0.2 + 5 * (p - 0.03)
    large = 0.2 + 10 * (p - 0.03)
    assert ex._crossing(p, small, large) == pytest.approx(0.03)
    # parallel or inverted curves have no crossing in range
    assert ex._crossing(p, small, small + 0.01) is None
    assert ex._crossing(p, large, small) is None


def test_subthreshold_scan_is_inconclusive():
    sizes = [LatticeSpec.toric(L, L) for L in (3, 4, 5)]
    res = ex.threshold_scan(sizes, [0.004, 0.006, 0.008, 0.01], Z, 3000, seed=2, n_boot=10)
    assert res.inconclusive and res.estimate is None
    infid = np.array([[1 - c.fidelity for c in row] for row in res.curves])
    # bigger lattices fail less below threshold (L = 3 and 4 share the minimal failing weight)
    assert (infid[2] < infid[0]).all()


def test_fidelity_fit_recovers_model():
    k1, k2 = 0.3, 0.5
    grid = [(l, d, math.exp(-d * k1 * math.exp(-l * k2))) for l in (6, 8, 10, 12) for d in (9, 17, 33)]
    fit = ex.fidelity_fit(grid)
    assert fit.k1 == pytest.approx(k1, rel=1e-10)
    assert fit.k2 == pytest.approx(k2, rel=1e-10)
    assert fit.d_coefficient == pytest.approx(1.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)


def test_fidelity_fit_drops_saturated_cells():
    grid = [(6, 9, 0.9), (6, 17, 0.8), (8, 9, 0.95), (8, 17, 0.91), (12, 9, 1.0)]
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fit = ex.fidelity_fit(grid)
    assert any("dropping" in str(x.message) for x in w)
    assert fit.excluded == [(12, 9, 1.0)]
    with pytest.warns(RuntimeWarning), pytest.raises(ValueError):
        ex.fidelity_fit([(6, 9, 1.0), (8, 9, 0.0)])


def test_temperature_report():
    rep = ex.temperature_report(0.033, 1.0, ci=(0.032, 0.034))
    assert rep["T_lower"] == pytest.approx(0.296, abs=0.003)
    assert rep["T_upper_biseparable"] == pytest.approx(1.1346, abs=1e-4)
    assert rep["T_lower_ci95"][0] < rep["T_lower"] < rep["T_lower_ci95"][1]
    assert "gap" in rep["units"]


def test_csv_roundtrip(tmp_path):
    import csv

    s = ex.run_trials(LatticeSpec.toric(3, 3), NoiseModel(Z, 0.02), 500, seed=0)
    path = tmp_path / "out.csv"
    ex.write_csv(path, [s])
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(ex.CSV_COLUMNS)
    assert int(rows[0]["fail_to"]) == s.fail_to
    assert float(rows[0]["fidelity"]) == s.fidelity
