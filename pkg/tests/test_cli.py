import json
import subprocess
import sys

import pytest

from thermalcluster.cli import EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_OK, main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_bounds(capsys):
    assert main(["bounds"]) == EXIT_OK
    out = _json(capsys)
    assert out["T_lower"] == pytest.approx(0.296, abs=0.003)
    assert out["T_upper_biseparable"] == pytest.approx(1.1346, abs=1e-4)
    assert out["T_complete_separable"] == pytest.approx(99.0, abs=0.05)
    assert out["T_complete_separable_half_gap_units"] == pytest.approx(198.0, abs=0.05)
    assert "units" in out


def test_bounds_custom_gap(capsys):
    assert main(["bounds", "--p", "0.029", "--delta", "2"]) == EXIT_OK
    out = _json(capsys)
    assert out["T_lower"] == pytest.approx(2 * 0.2848, abs=1e-3)


@pytest.mark.parametrize(
    "argv",
    [
        ["trial", "--boundary", "planar", "--l", "4", "--d", "5", "--p", "0.01"],
        ["threshold", "--l", "8", "--d", "9", "--p", "0.01"],
        ["threshold", "--boundary", "planar", "--L", "4", "--p", "0.01"],
        ["trial", "--L", "4", "--p", "0.9"],
        ["fidelity", "--boundary", "planar"],
        ["trial", "--L", "4", "--p", "0.01", "--trials", "0"],
    ],
)
def test_config_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_bad_p_grid_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["threshold", "--L", "3", "4", "5", "--p-grid", "0.1:0.2"])
    assert exc.value.code == EXIT_CONFIG


def test_trial(capsys):
    assert main(["trial", "--L", "3", "--p", "0.02", "--seed", "4", "--trial-index", "7"]) == EXIT_OK
    out = _json(capsys)
    assert out["trial"] == 7 and out["spec"] == {"l": 6, "d": 7, "boundary": "toric"}


def test_inconclusive_threshold_exit(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code = main(
        ["threshold", "--L", "3", "4", "5", "--p-grid", "0.004:0.01:4", "--trials", "500", "--bootstrap", "10", "--out", str(out)]
    )
    assert code == EXIT_INCONCLUSIVE
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["inconclusive"] and summary["threshold"] is None
    assert len(out.read_text().splitlines()) == 1 + 3 * 4
    capsys.readouterr()


def test_fidelity_small(tmp_path, capsys):
    out = tmp_path / "fid.csv"
    assert main(["fidelity", "--L", "3", "5", "--d-toric", "4", "8", "--p", "0.02", "--trials", "2000", "--out", str(out)]) == EXIT_OK
    summary = _json(capsys)
    assert {"k1", "k2", "d_coefficient", "r_squared"} <= set(summary)
    assert len(out.read_text().splitlines()) == 5


def test_oracle_verify(capsys):
    assert main(["oracle-verify", "--branches", "5", "--error-sets", "5", "--dense", "1"]) == EXIT_OK
    out = _json(capsys)
    assert out["ok"] and out["dense"] == [1, 1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "thermalcluster", "bounds"], capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["omega_star"] == pytest.approx(2**0.5 - 1, abs=1e-9)
