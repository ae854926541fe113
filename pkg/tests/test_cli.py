import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from esdsim import ensemble
from esdsim.cli import main, read_config_file, render
from esdsim.scenarios import FIELDS, REGISTRY, ScenarioConfig, run_scenario

GOLDEN = Path(__file__).parent / "golden"
HEADER = "scenario,composition_label,observable_label,n,epsilon,exact_expectation,exact_fluctuation,mc_mean,mc_std,mc_stderr,rounds,seed,entanglement_census"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_header_is_exact(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "despagnat")
    assert code == 0
    assert out.splitlines()[0] == HEADER
    assert ",".join(FIELDS) == HEADER


@pytest.mark.parametrize(
    "name,argv",
    [
        ("despagnat_n100.csv", ["--scenario", "despagnat", "--molecules", "100"]),
        ("bell_braunstein_n900.csv", ["--scenario", "bell-braunstein", "--molecules", "900", "--epsilon", "0.1"]),
        ("bb84_n100_r500_s11.csv", ["--scenario", "bb84", "--molecules", "100", "--rounds", "500", "--seed", "11"]),
    ],
)
def test_golden_reports(capsys, name, argv):
    code, out, _ = run_cli(capsys, "run", *argv)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_despagnat_rows(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "despagnat", "--molecules", "100", "--rounds", "0")
    rows = rows_of(out)
    assert [r["composition_label"] for r in rows] == ["S_I", "S_II"]
    assert [float(r["exact_fluctuation"]) for r in rows] == [0.0, 10.0]
    assert all(r["mc_mean"] == "" and r["mc_std"] == "" for r in rows)


def test_bell_braunstein_rows_and_notes(capsys):
    _, out, err = run_cli(capsys, "run", "--scenario", "bell-braunstein", "--molecules", "900", "--epsilon", "0.1")
    rows = rows_of(out)
    assert float(rows[0]["exact_fluctuation"]) == 0.0
    assert float(rows[1]["exact_fluctuation"]) == pytest.approx(800**0.5, rel=1e-11)
    assert [float(r["entanglement_census"]) for r in rows] == [0.1, 0.0]
    assert "eps*sqrt(N)" in err and "2*sqrt(N)/3" in err
    assert err.count("unconfirmed") == 2


def test_every_scenario_runs_with_mc(capsys):
    for name in REGISTRY:
        code, out, _ = run_cli(capsys, "run", "--scenario", name, "--molecules", "40", "--rounds", "20")
        assert code == 0, name
        rows = rows_of(out)
        assert rows and all(r["exact_expectation"] != "" and r["exact_fluctuation"] != "" for r in rows)
        for r in rows:
            if r["rounds"] != "0":
                assert r["mc_mean"] != "" and r["mc_std"] != ""


def test_improper_pair_expectations():
    res = run_scenario(ScenarioConfig("improper-pair", molecules=50))
    by = {(r.composition_label, r.observable_label): r for r in res.rows}
    assert by[("psi_AB_1", "Sigma_zz")].exact_expectation == pytest.approx(50)
    assert by[("psi_AB_2", "Sigma_zz")].exact_expectation == pytest.approx(-50)
    assert by[("psi_AB_1", "Sigma_zz")].exact_fluctuation == 0
    assert by[("psi_AB_1", "Sigma_z(A)")].exact_fluctuation == pytest.approx(50**0.5)


def test_kick_and_gorter_values():
    kick = {r.composition_label: r for r in run_scenario(ScenarioConfig("kick", molecules=100)).rows}
    assert kick["unkicked"].exact_fluctuation == 0
    assert kick["kicked"].exact_fluctuation == pytest.approx(50**0.5)
    assert kick["kick-averaged-identical-mixed"].exact_fluctuation == pytest.approx(10)
    (row,) = run_scenario(ScenarioConfig("gorter")).rows
    assert row.exact_expectation == pytest.approx(0.5)


def test_preskill_rows(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "preskill", "--molecules", "1000", "--rounds", "5", "--seed", "2")
    rows = {r["composition_label"]: r for r in rows_of(out)}
    assert float(rows["bell-pairs-bob-z"]["mc_mean"]) == 1.0
    assert abs(float(rows["bell-pairs-bob-x"]["mc_mean"]) - 0.5) < 0.03


def test_observable_override(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "despagnat", "--observable", "X")
    rows = rows_of(out)
    assert [r["observable_label"] for r in rows] == ["Sigma_x", "Sigma_x"]
    assert [float(r["exact_fluctuation"]) for r in rows] == [10.0, 0.0]
    code, _, err = run_cli(capsys, "run", "--scenario", "despagnat", "--observable", "ZZ")
    assert code == 2 and "dimension" in err


def test_json_lines_same_fields(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "despagnat", "--format", "json-lines", "--rounds", "10")
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 2
    assert all(tuple(r) == FIELDS for r in recs)
    assert recs[1]["exact_fluctuation"] == 10 and recs[0]["epsilon"] is None


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scenario", "foo"],
        ["run", "--scenario", "despagnat", "--molecules", "0"],
        ["run", "--scenario", "bell-braunstein", "--epsilon", "1.5"],
        ["run", "--scenario", "bell-braunstein", "--epsilon", "0.2"],
        ["run", "--scenario", "despagnat", "--rounds", "1"],
        ["run"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, out, _ = run_cli(capsys, *argv)
    assert code == 2
    assert out == ""


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--molecules", "abc"])
    assert e.value.code == 2


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# d'Espagnat pair\nscenario = despagnat\nmolecules = 64  # N\nrounds=0\nformat=csv\n")
    assert read_config_file(cfg) == {"scenario": "despagnat", "molecules": 64, "rounds": 0, "format": "csv"}
    _, out, _ = run_cli(capsys, "run", "--config", str(cfg))
    assert float(rows_of(out)[1]["exact_fluctuation"]) == 8.0
    _, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--molecules", "81")
    assert float(rows_of(out)[1]["exact_fluctuation"]) == 9.0
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario despagnat\n")
    assert run_cli(capsys, "run", "--config", str(bad))[0] == 2


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.csv"
    code, out, _ = run_cli(capsys, "run", "--scenario", "despagnat", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[0] == HEADER


def test_byte_identical_across_invocations_and_workers(capsys):
    argv = ["run", "--scenario", "bell-braunstein", "--molecules", "90", "--rounds", "300", "--seed", "123"]
    outs = [run_cli(capsys, *argv)[1] for _ in range(2)]
    outs.append(run_cli(capsys, *argv, "--workers", "6")[1])
    assert outs[0] == outs[1] == outs[2]


def test_render_number_format():
    rows = run_scenario(ScenarioConfig("bb84", molecules=100)).rows
    text = render(rows, "csv")
    assert "7.07106781187" in text


def test_list(capsys):
    code, out, _ = run_cli(capsys, "list")
    assert code == 0
    for name, s in REGISTRY.items():
        assert name in out and s.formulas in out


def test_verify_passes(capsys):
    code, out, _ = run_cli(capsys, "verify")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 8 and all(line.startswith("PASS ") for line in lines)


def test_verify_detects_corrupted_formula(capsys, monkeypatch):
    real = ensemble.fluctuation_proper

    def corrupted(comp, omega):
        rep = real(comp, omega)
        return type(rep)(rep.expectation_ensemble, rep.fluctuation * 1.01 + 1e-3, rep.per_component_variance)

    monkeypatch.setattr(ensemble, "fluctuation_proper", corrupted)
    code, out, _ = run_cli(capsys, "verify")
    assert code == 1
    assert "FAIL despagnat_fluctuations" in out and "FAIL oracle_equivalence" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "esdsim", "run", "--scenario", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "unknown scenario" in proc.stderr
