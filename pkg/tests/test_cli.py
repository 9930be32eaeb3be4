import csv
import io
import json

import numpy as np
import pytest

from teleprotect.cli import EXIT_IO, EXIT_USAGE, main, parse_state_spec
from teleprotect.sweep import CSV_HEADER, SweepConfig, fmt


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_measure_bell(capsys):
    code, out = run(capsys, "measure", "bell")
    assert code == 0
    values = dict(line.split(" = ") for line in out.out.strip().splitlines())
    assert float(values["concurrence"]) == pytest.approx(1.0, abs=1e-9)
    assert float(values["tf"]) == pytest.approx(1.0, abs=1e-9)
    assert float(values["cc"]) == pytest.approx(1.0, abs=1e-6)


def test_measure_json(tmp_path, capsys):
    path = tmp_path / "m.json"
    code, _ = run(capsys, "measure", "rho_d:0.5", "--json", str(path))
    assert code == 0
    data = json.loads(path.read_text())
    assert data["state"] == "rho_d:0.5"
    assert data["concurrence"] == pytest.approx(np.sqrt(0.5), abs=1e-9)
    assert data["success_prob"] == 1.0


def test_measure_protected_probability(capsys):
    code, out = run(capsys, "measure", "sigma_r:0.5,0.1,0.3")
    assert code == 0
    assert "success_prob" in out.out


@pytest.mark.parametrize("spec", ["nonsense", "rho_d", "rho_d:2.0", "sigma_r:0.1,0.2", "rho_d:x"])
def test_measure_bad_spec_is_usage_error(capsys, spec):
    with pytest.raises(SystemExit) as exc:
        main(["measure", spec])
    assert exc.value.code == EXIT_USAGE


def test_parse_state_spec():
    state, prob = parse_state_spec("sigma_rr:0.5,0.1,0.0")
    assert 0 < prob < 1
    with pytest.raises(ValueError):
        parse_state_spec("bell:1")


def test_unwritable_output_is_io_error(tmp_path, capsys):
    code, out = run(capsys, "measure", "bell", "--json", str(tmp_path / "missing" / "x.json"))
    assert code == EXIT_IO
    assert "I/O error" in out.err


def test_sweep_bad_range_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--scenario", "1", "--d-start", "0.9", "--d-end", "0.1"])
    assert exc.value.code == EXIT_USAGE


def test_sweep_scenario1_threshold_crossing(capsys):
    code, out = run(capsys, "sweep", "--scenario", "1", "--steps", "201")
    assert code == 0
    assert out.out.splitlines()[0] == ",".join(CSV_HEADER)
    data = rows(out.out)
    assert len(data) == 201
    tf = {round(float(r["d"]), 3): float(r["tf"]) for r in data}
    assert tf[0.825] > 2 / 3 > tf[0.83]
    assert all(r["q_star"] == "" and r["variant"] == "NONE" for r in data)


def test_sweep_scenario2_stays_above_classical_bound(tmp_path, capsys):
    path = tmp_path / "s2.csv"
    code, _ = run(capsys, "sweep", "--scenario", "2", "--steps", "51", "--d-end", "0.999999",
                  "--out", str(path))
    assert code == 0
    assert all(float(r["tf"]) > 2 / 3 for r in rows(path.read_text()))


def test_sweep_wmrwm_success_probabilities(capsys):
    code, out = run(capsys, "sweep", "--scenario", "1", "--wmrwm", "--p", "0.1",
                    "--steps", "11", "--d-end", "0.9")
    assert code == 0
    data = rows(out.out)
    assert len(data) == 22
    by_d = {}
    for r in data:
        by_d.setdefault(r["d"], {})[r["variant"]] = float(r["success_prob"])
    for probs in by_d.values():
        assert probs["C_MAX"] >= probs["TF_MAX"] - 1e-9


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig("I_BARE", d_steps=1)
    with pytest.raises(ValueError):
        SweepConfig("I_BARE", p=1.0)


def test_fmt():
    assert fmt(None) == ""
    assert fmt(-0.0) == "0"
    assert fmt(0.1) == "0.1"


def test_figure_1_files(tmp_path, capsys):
    code, out = run(capsys, "figure", "1", "--out", str(tmp_path), "--steps", "11")
    assert code == 0
    csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert csvs == [f"fig1_{p}_{c}.csv" for p in "abc" for c in ("both", "single")]
    assert (tmp_path / "fig1.gp").exists()
    head = (tmp_path / "fig1_b_single.csv").read_text().splitlines()[0]
    assert head == "d,p,q_star,tf"
    assert "2.0/3.0" in (tmp_path / "fig1.gp").read_text()


def test_figure_3_variants_coincide_in_tf(tmp_path, capsys):
    code, _ = run(capsys, "figure", "3", "--out", str(tmp_path), "--steps", "6")
    assert code == 0
    tfmax = rows((tmp_path / "fig3_b_tfmax.csv").read_text())
    cmax = rows((tmp_path / "fig3_b_cmax.csv").read_text())
    for a, b in zip(tfmax, cmax):
        assert float(a["tf"]) == pytest.approx(float(b["tf"]), abs=1e-6)


def test_verify_json_schema(tmp_path, capsys, monkeypatch):
    # stub the heavy run; the schema is what the CLI adds
    from teleprotect import audit, cli

    monkeypatch.setattr(cli, "run_verification", lambda progress=None: audit.VerifyReport())
    path = tmp_path / "v.json"
    code, out = run(capsys, "verify", "--quiet", "--json", str(path))
    assert code == 0
    data = json.loads(path.read_text())
    assert {"passed", "checks", "discrepancies"} <= data.keys()
    assert out.out.strip().endswith("verify: PASS")


def test_verify_missing_discrepancy_fails(capsys, monkeypatch):
    from teleprotect import audit, cli

    report = audit.VerifyReport(missing=["eq-f_WW-normalization"])
    monkeypatch.setattr(cli, "run_verification", lambda progress=None: report)
    code, out = run(capsys, "verify")
    assert code == 1
    assert "not detected" in out.out


def test_measure_fully_damped_pair(capsys):
    code, out = run(capsys, "measure", "rho_dd:1.0")
    assert code == 0
    values = dict(line.split(" = ") for line in out.out.strip().splitlines())
    assert float(values["cc"]) <= 1e-9
    assert float(values["tf"]) == pytest.approx(2 / 3, abs=1e-9)


def test_sweep_rows_satisfy_fidelity_law(capsys):
    code, out = run(capsys, "sweep", "--scenario", "2", "--wmrwm", "--steps", "11")
    assert code == 0
    for r in rows(out.out):
        f, tf = float(r["fef"]), float(r["tf"])
        assert abs(tf - (2 * f + 1) / 3) <= 1e-12
        assert (tf > 2 / 3) == (f > 0.5)
