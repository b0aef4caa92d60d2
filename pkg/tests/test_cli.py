import json

import numpy as np
import pytest

from susyrabi.cli import apply_override, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    cols = lines[0].split(",")
    return [dict(zip(cols, l.split(","))) for l in lines[1:]]


def test_override_parsing():
    cfg = {"model": {"g1": 1.0}}
    apply_override(cfg, "model.g1=1.25")
    apply_override(cfg, "sweep.param=g2")
    assert cfg["model"]["g1"] == 1.25 and cfg["sweep"]["param"] == "g2"
    with pytest.raises(ValueError):
        apply_override(cfg, "novalue")


def test_spectrum_single_row_and_header(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "spectrum", "--nmax", "40", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert "# config_sha256:" in text and "# truncation:" in text and "# tolerances:" in text
    rows = read_rows(out)
    assert len(rows) == 1
    assert float(rows[0]["delta21"]) < 1e-8
    # shortest round-trip float formatting
    assert repr(float(rows[0]["E_0"])) == rows[0]["E_0"]


def test_spectrum_sweep_finds_degeneracy_at_crossing(tmp_path, capsys):
    # g2 = 0.2, Delta = 1: the SUSY line sits at g1 = sqrt(1.04)
    out = tmp_path / "s.csv"
    g1_line = float(np.sqrt(1.04))
    values = json.dumps(sorted([0.0, 0.5, 1.0, g1_line, 1.5, 2.0, 3.0]))
    code, _, _ = run(
        capsys, "spectrum", "--nmax", "60", "--out", str(out),
        "--set", "model.g2=0.2", "--set", "model.delta=1",
        "--set", f'sweep={{"param": "g1", "values": {values}}}',
    )
    assert code == 0
    rows = read_rows(out)
    crossing = [r for r in rows if r["susy_crossing"] == "true"]
    assert len(crossing) == 1
    assert float(crossing[0]["delta21"]) < 1e-6


def test_parallel_output_byte_identical(tmp_path, capsys):
    args = ["spectrum", "--nmax", "30", "--set", 'sweep={"param":"g1","min":0,"max":3,"count":13}',
            "--set", "n_jobs=3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    serial = tmp_path / "c.csv"
    args[-1] = "n_jobs=1"
    assert run(capsys, *args, "--out", str(serial))[0] == 0
    assert read_rows(serial) == read_rows(a)


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "missing" / "x.csv"
    code, _, err = run(capsys, "spectrum", "--nmax", "20", "--out", str(target))
    assert code == 2
    assert "error" in json.loads(err)
    assert not (tmp_path / "missing").exists()
    assert list(tmp_path.iterdir()) == []


def test_susy_verify_reports(capsys):
    code, out, _ = run(capsys, "susy-verify", "--nmax", "40", "--margin", "8")
    doc = json.loads(out)
    assert code == 0
    assert doc["status"] == "on SUSY line"
    assert doc["witten_index"] == 2
    assert doc["partner_residual"] < 1e-10
    assert doc["zero_modes"]["parity_labels"] == pytest.approx([1.0, -1.0])

    code, out, _ = run(capsys, "susy-verify", "--set", "model.g1=1.4")
    doc = json.loads(out)
    assert code == 0
    assert doc["status"] == "not on SUSY line"
    assert doc["susy_residual"] == pytest.approx(-0.29)


def test_susy_verify_lambda_family(capsys):
    lam, g1, g2 = 0.2, 1.2, 0.6
    delta = g1**2 / (1 - lam) - g2**2 / (1 + lam)
    code, out, _ = run(
        capsys, "susy-verify", "--nmax", "40", "--margin", "8",
        "--set", f"model.lam={lam}", "--set", f"model.g1={g1}", "--set", f"model.g2={g2}",
        "--set", f"model.delta={delta!r}",
    )
    doc = json.loads(out)
    assert code == 0 and doc["family"] == "non_rwa_lambda" and doc["witten_index"] == 2


def test_lindblad_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "lindblad", "stationary", "--nmax", "12")
    assert code == 0 and json.loads(out)["zero_dim"] == 4

    path = tmp_path / "ev.csv"
    code, _, _ = run(capsys, "lindblad", "evolve", "--nmax", "12", "--out", str(path),
                     "--set", "lindblad.n_t=11")
    rows = read_rows(path)
    assert code == 0 and len(rows) == 11
    for col in ("I_rho1", "I_rho2", "I_diff"):
        vals = np.array([float(r[col]) for r in rows])
        assert np.ptp(vals) < 1e-8

    code, out, _ = run(capsys, "lindblad", "decay-fit", "--nmax", "12")
    assert code == 0 and json.loads(out)["kappa_fit"] < 1e-8

    code, _, err = run(capsys, "lindblad", "evolve", "--nmax", "12", "--set", "rates=null")
    assert code == 2 and "rates" in json.loads(err)["message"]


def test_lattice_command(tmp_path, capsys):
    path = tmp_path / "lat.csv"
    code, _, _ = run(capsys, "lattice", "--out", str(path), "--set", "lattice.n_max_site=5",
                     "--set", "lattice.hopping=[0.0, 0.1]")
    assert code == 0
    assert [float(r["J"]) for r in read_rows(path)] == [0.0, 0.1]
    code, _, err = run(capsys, "lattice", "--set", "lattice.n_max_site=20")
    assert code == 2 and "n_max_site" in json.loads(err)["message"]


def test_map_commands(tmp_path, capsys):
    cfg = tmp_path / "rd.json"
    cfg.write_text(json.dumps({"model": {"type": "rd", "b0": 1.0, "m_eff": 1.0, "g_factor": 2.0,
                                         "alpha_r": 0.2, "alpha_d": 0.2}}))
    code, out, _ = run(capsys, "map", "rd", "--config", str(cfg))
    doc = json.loads(out)
    assert code == 0 and doc["gr_params"]["g1"] == doc["gr_params"]["g2"]
    first = out
    assert run(capsys, "map", "rd", "--config", str(cfg))[1] == first

    cfg.write_text(json.dumps({"model": {"type": "lambda", "gt1": 1, "gt2": 1, "om1": 2,
                                         "om2": 2, "det1": 10, "det2": 10}}))
    code, out, _ = run(capsys, "map", "lambda", "--config", str(cfg))
    doc = json.loads(out)
    assert code == 0 and doc["gr_params"]["delta"] == 0 and doc["gr_params"]["lam"] == 0
    assert doc["bloch_siegert_cancelled"] is True

    cfg.write_text(json.dumps({"model": {"type": "rd", "b0": -1.0, "m_eff": 1.0, "g_factor": 2.0,
                                         "alpha_r": 0.2, "alpha_d": 0.2}}))
    assert run(capsys, "map", "rd", "--config", str(cfg))[0] == 2
