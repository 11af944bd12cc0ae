import math
import subprocess

import numpy as np
import pytest

from coldcoll import cli, fileio
from coldcoll.units import to_au
from oracles import CS_A_ZERO_ENERGY, CS_COUNT


def run(tmp_path, command, ini=None, out="out", extra=()):
    argv = ["--out", str(tmp_path / out)] + list(extra)
    if ini is not None:
        cfg = tmp_path / "run.ini"
        cfg.write_text(ini)
        argv += ["--config", str(cfg)]
    return cli.main(argv + [command])


def test_phase_defaults(tmp_path, capsys):
    assert run(tmp_path, "phase") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["isotope = 133Cs", "phi_over_pi = 54.6", f"count = {CS_COUNT}"]
    header, rows, meta = fileio.read_csv(tmp_path / "out" / "phase.csv")
    assert header[0] == "isotope" and rows[0][0] == "133Cs"
    assert (tmp_path / "out" / "manifest.txt").exists()


def test_bound_counts_agree(tmp_path, capsys):
    assert run(tmp_path, "bound") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:4] == [f"count = {CS_COUNT}", f"semiclassical = {CS_COUNT}",
                       f"numerov = {CS_COUNT}", f"mfgm = {CS_COUNT}"]
    _, rows, _ = fileio.read_csv(tmp_path / "out" / "levels.csv")
    assert len(rows) == CS_COUNT


def test_bound_morse_matches_analytic(tmp_path, capsys):
    ini = "[ground]\nmodel = morse\ndepth_cm1 = 500\nR_min = 8\nmorse_a = 0.5\n"
    assert run(tmp_path, "bound", ini) == 0
    mu = 132.905451933 * 1822.888486209 / 2
    lam = math.sqrt(2 * mu * to_au(500, "cm-1")) / 0.5
    n = int(lam - 0.5) + 1
    assert capsys.readouterr().out.splitlines()[:4] == [
        f"count = {n}", f"semiclassical = {n}", f"numerov = {n}", f"mfgm = {n}"]


def test_bound_zero_potential_writes_header_only(tmp_path, capsys):
    assert run(tmp_path, "bound", "[ground]\nmodel = zero\n") == 0
    assert capsys.readouterr().out.strip() == "count = 0"
    header, rows, _ = fileio.read_csv(tmp_path / "out" / "levels.csv")
    assert header == ["v", "E_hartree", "E_cm1"] and rows == []


def test_alen_default(tmp_path):
    assert run(tmp_path, "alen") == 0
    _, rows, _ = fileio.read_csv(tmp_path / "out" / "alen.csv")
    assert float(rows[0][2]) == pytest.approx(CS_A_ZERO_ENERGY, abs=0.01)


def test_alen_square_well(tmp_path):
    ini = "[ground]\nmodel = square_well\ndepth_cm1 = 1\nR_min = 20\n"
    assert run(tmp_path, "alen", ini) == 0
    _, rows, _ = fileio.read_csv(tmp_path / "out" / "alen.csv")
    mu = 132.905451933 * 1822.888486209 / 2
    K = math.sqrt(2 * mu * to_au(1.0, "cm-1"))
    assert float(rows[0][2]) == pytest.approx(20 * (1 - math.tan(20 * K) / (20 * K)), rel=1e-6)


def test_table_model(tmp_path):
    R = np.linspace(6.0, 30.0, 400)
    fileio.write_potential_table(tmp_path / "v.txt", R, -6331.0 / R**6 + 1e4 / R**12)
    ini = "[ground]\nmodel = table\nfile = v.txt\nC6 = -6331\n"
    assert run(tmp_path, "phase", ini) == 0


def test_outputs_are_deterministic(tmp_path):
    assert run(tmp_path, "isotopes", out="a") == 0
    assert run(tmp_path, "isotopes", out="b") == 0
    for name in ("isotopes.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dress_scan_zero_intensity_matches_alen(tmp_path):
    assert run(tmp_path, "dress-scan") == 0
    header, rows, meta = fileio.read_csv(tmp_path / "out" / "dress_scan.csv")
    assert header == ["axis_name", "axis_value", "a_bohr", "excited_population", "warning"]
    assert rows[0][0] == "intensity_W_cm2"
    assert float(rows[0][2]) == pytest.approx(CS_A_ZERO_ENERGY, abs=0.1)
    assert meta["scheme"] == "I"


@pytest.mark.parametrize("ini, msg", [
    ("[grid]\nbeta = 0.2\n", "[grid] beta = '0.2' outside legal range [1, 100]"),
    ("[grid]\nbeta = fast\n", "not a valid float"),
    ("[ground]\nmodel = lumpy\n", "outside legal range: one of"),
    ("[bogus]\nx = 1\n", "unknown section [bogus]"),
    ("[grid]\nbogus = 1\n", "unknown key [grid] bogus"),
    ("[ground]\nmodel = morse\ndepth_cm1 = 500\n", "R_min is required"),
    ("[ground]\nmodel = table\nfile = nope.txt\nC6 = -1\n", "file not found"),
    ("[isotopes]\nlist = 87Rb\n", "87Rb"),
    ("[scattering]\nmethods = guess\n", "[scattering] methods"),
    ("[field]\nintensities_W_cm2 = 2, 1\n", "sorted ascending"),
    ("[field]\nscheme = config\n", "E_f_cm1 is required"),
    ("[grid]\nR_min = 50\nR_max = 20\n", "R_min must be below R_max"),
])
def test_config_errors(tmp_path, capsys, ini, msg):
    assert run(tmp_path, "phase", ini) == 1
    err = capsys.readouterr().err
    assert err.startswith("config error:") and msg in err
    assert not (tmp_path / "out" / "phase.csv").exists()


def test_missing_config_and_bad_command(tmp_path):
    assert cli.main(["--config", str(tmp_path / "none.ini"), "phase"]) == 1
    assert cli.main(["explode"]) == 1
    assert cli.main(["--jobs", "0", "phase"]) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    ini = "[scattering]\nmethods = phase\nenergies_uK = 50, 100\n"
    assert run(tmp_path, "alen", ini) == 2
    assert "numerical failure" in capsys.readouterr().err
    assert not (tmp_path / "out" / "alen.csv").exists()
    assert not (tmp_path / "out" / "manifest.txt").exists()


def test_console_script(tmp_path):
    res = subprocess.run(["coldcoll", "--out", str(tmp_path), "phase"], capture_output=True,
                         text=True, check=True)
    assert "phi_over_pi = 54.6" in res.stdout


def test_jobs_do_not_change_results(tmp_path):
    ini = "[field]\nintensities_W_cm2 = 0, 1e6, 2e6\n"
    assert run(tmp_path, "dress-scan", ini, out="serial") == 0
    assert run(tmp_path, "dress-scan", ini, out="pool", extra=("--jobs", "2")) == 0
    name = "dress_scan.csv"
    assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "pool" / name).read_bytes()
