import numpy as np
import pytest

from coldcoll import fileio
from coldcoll.units import to_au


@pytest.mark.parametrize("x, s", [
    (1.0, "1"), (1 / 3, "0.333333333333"), (-0.0, "0"), (7, "7"), (np.int64(3), "3"),
    (float("nan"), "nan"), (float("-inf"), "-inf"), (True, "true"), (None, ""), ("a", "a"),
    (1.23456789012345e-20, "1.23456789012e-20"),
])
def test_fmt(x, s):
    assert fileio.fmt(x) == s


def test_csv_round_trip(tmp_path):
    p = fileio.write_csv(tmp_path / "a.csv", ["x", "y"], [[1.0, "a,b"], [2.5, ""]],
                         meta={"mu": 1.5}, footer={"fit": -3.0})
    header, rows, comments = fileio.read_csv(p)
    assert header == ["x", "y"]
    assert rows == [["1", "a,b"], ["2.5", ""]]
    assert comments == {"mu": "1.5", "fit": "-3"}
    assert p.read_text().startswith("# mu=1.5\nx,y\n")


def test_csv_is_deterministic():
    rows = [[np.pi, np.e], [1e-300, 2.0]]
    assert fileio.csv_text(["a", "b"], rows) == fileio.csv_text(["a", "b"], rows)


def test_potential_table_units(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("# units: angstrom cm-1\n5.0 -100\n6.0 -200\n7.0 -150\n8.0 -50\n")
    arr = fileio.read_potential_table(p)
    assert arr[0, 0] == pytest.approx(to_au(5.0, "angstrom"))
    assert arr[1, 1] == pytest.approx(to_au(-200.0, "cm-1"))


def test_potential_table_keyword_header(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("# units: R=bohr, V=hartree\n1, 0.1\n2, 0.0\n3, -0.1\n4, 0.0\n")
    assert fileio.read_potential_table(p).shape == (4, 2)


def test_potential_table_round_trip(tmp_path):
    R = np.linspace(8.0, 30.0, 23)
    V = -6331.0 / R**6
    p = fileio.write_potential_table(tmp_path / "v.txt", R, V)
    arr = fileio.read_potential_table(p)
    assert np.allclose(arr[:, 0], R, rtol=1e-12) and np.allclose(arr[:, 1], V, rtol=1e-11)


@pytest.mark.parametrize("text, msg", [
    ("1 2\n3 4\n5 6\n7 8\n", "missing"),
    ("# units: hartree bohr\n1 2\n3 4\n5 6\n7 8\n", "bad units"),
    ("# units: bohr hartree\n1 2 3\n", "two columns"),
    ("# units: bohr hartree\n1 x\n", "not numeric"),
    ("# units: bohr hartree\n1 2\n", "four samples"),
])
def test_potential_table_errors(tmp_path, text, msg):
    p = tmp_path / "v.txt"
    p.write_text(text)
    with pytest.raises(ValueError, match=msg):
        fileio.read_potential_table(p)


def test_plot_data(tmp_path):
    p = fileio.write_plot_data(tmp_path / "p.dat", [1.0, 2.0], [3.0, 4.5], ("R", "psi"))
    assert p.read_text() == "# R psi\n1 3\n2 4.5\n"


def test_manifest(tmp_path):
    (tmp_path / "b.csv").write_text("b\n")
    (tmp_path / "a.csv").write_text("a\n")
    m = fileio.write_manifest(tmp_path, [tmp_path / "b.csv", "a.csv"])
    lines = m.read_text().splitlines()
    assert [ln.split("  ")[1] for ln in lines] == ["a.csv", "b.csv"]
    assert lines[0].split("  ")[0] == fileio.sha256_file(tmp_path / "a.csv")
