"""Text formats: potential tables, CSV with comment metadata, plot data, manifests.

Floats are written with 12 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .units import UnitError, dimension, to_au

__all__ = [
    "fmt",
    "csv_text",
    "write_csv",
    "read_csv",
    "write_plot_data",
    "read_potential_table",
    "write_potential_table",
    "write_manifest",
    "sha256_file",
]


def fmt(x) -> str:
    """12 significant digits for floats; integers and strings unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        out = f"{x:.12g}"
        return "0" if out == "-0" else out
    if x is None:
        return ""
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None,
             footer: dict | None = None) -> str:
    """CSV body with ``# key=value`` lines before the header and after the rows."""
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    for k, v in (footer or {}).items():
        buf.write(f"# {k}={fmt(v)}\n")
    return buf.getvalue()


def write_csv(path, header, rows, meta=None, footer=None) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows, meta, footer), encoding="utf-8")
    return path


def read_csv(path) -> tuple[list, list, dict]:
    """``(header, rows, comments)``; comment lines become a key/value dict."""
    comments, lines = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            comments[key.strip()] = val.strip()
        elif line:
            lines.append(line)
    rows = list(csv.reader(lines))
    return (rows[0], rows[1:], comments) if rows else ([], [], comments)


def write_plot_data(path, x, y, labels: tuple = ("x", "y")) -> Path:
    """Two whitespace-separated columns with a ``#`` label line."""
    path = Path(path)
    body = [f"# {labels[0]} {labels[1]}"]
    body += [f"{fmt(a)} {fmt(b)}" for a, b in zip(x, y)]
    path.write_text("\n".join(body) + "\n", encoding="utf-8")
    return path


def read_potential_table(path) -> np.ndarray:
    """Two-column (R, V) table converted to bohr and hartree.

    A units header is required, either ``# units: <length> <energy>`` or
    ``# units: R=<length>, V=<energy>``.
    """
    path = Path(path)
    units, data = None, []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            body = text[1:].strip()
            if body.lower().startswith("units:"):
                units = _parse_units(body[6:], path, n)
            continue
        parts = text.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{n}: expected two columns, got {len(parts)}")
        try:
            data.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValueError(f"{path}:{n}: not numeric: {text!r}") from None
    if units is None:
        raise ValueError(f"{path}: missing '# units: <length> <energy>' header")
    if len(data) < 4:
        raise ValueError(f"{path}: need at least four samples")
    arr = np.array(data)
    arr[:, 0] = to_au(arr[:, 0], units[0])
    arr[:, 1] = to_au(arr[:, 1], units[1])
    return arr


def _parse_units(spec: str, path, n) -> tuple[str, str]:
    found = {}
    if "=" in spec:
        for item in spec.split(","):
            key, _, val = item.partition("=")
            found[key.strip().upper()] = val.strip()
    else:
        parts = spec.replace(",", " ").split()
        if len(parts) == 2:
            found = {"R": parts[0], "V": parts[1]}
    try:
        R_u, V_u = found["R"], found["V"]
        if dimension(R_u) != "length" or dimension(V_u) != "energy":
            raise UnitError("R needs a length unit and V an energy unit")
    except (KeyError, UnitError) as exc:
        raise ValueError(f"{path}:{n}: bad units header ({exc})") from None
    return R_u, V_u


def write_potential_table(path, R, V, R_unit: str = "bohr", V_unit: str = "hartree") -> Path:
    path = Path(path)
    body = [f"# units: {R_unit} {V_unit}"]
    body += [f"{fmt(r)} {fmt(v)}" for r, v in zip(R, V)]
    path.write_text("\n".join(body) + "\n", encoding="utf-8")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, files: Sequence) -> Path:
    """``manifest.txt``: one ``<sha256>  <name>`` line per output, sorted by name."""
    out_dir = Path(out_dir)
    names = sorted({Path(f).name for f in files})
    lines = [f"{sha256_file(out_dir / n)}  {n}" for n in names]
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path
