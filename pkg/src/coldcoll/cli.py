"""Command-line front end.

    coldcoll [--config FILE] [--out DIR] [--jobs N] <command>

Commands: bound, alen, fcf, fit-wall, dress-scan, feshbach-scan, phase,
isotopes.  The configuration is an INI file; every key is validated before
any computation starts.  Exit codes: 0 success, 1 usage or configuration
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import coupling, fileio, mfgm, potentials, scattering, spectra_fit, surrogates
from .units import UnitError, from_au, isotope, reduced_mass, to_au

__all__ = ["main", "ConfigError", "RunConfig", "load_config", "SCHEMA"]


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------- schema


@dataclass(frozen=True)
class Field:
    kind: str  # float, int, str, choice, floats, strs, path, bool
    default: object = None
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()

    def legal(self) -> str:
        if self.kind == "choice":
            return "one of " + ", ".join(self.choices)
        if self.kind in ("float", "int", "floats"):
            lo = "-inf" if self.lo is None else fileio.fmt(self.lo)
            hi = "inf" if self.hi is None else fileio.fmt(self.hi)
            return f"[{lo}, {hi}]"
        return self.kind


INF = math.inf
SCHEMA: dict[str, dict[str, Field]] = {
    "ground": {
        "model": Field("choice", "cs_model", choices=(
            "cs_model", "c6_well", "morse", "harmonic", "square_well", "hard_sphere", "zero",
            "table")),
        "label": Field("str", ""),
        "depth_cm1": Field("float", None, 1e-9, 1e6),
        "R_min": Field("float", None, 0.1, 1e3),
        "C6": Field("float", None, -1e8, -1e-12),
        "morse_a": Field("float", None, 1e-4, 1e2),
        "harmonic_k": Field("float", None, 1e-12, 1e3),
        "R_join": Field("float", 20.0, 1.0, 1e3),
        "blend_width": Field("float", 1.0, 0.0, 100.0),
        "file": Field("path"),
        "deformation_cm1": Field("float", 0.0, -1e4, 1e4),
        "deformation_R0": Field("float", 10.5, 0.1, 1e3),
        "deformation_sigma": Field("float", 0.4, 1e-3, 100.0),
    },
    "excited": {
        "model": Field("choice", "cs_0g", choices=(
            "cs_0g", "sigma_g", "pi_g", "morse", "harmonic", "table")),
        "depth_cm1": Field("float", None, 1e-9, 1e6),
        "R_min": Field("float", None, 0.1, 1e3),
        "morse_a": Field("float", None, 1e-4, 1e2),
        "harmonic_k": Field("float", None, 1e-12, 1e3),
        "C6": Field("float", None, -1e8, -1e-12),
        "R_join": Field("float", 20.0, 1.0, 1e3),
        "blend_width": Field("float", 1.0, 0.0, 100.0),
        "asymptote_cm1": Field("float", 0.0, -1e6, 1e6),
        "file": Field("path"),
    },
    "isotopes": {
        "list": Field("strs", ("133Cs",)),
    },
    "grid": {
        "R_min": Field("float", None, 0.0, 1e5),
        "R_max": Field("float", None, 1.0, 1e7),
        "E_env_uK": Field("float", 300.0, 1e-6, 1e12),
        "beta": Field("float", 7.0, 1.0, 100.0),
        "N": Field("int", 0, 0, 20000),
        "boundary": Field("choice", "fixed", choices=("fixed", "absorbing")),
        "absorber_eta": Field("float", 1e-9, 0.0, 1.0),
        "absorber_onset": Field("float", 0.7, 0.05, 0.95),
        "dump_wavefunctions": Field("int", 0, 0, 1000),
    },
    "scattering": {
        "methods": Field("strs", ("zero_energy",)),
        "energies_uK": Field("floats", (0.05, 0.1, 0.2), 1e-9, 1e9),
        "E_max_uK": Field("float", 0.4, 1e-9, 1e9),
    },
    "field": {
        "scheme": Field("choice", "I", choices=("I", "II", "config")),
        "intensities_W_cm2": Field("floats", (0.0,), 0.0, 1e15),
        "E_f_cm1": Field("float", None, -1e6, 1e6),
        "detuning_reference": Field("choice", "ground_threshold", choices=coupling.REFERENCES),
        "intensity_W_cm2": Field("float", 75.0, 0.0, 1e15),
        "delta_MHz": Field("float", 90.0, -1e6, 1e6),
        "detunings_MHz": Field("floats", (-60.0, -40.0, -25.0, -18.0, -14.0, -10.0, -2.0, 2.0, 6.0,
                                          12.0, 25.0, 60.0), -1e6, 1e6),
        "dipole_au": Field("float", 10.0, 0.0, 1e4),
        "dipole_R_flat": Field("float", 16.0, 0.0, 1e4),
        "dipole_width": Field("float", 4.0, 1e-6, 1e6),
        "E_collision_uK": Field("float", 0.4, 1e-9, 1e6),
        "beta": Field("float", 6.0, 1.0, 100.0),
        "R_max": Field("float", 20000.0, 10.0, 1e7),
        "R_min": Field("float", 8.5, 0.1, 1e3),
        "refine": Field("bool", True),
    },
    "fit": {
        "targets": Field("path"),
        "R0": Field("float", 10.5, 0.1, 1e3),
        "sigma": Field("float", 0.4, 1e-3, 100.0),
        "branch": Field("choice", "phase_removed", choices=spectra_fit.BRANCHES),
        "tol_cm1": Field("float", spectra_fit.DEFAULT_FIT_TOL_CM, 1e-9, 100.0),
        "E_collision_uK": Field("float", 200.0, 1e-6, 1e9),
        "binding_min_cm1": Field("float", 1.0, 0.0, 1e6),
        "binding_max_cm1": Field("float", 150.0, 0.0, 1e6),
        "prominence": Field("float", spectra_fit.DEFAULT_PROMINENCE, 1.0, 1e12),
        "shift_cm1": Field("float", 0.0, 0.0, 100.0),
        "node_index": Field("int", -2, -1000, 1000),
        "R_max": Field("float", 1000.0, 10.0, 1e6),
        "beta": Field("float", 4.0, 1.0, 100.0),
    },
}

BUNDLED_TARGETS = Path(__file__).parent / "data" / "cs_synthetic_nodes.txt"


def _parse(section: str, key: str, f: Field, raw: str, base: Path):
    where = f"[{section}] {key}"
    try:
        if f.kind == "float":
            val = float(raw)
        elif f.kind == "int":
            val = int(raw)
        elif f.kind == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError
            return low in ("true", "yes", "1", "on")
        elif f.kind == "floats":
            val = tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
        elif f.kind == "strs":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        elif f.kind == "choice":
            if raw.strip() not in f.choices:
                raise ConfigError(f"{where} = {raw!r} outside legal range: {f.legal()}")
            return raw.strip()
        elif f.kind == "path":
            p = Path(raw.strip())
            return p if p.is_absolute() else (base / p)
        else:
            return raw.strip()
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{where} = {raw!r} is not a valid {f.kind}; legal range {f.legal()}") \
            from None
    vals = val if isinstance(val, tuple) else (val,)
    for v in vals:
        if not math.isfinite(v) or (f.lo is not None and v < f.lo) or (f.hi is not None and v > f.hi):
            raise ConfigError(f"{where} = {raw!r} outside legal range {f.legal()}")
    return val


@dataclass(frozen=True)
class RunConfig:
    values: dict  # section -> key -> parsed value
    source: Path | None = None

    def get(self, section: str, key: str):
        return self.values[section][key]

    def given(self, section: str, key: str) -> bool:
        return self.values[section].get(key) is not None


def load_config(path: str | Path | None) -> RunConfig:
    """Parse and validate; files named in the config must exist and parse."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        base = path.parent
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; known: {', '.join(SCHEMA)}")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}; known: "
                                  + ", ".join(SCHEMA[section]))
    values = {}
    for section, fields in SCHEMA.items():
        values[section] = {}
        for key, f in fields.items():
            if cp.has_option(section, key):
                values[section][key] = _parse(section, key, f, cp[section][key], base)
            else:
                values[section][key] = f.default
    cfg = RunConfig(values, path)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    for sec in ("ground", "excited"):
        if cfg.get(sec, "model") == "table":
            p = cfg.get(sec, "file")
            if p is None:
                raise ConfigError(f"[{sec}] file is required for model = table")
            if not Path(p).is_file():
                raise ConfigError(f"[{sec}] file not found: {p}")
            try:
                fileio.read_potential_table(p)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] file: {exc}") from None
            if not cfg.given(sec, "C6"):
                raise ConfigError(f"[{sec}] C6 is required for model = table")
    needs = {"c6_well": ("depth_cm1", "R_min", "C6"), "morse": ("depth_cm1", "R_min", "morse_a"),
             "harmonic": ("harmonic_k", "R_min"), "square_well": ("depth_cm1", "R_min"),
             "hard_sphere": ("R_min",)}
    for sec in ("ground", "excited"):
        for key in needs.get(cfg.get(sec, "model"), ()):
            if not cfg.given(sec, key):
                raise ConfigError(f"[{sec}] {key} is required for model = {cfg.get(sec, 'model')}")
    for label in cfg.get("isotopes", "list"):
        try:
            isotope(label)
        except KeyError as exc:
            raise ConfigError(f"[isotopes] list: {exc.args[0]}") from None
    for m in cfg.get("scattering", "methods"):
        if m not in ("zero_energy", "phase", "grid"):
            raise ConfigError(f"[scattering] methods: {m!r} outside legal range "
                              "one of zero_energy, phase, grid")
    if None not in (cfg.get("grid", "R_min"), cfg.get("grid", "R_max")) and \
            cfg.get("grid", "R_min") >= cfg.get("grid", "R_max"):
        raise ConfigError("[grid] R_min must be below R_max")
    if cfg.get("fit", "binding_min_cm1") >= cfg.get("fit", "binding_max_cm1"):
        raise ConfigError("[fit] binding_min_cm1 must be below binding_max_cm1")
    ints = cfg.get("field", "intensities_W_cm2")
    if any(b < a for a, b in zip(ints, ints[1:])):
        raise ConfigError("[field] intensities_W_cm2 must be sorted ascending")
    dets = cfg.get("field", "detunings_MHz")
    if any(b < a for a, b in zip(dets, dets[1:])):
        raise ConfigError("[field] detunings_MHz must be sorted ascending")
    if cfg.get("field", "scheme") == "config" and not cfg.given("field", "E_f_cm1"):
        raise ConfigError("[field] E_f_cm1 is required for scheme = config")
    t = cfg.get("fit", "targets")
    if t is not None:
        if not Path(t).is_file():
            raise ConfigError(f"[fit] targets file not found: {t}")
        try:
            spectra_fit.read_targets(t)
        except ValueError as exc:
            raise ConfigError(f"[fit] targets: {exc}") from None


# ----------------------------------------------------------- curve setup


def _cm(x):
    return to_au(x, "cm-1")


def build_ground(cfg: RunConfig) -> potentials.PotentialCurve:
    s = cfg.values["ground"]
    m = s["model"]
    if m == "cs_model":
        curve = surrogates.cs_ground()
    elif m == "c6_well":
        curve = potentials.model_c6_well(_cm(s["depth_cm1"]), s["R_min"], s["C6"],
                                         R_join=s["R_join"])
    elif m == "morse":
        curve = potentials.morse(_cm(s["depth_cm1"]), s["morse_a"], s["R_min"])
    elif m == "harmonic":
        curve = potentials.harmonic(s["harmonic_k"], s["R_min"])
    elif m == "square_well":
        curve = potentials.square_well(_cm(s["depth_cm1"]), s["R_min"])
    elif m == "hard_sphere":
        curve = potentials.hard_sphere(s["R_min"])
    elif m == "zero":
        curve = potentials.zero_potential()
    else:
        curve = potentials.build_tabulated(fileio.read_potential_table(s["file"]), s["C6"],
                                           s["R_join"], blend_width=s["blend_width"])
    if s["label"]:
        curve = dataclasses.replace(curve, label=s["label"])
    if s["deformation_cm1"]:
        curve = potentials.apply_deformation(curve, potentials.InnerWallDeformation(
            _cm(s["deformation_cm1"]), s["deformation_R0"], s["deformation_sigma"]))
    return curve


def build_excited(cfg: RunConfig) -> potentials.PotentialCurve:
    s = cfg.values["excited"]
    m = s["model"]
    if m == "cs_0g":
        return surrogates.excited_0g()
    if m == "sigma_g":
        return surrogates.sigma_g()
    if m == "pi_g":
        return surrogates.pi_g()
    A = _cm(s["asymptote_cm1"])
    if m == "morse":
        return potentials.morse(_cm(s["depth_cm1"]), s["morse_a"], s["R_min"], A, "excited")
    if m == "harmonic":
        return potentials.harmonic(s["harmonic_k"], s["R_min"], A, "excited")
    return potentials.build_tabulated(fileio.read_potential_table(s["file"]), s["C6"], s["R_join"],
                                      A, s["blend_width"], "excited")


def dressed_system(cfg: RunConfig, intensity: float = 0.0) -> coupling.DressedSystem:
    f = cfg.values["field"]
    mu = _mu(cfg)
    dip = coupling.InnerDipole(f["dipole_au"], f["dipole_R_flat"], f["dipole_width"])
    if f["scheme"] == "I":
        base = surrogates.scheme1_system(intensity, mu)
    elif f["scheme"] == "II":
        base = surrogates.scheme2_system(intensity, to_au(f["delta_MHz"], "MHz"), mu)
    else:
        field = coupling.FieldSpec(intensity, _cm(f["E_f_cm1"]), f["detuning_reference"])
        return coupling.DressedSystem(build_ground(cfg), build_excited(cfg), field, dip, "config")
    return coupling.DressedSystem(base.ground, base.excited, base.field, dip, base.label)


def _mu(cfg: RunConfig) -> float:
    iso = isotope(cfg.get("isotopes", "list")[0])
    return reduced_mass(iso, iso)


def _R_max(cfg: RunConfig, curve, mu: float) -> float:
    """Configured outer radius, else 20000 bohr for tailed curves and the well extent otherwise."""
    R_max = cfg.get("grid", "R_max")
    if R_max is not None:
        return R_max
    return scattering.DEFAULT_R_MAX if curve.has_tail else scattering._well_extent(curve, mu)


def _grid_for(cfg: RunConfig, curve, mu: float) -> mfgm.MappedGrid:
    g = cfg.values["grid"]
    R_min = g["R_min"] if g["R_min"] is not None else scattering.default_inner_radius(curve, mu)
    R_max = _R_max(cfg, curve, mu)
    if g["N"]:
        return mfgm.uniform_grid(g["N"], R_min, R_max, mu)
    if math.isfinite(curve.asymptote):
        E_env = curve.asymptote + to_au(g["E_env_uK"], "uK")
    else:
        # confining curve: resolve up to the middle of the probed energy range
        V = curve(np.linspace(R_min, R_max, 4000))
        E_env = 0.5 * (float(np.min(V)) + float(np.max(V)))
    return mfgm.build_grid(curve, mu, E_env, R_min, R_max, g["beta"])


# --------------------------------------------------------------- commands


class Outputs:
    """Tracks written files so a failure can remove them."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def csv(self, name, header, rows, meta=None, footer=None):
        return fileio.write_csv(self.path(name), header, rows, meta, footer)

    def plot(self, name, x, y, labels):
        return fileio.write_plot_data(self.path(name), x, y, labels)

    def cleanup(self):
        for p in self.files:
            if p.exists():
                p.unlink()

    def manifest(self):
        fileio.write_manifest(self.out, [p for p in self.files if p.exists()])


def cmd_bound(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    curve = build_ground(cfg)
    mu = _mu(cfg)
    grid = _grid_for(cfg, curve, mu)
    spec = mfgm.solve_bound(mfgm.build_hamiltonian(grid, curve))
    E = spec.energies
    rows = [[v, e, from_au(e, "cm-1")] for v, e in enumerate(E)]
    meta = {"curve": curve.label, "mu_me": mu, "N": grid.N}
    out.csv("levels.csv", ["v", "E_hartree", "E_cm1"], rows, meta)
    out.plot("levels.dat", range(len(E)), from_au(E, "cm-1"), ("v", "E_cm1"))
    n_dump = cfg.get("grid", "dump_wavefunctions")
    if n_dump and len(E):
        k = min(n_dump, len(E))
        cols = [spec.state(v).values for v in range(k)]
        out.csv("wavefunctions.csv", ["R_bohr"] + [f"psi_{v}" for v in range(k)],
                np.column_stack([grid.points] + cols).tolist())
    print(f"count = {spec.count}")
    if math.isfinite(curve.asymptote) and spec.count:
        rep = scattering.bound_count_consistency(curve, mu, R_min=grid.R_min, R_max=grid.R_max)
        for line in rep.lines():
            print(line)


def cmd_alen(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    curve = build_ground(cfg)
    s = cfg.values["scattering"]
    g = dict(cfg.values["grid"])
    g["R_max"] = g["R_max"] or scattering.DEFAULT_R_MAX
    results = []
    for label in cfg.get("isotopes", "list"):
        iso = isotope(label)
        mu = reduced_mass(iso, iso)
        for m in s["methods"]:
            if m == "zero_energy":
                r = scattering.scattering_length_zero_energy(curve, mu, R_max=g["R_max"], label=label)
            elif m == "phase":
                r = scattering.scattering_length_phase(
                    curve, mu, [to_au(e, "uK") for e in s["energies_uK"]], R_max=g["R_max"],
                    label=label)
            else:
                r = scattering.scattering_length_grid(
                    curve, mu, R_max=g["R_max"], R_min=g["R_min"], beta=g["beta"],
                    E_env=curve.asymptote + to_au(g["E_env_uK"], "uK"),
                    E_max=to_au(s["E_max_uK"], "uK"), boundary=g["boundary"],
                    eta=g["absorber_eta"], onset=g["absorber_onset"], label=label)
            results.append(r)
            print(f"{label} {r.method}: a = {fileio.fmt(r.a)} bohr")
    out.csv("alen.csv", scattering.CSV_HEADER, [r.csv_row() for r in results],
            {"curve": curve.label})


def _fc_setup(cfg: RunConfig, excited, ground, mu):
    f = cfg.values["fit"]
    return spectra_fit.FCSetup.build(excited, ground, mu,
                                     binding_window=(f["binding_min_cm1"], f["binding_max_cm1"]),
                                     R_max=f["R_max"], beta=f["beta"])


def cmd_fcf(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    ground, excited, mu = build_ground(cfg), build_excited(cfg), _mu(cfg)
    f = cfg.values["fit"]
    setup = _fc_setup(cfg, excited, ground, mu)
    sp = spectra_fit.fc_spectrum(excited, ground, mu, to_au(f["E_collision_uK"], "uK"), setup=setup)
    nodes = spectra_fit.detect_nodes(sp, f["prominence"])
    out.csv("spectrum.csv", spectra_fit.SPECTRUM_HEADER, sp.rows(),
            {"E_collision_uK": f["E_collision_uK"]})
    out.plot("spectrum.dat", sp.detuning, sp.fc, ("detuning_cm1", "fc_relative"))
    out.csv("nodes.csv", ["detuning_cm1", "level_v", "shallow"],
            [[d, v, s] for d, v, s in zip(nodes.detunings, nodes.levels, nodes.shallow)])
    print(f"levels = {len(sp)}, nodes = {len(nodes)}")


def cmd_fit_wall(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    ground, excited, mu = build_ground(cfg), build_excited(cfg), _mu(cfg)
    f = cfg.values["fit"]
    targets = spectra_fit.read_targets(f["targets"] or BUNDLED_TARGETS)
    setup = _fc_setup(cfg, excited, ground, mu)
    template = potentials.InnerWallDeformation(0.0, f["R0"], f["sigma"])
    E = to_au(f["E_collision_uK"], "uK")
    fit = spectra_fit.fit_inner_wall(ground, excited, mu, targets, f["branch"], template=template,
                                     setup=setup, E_collision=E, tol=f["tol_cm1"],
                                     prominence=f["prominence"])
    a = fit.scattering_length(mu).a
    footer = {}
    if f["shift_cm1"] > 0:
        am, ap = spectra_fit.node_shift_sensitivity(fit, f["shift_cm1"], mu, setup=setup,
                                                    index=f["node_index"], E_collision=E)
        footer = {"node_shift_cm1": f["shift_cm1"], "a_minus_bohr": am, "a_plus_bohr": ap}
    out.csv("fit.csv", ["branch", "lambda_hartree", "lambda_cm1", "bound_count",
                        "node_residual_cm1", "a_bohr"],
            [[fit.branch, fit.lambda_star, from_au(fit.lambda_star, "cm-1"), fit.bound_count,
              fit.node_residual, a]], {"R0": f["R0"], "sigma": f["sigma"]}, footer)
    out.plot("nodes.dat", fit.targets.detunings, _matched(fit), ("target_cm1", "computed_cm1"))
    R = np.linspace(max(f["R0"] - 4 * f["sigma"], 1.0), f["R0"] + 4 * f["sigma"], 201)
    fileio.write_potential_table(out.path("fitted_wall.txt"), R, fit.fitted_curve(R))
    print(f"branch = {fit.branch}, lambda = {fileio.fmt(from_au(fit.lambda_star, 'cm-1'))} cm-1, "
          f"count = {fit.bound_count}, residual = {fileio.fmt(fit.node_residual)} cm-1, "
          f"a = {fileio.fmt(a)} bohr")


def _matched(fit) -> list:
    _, pairs = spectra_fit.match_nodes(fit.nodes.detunings, fit.targets.detunings)
    got = dict(pairs)
    return [fit.nodes.detunings[got[t]] if t in got else math.nan
            for t in range(len(fit.targets))]


SCAN_HEADER = coupling.SCAN_HEADER


def _scan_footer(sc: coupling.ScanResult) -> dict:
    return sc.footer()


def cmd_dress_scan(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    f = cfg.values["field"]
    mu = _mu(cfg)
    system = dressed_system(cfg)
    sc = coupling.intensity_scan(system, f["intensities_W_cm2"], mu,
                                 to_au(f["E_collision_uK"], "uK"), refine=f["refine"], jobs=jobs,
                                 R_min=f["R_min"], R_max=f["R_max"], beta=f["beta"])
    rows = [["intensity_W_cm2", p.value, p.a, p.excited_population, "; ".join(p.warnings)]
            for p in sc.points]
    footer = {"a_bg_bohr": sc.a_bg}
    if sc.sign_change is not None:
        footer["sign_change_W_cm2"] = sc.sign_change
    out.csv("dress_scan.csv", SCAN_HEADER, rows,
            {"scheme": f["scheme"], "E_f_cm1": from_au(system.E_f, "cm-1")}, footer)
    out.plot("dress_scan.dat", sc.values, sc.a, ("intensity_W_cm2", "a_bohr"))
    for p in sc.points:
        print(f"I = {fileio.fmt(p.value)} W/cm2: a = {fileio.fmt(p.a)} bohr")
    if sc.sign_change is not None:
        print(f"sign change at {fileio.fmt(sc.sign_change)} W/cm2")


def cmd_feshbach_scan(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    f = cfg.values["field"]
    mu = _mu(cfg)
    MHz = to_au(1.0, "MHz")
    system = dressed_system(cfg, f["intensity_W_cm2"])
    if f["scheme"] == "config" and cfg.given("field", "delta_MHz"):
        system, _ = coupling.tune_detuning(system, mu, f["delta_MHz"] * MHz)
    level = coupling.feshbach_locate(system, mu)
    sc = coupling.detuning_scan(system, [d * MHz for d in f["detunings_MHz"]], mu,
                                to_au(f["E_collision_uK"], "uK"), jobs=jobs, R_min=f["R_min"],
                                R_max=f["R_max"], beta=f["beta"])
    rows = [["detuning_MHz", p.value / MHz, p.a, p.excited_population, "; ".join(p.warnings)]
            for p in sc.points]
    meta = {"scheme": f["scheme"], "intensity_W_cm2": f["intensity_W_cm2"],
            "level_delta_MHz": level.delta / MHz, "level_delta_hartree": level.delta,
            "level_delta_cm1": from_au(level.delta, "cm-1")}
    out.csv("feshbach_scan.csv", SCAN_HEADER, rows, meta, sc.footer())
    out.plot("feshbach_scan.dat", sc.values / MHz, sc.a, ("detuning_MHz", "a_bohr"))
    print(f"level detuning = {fileio.fmt(level.delta / MHz)} MHz")
    if sc.fit is not None:
        print(f"a_bg = {fileio.fmt(sc.fit.a_bg)} bohr, delta0 = "
              f"{fileio.fmt(sc.fit.delta0 / MHz)} MHz, gamma = {fileio.fmt(sc.fit.gamma / MHz)} MHz,"
              f" residual = {fileio.fmt(sc.fit.residual)}")


def cmd_phase(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    curve = build_ground(cfg)
    rows = []
    for label in cfg.get("isotopes", "list"):
        iso = isotope(label)
        mu = reduced_mass(iso, iso)
        ph = scattering.semiclassical_phase(curve, mu)
        rows.append([label, ph.phi, ph.phi_over_pi, ph.bound_count_semiclassical,
                     ph.bound_count_rounded])
        print(f"isotope = {label}")
        print(f"phi_over_pi = {fileio.fmt(round(ph.phi_over_pi, 10))}")
        print(f"count = {ph.bound_count_semiclassical}")
    out.csv("phase.csv", ["isotope", "phi", "phi_over_pi", "count_semiclassical", "count_rounded"],
            rows, {"curve": curve.label})


def cmd_isotopes(cfg: RunConfig, out: Outputs, jobs: int) -> None:
    curve = build_ground(cfg)
    labels = cfg.get("isotopes", "list")
    g = cfg.values["grid"]
    res = scattering.isotope_scan(curve, [isotope(x) for x in labels], R_max=g["R_max"] or scattering.DEFAULT_R_MAX)
    rows = []
    for r, label in zip(res, labels):
        iso = isotope(label)
        ph = scattering.semiclassical_phase(curve, reduced_mass(iso, iso))
        rows.append([label, r.mu, ph.phi_over_pi, r.a, r.node_count, "; ".join(r.warnings)])
        print(f"{label}: a = {fileio.fmt(r.a)} bohr, phi/pi = {fileio.fmt(ph.phi_over_pi)}")
    out.csv("isotopes.csv", ["isotope", "mu_me", "phi_over_pi", "a_bohr", "node_count", "warning"],
            rows, {"curve": curve.label})


COMMANDS: dict[str, Callable] = {
    "bound": cmd_bound,
    "alen": cmd_alen,
    "fcf": cmd_fcf,
    "fit-wall": cmd_fit_wall,
    "dress-scan": cmd_dress_scan,
    "feshbach-scan": cmd_feshbach_scan,
    "phase": cmd_phase,
    "isotopes": cmd_isotopes,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coldcoll", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for scans")
    p.add_argument("command", choices=sorted(COMMANDS))
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out_dir}: {exc}", file=sys.stderr)
        return 1
    out = Outputs(out_dir)
    try:
        COMMANDS[args.command](cfg, out, args.jobs)
    except (UnitError, ConfigError) as exc:
        out.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        out.cleanup()
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out.manifest()
    return 0


if __name__ == "__main__":
    sys.exit(main())
