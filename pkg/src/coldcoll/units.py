"""Unit registry and physical constants.

Everything inside the package is computed in Hartree atomic units.  This
module is the only place where a unit factor appears; values come from the
versioned constants file shipped in ``coldcoll/data``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

__all__ = [
    "CONSTANTS",
    "IsotopeSpec",
    "Quantity",
    "UnitError",
    "convert",
    "field_amplitude",
    "from_au",
    "isotope",
    "reduced_mass",
    "to_au",
]


class UnitError(ValueError):
    pass


@lru_cache(maxsize=None)
def _load_constants() -> dict:
    text = resources.files("coldcoll").joinpath("data").joinpath("codata2018.json").read_text()
    return json.loads(text)


CONSTANTS = _load_constants()

# canonical unit name -> (dimension, size of one unit in atomic units)
_UNITS: dict[str, tuple[str, float]] = {
    "hartree": ("energy", 1.0),
    "wavenumber_cm": ("energy", 1.0 / CONSTANTS["hartree_in_inverse_cm"]),
    "kelvin": ("energy", 1.0 / CONSTANTS["hartree_in_kelvin"]),
    "microkelvin": ("energy", 1e-6 / CONSTANTS["hartree_in_kelvin"]),
    "megahertz": ("energy", 1e6 / CONSTANTS["hartree_in_hz"]),
    "bohr": ("length", 1.0),
    "angstrom": ("length", 1.0 / CONSTANTS["bohr_in_angstrom"]),
    "electron_mass": ("mass", 1.0),
    "atomic_mass_unit": ("mass", CONSTANTS["atomic_mass_unit_in_electron_mass"]),
    # intensity is kept in its own dimension; the field amplitude is sqrt(I / I_au)
    "watt_per_cm2": ("intensity", 1.0 / CONSTANTS["atomic_intensity_w_per_cm2"]),
    "kilowatt_per_cm2": ("intensity", 1e3 / CONSTANTS["atomic_intensity_w_per_cm2"]),
    "megawatt_per_cm2": ("intensity", 1e6 / CONSTANTS["atomic_intensity_w_per_cm2"]),
    "au_field": ("field", 1.0),
    "second": ("time", 1.0 / CONSTANTS["atomic_time_in_seconds"]),
    "picosecond": ("time", 1e-12 / CONSTANTS["atomic_time_in_seconds"]),
}

_ALIASES = {
    "au": "hartree",
    "Eh": "hartree",
    "cm-1": "wavenumber_cm",
    "cm^-1": "wavenumber_cm",
    "1/cm": "wavenumber_cm",
    "K": "kelvin",
    "uK": "microkelvin",
    "μK": "microkelvin",
    "muK": "microkelvin",
    "MHz": "megahertz",
    "a0": "bohr",
    "A": "angstrom",
    "Å": "angstrom",
    "u": "atomic_mass_unit",
    "amu": "atomic_mass_unit",
    "me": "electron_mass",
    "W/cm2": "watt_per_cm2",
    "kW/cm2": "kilowatt_per_cm2",
    "MW/cm2": "megawatt_per_cm2",
    "s": "second",
    "ps": "picosecond",
}


def canonical(unit: str) -> str:
    """Resolve an alias to its canonical unit name."""
    name = _ALIASES.get(unit, unit)
    if name not in _UNITS:
        raise UnitError(f"unknown unit {unit!r}")
    return name


def dimension(unit: str) -> str:
    return _UNITS[canonical(unit)][0]


def to_au(value, unit: str):
    return value * _UNITS[canonical(unit)][1]


def from_au(value, unit: str):
    return value / _UNITS[canonical(unit)][1]


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: str

    def __post_init__(self):
        object.__setattr__(self, "unit", canonical(self.unit))

    def to(self, target: str) -> "Quantity":
        return convert(self, target)

    @property
    def au(self) -> float:
        return to_au(self.value, self.unit)


def convert(q: Quantity, target: str) -> Quantity:
    """Express ``q`` in ``target`` units.

    Temperatures and frequencies count as energies (k_B T and h nu).
    """
    target = canonical(target)
    src_dim, tgt_dim = dimension(q.unit), dimension(target)
    if src_dim != tgt_dim:
        raise UnitError(
            f"cannot convert {q.unit} ({src_dim}) to {target} ({tgt_dim})"
        )
    if q.unit == target:
        return q
    return Quantity(from_au(to_au(q.value, q.unit), target), target)


@dataclass(frozen=True)
class IsotopeSpec:
    mass_number: int
    atomic_mass: float  # atomic mass units
    symbol: str = "Cs"

    @property
    def mass(self) -> float:
        """Atomic mass in electron masses."""
        return to_au(self.atomic_mass, "atomic_mass_unit")

    @property
    def reduced_mass_pair(self) -> float:
        """Reduced mass of the homonuclear dimer in electron masses."""
        return self.mass / 2.0

    @property
    def label(self) -> str:
        return f"{self.mass_number}{self.symbol}"


def isotope(label: str) -> IsotopeSpec:
    """Look up a bundled isotope, e.g. ``isotope("133Cs")``."""
    table = CONSTANTS["isotopes"]
    if label not in table:
        raise KeyError(f"no mass data for {label!r}; known: {sorted(table)}")
    digits = "".join(ch for ch in label if ch.isdigit())
    symbol = label[len(digits):]
    return IsotopeSpec(int(digits), table[label], symbol)


def reduced_mass(a: IsotopeSpec, b: IsotopeSpec) -> float:
    if a.atomic_mass <= 0 or b.atomic_mass <= 0:
        raise ValueError("masses must be positive")
    if a == b:
        return a.reduced_mass_pair
    return a.mass * b.mass / (a.mass + b.mass)


def field_amplitude(intensity: float) -> float:
    """Peak field in atomic units for an intensity given in W/cm^2."""
    if intensity < 0:
        raise ValueError(f"negative intensity {intensity!r}")
    return math.sqrt(to_au(intensity, "watt_per_cm2"))


def energy(value: float, unit: str) -> float:
    """Shorthand for converting an energy to hartree, with a dimension check."""
    if dimension(unit) != "energy":
        raise UnitError(f"{unit} is not an energy unit")
    return to_au(value, unit)
