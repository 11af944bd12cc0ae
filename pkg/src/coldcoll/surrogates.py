"""Bundled analytic stand-ins for the Cs2 curves.

* ground: a ``C6`` well with ``C6 = -6331`` tuned to ``phi = 54.6 pi`` for
  133Cs2, so it supports 54 s-wave levels;
* excited: two ``8-3`` Mie wells with resonant-dipole tails playing the
  ``Sigma_g`` and ``Pi_g`` (6S+6P) curves, mixed by spin-orbit coupling into
  the 0g- pair;
* two field-dressed setups: an off-resonant one (the closed channel crosses
  the ground curve just below threshold) and a Feshbach one (the lowest
  closed-channel level sits 90 MHz below threshold).

Everything here is a model; the real curves are user inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

from . import mfgm
from .coupling import CS_D2, DressedSystem, FieldSpec, InnerDipole, tune_detuning
from .potentials import (InnerWallDeformation, PotentialCurve, SpinOrbitModel, apply_deformation,
                         mie_well, model_c6_well, so_diagonalize_0g)
from .scattering import semiclassical_phase
from .units import isotope, to_au

__all__ = [
    "CS_C6",
    "CS_R_MIN",
    "CS_DEPTH",
    "CS_PHI_OVER_PI",
    "CS_D1",
    "CS_GRID",
    "GridConfig",
    "cs_mu",
    "cs_ground",
    "tune_depth",
    "sigma_g",
    "pi_g",
    "spin_orbit_model",
    "excited_0g",
    "SCHEME1_DIPOLE",
    "SCHEME2_DIPOLE",
    "scheme1_system",
    "scheme2_system",
    "reference_deformation",
    "REFERENCE_LAMBDA_CM",
    "REFERENCE_NODES_CM",
    "reference_ground",
    "synthetic_targets",
]

CS_C6 = -6331.0
CS_R_MIN = 11.0
CS_PHI_OVER_PI = 54.6
# depth (hartree) that puts phi / pi at 54.6 for 133Cs2, frozen from tune_depth
CS_DEPTH = 0.0017803314195160853

CS_D1 = to_au(11178.2682, "cm-1")  # 6S1/2 -> 6P1/2
V_SO = CS_D2 - CS_D1  # 6P fine-structure splitting
A_6P = CS_D1 + V_SO / 3.0  # 6S+6P without spin-orbit

SIGMA_DEPTH = to_au(2500.0, "cm-1")
SIGMA_RE = 9.9
PI_DEPTH = to_au(1500.0, "cm-1")
PI_RE = 11.0
MIE_N, MIE_M = 8, 3

# off-resonant setup: diabatic crossing at V_g = -6 cm-1, threshold 20% of the
# way from the closed level below it to the one above
SCHEME1_CROSSING = to_au(-6.0, "cm-1")
SCHEME1_LEVEL_FRACTION = 0.2
SCHEME1_DIPOLE = InnerDipole(10.0, 16.0, 4.0)
# Feshbach setup: v = 0 of the Sigma_g stand-in, 90 MHz below threshold
SCHEME2_DELTA = to_au(90.0, "MHz")
SCHEME2_DIPOLE = InnerDipole(10.0, 16.0, 4.0)


@dataclass(frozen=True)
class GridConfig:
    R_min: float = 8.5
    R_max: float = 20000.0
    E_env: float = to_au(300.0, "uK")
    beta: float = 7.0

    def build(self, curves, mu: float) -> mfgm.MappedGrid:
        return mfgm.build_grid(curves, mu, self.E_env, self.R_min, self.R_max, self.beta)


# reaches the 1e-6 rad phase accuracy on the ground curve
CS_GRID = GridConfig()


def cs_mu(label: str = "133Cs") -> float:
    return isotope(label).reduced_mass_pair


def cs_ground(depth: float = CS_DEPTH, C6: float = CS_C6, R_min: float = CS_R_MIN,
              label: str = "Cs2 a3Su+ model") -> PotentialCurve:
    return model_c6_well(depth, R_min, C6, label=label)


def tune_depth(phi_over_pi: float = CS_PHI_OVER_PI, mu: float | None = None,
               C6: float = CS_C6, R_min: float = CS_R_MIN, guess: float = CS_DEPTH) -> float:
    """Depth giving ``phi / pi = phi_over_pi`` for the model ground curve."""
    mu = cs_mu() if mu is None else mu

    def f(d):
        return semiclassical_phase(cs_ground(d, C6, R_min), mu).phi_over_pi - phi_over_pi

    # phi grows like sqrt(depth) at fixed shape
    d0 = guess * (phi_over_pi / (f(guess) + phi_over_pi)) ** 2
    lo, hi = 0.98 * d0, 1.02 * d0
    # the shape parameter moves with depth, so widen until bracketed
    while f(lo) > 0:
        lo *= 0.9
    while f(hi) < 0:
        hi *= 1.1
    return float(brentq(f, lo, hi, xtol=1e-17, rtol=1e-15))


def sigma_g(asymptote: float = A_6P) -> PotentialCurve:
    return mie_well(SIGMA_DEPTH, SIGMA_RE, MIE_N, MIE_M, asymptote, "Sigma_g model")


def pi_g(asymptote: float = A_6P) -> PotentialCurve:
    return mie_well(PI_DEPTH, PI_RE, MIE_N, MIE_M, asymptote, "Pi_g model")


def spin_orbit_model() -> SpinOrbitModel:
    return SpinOrbitModel(sigma_g(), pi_g(), V_SO)


def excited_0g() -> PotentialCurve:
    """0g- branch correlating with 6S+6P3/2 (asymptote at the D2 line)."""
    _, upper, _ = so_diagonalize_0g(spin_orbit_model())
    return upper


def reference_deformation(amplitude: float) -> InnerWallDeformation:
    """Inner-wall Gaussian used for the bundled wall fits (center 10.5, sigma 0.4)."""
    return InnerWallDeformation(amplitude, 10.5, 0.4)


# amplitude (cm-1) that brings a(133Cs2) to -350 bohr with 54 levels kept
REFERENCE_LAMBDA_CM = 6.162921397268633
# prominent FC nodes (cm-1 below the excited asymptote) of that curve at 200 uK
REFERENCE_NODES_CM = (5.233436832525648, 17.002765968697773, 32.75065709459735,
                      51.600678621004825, 73.05154460673381, 96.77957009936958,
                      122.55105998336265)


def reference_ground() -> PotentialCurve:
    """Model ground curve carrying the reference wall deformation."""
    return apply_deformation(cs_ground(), reference_deformation(to_au(REFERENCE_LAMBDA_CM, "cm-1")))


def synthetic_targets(curve: PotentialCurve | None = None, mu: float | None = None, **kw):
    """Prominent FC nodes of ``curve`` (default: ``reference_ground``), as targets."""
    from .spectra_fit import NodeSet, detect_nodes, fc_spectrum

    curve = reference_ground() if curve is None else curve
    mu = cs_mu() if mu is None else mu
    nodes = detect_nodes(fc_spectrum(excited_0g(), curve, mu, **kw)).prominent()
    return NodeSet(nodes.detunings, "experimental_target")


# ------------------------------------------------------- dressed setups


@lru_cache(maxsize=None)
def _scheme1_photon_energy(mu: float) -> float:
    g = cs_ground()
    Rc = brentq(lambda r: float(g(r)) - SCHEME1_CROSSING, 15.0, 60.0, xtol=1e-13)
    body = pi_g(0.0).body
    off = float(g(Rc)) - float(body(Rc))  # closed-channel asymptote above threshold
    closed = pi_g(off)
    grid = mfgm.build_grid(closed, mu, to_au(300.0, "uK"), 8.5, 200.0, 6.0)
    lv = mfgm.solve_bound(mfgm.build_hamiltonian(grid, closed)).energies
    below, above = lv[lv < 0].max(), lv[lv > 0].min()
    shift = below + SCHEME1_LEVEL_FRACTION * (above - below)
    return A_6P - (off - shift)


def scheme1_system(intensity: float = 0.0, mu: float | None = None) -> DressedSystem:
    """Ground model dressed by the ``Pi_g`` stand-in far from any closed level.

    ``E_f`` puts the diabatic crossing 6 cm-1 below threshold; the nearest
    closed-channel levels sit about 1 and 4 cm-1 away.
    """
    mu = cs_mu() if mu is None else mu
    E_f = _scheme1_photon_energy(float(mu))
    return DressedSystem(cs_ground(), pi_g(), FieldSpec(float(intensity), E_f),
                         SCHEME1_DIPOLE, "scheme I model")


@lru_cache(maxsize=None)
def _scheme2_photon_energy(mu: float, delta: float) -> float:
    well = sigma_g(0.0)
    grid = mfgm.build_grid(well, mu, -0.9 * SIGMA_DEPTH, SIGMA_RE - 2.0, SIGMA_RE + 4.0, 8.0)
    v0 = mfgm.solve_bound(mfgm.build_hamiltonian(grid, well)).energies[0]
    # v = 0 of V_e - E_f at -delta, then polished on the locator's own grid
    base = DressedSystem(cs_ground(), sigma_g(), FieldSpec(0.0, A_6P + v0 + delta), SCHEME2_DIPOLE)
    tuned, _ = tune_detuning(base, mu, delta, tol=to_au(1e-3, "MHz"))
    return tuned.E_f


def scheme2_system(intensity: float = 0.0, delta: float = SCHEME2_DELTA,
                   mu: float | None = None) -> DressedSystem:
    """Ground model dressed by the ``Sigma_g`` stand-in with v = 0 at ``-delta``."""
    mu = cs_mu() if mu is None else mu
    E_f = _scheme2_photon_energy(float(mu), float(delta))
    return DressedSystem(cs_ground(), sigma_g(), FieldSpec(float(intensity), E_f),
                         SCHEME2_DIPOLE, "scheme II model")
