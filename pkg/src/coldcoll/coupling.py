"""Two-channel field-dressed collisions in the rotating wave approximation.

The ground curve is the open channel.  The excited curve, shifted down by the
photon energy ``E_f``, is the closed channel; the two are coupled by
``Omega(R)/2`` with ``Omega = mu_d(R) * field_amplitude(I)``.  Scattering
lengths come from the open-channel component of grid box states, exactly as
for a single curve.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from . import mfgm
from .potentials import PotentialCurve, shifted
from .scattering import FIT_WINDOW, ScatteringResult, asymptotic_phase, effective_range_fit
from .units import CONSTANTS, field_amplitude, to_au

__all__ = [
    "FieldSpec",
    "DressedSystem",
    "InnerDipole",
    "AdiabaticCurve",
    "DressedScatteringResult",
    "FeshbachLevel",
    "FeshbachFit",
    "ScanPoint",
    "ScanResult",
    "TransitionOverlap",
    "OpenChannelError",
    "adiabatic_potentials",
    "adiabatic_gap",
    "crossing_radius",
    "dressed_grid",
    "dressed_scattering_length",
    "intensity_scan",
    "feshbach_locate",
    "tune_detuning",
    "detuning_scan",
    "fit_feshbach",
    "transition_overlap",
    "rabi_period",
    "short_range_density_ratio",
]

REFERENCES = ("ground_threshold", "atomic_6s_6p32")
# 6S1/2 -> 6P3/2 line of Cs, the reference for detunings quoted from the atomic line
CS_D2 = to_au(11732.3071, "cm-1")
DEFAULT_COLLISION_ENERGY = to_au(0.4, "uK")
DEFAULT_DRESSED_BETA = 6.0
OPEN_CHANNEL_TOL = 1e-6
FIT_RESIDUAL_LIMIT = 0.01


class OpenChannelError(ValueError):
    """The excited channel is not negligible at the end of the box."""


@dataclass(frozen=True)
class FieldSpec:
    """Laser intensity (W/cm^2) and photon energy ``E_f`` (hartree).

    With ``detuning_reference = "atomic_6s_6p32"`` the stored value is read
    as a detuning below the Cs D2 line instead of an absolute photon energy.
    """

    intensity: float
    photon_energy: float
    detuning_reference: str = "ground_threshold"

    def __post_init__(self):
        if not (math.isfinite(self.intensity) and self.intensity >= 0):
            raise ValueError(f"intensity must be finite and >= 0, got {self.intensity}")
        if not math.isfinite(self.photon_energy):
            raise ValueError("photon energy must be finite")
        if self.detuning_reference not in REFERENCES:
            raise ValueError(f"detuning_reference must be one of {REFERENCES}")

    @property
    def E_f(self) -> float:
        if self.detuning_reference == "atomic_6s_6p32":
            return CS_D2 - self.photon_energy
        return self.photon_energy

    @classmethod
    def from_cm1(cls, intensity: float, value_cm1: float,
                 detuning_reference: str = "ground_threshold") -> "FieldSpec":
        return cls(float(intensity), to_au(value_cm1, "cm-1"), detuning_reference)

    def with_intensity(self, intensity: float) -> "FieldSpec":
        return replace(self, intensity=float(intensity))

    def with_photon_energy(self, E_f: float) -> "FieldSpec":
        """Same field with absolute photon energy ``E_f``."""
        return FieldSpec(self.intensity, float(E_f), "ground_threshold")


@dataclass(frozen=True)
class InnerDipole:
    """Transition dipole flat at short range with a Gaussian fall-off.

    ``mu_d = value`` for ``R <= R_flat`` and
    ``value * exp(-((R - R_flat) / width)**2)`` beyond.
    """

    value: float
    R_flat: float
    width: float

    def __call__(self, R):
        x = np.maximum(np.asarray(R, dtype=float) - self.R_flat, 0.0) / self.width
        return self.value * np.exp(-x * x)


@dataclass(frozen=True)
class DressedSystem:
    ground: PotentialCurve
    excited: PotentialCurve
    field: FieldSpec
    dipole: Callable | float = 1.0
    label: str = "dressed"

    def __post_init__(self):
        if not math.isfinite(self.excited.asymptote):
            raise ValueError("excited curve needs a finite asymptote")
        if not self.excited.asymptote - self.E_f > self.ground.asymptote:
            raise ValueError(
                "excited channel is open at threshold: V_e(inf) - E_f must exceed the ground "
                f"asymptote (red detuning), got {self.excited.asymptote - self.E_f:.6e}"
            )

    @property
    def E_f(self) -> float:
        return self.field.E_f

    @property
    def amplitude(self) -> float:
        return field_amplitude(self.field.intensity)

    def rabi(self, R):
        """``Omega(R) = mu_d(R) * E_field`` in hartree."""
        R = np.asarray(R, dtype=float)
        d = self.dipole(R) if callable(self.dipole) else np.full(R.shape, float(self.dipole))
        return np.asarray(d, dtype=float) * self.amplitude

    def closed_channel(self) -> PotentialCurve:
        """``V_e - E_f`` as a curve."""
        return shifted(self.excited, -self.E_f, label=f"{self.excited.label}-E_f")

    def with_intensity(self, intensity: float) -> "DressedSystem":
        return replace(self, field=self.field.with_intensity(intensity))

    def with_photon_energy(self, E_f: float) -> "DressedSystem":
        return replace(self, field=self.field.with_photon_energy(E_f))


# ------------------------------------------------------------ adiabatic


@dataclass(frozen=True)
class AdiabaticCurve:
    """One eigenvalue branch of the dressed 2x2 potential matrix."""

    system: DressedSystem
    upper: bool

    def __call__(self, R):
        scalar = np.ndim(R) == 0
        R = np.atleast_1d(np.asarray(R, dtype=float))
        g = self.system.ground(R)
        e = self.system.excited(R) - self.system.E_f
        w = self.system.rabi(R)
        half = np.sqrt(0.25 * (g - e) ** 2 + 0.25 * w * w)
        out = 0.5 * (g + e) + (half if self.upper else -half)
        return float(out[0]) if scalar else out


def adiabatic_potentials(system: DressedSystem) -> tuple[AdiabaticCurve, AdiabaticCurve]:
    """``(lower, upper)`` eigenvalues of ``[[V_g, W/2], [W/2, V_e - E_f]]``.

    The closed-form ordering keeps each branch continuous; with zero coupling
    the branches are the diabatic curves, swapped at their crossing.
    """
    return AdiabaticCurve(system, False), AdiabaticCurve(system, True)


def crossing_radius(system: DressedSystem, R_lo: float = 5.0, R_hi: float = 500.0) -> float:
    """Outermost ``R`` where ``V_g = V_e - E_f`` (the diabatic crossing)."""
    probe = np.geomspace(R_lo, R_hi, 20001)
    d = system.ground(probe) - (system.excited(probe) - system.E_f)
    flips = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    if len(flips) == 0:
        raise ValueError(f"diabatic curves do not cross on [{R_lo}, {R_hi}]")
    i = flips[-1]

    def f(r):
        return float(system.ground(r)) - (float(system.excited(r)) - system.E_f)

    return float(brentq(f, probe[i], probe[i + 1], xtol=1e-13))


def adiabatic_gap(system: DressedSystem, R) -> np.ndarray:
    lower, upper = adiabatic_potentials(system)
    return upper(R) - lower(R)


# ------------------------------------------------------ dressed solutions


@dataclass(frozen=True)
class DressedScatteringResult(ScatteringResult):
    excited_population: float = 0.0
    threshold: float = 0.0  # dressed open-channel threshold, hartree
    energies: tuple = ()  # box-state energies above threshold used in the fit


def dressed_grid(system: DressedSystem, mu: float, *, R_min: float = 8.5,
                 R_max: float = 20000.0, E_env: float | None = None,
                 beta: float = DEFAULT_DRESSED_BETA) -> mfgm.MappedGrid:
    """Map resolving both channels near the ground threshold."""
    if E_env is None:
        E_env = system.ground.asymptote + to_au(300.0, "uK")
    return mfgm.build_grid([system.ground, system.closed_channel()], mu, E_env, R_min, R_max, beta)


def dressed_scattering_length(system: DressedSystem, mu: float,
                              E_collision: float = DEFAULT_COLLISION_ENERGY, *,
                              grid: mfgm.MappedGrid | None = None, window: tuple = FIT_WINDOW,
                              open_tol: float = OPEN_CHANNEL_TOL,
                              **grid_kw) -> DressedScatteringResult:
    """Scattering length of the dressed open channel.

    Box states with energies up to ``E_collision`` above the dressed
    threshold (at least the two lowest) give phases from the open-channel
    component; ``a`` follows from an effective-range fit.  The excited
    population is the channel-2 share of the norm of the lowest box state.
    """
    if E_collision <= 0:
        raise ValueError("E_collision must be positive")
    if grid is None:
        grid = dressed_grid(system, mu, **grid_kw)
    H = mfgm.build_coupled_hamiltonian(grid, system.ground, system.excited, system.rabi,
                                       system.E_f)
    thr = H.asymptote
    states = mfgm.threshold_states(H, (0.0, E_collision))
    if len(states) < 2:
        states = mfgm.threshold_states(H, (0.0, 64.0 * E_collision))[:2]
    if len(states) < 2:
        raise ValueError(f"no continuum states within {E_collision:.3e} hartree of threshold")
    R = grid.points
    far = R > 0.9 * grid.R_max
    lo, hi = window[0] * grid.R_max, window[1] * grid.R_max
    ks, deltas = [], []
    for s in states:
        g, e = s.channels
        if np.max(np.abs(e[far])) > open_tol * np.max(np.abs(g[far])):
            raise OpenChannelError(
                "excited-channel amplitude near R_max is not negligible; open channel ambiguous"
            )
        k = math.sqrt(2.0 * mu * (s.energy - thr))
        ks.append(k)
        deltas.append(asymptotic_phase(R, g, k, lo, hi))
    a, r_eff, resid = effective_range_fit(ks, deltas)
    warnings = []
    if max(ks) * abs(a) > 1.0:
        warnings.append(f"k|a| = {max(ks) * abs(a):.2f} > 1 at the highest box state")
    pop = states[0].channel_fraction(1)
    return DressedScatteringResult(
        float(a), "dressed_phase", float(states[0].energy - thr), (lo, hi), resid, -1,
        tuple(warnings), r_eff, system.label, float(mu), excited_population=float(pop),
        threshold=float(thr), energies=tuple(float(s.energy - thr) for s in states))


# ---------------------------------------------------------------- scans


@dataclass(frozen=True)
class ScanPoint:
    value: float
    a: float
    excited_population: float
    warnings: tuple = ()


@dataclass(frozen=True)
class FeshbachFit:
    """``a(D) = a_bg (1 - gamma / (D - delta0))`` with detunings in hartree."""

    a_bg: float
    delta0: float
    gamma: float
    residual: float
    warnings: tuple = ()

    def __call__(self, delta):
        return self.a_bg * (1.0 - self.gamma / (np.asarray(delta, dtype=float) - self.delta0))


@dataclass(frozen=True)
class ScanResult:
    axis: str  # "intensity" (W/cm^2) or "detuning" (hartree)
    points: tuple
    sign_change: float | None = None
    a_bg: float | None = None
    fit: FeshbachFit | None = None
    refinement: tuple = ()  # bisection evaluations, not part of the scan grid

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def a(self) -> np.ndarray:
        return np.array([p.a for p in self.points])

    @property
    def populations(self) -> np.ndarray:
        return np.array([p.excited_population for p in self.points])

    def rows(self) -> list:
        return [[self.axis, p.value, p.a, p.excited_population, "; ".join(p.warnings)]
                for p in self.points]

    def footer(self) -> dict:
        out = {}
        if self.a_bg is not None:
            out["a_bg_bohr"] = self.a_bg
        if self.sign_change is not None:
            out["sign_change"] = self.sign_change
        if self.fit is not None:
            out.update(fit_a_bg_bohr=self.fit.a_bg, fit_delta0_hartree=self.fit.delta0,
                       fit_delta0_MHz=self.fit.delta0 / to_au(1.0, "MHz"),
                       fit_gamma_hartree=self.fit.gamma,
                       fit_gamma_MHz=self.fit.gamma / to_au(1.0, "MHz"),
                       fit_residual=self.fit.residual)
        return out


SCAN_HEADER = ["axis_name", "axis_value", "a_bohr", "excited_population", "warning"]


def _evaluate(args) -> ScanPoint:
    value, system, mu, E, kw = args
    try:
        r = dressed_scattering_length(system, mu, E, **kw)
        return ScanPoint(float(value), r.a, r.excited_population, r.warnings)
    except (ValueError, RuntimeError) as exc:
        return ScanPoint(float(value), math.nan, math.nan, (f"{type(exc).__name__}: {exc}",))


def _run(tasks: list, jobs: int) -> list:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate, tasks))
    return [_evaluate(t) for t in tasks]


def _is_zero_crossing(a0: float, a1: float, a_bg: float) -> bool:
    """Sign change of ``a`` that does not pass through a pole.

    At a pole ``1/(a - a_bg)`` passes through zero, so ``a - a_bg`` flips
    sign along with ``a``; at a genuine zero it keeps its sign.
    """
    if not (math.isfinite(a0) and math.isfinite(a1)):
        return False
    if a0 == 0.0 or a1 == 0.0:
        return True
    return (a0 < 0) != (a1 < 0) and (a0 - a_bg < 0) == (a1 - a_bg < 0)


def intensity_scan(system: DressedSystem, intensities: Sequence[float], mu: float,
                   E_collision: float = DEFAULT_COLLISION_ENERGY, *, refine: bool = True,
                   rel_tol: float = 0.01, jobs: int = 1, **kw) -> ScanResult:
    """``a`` versus intensity; a zero crossing is refined by bisection."""
    intensities = [float(I) for I in intensities]
    if any(b < a for a, b in zip(intensities, intensities[1:])):
        raise ValueError("intensities must be sorted ascending")
    if not intensities:
        return ScanResult("intensity", ())
    if "grid" not in kw:
        kw = dict(kw, grid=dressed_grid(system, mu, **_grid_opts(kw)))
    kw = {k: v for k, v in kw.items() if k not in _GRID_KEYS}
    tasks = [(I, system.with_intensity(I), mu, E_collision, kw) for I in intensities]
    if intensities[0] != 0.0:
        tasks.append((0.0, system.with_intensity(0.0), mu, E_collision, kw))
    pts = _run(tasks, jobs)
    a_bg = pts[-1].a if intensities[0] != 0.0 else pts[0].a
    pts = pts[: len(intensities)]
    sign_change, extra = None, []
    for p0, p1 in zip(pts, pts[1:]):
        if _is_zero_crossing(p0.a, p1.a, a_bg):
            lo, hi = p0, p1
            width = rel_tol * (p1.value - p0.value)
            while refine and hi.value - lo.value > width:
                mid = _evaluate((0.5 * (lo.value + hi.value),
                                 system.with_intensity(0.5 * (lo.value + hi.value)),
                                 mu, E_collision, kw))
                extra.append(mid)
                if not math.isfinite(mid.a):
                    break
                if _is_zero_crossing(lo.a, mid.a, a_bg):
                    hi = mid
                else:
                    lo = mid
            # linear interpolation inside the final bracket
            sign_change = lo.value + (hi.value - lo.value) * lo.a / (lo.a - hi.a)
            break
    return ScanResult("intensity", tuple(pts), sign_change, a_bg, None, tuple(extra))


_GRID_KEYS = ("R_min", "R_max", "E_env", "beta")


def _grid_opts(kw: dict) -> dict:
    return {k: kw[k] for k in _GRID_KEYS if k in kw}


@dataclass(frozen=True)
class FeshbachLevel:
    energy: float  # relative to the ground threshold, hartree
    delta: float  # -energy, positive below threshold
    v: int


def _closed_grid(closed: PotentialCurve, mu: float, thr: float, beta: float):
    R_e, V_min = closed.minimum(2.0, 1000.0)
    if V_min >= thr:
        raise ValueError("closed channel has no level below the ground threshold")
    span = thr - V_min
    if math.isfinite(closed.asymptote):
        span = max(span, 0.5 * (closed.asymptote - V_min))
    top = thr + span
    probe = np.geomspace(2.0, 2000.0, 20001)
    V = closed(probe)
    inside = np.nonzero(V < top)[0]
    R_lo = max(probe[max(inside[0] - 1, 0)] * 0.97, 1.0)
    R_hi = min(probe[min(inside[-1] + 1, len(probe) - 1)] * 1.05, 2000.0)
    return mfgm.build_grid(closed, mu, top, R_lo, R_hi, beta)


def feshbach_locate(system: DressedSystem, mu: float, *, beta: float = 8.0) -> FeshbachLevel:
    """Closed-channel level nearest the ground threshold.

    Levels come from ``V_e - E_f`` alone on a grid covering the region where
    it lies well above the ground threshold.
    """
    closed = system.closed_channel()
    thr = system.ground.asymptote
    grid = _closed_grid(closed, mu, thr, beta)
    spec = mfgm.solve_bound(mfgm.build_hamiltonian(grid, closed))
    E = spec.energies - thr
    if not np.any(E < 0):
        raise ValueError("closed channel has no level below the ground threshold")
    v = int(np.argmin(np.abs(E)))
    return FeshbachLevel(float(E[v]), float(-E[v]), v)


def tune_detuning(system: DressedSystem, mu: float, target: float, *,
                  tol: float = to_au(1.0, "MHz"), max_iter: int = 20):
    """Adjust ``E_f`` by secant steps until the level sits at ``-target``."""
    E0 = system.E_f
    lv0 = feshbach_locate(system, mu)
    f0 = lv0.delta - target
    if abs(f0) < tol:
        return system, lv0
    # a rigid shift of the closed channel moves the level one-for-one
    E1 = E0 - f0
    for _ in range(max_iter):
        s1 = system.with_photon_energy(E1)
        lv1 = feshbach_locate(s1, mu)
        f1 = lv1.delta - target
        if abs(f1) < tol:
            return s1, lv1
        slope = (f1 - f0) / (E1 - E0) if E1 != E0 else 1.0
        if slope == 0:
            slope = 1.0
        E0, f0, E1 = E1, f1, E1 - f1 / slope
    raise RuntimeError(f"detuning did not converge to {tol:.3e}: residual {f1:.3e}")


def fit_feshbach(deltas, a_values) -> FeshbachFit:
    """Least-squares fit of ``a_bg (1 - gamma / (delta - delta0))``.

    Seeded by the linear problem ``a D = a_bg D + delta0 a + c`` obtained by
    clearing the denominator, with ``c = -a_bg (delta0 + gamma)``.
    """
    d = np.asarray(deltas, dtype=float)
    a = np.asarray(a_values, dtype=float)
    ok = np.isfinite(a)
    d, a = d[ok], a[ok]
    if len(d) < 4:
        raise ValueError("need at least four finite points to fit a resonance")
    scale = float(np.ptp(d)) or 1.0
    x = d / scale
    w = 1.0 / np.abs(a)
    A = np.column_stack([x, a, np.ones_like(x)]) * w[:, None]
    (a_bg0, x0, c), *_ = np.linalg.lstsq(A, a * x * w, rcond=None)
    g0 = -c / a_bg0 - x0

    def model(p, xx):
        return p[0] * (1.0 - p[2] / (xx - p[1]))

    def resid(p):
        return (model(p, x) - a) / np.maximum(np.abs(a), abs(p[0]))

    sol = least_squares(resid, [a_bg0, x0, g0], method="lm", xtol=1e-15, ftol=1e-15)
    a_bg, x0, g = sol.x
    rms = float(np.sqrt(np.mean((model(sol.x, x) - a) ** 2 / a**2)))
    warns = () if rms < FIT_RESIDUAL_LIMIT else (f"fit residual {rms:.3e} above {FIT_RESIDUAL_LIMIT}",)
    return FeshbachFit(float(a_bg), float(x0 * scale), float(g * scale), rms, warns)


def detuning_scan(system: DressedSystem, deltas: Sequence[float], mu: float,
                  E_collision: float = DEFAULT_COLLISION_ENERGY, *, fit: bool = True,
                  jobs: int = 1, **kw) -> ScanResult:
    """``a`` versus bare level detuning ``Delta`` (hartree), plus a resonance fit.

    Each point shifts ``E_f`` so the closed-channel level sits at ``-Delta``.
    """
    deltas = [float(x) for x in deltas]
    if any(b < a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be sorted ascending")
    if not deltas:
        return ScanResult("detuning", ())
    ref = feshbach_locate(system, mu)
    if "grid" not in kw:
        kw = dict(kw, grid=dressed_grid(system, mu, **_grid_opts(kw)))
    kw = {k: v for k, v in kw.items() if k not in _GRID_KEYS}
    tasks = [(D, system.with_photon_energy(system.E_f + (D - ref.delta)), mu, E_collision, kw)
             for D in deltas]
    pts = tuple(_run(tasks, jobs))
    res = None
    if fit:
        try:
            res = fit_feshbach([p.value for p in pts], [p.a for p in pts])
        except (ValueError, np.linalg.LinAlgError) as exc:
            warn = f"resonance fit failed: {exc}"
            pts = tuple(replace(p, warnings=p.warnings + (warn,)) for p in pts)
    return ScanResult("detuning", pts, None, res.a_bg if res else None, res)


# ------------------------------------------------------------ diagnostics


@dataclass(frozen=True)
class TransitionOverlap:
    amplitude: float
    squared: float


def transition_overlap(psi_g: mfgm.WavefunctionOnGrid, psi_e: mfgm.WavefunctionOnGrid,
                       dipole: Callable | float = 1.0) -> TransitionOverlap:
    """``<psi_g| mu_d |psi_e>`` with the mapped quadrature weights."""
    if not psi_g.grid.same_as(psi_e.grid):
        raise ValueError("wavefunctions live on different grids")
    R = psi_g.R
    d = dipole(R) if callable(dipole) else np.full(R.shape, float(dipole))
    w = psi_g.grid.weights
    amp = float(np.sum(psi_g.values * d * psi_e.values * w))
    return TransitionOverlap(amp, amp * amp)


def rabi_period(system: DressedSystem, R_ref: float) -> float:
    """``2 pi / Omega(R_ref)`` in seconds."""
    omega = float(system.rabi(np.array([R_ref]))[0])
    if omega <= 0:
        raise ValueError("zero coupling: the Rabi period is infinite")
    return 2.0 * math.pi / omega * CONSTANTS["atomic_time_in_seconds"]


def short_range_density_ratio(psi_a: mfgm.WavefunctionOnGrid, psi_b: mfgm.WavefunctionOnGrid,
                              R_cut: float) -> float:
    """``int_0^R_cut |psi_a|^2 / int_0^R_cut |psi_b|^2`` (open channel)."""
    if not psi_a.grid.same_as(psi_b.grid):
        raise ValueError("wavefunctions live on different grids")
    if not R_cut < psi_a.grid.R_max:
        raise ValueError("R_cut must lie inside the box")
    m = psi_a.R < R_cut
    w = psi_a.grid.weights[m]
    den = float(np.sum(np.abs(psi_b.values[m]) ** 2 * w))
    if den == 0:
        raise ValueError("reference state has no weight below R_cut")
    return float(np.sum(np.abs(psi_a.values[m]) ** 2 * w)) / den
