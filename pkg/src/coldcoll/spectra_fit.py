"""Photoassociation Franck-Condon spectra and inner-wall fits to their nodes.

The ground continuum wavefunction at the collision energy is the regular
solution obtained from a driven solve with a source near the end of the box;
it is free of the box-state selection that would otherwise make spectra jump
as the ground curve is deformed.  Excited levels are computed once per
:class:`FCSetup` and reused across a fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import mfgm
from .potentials import InnerWallDeformation, PotentialCurve, apply_deformation, shifted
from .scattering import (inverse_scattering_length, scattering_length_zero_energy,
                         semiclassical_phase)
from .units import from_au, to_au

__all__ = [
    "FCSetup",
    "FCSpectrum",
    "NodeSet",
    "WallFitResult",
    "CriticalC6Result",
    "WallFitError",
    "fc_spectrum",
    "detect_nodes",
    "match_nodes",
    "fit_inner_wall",
    "node_shift_sensitivity",
    "critical_c6_scan",
    "condon_radius",
    "read_targets",
]

DEFAULT_COLLISION_ENERGY = to_au(200.0, "uK")
BINDING_WINDOW_CM = (1.0, 150.0)
DEFAULT_PROMINENCE = 10.0
DEFAULT_FIT_TOL_CM = 0.05
BRANCHES = ("phase_added", "phase_removed")
PROVENANCES = ("computed", "experimental_target")


class WallFitError(RuntimeError):
    def __init__(self, msg: str, best_lambda: float, best_residual: float):
        super().__init__(msg)
        self.best_lambda = best_lambda
        self.best_residual = best_residual


def _reference(curve: PotentialCurve) -> float:
    a = getattr(curve, "asymptote", 0.0)
    return float(a) if math.isfinite(a) else 0.0


# ------------------------------------------------------------- spectrum


@dataclass(frozen=True, eq=False)
class FCSetup:
    """Shared grid plus the excited levels that a spectrum is built from.

    ``vectors`` holds the excited wavefunctions times ``sqrt(weights)`` so an
    overlap is a plain dot product with ``psi * sqrt(weights)``.
    """

    grid: mfgm.MappedGrid
    excited: PotentialCurve
    v: np.ndarray
    energies: np.ndarray  # hartree, relative to the excited reference
    vectors: np.ndarray

    @classmethod
    def build(cls, excited: PotentialCurve, ground: PotentialCurve, mu: float, *,
              binding_window: tuple = BINDING_WINDOW_CM, R_min: float | None = None,
              R_max: float = 1000.0, beta: float = 4.0, E_env: float | None = None,
              grid: mfgm.MappedGrid | None = None) -> "FCSetup":
        """``binding_window`` in cm-1 below the excited asymptote; ``None`` keeps all levels."""
        ref = _reference(excited)
        ex = shifted(excited, -ref) if ref else excited
        if grid is None:
            if R_min is None:
                R_min = _inner_edge([ex, ground])
            if E_env is None:
                E_env = _reference(ground) + to_au(300.0, "uK")
            grid = mfgm.build_grid([ground, ex], mu, E_env, R_min, R_max, beta)
        H = mfgm.build_hamiltonian(grid, ex)
        hi = -to_au(binding_window[0], "cm-1") if binding_window else H.asymptote
        if not math.isfinite(hi):
            hi = float(np.max(H.potential_diagonal))
        E, V = mfgm._eigh_window(H, -np.inf, hi)
        v = np.arange(len(E))
        if binding_window:
            keep = E >= -to_au(binding_window[1], "cm-1")
            E, V, v = E[keep], V[:, keep], v[keep]
        if len(E) == 0:
            raise ValueError("no excited levels inside the binding window")
        return cls(grid, ex, v, E, V)

    def continuum(self, ground: PotentialCurve, E_collision: float) -> mfgm.WavefunctionOnGrid:
        """Regular ground solution at ``E_collision`` above the ground threshold."""
        if not E_collision > 0:
            raise ValueError("E_collision must be positive")
        H = mfgm.build_hamiltonian(self.grid, ground)
        R_max = self.grid.R_max
        psi = mfgm.driven_solution(H, _reference(ground) + E_collision, 0.9 * R_max, 0.01 * R_max)
        c = psi.channels[0]
        big = np.nonzero(np.abs(c) > 1e-3 * np.max(np.abs(c)))[0]
        scale = np.max(np.abs(c[self.grid.points < 0.8 * R_max]))
        if not np.isfinite(scale) or scale == 0:
            raise ValueError(f"no continuum solution at E = {E_collision:.3e}")
        sign = -1.0 if c[big[0]] < 0 else 1.0
        return mfgm.WavefunctionOnGrid(psi.energy, (sign * c / scale,), self.grid, "driven")

    def bound(self, ground: PotentialCurve, v: int) -> mfgm.WavefunctionOnGrid:
        return mfgm.solve_bound(mfgm.build_hamiltonian(self.grid, ground)).state(v)


@dataclass(frozen=True, eq=False)
class FCSpectrum:
    v: np.ndarray
    detuning: np.ndarray  # cm-1 below the excited asymptote
    fc: np.ndarray
    collision_energy: float

    def __post_init__(self):
        if np.any(self.fc < 0):
            raise ValueError("FC factors must be non-negative")
        if np.any(np.diff(self.detuning) < 0):
            raise ValueError("entries must be ordered by detuning")

    @property
    def entries(self) -> list:
        return [(int(v), float(d), float(f)) for v, d, f in zip(self.v, self.detuning, self.fc)]

    def __len__(self):
        return len(self.v)

    def rows(self) -> list:
        return [[int(v), float(d), float(f)] for v, d, f in zip(self.v, self.detuning, self.fc)]


SPECTRUM_HEADER = ["v", "detuning_cm1", "fc_relative"]


def fc_spectrum(excited: PotentialCurve, ground: PotentialCurve, mu: float,
                E_collision: float = DEFAULT_COLLISION_ENERGY, *, setup: FCSetup | None = None,
                ground_level: int | None = None, **setup_kw) -> FCSpectrum:
    """``|<psi_v|psi_E>|^2`` for the excited levels, normalised to the largest.

    With ``ground_level`` the overlap partner is that bound level of the
    ground curve instead of the continuum (bound-bound factors).
    """
    if setup is None:
        setup = FCSetup.build(excited, ground, mu, **setup_kw)
    if ground_level is None:
        psi = setup.continuum(ground, E_collision)
        E_used = E_collision
    else:
        psi = setup.bound(ground, ground_level)
        E_used = psi.energy
    amp = setup.vectors.T @ (psi.values * np.sqrt(setup.grid.weights))
    fc = amp * amp
    if ground_level is None:
        top = np.max(fc)
        fc = fc / top if top > 0 else fc
    det = from_au(-setup.energies, "cm-1")
    order = np.argsort(det, kind="stable")
    return FCSpectrum(setup.v[order], det[order], fc[order], float(E_used))


def _inner_edge(curves) -> float:
    """Radius well inside every repulsive wall (V there exceeds 10x the depth)."""
    edges = []
    for c in curves:
        ref = _reference(c)
        R_e, V_min = c.minimum(2.0, 100.0)
        depth = ref - V_min
        probe = np.linspace(1.0, R_e, 4000)
        V = c(probe) - ref
        above = np.nonzero(V > 10.0 * depth)[0]
        edges.append(probe[above[-1]] if len(above) else 1.0)
    return float(min(edges))


# ---------------------------------------------------------------- nodes


@dataclass(frozen=True)
class NodeSet:
    detunings: tuple  # cm-1, strictly increasing
    provenance: str = "computed"
    shallow: tuple = ()  # per node, True when below the prominence threshold
    levels: tuple = ()  # excited level index at each computed minimum

    def __post_init__(self):
        object.__setattr__(self, "detunings", tuple(float(x) for x in self.detunings))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if any(b <= a for a, b in zip(self.detunings, self.detunings[1:])):
            raise ValueError("node detunings must be strictly increasing")
        if not self.shallow:
            object.__setattr__(self, "shallow", (False,) * len(self.detunings))

    def __len__(self):
        return len(self.detunings)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.detunings)

    def prominent(self) -> "NodeSet":
        keep = [i for i, s in enumerate(self.shallow) if not s]
        return NodeSet(tuple(self.detunings[i] for i in keep), self.provenance,
                       tuple(False for _ in keep),
                       tuple(self.levels[i] for i in keep) if self.levels else ())

    def displaced(self, index: int, shift: float) -> "NodeSet":
        d = list(self.detunings)
        d[index] += shift
        return NodeSet(tuple(d), self.provenance, self.shallow, self.levels)


def detect_nodes(spectrum: FCSpectrum, prominence: float = DEFAULT_PROMINENCE) -> NodeSet:
    """Interior local minima of ``fc`` versus detuning, refined by a parabola.

    A minimum is flagged shallow unless both neighbouring maxima exceed it by
    the factor ``prominence``.
    """
    if len(spectrum) < 5:
        raise ValueError("need at least five spectrum entries to look for nodes")
    x, y = spectrum.detuning, spectrum.fc
    mins = [i for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] <= y[i + 1]]
    nodes, flags, levels = [], [], []
    for j, i in enumerate(mins):
        lo = mins[j - 1] if j else 0
        hi = mins[j + 1] if j + 1 < len(mins) else len(y) - 1
        left, right = np.max(y[lo:i]), np.max(y[i + 1:hi + 1])
        flags.append(not (min(left, right) >= prominence * y[i]))
        nodes.append(_vertex(x[i - 1:i + 2], y[i - 1:i + 2]))
        levels.append(int(spectrum.v[i]))
    return NodeSet(tuple(nodes), "computed", tuple(flags), tuple(levels))


def _vertex(x, y) -> float:
    c2, c1, _ = np.polyfit(x - x[1], y, 2)
    if c2 <= 0:
        return float(x[1])
    return float(np.clip(x[1] - 0.5 * c1 / c2, x[0], x[2]))


def match_nodes(computed: Sequence[float], targets: Sequence[float]) -> tuple[float, list]:
    """One-to-one nearest-neighbour assignment; returns ``(rms, pairs)``.

    Pairs are taken greedily by distance.  A target left without a partner
    (fewer computed nodes) is charged the distance to its nearest node.
    """
    comp = np.asarray(computed, dtype=float)
    targ = np.asarray(targets, dtype=float)
    if len(targ) == 0:
        raise ValueError("no target nodes")
    if len(comp) == 0:
        return math.inf, []
    d = np.abs(targ[:, None] - comp[None, :])
    order = np.argsort(d, axis=None, kind="stable")
    used_t, used_c, pairs = set(), set(), []
    for flat in order:
        t, c = divmod(int(flat), len(comp))
        if t in used_t or c in used_c:
            continue
        used_t.add(t)
        used_c.add(c)
        pairs.append((t, c))
    err = np.empty(len(targ))
    for t, c in pairs:
        err[t] = d[t, c]
    for t in set(range(len(targ))) - used_t:
        err[t] = d[t].min()
    return float(np.sqrt(np.mean(err * err))), sorted(pairs)


def read_targets(path) -> NodeSet:
    """One detuning (cm-1) per line; ``#`` starts a comment."""
    vals = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                vals.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{n}: not a number: {text!r}") from None
    return NodeSet(tuple(sorted(vals)), "experimental_target")


def condon_radius(excited: PotentialCurve, binding_cm: float, R_hi: float = 2000.0) -> float:
    """Outer turning point of the excited curve at ``binding_cm`` below its asymptote."""
    ref = _reference(excited)
    E = ref - to_au(binding_cm, "cm-1")
    R_e, _ = excited.minimum(2.0, 100.0)
    return float(brentq(lambda r: float(excited(r)) - E, R_e, R_hi, xtol=1e-12))


# -------------------------------------------------------------- fitting


@dataclass(frozen=True, eq=False)
class WallFitResult:
    lambda_star: float  # deformation amplitude, hartree
    branch: str
    bound_count: int
    node_residual: float  # rms, cm-1
    fitted_curve: PotentialCurve
    nodes: NodeSet
    targets: NodeSet
    evaluations: int = 0
    phase_change: float = 0.0  # semiclassical phase added by the deformation, rad
    base_curve: PotentialCurve | None = None
    deformation: InnerWallDeformation | None = None

    def scattering_length(self, mu: float, **kw):
        return scattering_length_zero_energy(self.fitted_curve, mu, **kw)


def _deform(ground: PotentialCurve, template: InnerWallDeformation, lam: float) -> PotentialCurve:
    if lam == 0.0:
        return ground
    return apply_deformation(ground, replace(template, amplitude=float(lam)))


class _Objective:
    def __init__(self, ground, template, setup, targets, E, prominence):
        self.ground, self.template, self.setup = ground, template, setup
        self.targets = targets.array
        self.E, self.prominence = E, prominence
        self.calls = 0
        self.cache = {}

    def nodes(self, lam: float) -> NodeSet:
        if lam not in self.cache:
            self.calls += 1
            curve = _deform(self.ground, self.template, lam)
            sp = fc_spectrum(self.setup.excited, curve, self.setup.grid.mu,
                             self.E, setup=self.setup)
            self.cache[lam] = detect_nodes(sp, self.prominence)
        return self.cache[lam]

    def __call__(self, lam: float) -> float:
        return match_nodes(self.nodes(float(lam)).detunings, self.targets)[0]


def _phase_change(ground, template, lam, mu, phi0) -> float:
    return semiclassical_phase(_deform(ground, template, lam), mu).phi - phi0


def _branch_edge(ground, template, mu, sign: float, span: float) -> float:
    """Amplitude whose semiclassical phase change is ``-sign * span``.

    ``sign = -1`` (deepening) adds phase; ``+1`` removes it.
    """
    phi0 = semiclassical_phase(ground, mu).phi
    depth = -float(ground(template.center)) + _reference(ground)
    lam = sign * 0.05 * depth
    for _ in range(60):
        if abs(_phase_change(ground, template, lam, mu, phi0)) >= span:
            break
        lam *= 1.5
        if abs(lam) > 0.95 * depth and sign > 0:
            lam = sign * 0.95 * depth
            break
    f = lambda x: abs(_phase_change(ground, template, x, mu, phi0)) - span  # noqa: E731
    if f(lam) < 0:
        return lam
    return float(brentq(f, 0.0, lam, xtol=1e-14 * abs(lam) + 1e-300))


def fit_inner_wall(ground: PotentialCurve, excited: PotentialCurve, mu: float, targets: NodeSet,
                   branch: str = "phase_removed", *, template: InnerWallDeformation | None = None,
                   setup: FCSetup | None = None, bracket: tuple | None = None,
                   E_collision: float = DEFAULT_COLLISION_ENERGY, tol: float = DEFAULT_FIT_TOL_CM,
                   prominence: float = DEFAULT_PROMINENCE, n_scan: int = 12,
                   span: float = 1.1 * math.pi) -> WallFitResult:
    """Deformation amplitude ``lambda`` whose FC nodes best match ``targets``.

    ``phase_added`` searches deepening amplitudes (``lambda <= 0``) and
    ``phase_removed`` the opposite sign, each over a range that changes the
    semiclassical phase by up to ``span``.  The best scan point is polished
    by a bounded Brent search between its neighbours.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    if len(targets) == 0:
        raise ValueError("no target nodes")
    if template is None:
        raise ValueError("a deformation template (center, width) is required")
    if setup is None:
        setup = FCSetup.build(excited, ground, mu)
    obj = _Objective(ground, template, setup, targets, E_collision, prominence)
    if bracket is None:
        sign = -1.0 if branch == "phase_added" else 1.0
        bracket = (0.0, _branch_edge(ground, template, mu, sign, span))
    lo, hi = sorted(float(b) for b in bracket)
    lams = np.linspace(lo, hi, n_scan + 1)
    vals = np.array([obj(x) for x in lams])
    i = int(np.argmin(vals))
    a, b = lams[max(i - 1, 0)], lams[min(i + 1, len(lams) - 1)]
    res = minimize_scalar(obj, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12 * max(abs(hi - lo), 1e-30)})
    lam, best = (float(res.x), float(res.fun)) if res.fun <= vals[i] else (float(lams[i]), float(vals[i]))
    if not best < tol:
        raise WallFitError(
            f"no amplitude in [{lo:.6e}, {hi:.6e}] reaches node residual {tol} cm-1 "
            f"(best {best:.4g} at {lam:.6e})", lam, best)
    curve = _deform(ground, template, lam)
    _, count = inverse_scattering_length(curve, mu)
    dphi = semiclassical_phase(curve, mu).phi - semiclassical_phase(ground, mu).phi
    return WallFitResult(lam, branch, int(count), best, curve, obj.nodes(lam), targets,
                         obj.calls, float(dphi), ground, replace(template, amplitude=lam))


def node_shift_sensitivity(fit: WallFitResult, shift: float = 0.2, mu: float | None = None, *,
                           excited: PotentialCurve | None = None, setup: FCSetup | None = None,
                           index: int = -2, E_collision: float = DEFAULT_COLLISION_ENERGY,
                           window: float | None = None) -> tuple[float, float]:
    """Scattering lengths after refitting with target ``index`` moved by ``-/+shift`` cm-1."""
    if mu is None:
        raise ValueError("mu is required")
    a0 = fit.scattering_length(mu).a
    if shift == 0:
        return a0, a0
    if setup is None:
        if excited is None:
            raise ValueError("need the excited curve or an FCSetup")
        setup = FCSetup.build(excited, fit.base_curve, mu)
    if window is None:
        window = max(abs(fit.lambda_star), 1e-6) * 0.5 + 2e-5
    out = []
    for s in (-abs(shift), abs(shift)):
        targ = fit.targets.displaced(index, s)
        obj = _Objective(fit.base_curve, fit.deformation, setup, targ, E_collision, DEFAULT_PROMINENCE)
        res = minimize_scalar(obj, bounds=(fit.lambda_star - window, fit.lambda_star + window),
                              method="bounded", options={"xatol": 1e-13})
        curve = _deform(fit.base_curve, fit.deformation, float(res.x))
        out.append(scattering_length_zero_energy(curve, mu).a)
    return out[0], out[1]


# --------------------------------------------------------- critical C6


@dataclass(frozen=True)
class CriticalC6Result:
    c6_values: tuple
    inverse_a: tuple
    counts: tuple
    transition: float | None
    bracket: tuple | None
    policy: str
    evaluations: int = 0

    def rows(self) -> list:
        return [[c, ia, n] for c, ia, n in zip(self.c6_values, self.inverse_a, self.counts)]


def critical_c6_scan(family: Callable[[float], PotentialCurve], mu: float,
                     c6_values: Sequence[float], *, policy: str = "inner wall held",
                     rel_tol: float = 1e-3, **kw) -> CriticalC6Result:
    """C6 where a bound level crosses threshold (``a`` through infinity).

    ``1/a`` and the node count come from the zero-energy solution; a bracket
    is a pair of neighbours whose counts differ and whose ``1/a`` change sign,
    refined by bisection on ``1/a = 0`` down to ``rel_tol`` of its width.
    """
    c6 = [float(c) for c in c6_values]
    vals = [inverse_scattering_length(family(c), mu, **kw) for c in c6]
    inv = [v[0] for v in vals]
    cnt = [v[1] for v in vals]
    n_eval = len(c6)
    for i in range(len(c6) - 1):
        if c6[i] == c6[i + 1] or cnt[i] == cnt[i + 1] or inv[i] * inv[i + 1] > 0:
            continue
        lo, hi = c6[i], c6[i + 1]
        f_lo = inv[i]
        width = rel_tol * abs(hi - lo)
        while abs(hi - lo) > width:
            mid = 0.5 * (lo + hi)
            f_mid, _ = inverse_scattering_length(family(mid), mu, **kw)
            n_eval += 1
            if f_mid * f_lo > 0:
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        return CriticalC6Result(tuple(c6), tuple(inv), tuple(cnt), 0.5 * (lo + hi), (lo, hi),
                                policy, n_eval)
    return CriticalC6Result(tuple(c6), tuple(inv), tuple(cnt), None, None, policy, n_eval)
