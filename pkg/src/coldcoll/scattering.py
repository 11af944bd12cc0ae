"""Scattering lengths, semiclassical phases and bound-level counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma

from . import numerov
from .units import IsotopeSpec, reduced_mass, to_au

__all__ = [
    "ScatteringResult",
    "PhaseResult",
    "CountReport",
    "TailNotAsymptotic",
    "default_inner_radius",
    "scattering_length_zero_energy",
    "scattering_length_phase",
    "inverse_scattering_length",
    "scattering_length_grid",
    "asymptotic_phase",
    "effective_range_fit",
    "semiclassical_phase",
    "mean_scattering_length",
    "gribakin_flambaum_a",
    "isotope_scan",
    "bound_count_consistency",
    "results_csv",
]

FIT_WINDOW = (0.6, 0.9)
DEFAULT_R_MAX = 20000.0
RESIDUAL_THRESHOLD = 1e-7


class TailNotAsymptotic(RuntimeError):
    """The E = 0 solution is not yet linear inside the fit window."""


@dataclass(frozen=True)
class ScatteringResult:
    a: float  # bohr
    method: str  # "zero_energy_node" or "phase_extrapolation"
    E_used: float  # hartree
    fit_window: tuple
    fit_residual: float
    node_count: int
    warnings: tuple = ()
    effective_range: float | None = None
    label: str = ""
    mu: float = math.nan

    def csv_row(self) -> list:
        return [self.label, self.method, self.a, self.E_used / to_au(1.0, "microkelvin"),
                self.fit_residual, self.node_count, "; ".join(self.warnings)]


CSV_HEADER = ["label", "method", "a_bohr", "E_used_uK", "residual", "node_count", "warning"]


@dataclass(frozen=True)
class PhaseResult:
    phi: float
    R_inner: float
    bound_count_semiclassical: int
    bound_count_rounded: int

    @property
    def phi_over_pi(self) -> float:
        return self.phi / math.pi


@dataclass(frozen=True)
class CountReport:
    semiclassical: int
    numerov: int
    mfgm: int
    disagreements: tuple

    @property
    def consistent(self) -> bool:
        return not self.disagreements

    def lines(self) -> list:
        out = [f"semiclassical = {self.semiclassical}", f"numerov = {self.numerov}",
               f"mfgm = {self.mfgm}"]
        out += [f"disagreement: {d}" for d in self.disagreements]
        return out


def _asymptote(curve) -> float:
    a = getattr(curve, "asymptote", 0.0)
    return a if math.isfinite(a) else 0.0


def _eval(curve, R):
    with np.errstate(over="ignore", invalid="ignore"):
        V = np.asarray(curve(R), dtype=float)
    return np.where(np.isfinite(V), V, np.inf)


def default_inner_radius(curve: Callable, mu: float, E: float = 0.0, decay: float = 30.0) -> float:
    """Radius inside the repulsive wall where the solution is down by ``e^-decay``."""
    core = float(getattr(curve, "R_core", 0.0))
    E = E + _asymptote(curve)
    probe = core + np.geomspace(1e-4, 1e4, 6000)
    V = _eval(curve, probe)
    allowed = np.nonzero(V < E)[0]
    if len(allowed) == 0 or allowed[0] == 0:
        return core
    i = allowed[0]
    kappa = np.sqrt(2.0 * mu * np.clip(V[:i + 1] - E, 0.0, None))
    # accumulate the barrier integral inward from the turning point
    seg = 0.5 * (kappa[1:] + kappa[:-1]) * np.diff(probe[:i + 1])
    acc = np.cumsum(seg[::-1])[::-1]
    deep = np.nonzero(acc >= decay)[0]
    if len(deep) == 0:
        return core
    return float(probe[deep[-1]])


def _negligible_radius(curve: Callable, E: float, frac: float = 1e-3) -> float:
    """Smallest radius beyond which ``|V - asymptote| < frac * E``."""
    A = _asymptote(curve)
    C6 = getattr(curve, "C6", 0.0)
    if getattr(curve, "has_tail", False) and C6:
        r = (abs(C6) / (frac * E)) ** (1.0 / 6.0)
        if r > curve.tail_start:
            return r
    core = float(getattr(curve, "R_core", 0.0))
    probe = core + np.geomspace(1e-4, 1e6, 8000)
    V = _eval(curve, probe)
    big = np.nonzero(np.abs(V - A) >= frac * E)[0]
    if len(big) == 0:
        return float(probe[0])
    if big[-1] == len(probe) - 1:
        raise ValueError("potential is not negligible anywhere on the probed range")
    return float(probe[big[-1] + 1])


def _fit_line(res, window):
    R_lo, R_hi = window
    m = (res.R >= R_lo) & (res.R <= R_hi)
    if m.sum() < 3:
        raise ValueError("too few samples inside the fit window")
    R, u = res.R[m], res.u[m]
    A = np.column_stack([R, np.ones_like(R)])
    (c1, c0), *_ = np.linalg.lstsq(A, u, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [c1, c0] - u) ** 2)) / np.max(np.abs(u)))
    return -c0 / c1, resid


def scattering_length_zero_energy(curve: Callable, mu: float, *, R_max: float = DEFAULT_R_MAX,
                                  R_start: float | None = None, window: tuple = FIT_WINDOW,
                                  residual_threshold: float = RESIDUAL_THRESHOLD,
                                  kh: float = numerov.DEFAULT_KH, label: str = "") -> ScatteringResult:
    """Fit ``u = c (R - a)`` to the E = 0 solution over ``window * R_max``.

    ``R_max`` is raised to ``20 |a|`` if the first estimate demands it; a
    residual above threshold triggers one doubling before giving up.
    """
    R0 = default_inner_radius(curve, mu) if R_start is None else float(R_start)
    warnings = []

    def attempt(Rm):
        res = numerov.zero_energy_solution(curve, mu, R0, Rm, kh=kh)
        a, resid = _fit_line(res, (window[0] * Rm, window[1] * Rm))
        return res, a, resid, Rm

    res, a, resid, Rm = attempt(float(R_max))
    if 20.0 * abs(a) > Rm:
        res, a, resid, Rm = attempt(float(10 ** math.ceil(math.log10(20.0 * abs(a)))))
        if 20.0 * abs(a) > Rm:
            warnings.append(f"R_max = {Rm:.6g} is below 20|a|")
    if resid > residual_threshold:
        res, a, resid, Rm = attempt(2.0 * Rm)
        if resid > residual_threshold:
            raise TailNotAsymptotic(
                f"tail not asymptotic: residual {resid:.3e} at R_max = {Rm:.6g}"
            )
    # the asymptotic root R = a beyond the mesh still belongs to the count
    nodes = res.node_count + (1 if a > res.R[-1] else 0)
    return ScatteringResult(float(a), "zero_energy_node", 0.0,
                            (window[0] * Rm, window[1] * Rm), resid, nodes,
                            tuple(warnings), label=label, mu=float(mu))


def scattering_length_phase(curve: Callable, mu: float, energies: Sequence[float], *,
                            R_max: float = DEFAULT_R_MAX, R_start: float | None = None,
                            kh: float = numerov.DEFAULT_KH, k_a_max: float = 0.3,
                            label: str = "") -> ScatteringResult:
    """Effective-range fit ``k cot(delta) = -1/a + r k^2 / 2`` over ``energies``."""
    energies = [float(E) for E in energies]
    if len(energies) < 2:
        raise ValueError("need at least two energies")
    if min(energies) <= 0:
        raise ValueError("energies must be above threshold")
    R0 = default_inner_radius(curve, mu) if R_start is None else float(R_start)
    ks, deltas, totals = [], [], []
    for E in energies:
        k = math.sqrt(2.0 * mu * E)
        R_neg = _negligible_radius(curve, E)
        Rm = max(R_max, R_neg + math.pi / k)
        res = numerov.propagate(curve, mu, E + _asymptote(curve), R0, Rm, kh=kh)
        ps = numerov.phase_shift(res, k, R_neg)
        ks.append(k)
        totals.append(ps.total)
        deltas.append(ps.delta)
    a, r_eff, resid = effective_range_fit(ks, deltas)
    worst = float(max(ks) * abs(a))
    if worst >= k_a_max:
        raise ValueError(
            f"energies outside the threshold regime: k|a| = {worst:.3f} >= {k_a_max}"
        )
    # Levinson: the full phase at the lowest energy is close to N_b * pi
    n_bound = int(round(totals[int(np.argmin(ks))] / math.pi))
    return ScatteringResult(float(a), "phase_extrapolation", min(energies), (R_max, R_max),
                            resid, n_bound, (), effective_range=r_eff, label=label, mu=float(mu))


def effective_range_fit(ks: Sequence[float], deltas: Sequence[float]):
    """Least-squares ``k cot(delta) = -1/a + r k^2 / 2``; returns ``(a, r, residual)``.

    The residual is the rms misfit relative to ``|1/a|`` (zero for two points).
    A phase that vanishes identically gives ``a = 0``.
    """
    ks = np.asarray(ks, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if len(ks) < 2:
        raise ValueError("need at least two energies")
    if np.any(deltas == 0):
        return 0.0, 0.0, 0.0
    ys = ks / np.tan(deltas)
    A = np.column_stack([np.ones_like(ks), 0.5 * ks**2])
    (c0, c1), *_ = np.linalg.lstsq(A, ys, rcond=None)
    if c0 == 0:
        return math.inf, float(c1), 0.0
    resid = float(np.sqrt(np.mean((A @ [c0, c1] - ys) ** 2)) / abs(c0)) if len(ks) > 2 else 0.0
    return float(-1.0 / c0), float(c1), resid


def asymptotic_phase(R, u, k: float, R_lo: float, R_hi: float) -> float:
    """Phase of ``u ~ sin(kR + delta)`` from a least-squares fit on ``[R_lo, R_hi]``.

    Returned in ``(-pi/2, pi/2]``; the potential must be negligible there.
    """
    R = np.asarray(R, dtype=float)
    u = np.asarray(u, dtype=float)
    m = (R >= R_lo) & (R <= R_hi)
    if m.sum() < 3:
        raise ValueError("too few samples inside the phase window")
    A = np.column_stack([np.sin(k * R[m]), np.cos(k * R[m])])
    (c, s), *_ = np.linalg.lstsq(A, u[m], rcond=None)
    delta = math.atan2(s, c)
    delta = (delta + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    return 0.5 * math.pi if delta == -0.5 * math.pi else float(delta)


def inverse_scattering_length(curve: Callable, mu: float, *, R_max: float = DEFAULT_R_MAX,
                              R_start: float | None = None, window: tuple = FIT_WINDOW,
                              kh: float = numerov.DEFAULT_KH) -> tuple[float, int]:
    """``1/a`` and the node count from the E = 0 solution at a fixed ``R_max``.

    Smooth through the poles of ``a``, hence the quantity to bisect on when
    a bound level crosses threshold.
    """
    R0 = default_inner_radius(curve, mu) if R_start is None else float(R_start)
    res = numerov.zero_energy_solution(curve, mu, R0, R_max, kh=kh)
    m = (res.R >= window[0] * R_max) & (res.R <= window[1] * R_max)
    A = np.column_stack([res.R[m], np.ones(m.sum())])
    (c1, c0), *_ = np.linalg.lstsq(A, res.u[m], rcond=None)
    inv_a = -c1 / c0
    # the asymptotic root R = a beyond the mesh still counts as a node
    extra = 1 if 0 < inv_a < 1.0 / res.R[-1] else 0
    return float(inv_a), res.node_count + extra


def scattering_length_grid(curve: Callable, mu: float, *, R_max: float = DEFAULT_R_MAX,
                           R_min: float | None = None, E_env: float | None = None,
                           beta: float = 7.0, E_max: float = to_au(0.4, "microkelvin"),
                           boundary: str = "fixed", eta: float = 1e-9, onset: float = 0.7,
                           label: str = "") -> ScatteringResult:
    """Effective-range fit to phases of mapped-grid continuum states.

    ``fixed``: box eigenstates up to ``E_max`` (at least two), phases fitted
    on ``FIT_WINDOW * R_max``.  ``absorbing``: driven solutions at
    ``E_max * (1/4, 1/2, 1)`` with a ramp ``-i eta`` absorber from
    ``onset * R_max``; phases fitted inside the absorber-free region.
    """
    from . import mfgm

    if boundary not in ("fixed", "absorbing"):
        raise ValueError("boundary must be 'fixed' or 'absorbing'")
    A = _asymptote(curve)
    R0 = default_inner_radius(curve, mu) if R_min is None else float(R_min)
    if E_env is None:
        E_env = A + to_au(300.0, "microkelvin")
    grid = mfgm.build_grid(curve, mu, E_env, R0, R_max, beta)
    H = mfgm.build_hamiltonian(grid, curve)
    R = grid.points
    ks, deltas = [], []
    if boundary == "fixed":
        states = mfgm.threshold_states(H, (0.0, E_max))
        if len(states) < 2:
            states = mfgm.threshold_states(H, (0.0, 64.0 * E_max))[:2]
        if len(states) < 2:
            raise ValueError("fewer than two box states near threshold")
        window = (FIT_WINDOW[0] * R_max, FIT_WINDOW[1] * R_max)
        for st in states:
            k = math.sqrt(2.0 * mu * (st.energy - A))
            ks.append(k)
            deltas.append(asymptotic_phase(R, st.values, k, *window))
    else:
        Ha = mfgm.add_absorber(H, eta, onset * R_max)
        window = (0.55 * onset * R_max, 0.95 * onset * R_max)
        src = 0.5 * (1.0 + onset) * R_max
        for E in (0.25 * E_max, 0.5 * E_max, E_max):
            psi = mfgm.driven_solution(Ha, A + E, src, 0.02 * R_max).values
            inner = R < onset * R_max
            ref = psi[inner][np.argmax(np.abs(psi[inner]))]
            k = math.sqrt(2.0 * mu * E)
            ks.append(k)
            deltas.append(asymptotic_phase(R, np.real(psi / ref), k, *window))
    a, r_eff, resid = effective_range_fit(ks, deltas)
    warn = ()
    if getattr(curve, "breakpoints", ()):
        # spectral grids converge only algebraically across a jump in V
        warn = ("discontinuous potential: grid phases converge slowly",)
    return ScatteringResult(float(a), f"grid_phase_{boundary}", float(min(ks)) ** 2 / (2.0 * mu),
                            window, resid, -1, warn, r_eff, label, float(mu))


def _tail_integral(C6: float, R_from: float) -> float:
    """``int_R^inf sqrt(-C6) / R^3 dR``."""
    return math.sqrt(-C6) / (2.0 * R_from**2)


def semiclassical_phase(curve: Callable, mu: float, *, R_far: float = 1e4) -> PhaseResult:
    """``phi = int sqrt(-2 mu V) dR`` over the region where ``V`` is negative.

    ``V`` is measured from the asymptote.  Square-root endpoints are handled
    by the adaptive quadrature; an exact ``C6`` tail is integrated in closed
    form.  ``phi`` is computed as ``sqrt(2 mu)`` times a mass-free integral.
    """
    A = _asymptote(curve)
    core = float(getattr(curve, "R_core", 0.0))
    tail = getattr(curve, "has_tail", False) and getattr(curve, "C6", 0.0) < 0
    R_top = curve.tail_start if tail else R_far
    probe = np.unique(np.concatenate([core + np.geomspace(1e-6, R_top - core, 20000), [R_top]]))
    W = _eval(curve, probe) - A
    neg = W < 0
    if not neg.any():
        return PhaseResult(0.0, math.nan, 0, 0)

    def g(R):
        v = float(curve(R)) - A
        return math.sqrt(-v) if v < 0 else 0.0

    def root(i):
        return brentq(lambda r: float(curve(r)) - A, probe[i], probe[i + 1], xtol=1e-14, rtol=1e-15)

    edges = np.nonzero(np.diff(neg.astype(int)))[0]
    starts = ([0] if neg[0] else []) + [i + 1 for i in edges if not neg[i]]
    ends = [i for i in edges if neg[i]] + ([len(probe) - 1] if neg[-1] else [])
    brk = [b for b in (getattr(curve, "R_join", math.inf) - getattr(curve, "blend_width", 0.0),
                       getattr(curve, "R_join", math.inf)) if math.isfinite(b)]
    brk += list(getattr(curve, "breakpoints", ()))
    total = 0.0
    R_inner = math.nan
    for s, e in zip(starts, ends):
        lo = core if s == 0 else root(s - 1)
        hi = probe[-1] if e == len(probe) - 1 else root(e)
        if math.isnan(R_inner):
            R_inner = lo
        pts = [b for b in brk if lo < b < hi]
        total += quad(g, lo, hi, points=pts or None, limit=500, epsabs=0.0, epsrel=1e-13)[0]
        if e == len(probe) - 1:
            if tail:
                total += _tail_integral(curve.C6, R_top)
            else:
                total += quad(g, R_top, np.inf, limit=500, epsabs=0.0, epsrel=1e-12)[0]
    phi = math.sqrt(2.0 * mu) * total
    n_gf = int(math.floor(phi / math.pi - 5.0 / 8.0)) + 1
    n_round = int(math.floor(phi / math.pi + 0.5))
    return PhaseResult(phi, float(R_inner), max(n_gf, 0), n_round)


def mean_scattering_length(mu: float, C6: float) -> float:
    """Gribakin-Flambaum mean scattering length for a ``C6/R^6`` tail."""
    return 2.0 * math.pi / gamma(0.25) ** 2 * (2.0 * mu * abs(C6)) ** 0.25


def gribakin_flambaum_a(phi: float, mu: float, C6: float) -> float:
    """Semiclassical estimate ``a = abar (1 - tan(phi - pi/8))``."""
    return mean_scattering_length(mu, C6) * (1.0 - math.tan(phi - math.pi / 8.0))


def isotope_scan(curve: Callable, isotopes: Sequence[IsotopeSpec], method: str = "zero_energy",
                 energies: Sequence[float] | None = None, **kw) -> list:
    """Same curve, reduced mass of each homonuclear isotope pair."""
    out = []
    for iso in isotopes:
        mu = reduced_mass(iso, iso)
        if method == "zero_energy":
            r = scattering_length_zero_energy(curve, mu, label=iso.label, **kw)
        elif method == "phase":
            if energies is None:
                raise ValueError("phase method needs energies")
            r = scattering_length_phase(curve, mu, energies, label=iso.label, **kw)
        else:
            raise ValueError(f"unknown method {method!r}")
        out.append(r)
    return out


def bound_count_consistency(curve: Callable, mu: float, *, E_env: float | None = None,
                            R_min: float | None = None, R_max: float | None = None,
                            beta: float = 6.0) -> CountReport:
    """Compare semiclassical, Numerov node and grid bound-state counts."""
    from . import mfgm  # local import keeps scattering free of grid setup cost

    sc = semiclassical_phase(curve, mu).bound_count_semiclassical
    tail = getattr(curve, "has_tail", False)
    if R_max is None:
        R_max = DEFAULT_R_MAX if tail else _well_extent(curve, mu)
    if R_min is None:
        R_min = default_inner_radius(curve, mu)
    nv = numerov.zero_energy_solution(curve, mu, R_min, R_max).node_count
    if E_env is None:
        E_env = to_au(300.0, "microkelvin") if tail else _default_env(curve, R_min, R_max)
    grid = mfgm.build_grid(curve, mu, E_env, R_min, R_max, beta)
    mf = mfgm.solve_bound(mfgm.build_hamiltonian(grid, curve)).count
    dis = []
    for (na, a), (nb, b) in [(("semiclassical", sc), ("numerov", nv)),
                             (("semiclassical", sc), ("mfgm", mf)),
                             (("numerov", nv), ("mfgm", mf))]:
        if abs(a - b) > 1:
            dis.append(f"{na}={a} vs {nb}={b}")
    return CountReport(sc, nv, mf, tuple(dis))


def _well_extent(curve, mu) -> float:
    A = _asymptote(curve)
    core = float(getattr(curve, "R_core", 0.0))
    probe = core + np.geomspace(1e-3, 1e4, 6000)
    W = np.abs(_eval(curve, probe) - A)
    scale = np.max(W[np.isfinite(W)]) if np.isfinite(W).any() else 1.0
    sig = np.nonzero(W > 1e-10 * scale)[0]
    if len(sig) == 0:
        return 100.0
    return float(max(4.0 * probe[sig[-1]], 100.0))


def _default_env(curve, R_min, R_max) -> float:
    probe = np.linspace(R_min, R_max, 4000)
    depth = _asymptote(curve) - float(np.min(_eval(curve, probe)))
    return 1e-3 * depth if depth > 0 else 1e-6


def results_csv(results: Sequence[ScatteringResult]) -> list:
    return [CSV_HEADER] + [r.csv_row() for r in results]
