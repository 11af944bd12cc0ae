"""Mapped Fourier grid Hamiltonians for one and two radial channels.

The radial coordinate is mapped onto a uniform index coordinate ``x`` so that
grid points are spaced evenly in the local WKB phase of an envelope
potential.  Wavefunctions are expanded in a particle-in-a-box sine basis in
``x``; both ends of the grid are hard walls.  The kinetic operator is

    T = (1/2mu) M^T diag(w / J) M,    M = D diag(J^-1/2),

where ``D`` maps interior sine-basis values to derivatives on all ``N + 2``
points (both walls included) and ``w`` are trapezoid weights.  This is the
symmetrized ``J^-1/2 D J^-1 D J^-1/2`` form written so that it is exact for a
constant Jacobian and needs no derivatives of the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh, lu_factor, lu_solve, solve
from scipy.special import erf

from .potentials import PotentialCurve, inner_turning_point, softmin

__all__ = [
    "MappedGrid",
    "HamiltonianMatrix",
    "WavefunctionOnGrid",
    "BoundSpectrum",
    "ThresholdStates",
    "build_grid",
    "uniform_grid",
    "mapping_envelope",
    "kinetic_matrix",
    "build_hamiltonian",
    "build_coupled_hamiltonian",
    "dressed_threshold",
    "solve_bound",
    "refine_eigenpair",
    "threshold_states",
    "nearest_threshold_state",
    "add_absorber",
    "driven_solution",
    "energy_normalize",
]

DEFAULT_BETA = 6.0
ENVELOPE_BLEND = 0.05  # softmin width as a fraction of the potential spread
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


# ------------------------------------------------------------------ grid


@dataclass(frozen=True, eq=False)
class MappedGrid:
    """Points ``R[0] = R_min < ... < R[N+1] = R_max``; the ends are walls."""

    R: np.ndarray
    J: np.ndarray
    mu: float
    E_env: float
    beta: float

    def __post_init__(self):
        if self.R.shape != self.J.shape or self.R.ndim != 1 or len(self.R) < 3:
            raise ValueError("R and J must be 1-D arrays of the same length >= 3")
        if np.any(np.diff(self.R) <= 0):
            raise ValueError("grid radii must be strictly increasing")
        if np.any(self.J <= 0):
            raise ValueError("Jacobian must be positive")

    @property
    def N(self) -> int:
        return len(self.R) - 2

    @property
    def R_min(self) -> float:
        return float(self.R[0])

    @property
    def R_max(self) -> float:
        return float(self.R[-1])

    @property
    def points(self) -> np.ndarray:
        return self.R[1:-1]

    @property
    def weights(self) -> np.ndarray:
        return self.J[1:-1]

    def same_as(self, other: "MappedGrid") -> bool:
        return self is other or (
            self.R.shape == other.R.shape and np.array_equal(self.R, other.R)
            and np.array_equal(self.J, other.J)
        )


@dataclass(frozen=True)
class _Flattened:
    """Curve with its inner wall replaced by a smooth plateau at the minimum."""

    curve: Callable
    V_min: float
    center: float
    width: float

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        g = 0.5 * (1.0 + erf((R - self.center) / self.width))
        return self.V_min + (np.asarray(self.curve(R), dtype=float) - self.V_min) * g


def _flatten(curve: Callable, R_min: float, R_max: float):
    if not isinstance(curve, PotentialCurve):
        return curve
    try:
        R_e, V_min = curve.minimum(R_min, R_max)
    except ValueError:
        return curve
    if R_e <= R_min * 1.0001 or R_e >= R_max * 0.9999:
        return curve
    E_ref = curve.asymptote if math.isfinite(curve.asymptote) and curve.asymptote > V_min else \
        V_min + 0.5 * (float(curve(R_min)) - V_min)
    try:
        R_t = inner_turning_point(curve, E_ref, R_lo=R_min, R_hi=R_e)
    except ValueError:
        return curve
    if R_t <= R_min or R_t >= R_e:
        return curve
    return _Flattened(curve, V_min, 0.5 * (R_t + R_e), 0.25 * (R_e - R_t))


def mapping_envelope(curves, R_min: float, R_max: float, eps: float | None = None,
                     flatten: bool = True):
    """Envelope potential for the map: flattened inner walls, smooth minimum.

    Inside the repulsive wall the envelope is held at the well bottom, so
    points are not wasted resolving a region where every wavefunction of
    interest decays.
    """
    if callable(curves):
        curves = [curves]
    curves = list(curves)
    parts = [_flatten(c, R_min, R_max) if flatten else c for c in curves]
    if len(parts) == 1:
        return parts[0]
    if eps is None:
        probe = np.geomspace(max(R_min, 1e-6), R_max, 512) if R_min > 0 else np.linspace(R_min, R_max, 512)
        vals = [np.asarray(c(probe), dtype=float) for c in parts]
        spread = max(float(np.ptp(v)) for v in vals)
        # a wide blend keeps the map smooth at crossings; it must stay
        # narrower than the gap between the asymptotes or the long-range
        # envelope is dragged down
        eps = ENVELOPE_BLEND * spread
        gaps = [abs(a[-1] - b[-1]) for i, a in enumerate(vals) for b in vals[i + 1:]]
        gaps = [g for g in gaps if g > 0]
        if gaps:
            eps = min(eps, 0.5 * min(gaps))
        if eps <= 0:
            eps = 1e-12
    return softmin(parts, eps)


def _nodes(R_min: float, R_max: float, m: int) -> np.ndarray:
    lin = np.linspace(R_min, R_max, m + 1)
    if R_min > 0 and R_max / R_min > 10:
        lin = np.union1d(lin, np.geomspace(R_min, R_max, m + 1))
    return lin


def _segment_integral(p, a, b):
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    return half * (p(t.ravel()).reshape(t.shape) @ _GL_W)


def build_grid(V_env, mu: float, E_env: float, R_min: float, R_max: float,
               beta: float = DEFAULT_BETA, E_floor: float | None = None, *,
               flatten: bool = True, n_segments: int = 4000) -> MappedGrid:
    """Adaptive grid uniform in the envelope phase ``s(R) = int p dR``.

    ``p = sqrt(2 mu q)`` with ``q = E_env - V_env`` held above ``E_floor``
    (default ``1e-3 E_env``) by a smooth maximum.  The number of points is
    ``ceil(beta * s_total / pi)``, i.e. ``beta`` points per local half
    wavelength at the envelope energy.
    """
    if not R_max > R_min:
        raise ValueError("R_max must exceed R_min")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if mu <= 0:
        raise ValueError("mu must be positive")
    env = mapping_envelope(V_env, R_min, R_max, flatten=flatten)
    probe = _nodes(R_min, R_max, 2000)
    V_probe = np.asarray(env(probe), dtype=float)
    if not np.all(np.isfinite(V_probe)):
        raise ValueError("envelope potential is not finite on [R_min, R_max]")
    if E_env <= V_probe.min():
        raise ValueError(
            f"E_env = {E_env:.6e} lies below the envelope minimum {V_probe.min():.6e}; map undefined"
        )
    if E_floor is None:
        E_floor = 1e-3 * abs(E_env) if E_env != 0 else 1e-3 * abs(V_probe.min())
    if E_floor <= 0:
        raise ValueError("E_floor must be positive")

    def p(R):
        d = E_env - np.asarray(env(R), dtype=float) - E_floor
        # smooth max(E_env - V_env, E_floor)
        return np.sqrt(mu * (2.0 * E_floor + d + np.sqrt(d * d + E_floor * E_floor)))

    nodes = _nodes(R_min, R_max, n_segments)
    S = np.concatenate([[0.0], np.cumsum(_segment_integral(p, nodes[:-1], nodes[1:]))])
    s_total = S[-1]
    N = max(int(math.ceil(beta * s_total / math.pi)), 1)
    c = s_total / (N + 1)
    target = c * np.arange(1, N + 1)
    seg = np.clip(np.searchsorted(S, target, side="right") - 1, 0, len(nodes) - 2)
    a, b = nodes[seg], nodes[seg + 1]
    R = a + (b - a) * (target - S[seg]) / (S[seg + 1] - S[seg])
    for _ in range(8):
        resid = S[seg] + _segment_integral(p, a, R) - target
        R_new = np.clip(R - resid / p(R), a, b)
        done = np.max(np.abs(R_new - R)) <= 1e-14 * max(abs(R_max), 1.0)
        R = R_new
        if done:
            break
    R = np.concatenate([[R_min], R, [R_max]])
    J = c / p(R)
    return MappedGrid(R, J, float(mu), float(E_env), float(beta))


def uniform_grid(N: int, R_min: float, R_max: float, mu: float) -> MappedGrid:
    """Evenly spaced grid with ``N`` interior points."""
    if N < 1:
        raise ValueError("N must be positive")
    R = np.linspace(R_min, R_max, N + 2)
    J = np.full(N + 2, (R_max - R_min) / (N + 1))
    return MappedGrid(R, J, float(mu), math.nan, math.nan)


# ------------------------------------------------------------- operators


def _sine_derivative(N: int):
    L = N + 1
    k = np.arange(1, N + 1)
    S = math.sqrt(2.0 / L) * np.sin(np.pi * np.outer(k, k) / L)
    C = math.sqrt(2.0 / L) * np.cos(np.pi * np.outer(np.arange(N + 2), k) / L)
    D = (C * (k * np.pi / L)) @ S.T
    w = np.ones(N + 2)
    w[0] = w[-1] = 0.5
    return D, w


def kinetic_matrix(grid: MappedGrid) -> np.ndarray:
    D, w = _sine_derivative(grid.N)
    M = D / np.sqrt(grid.weights)[None, :]
    T = (M.T * (w / grid.J)) @ M / (2.0 * grid.mu)
    return 0.5 * (T + T.T)


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    grid: MappedGrid
    channel_count: int
    asymptote: float = 0.0  # open-channel threshold
    potential_diagonal: np.ndarray | None = field(default=None, repr=False)
    absorber: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix)

    def asymmetry(self) -> float:
        m = self.matrix
        scale = np.max(np.abs(m))
        return float(np.max(np.abs(m - m.T)) / scale) if scale else 0.0


def build_hamiltonian(grid: MappedGrid, curve: Callable) -> HamiltonianMatrix:
    V = np.asarray(curve(grid.points), dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential is not finite on the grid")
    H = kinetic_matrix(grid)
    H[np.diag_indices_from(H)] += V
    asym = getattr(curve, "asymptote", 0.0)
    asym = asym if math.isfinite(asym) else math.inf
    return HamiltonianMatrix(H, grid, 1, asym, V)


def _rabi_values(rabi, R):
    if callable(rabi):
        return np.broadcast_to(np.asarray(rabi(R), dtype=float), R.shape)
    return np.full(R.shape, float(rabi))


def build_coupled_hamiltonian(grid: MappedGrid, V_g: Callable, V_e: Callable, rabi,
                              E_f: float) -> HamiltonianMatrix:
    """Two-channel RWA Hamiltonian ``[[T+V_g, W/2], [W/2, T+V_e-E_f]]``."""
    R = grid.points
    N = grid.N
    Vg = np.asarray(V_g(R), dtype=float)
    Ve = np.asarray(V_e(R), dtype=float) - E_f
    W = _rabi_values(rabi, R)
    if not (np.all(np.isfinite(Vg)) and np.all(np.isfinite(Ve)) and np.all(np.isfinite(W))):
        raise ValueError("coupled potentials must be finite on the grid")
    T = kinetic_matrix(grid)
    H = np.zeros((2 * N, 2 * N))
    H[:N, :N] = T
    H[N:, N:] = T
    idx = np.arange(N)
    H[idx, idx] += Vg
    H[idx + N, idx + N] += Ve
    H[idx, idx + N] = 0.5 * W
    H[idx + N, idx] = 0.5 * W
    return HamiltonianMatrix(H, grid, 2, dressed_threshold(V_g, V_e, rabi, E_f, grid.R_max),
                             np.concatenate([Vg, Ve]))


def dressed_threshold(V_g: Callable, V_e: Callable, rabi, E_f: float, R_far: float) -> float:
    """Lower eigenvalue of the asymptotic 2x2 potential matrix.

    A coupling that survives at large R light-shifts the open threshold;
    asymptotes come from the curves when they carry one, else from ``R_far``.
    """
    R = np.array([float(R_far)])

    def limit(c):
        a = getattr(c, "asymptote", None)
        if a is not None and math.isfinite(a):
            return float(a)
        return float(np.asarray(c(R), dtype=float)[0])

    g = limit(V_g)
    e = limit(V_e) - E_f
    w = float(_rabi_values(rabi, R)[0])
    return 0.5 * (g + e) - math.sqrt(0.25 * (g - e) ** 2 + 0.25 * w * w)


# ----------------------------------------------------------------- states


@dataclass(frozen=True, eq=False)
class WavefunctionOnGrid:
    energy: float
    channels: tuple
    grid: MappedGrid
    norm_convention: str = "unit_box"

    @property
    def R(self) -> np.ndarray:
        return self.grid.points

    @property
    def values(self) -> np.ndarray:
        return self.channels[0]

    def norm(self) -> float:
        w = self.grid.weights
        return float(sum(np.sum(np.abs(c) ** 2 * w) for c in self.channels))

    def channel_fraction(self, i: int, R_cut: float | None = None) -> float:
        w = self.grid.weights
        mask = slice(None) if R_cut is None else self.R < R_cut
        parts = [np.sum((np.abs(c) ** 2 * w)[mask]) for c in self.channels]
        total = sum(parts)
        return float(parts[i] / total) if total else 0.0


@dataclass(frozen=True, eq=False)
class BoundSpectrum:
    levels: tuple  # of (v, E_v, WavefunctionOnGrid)

    @property
    def count(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv[1] for lv in self.levels])

    def state(self, v: int) -> WavefunctionOnGrid:
        return self.levels[v][2]


class ThresholdStates(list):
    """Continuum box states in a window; empty results carry a diagnosis."""

    def __init__(self, states=(), window=(0.0, 0.0), nearest_energy: float | None = None):
        super().__init__(states)
        self.window = window
        self.nearest_energy = nearest_energy

    @property
    def status(self) -> str:
        return "ok" if len(self) else "empty"


def _wavefunctions(H: HamiltonianMatrix, E, V) -> list:
    grid = H.grid
    N = grid.N
    s = 1.0 / np.sqrt(grid.weights)
    out = []
    for e, v in zip(E, V.T):
        chans = tuple(v[i * N:(i + 1) * N] * s for i in range(H.channel_count))
        # fix the sign by the first significant lobe of the open channel
        c0 = chans[0]
        big = np.nonzero(np.abs(c0) > 1e-3 * np.max(np.abs(c0)))[0]
        if len(big) and c0[big[0]] < 0:
            chans = tuple(-c for c in chans)
        out.append(WavefunctionOnGrid(float(e), chans, grid))
    return out


def _eigh_window(H: HamiltonianMatrix, lo: float, hi: float):
    if H.is_complex:
        raise ValueError("eigensolver requires a real symmetric matrix (remove the absorber)")
    try:
        return eigh(H.matrix, subset_by_value=(lo, hi), driver="evr")
    except LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc


def refine_eigenpair(H: HamiltonianMatrix, E: float, v: np.ndarray, iterations: int = 3):
    """Newton polish of an eigenpair with residuals in extended precision.

    Box states just above threshold are separated by gaps many orders of
    magnitude below the largest matrix element, so a dense eigensolver
    returns vectors that mix neighbouring box states.  The bordered Newton
    system is factored once in double precision; only the residual needs
    the extra digits.
    """
    n = H.size
    Hl = H.matrix.astype(np.longdouble)
    A = np.empty((n + 1, n + 1))
    A[:n, :n] = H.matrix
    A[np.arange(n), np.arange(n)] -= E
    A[:n, n] = -v
    A[n, :n] = v
    A[n, n] = 0.0
    lu = lu_factor(A, check_finite=False)
    El = np.longdouble(E)
    vl = v.astype(np.longdouble)
    for _ in range(iterations):
        r = Hl @ vl - El * vl
        d = lu_solve(lu, np.concatenate([-np.asarray(r, dtype=float), [0.0]]), check_finite=False)
        vl = vl + d[:n].astype(np.longdouble)
        El = El + np.longdouble(d[n])
        vl /= np.sqrt(np.sum(vl * vl))
    return float(El), np.asarray(vl, dtype=float)


def solve_bound(H: HamiltonianMatrix) -> BoundSpectrum:
    """All eigenpairs below the open-channel threshold, lowest first."""
    E, V = _eigh_window(H, -np.inf, H.asymptote)
    states = _wavefunctions(H, E, V)
    return BoundSpectrum(tuple((i, float(e), s) for i, (e, s) in enumerate(zip(E, states))))


def threshold_states(H: HamiltonianMatrix, E_window: tuple, refine: bool = True) -> ThresholdStates:
    """Box-discretized continuum states with ``E_lo < E - threshold <= E_hi``.

    With ``refine`` each eigenpair is polished by :func:`refine_eigenpair`.
    """
    lo, hi = E_window
    if lo < 0:
        raise ValueError("E_lo must be >= 0 (above the threshold)")
    if hi <= lo:
        raise ValueError("empty energy window")
    a = H.asymptote if math.isfinite(H.asymptote) else 0.0
    E, V = _eigh_window(H, a + lo, a + hi)
    if len(E):
        if refine:
            pairs = [refine_eigenpair(H, e, v) for e, v in zip(E, V.T)]
            E = np.array([p[0] for p in pairs])
            V = np.column_stack([p[1] for p in pairs])
        return ThresholdStates(_wavefunctions(H, E, V), E_window)
    E2, _ = _eigh_window(H, a, a + max(hi, 1e-300) * 1e6)
    near = None
    if len(E2):
        near = float(E2[np.argmin(np.abs(E2 - a - 0.5 * (lo + hi)))] - a)
    return ThresholdStates([], E_window, near)


def nearest_threshold_state(H: HamiltonianMatrix, E: float, span: float = 4.0):
    """Box state closest to collision energy ``E`` above threshold."""
    hi = E * span
    states = threshold_states(H, (0.0, hi))
    while not states:
        if hi > 1e6 * E:
            raise ValueError(f"no continuum state near E = {E:.3e}")
        hi *= 4
        states = threshold_states(H, (0.0, hi))
    a = H.asymptote if math.isfinite(H.asymptote) else 0.0
    return min(states, key=lambda s: abs(s.energy - a - E))


def energy_normalize(states: Sequence[WavefunctionOnGrid]) -> list:
    """Rescale box states by the square root of the local density of states."""
    E = np.array([s.energy for s in states])
    if len(E) < 2:
        raise ValueError("need at least two neighbouring box states")
    rho = 1.0 / np.gradient(E)
    return [WavefunctionOnGrid(s.energy, tuple(c * math.sqrt(r) for c in s.channels), s.grid,
                               "energy_normalized") for s, r in zip(states, rho)]


# --------------------------------------------------------------- absorber


def add_absorber(H: HamiltonianMatrix, eta: float, onset: float) -> HamiltonianMatrix:
    """Add ``-i eta W(R)`` with a cubic ramp ``W`` from ``onset`` to ``R_max``."""
    grid = H.grid
    if not onset < grid.R_max:
        raise ValueError("absorber onset must lie inside R_max")
    if eta == 0:
        return H
    R = grid.points
    t = np.clip((R - onset) / (grid.R_max - onset), 0.0, None)
    W = t**3
    W = np.tile(W, H.channel_count)
    M = H.matrix.astype(complex)
    M[np.diag_indices_from(M)] -= 1j * eta * W
    return HamiltonianMatrix(M, grid, H.channel_count, H.asymptote, H.potential_diagonal,
                             eta * W)


def driven_solution(H: HamiltonianMatrix, E: float, center: float, width: float) -> WavefunctionOnGrid:
    """Solve ``(H - E) psi = g`` for a Gaussian source ``g`` on channel 1."""
    grid = H.grid
    R = grid.points
    g = np.zeros(H.size, dtype=complex if H.is_complex else float)
    g[: grid.N] = np.exp(-(((R - center) / width) ** 2)) * np.sqrt(grid.weights)
    A = H.matrix - E * np.eye(H.size)
    v = solve(A, g)
    s = 1.0 / np.sqrt(grid.weights)
    chans = tuple(v[i * grid.N:(i + 1) * grid.N] * s for i in range(H.channel_count))
    return WavefunctionOnGrid(float(E), chans, grid, "driven")
