"""Numerov propagation of the s-wave radial equation ``u'' = 2 mu (V - E) u``.

This is the brute-force oracle used to check the grid solver.  Propagation
starts from ``u(R_start) = 0`` with a small positive slope.  With an explicit
step ``h`` the mesh is uniform; otherwise the step starts at ``kh / k_max``
and doubles once the local wavenumber everywhere further out allows it, which
keeps a 20000 bohr zero-energy run near 10^5 steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

__all__ = [
    "PropagationResult",
    "PhaseShift",
    "propagate",
    "phase_shift",
    "zero_energy_solution",
    "adaptive_mesh",
]

DEFAULT_KH = 0.003
_RESCALE = 1e100


@numba.njit(cache=True)
def _numerov(f, hs, u0, u1, jump):
    """Recursion on a mesh whose step only ever doubles.

    ``hs[i]`` is the step that leads into point ``i``.  After a doubling the
    point two old steps back plays the role of ``u[i-1]``.  At index ``jump``
    (``-1`` for none) ``V`` steps; ``f`` there holds the mean of both sides
    and the missing ``h^3 u' df / 12`` term is added to stay second order.
    """
    n = f.shape[0]
    u = np.empty(n)
    u[0] = u0
    u[1] = u1
    nodes = 0
    for i in range(1, n - 1):
        h = hs[i + 1]
        c = h * h / 12.0
        j = i - 1 if hs[i] == h else i - 2
        rhs = 2.0 * u[i] * (1.0 + 5.0 * c * f[i]) - u[j] * (1.0 - c * f[j])
        if i == jump:
            du = (u[i] - u[j]) / h + 0.5 * h * f[j] * u[i]
            rhs += h * h * h * du * (f[i + 1] - f[j]) / 12.0
        u[i + 1] = rhs / (1.0 - c * f[i + 1])
        if u[i + 1] * u[i] < 0.0:
            nodes += 1
        if abs(u[i + 1]) > _RESCALE:
            for m in range(i + 2):
                u[m] /= _RESCALE
    return u, nodes


@numba.njit(cache=True)
def _doubling_mesh(probe, ksup, R0, R1, kh, hmax, cap, hold_until, h0):
    h = h0
    R = np.empty(cap)
    hs = np.empty(cap)
    R[0] = R0
    hs[0] = h
    r = R0
    idx = 0
    since = 0
    n = 1
    npr = probe.shape[0]
    while r < R1:
        while idx < npr - 1 and probe[idx + 1] <= r:
            idx += 1
        # doubling needs >= 2 steps at the current size for the recursion
        if since >= 2 and r > hold_until and 2.0 * h <= hmax and ksup[idx] * 2.0 * h <= kh:
            h *= 2.0
            since = 0
        r += h
        if n >= cap:
            break
        R[n] = r
        hs[n] = h
        n += 1
        since += 1
    return R[:n], hs[:n]


def adaptive_mesh(curve: Callable, mu: float, E: float, R_start: float, R_end: float,
                  kh: float = DEFAULT_KH, n_probe: int = 20000, breakpoint: float | None = None):
    """Radii and incoming steps for a doubling mesh with ``k h <= kh``.

    A ``breakpoint`` is placed exactly on a mesh point; the step is held
    fixed until it is passed.
    """
    if R_start > 0 and R_end / R_start > 10:
        probe = np.geomspace(R_start, R_end, n_probe)
    else:
        probe = np.linspace(R_start, R_end, n_probe)
    k = np.sqrt(2.0 * mu * np.abs(E - np.asarray(curve(probe), dtype=float)))
    k = np.maximum(k, math.sqrt(2.0 * mu * max(E, 0.0)))
    k = np.maximum(k, 1e-300)
    ksup = np.maximum.accumulate(k[::-1])[::-1]
    # the step must also resolve the interval between probe points
    ksup = np.maximum(ksup, np.concatenate([ksup[1:], ksup[-1:]]))
    hmax = (R_end - R_start) / 2000.0
    cap = 64 + 2 * int(np.trapezoid(ksup, probe) / kh) + 4 * int((R_end - R_start) / hmax)
    h0 = min(kh / ksup[0], hmax)
    hold = -math.inf
    if breakpoint is not None and R_start < breakpoint < R_end:
        n = math.ceil((breakpoint - R_start) / h0)
        h0 = (breakpoint - R_start) / n
        hold = breakpoint + 2.5 * h0  # keep the jump out of a doubled stencil
        cap += n
    R, hs = _doubling_mesh(probe, ksup, float(R_start), float(R_end), float(kh), float(hmax), cap,
                           float(hold), float(h0))
    if R[-1] < R_end:
        raise RuntimeError("Numerov mesh capacity exhausted")
    if breakpoint is not None and R_start < breakpoint < R_end:
        R[np.argmin(np.abs(R - breakpoint))] = breakpoint
        # stretching would move the breakpoint off the mesh; overshoot instead
        return R, hs
    # stretch uniformly so the last point lands on R_end
    scale = (R_end - R_start) / (R[-1] - R_start)
    return R_start + (R - R_start) * scale, hs * scale


@dataclass(frozen=True, eq=False)
class PropagationResult:
    R: np.ndarray
    u: np.ndarray
    node_count: int
    log_derivative: float
    E: float
    mu: float

    @property
    def samples(self):
        return np.column_stack([self.R, self.u])


@dataclass(frozen=True)
class PhaseShift:
    """Phase reduced to (-pi/2, pi/2] plus the whole multiples of pi."""

    delta: float
    n_pi: int

    @property
    def total(self) -> float:
        return self.delta + self.n_pi * math.pi

    def __float__(self) -> float:
        return self.delta


def _end_derivative(R, u):
    """Fourth-order one-sided derivative from the last five samples."""
    x = R[-5:] - R[-1]
    return np.polynomial.polynomial.polyfit(x / x[0], u[-5:], 4)[1] / x[0]


def propagate(curve: Callable, mu: float, E: float, R_start: float, R_end: float,
              h: float | None = None, *, kh: float = DEFAULT_KH) -> PropagationResult:
    """Integrate outward from a node at ``R_start``.

    ``h`` fixes a uniform step (checked against ``2 mu |E - V| h^2 < 0.5``);
    ``None`` selects the doubling mesh with ``k h <= kh``, whose last point
    is ``R_end`` except when a potential step forces an overshoot.
    """
    if not R_end > R_start:
        raise ValueError("R_end must exceed R_start")
    breaks = [b for b in getattr(curve, "breakpoints", ()) if R_start < b < R_end]
    if len(breaks) > 1:
        raise ValueError("at most one potential discontinuity is supported")
    bp = breaks[0] if breaks else None
    if h is None:
        R, hs = adaptive_mesh(curve, mu, E, R_start, R_end, kh, breakpoint=bp)
    else:
        if h <= 0:
            raise ValueError("step must be positive")
        n = int(math.ceil((R_end - R_start) / h))
        R = R_start + h * np.arange(n + 1)
        hs = np.full(n + 1, float(h))
    if len(R) < 3:
        raise ValueError("too few Numerov steps")
    f = 2.0 * mu * (np.asarray(curve(R), dtype=float) - E)
    if h is not None:
        bad = np.nonzero(np.abs(f) * h * h >= 0.5)[0]
        if len(bad):
            raise ValueError(
                f"step h = {h} violates 2 mu |E - V| h^2 < 0.5 at R = {R[bad[0]]:.6g}"
            )
    jump = -1
    if bp is not None:
        hit = np.nonzero(np.isclose(R, bp, rtol=1e-10, atol=0.0))[0]
        if len(hit):
            jump = int(hit[0])
            eps = 1e-9 * max(abs(bp), 1.0)
            side = np.asarray(curve(np.array([bp - eps, bp + eps])), dtype=float)
            f[jump] = 2.0 * mu * (0.5 * (side[0] + side[1]) - E)
    u, nodes = _numerov(f, hs, 0.0, hs[1], jump)
    scale = np.max(np.abs(u))
    if scale > 0:
        u = u / scale
    return PropagationResult(R, u, int(nodes), float(_end_derivative(R, u) / u[-1]), float(E), float(mu))


def zero_energy_solution(curve: Callable, mu: float, R_start: float, R_end: float,
                         h: float | None = None, *, kh: float = DEFAULT_KH) -> PropagationResult:
    """E = 0 solution; its node count equals the number of bound states."""
    return propagate(curve, mu, 0.0, R_start, R_end, h, kh=kh)


def phase_shift(result: PropagationResult, k: float, V_negligible_from: float) -> PhaseShift:
    """Match ``u`` to ``A sin(kR + delta)`` at two points beyond the potential.

    The outer point is the last sample; the inner one sits a quarter
    wavelength earlier when there is room, else as far in as allowed.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    R, u = result.R, result.u
    R2 = R[-1]
    if V_negligible_from >= R2:
        raise ValueError("no samples beyond V_negligible_from")
    want = R2 - 0.5 * math.pi / k
    i1 = int(np.searchsorted(R, max(want, V_negligible_from)))
    i1 = min(i1, len(R) - 2)
    R1 = R[i1]
    s = math.sin(k * (R2 - R1))
    if abs(s) < 0.1:
        raise ValueError(
            f"matching points {R1:.6g} and {R2:.6g} are too close for k = {k:.3e} (ill-conditioned)"
        )
    u1, u2 = u[i1], u[-1]
    # u_i = a sin(k R_i) + b cos(k R_i) with a = A cos(delta), b = A sin(delta)
    M = np.array([[math.sin(k * R1), math.cos(k * R1)], [math.sin(k * R2), math.cos(k * R2)]])
    a, b = np.linalg.solve(M, [u1, u2])
    delta = math.atan2(b, a)
    delta = (delta + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    if delta == -0.5 * math.pi:
        delta = 0.5 * math.pi
    # Levinson-style count: nodes of u against nodes of the free comparison
    # a free node sitting on R_start itself is not counted, like u's own
    free = math.floor((k * R2 + delta) / math.pi) - math.floor((k * R[0] + delta) / math.pi + 1e-6)
    return PhaseShift(float(delta), int(result.node_count - free))
