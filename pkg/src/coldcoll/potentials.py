"""Electronic potential curves.

A :class:`PotentialCurve` is a short-range *body* (a tabulated spline or an
analytic model) joined to an exact ``C6/R**6`` dispersion tail through a
quintic switching window ``[R_join - w, R_join + w]``.  Curves are immutable
and callable on arrays; every body is a small picklable object so curves can
be shipped to worker processes.

Energies are in hartree and lengths in bohr.  ``C6`` follows the negative
sign convention (``C6 = -6331`` for an attractive tail).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "PotentialCurve",
    "InnerWallDeformation",
    "SpinOrbitModel",
    "TabulatedBody",
    "MieC6Body",
    "MieBody",
    "MorseBody",
    "HarmonicBody",
    "SquareWellBody",
    "ConstantBody",
    "FunctionBody",
    "build_tabulated",
    "model_c6_well",
    "mie_well",
    "morse",
    "harmonic",
    "zero_potential",
    "square_well",
    "hard_sphere",
    "apply_deformation",
    "shifted",
    "so_diagonalize_0g",
    "switch",
]

JOIN_SLOPE_TOL = 1e-8


def switch(t):
    """Quintic smoothstep, 0 for t <= 0 and 1 for t >= 1, C2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


# ---------------------------------------------------------------- bodies


@dataclass(frozen=True)
class TabulatedBody:
    R: tuple
    V: tuple
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if R.ndim != 1 or R.shape != V.shape:
            raise ValueError("R and V must be 1-D arrays of equal length")
        if len(R) < 4:
            raise ValueError("need at least 4 samples")
        if np.any(np.diff(R) <= 0):
            raise ValueError("tabulated abscissae must be strictly increasing")
        object.__setattr__(self, "_spline", CubicSpline(R, V, bc_type="natural"))

    def __call__(self, R):
        return self._spline(R)


@dataclass(frozen=True)
class MieC6Body:
    """``depth/(n-6) * (6 x**n - n x**6)`` with ``x = R_min/R``.

    Minimum ``-depth`` at ``R_min``; the attractive term equals ``C6/R**6``
    with ``C6 = -depth * n * R_min**6 / (n - 6)``.  For ``n = 12`` this is the
    Lennard-Jones form ``C12/R**12 + C6/R**6``.
    """

    depth: float
    R_min: float
    n: float

    def __call__(self, R):
        x = self.R_min / np.asarray(R, dtype=float)
        return self.depth / (self.n - 6.0) * (6.0 * x**self.n - self.n * x**6)

    @property
    def C6(self) -> float:
        return -self.depth * self.n * self.R_min**6 / (self.n - 6.0)


@dataclass(frozen=True)
class MieBody:
    """``depth/(n-m) * (m x**n - n x**m) + offset`` with ``x = R_min/R``.

    The general form behind :class:`MieC6Body`; with ``m = 3`` it gives the
    resonant-dipole tail ``-C3/R**3`` of an excited ``S + P`` pair.
    """

    depth: float
    R_min: float
    n: float
    m: float
    offset: float = 0.0

    def __call__(self, R):
        x = self.R_min / np.asarray(R, dtype=float)
        return self.depth / (self.n - self.m) * (self.m * x**self.n - self.n * x**self.m) + self.offset

    @property
    def C_m(self) -> float:
        """Magnitude of the attractive ``-C_m/R**m`` coefficient."""
        return self.depth * self.n * self.R_min**self.m / (self.n - self.m)


@dataclass(frozen=True)
class MorseBody:
    De: float
    a: float
    Re: float
    offset: float = 0.0  # energy of the dissociation limit

    def __call__(self, R):
        y = np.exp(-self.a * (np.asarray(R, dtype=float) - self.Re))
        return self.De * (y * y - 2.0 * y) + self.offset


@dataclass(frozen=True)
class HarmonicBody:
    k: float
    R0: float
    offset: float = 0.0

    def __call__(self, R):
        d = np.asarray(R, dtype=float) - self.R0
        return 0.5 * self.k * d * d + self.offset


@dataclass(frozen=True)
class SquareWellBody:
    depth: float
    R0: float

    @property
    def breakpoints(self) -> tuple:
        return (self.R0,)

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        # mean value on the edge keeps Numerov second order across the jump
        return np.where(R < self.R0, -self.depth, np.where(np.isclose(R, self.R0, rtol=1e-10, atol=0.0), -0.5 * self.depth, 0.0))


@dataclass(frozen=True)
class ConstantBody:
    value: float = 0.0

    def __call__(self, R):
        return np.full(np.shape(R), self.value, dtype=float)


@dataclass(frozen=True)
class FunctionBody:
    """Wraps a picklable callable (module-level function or class instance)."""

    fn: Callable

    def __call__(self, R):
        return np.asarray(self.fn(np.asarray(R, dtype=float)), dtype=float)


@dataclass(frozen=True)
class OffsetBody:
    body: Callable
    shift: float

    def __call__(self, R):
        return self.body(R) + self.shift


# ------------------------------------------------------------ curve types


@dataclass(frozen=True)
class InnerWallDeformation:
    amplitude: float  # lambda, hartree
    center: float  # R0, bohr
    width: float  # sigma, bohr

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        return self.amplitude * np.exp(-(((R - self.center) / self.width) ** 2))


@dataclass(frozen=True)
class PotentialCurve:
    label: str
    body: Callable
    C6: float = 0.0
    R_join: float = math.inf
    asymptote: float = 0.0
    blend_width: float = 0.0
    deformation: InnerWallDeformation | None = None
    R_core: float = 0.0  # hard wall; wavefunctions vanish here

    @property
    def has_tail(self) -> bool:
        return math.isfinite(self.R_join)

    @property
    def breakpoints(self) -> tuple:
        """Radii where V jumps (only piecewise-constant test bodies have any)."""
        return tuple(b for b in getattr(self.body, "breakpoints", ()) if b > self.R_core)

    @property
    def tail_start(self) -> float:
        return self.R_join + self.blend_width

    def tail(self, R):
        R = np.asarray(R, dtype=float)
        return self.asymptote + self.C6 / R**6

    def undeformed(self, R):
        R = np.asarray(R, dtype=float)
        if not self.has_tail:
            return np.asarray(self.body(R), dtype=float)
        out = np.empty(R.shape)
        lo = self.R_join - self.blend_width
        inner = R < lo
        outer = R >= self.tail_start
        mid = ~(inner | outer)
        if inner.any():
            out[inner] = self.body(R[inner])
        if outer.any():
            out[outer] = self.tail(R[outer])
        if mid.any():
            Rm = R[mid]
            s = switch((Rm - lo) / (2.0 * self.blend_width))
            out[mid] = (1.0 - s) * self.body(Rm) + s * self.tail(Rm)
        return out

    def deformation_at(self, R):
        R = np.asarray(R, dtype=float)
        if self.deformation is None:
            return np.zeros(R.shape)
        f = self.deformation(R)
        if not self.has_tail:
            return f
        # switched off over [R_join - 2w, R_join]; exactly zero from R_join on
        w = max(self.blend_width, 1e-12)
        clamp = 1.0 - switch((R - (self.R_join - 2.0 * w)) / (2.0 * w))
        return np.where(R < self.R_join, f * clamp, 0.0)

    def __call__(self, R):
        scalar = np.ndim(R) == 0
        R = np.atleast_1d(np.asarray(R, dtype=float))
        V = self.undeformed(R)
        if self.deformation is not None:
            inside = R < self.R_join
            V = V.copy()
            V[inside] += self.deformation_at(R[inside])
        return float(V[0]) if scalar else V

    def minimum(self, R_lo: float, R_hi: float, n: int = 4001) -> tuple[float, float]:
        """Location and value of the global minimum on ``[R_lo, R_hi]``."""
        probe = np.geomspace(R_lo, R_hi, n)
        V = self(probe)
        i = int(np.argmin(V))
        a = probe[max(i - 1, 0)]
        b = probe[min(i + 1, n - 1)]
        if a == b:
            return float(probe[i]), float(V[i])
        res = minimize_scalar(lambda r: float(self(r)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < V[i]:
            return float(res.x), float(res.fun)
        return float(probe[i]), float(V[i])

    def check_join(self, h: float = 1e-4) -> float:
        """Largest one-sided slope mismatch at the edges of the blend window."""
        if not self.has_tail or self.blend_width == 0:
            return 0.0
        worst = 0.0
        for edge in (self.R_join - self.blend_width, self.tail_start):
            left = (3 * self(edge) - 4 * self(edge - h) + self(edge - 2 * h)) / (2 * h)
            right = (-3 * self(edge) + 4 * self(edge + h) - self(edge + 2 * h)) / (2 * h)
            worst = max(worst, abs(left - right))
        return float(worst)


@dataclass(frozen=True)
class SpinOrbitModel:
    V_sigma: PotentialCurve
    V_pi: PotentialCurve
    V_so: float  # fine-structure splitting, hartree

    def __post_init__(self):
        if not math.isclose(self.V_sigma.asymptote, self.V_pi.asymptote, abs_tol=1e-12):
            raise ValueError("Sigma and Pi curves must share the same asymptote")

    def matrix(self, R):
        """2x2 blocks [[V_S, sqrt2 d], [sqrt2 d, V_P + d]] with d = V_so/3."""
        d = self.V_so / 3.0
        vs = self.V_sigma(R)
        vp = self.V_pi(R)
        off = math.sqrt(2.0) * d
        return vs, vp + d, np.full(np.shape(vs), off)


# ------------------------------------------------------------- builders


def build_tabulated(samples, C6: float, R_join: float, asymptote: float = 0.0,
                    blend_width: float = 1.0, label: str = "tabulated") -> PotentialCurve:
    """Spline a short-range table and join it to the dispersion tail.

    ``samples`` is an ``(n, 2)`` array of (R, V) in bohr and hartree.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValueError("samples must have shape (n, 2)")
    R, V = samples[:, 0], samples[:, 1]
    if np.any(np.diff(R) <= 0):
        raise ValueError("tabulated abscissae must be strictly increasing (no duplicates)")
    if C6 > 0:
        raise ValueError("C6 must be <= 0 (attractive tail, negative sign convention)")
    if blend_width <= 0:
        raise ValueError("blend_width must be positive")
    if R[-1] < R_join or R[0] > R_join - blend_width:
        raise ValueError(
            f"samples span [{R[0]}, {R[-1]}] and do not cover the join at R = {R_join}"
        )
    curve = PotentialCurve(label, TabulatedBody(tuple(R), tuple(V)), C6, R_join,
                           asymptote, blend_width)
    _verify_join(curve)
    return curve


def _verify_join(curve: PotentialCurve) -> None:
    mismatch = curve.check_join()
    if mismatch > JOIN_SLOPE_TOL:
        raise ValueError(f"derivative mismatch {mismatch:.3e} at the tail join")


def model_c6_well(depth: float, R_min: float, C6: float, *, R_join: float = 20.0,
                  blend_width: float = 2.0, asymptote: float = 0.0,
                  label: str = "c6_well") -> PotentialCurve:
    """Analytic well with its minimum at ``(R_min, -depth)`` and a ``C6`` tail.

    The repulsive exponent is fixed by the three inputs; ``depth * R_min**6 =
    |C6| / 2`` gives the Lennard-Jones 12-6 case.
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    if C6 >= 0:
        raise ValueError("C6 must be negative")
    q = depth * R_min**6 / -C6
    if not 0 < q < 1:
        raise ValueError(
            f"depth*R_min^6/|C6| = {q:.4f} must lie in (0, 1) for a well with this tail"
        )
    n = 6.0 / (1.0 - q)
    if R_join - blend_width <= R_min:
        raise ValueError("the tail join must lie outside the well minimum")
    curve = PotentialCurve(label, MieC6Body(depth, R_min, n), C6, R_join, asymptote,
                           blend_width)
    if asymptote:
        curve = replace(curve, body=OffsetBody(curve.body, asymptote))
    _verify_join(curve)
    return curve


def mie_well(depth: float, R_min: float, n: float, m: float, asymptote: float = 0.0,
             label: str = "mie") -> PotentialCurve:
    """Analytic ``n-m`` well without a separately joined tail."""
    if depth <= 0 or not n > m > 0:
        raise ValueError("need depth > 0 and n > m > 0")
    return PotentialCurve(label, MieBody(depth, R_min, n, m, asymptote), asymptote=asymptote)


def morse(De: float, a: float, Re: float, offset: float = 0.0, label: str = "morse") -> PotentialCurve:
    return PotentialCurve(label, MorseBody(De, a, Re, offset), asymptote=offset)


def harmonic(k: float, R0: float, offset: float = 0.0, label: str = "harmonic") -> PotentialCurve:
    return PotentialCurve(label, HarmonicBody(k, R0, offset), asymptote=math.inf)


def zero_potential(label: str = "zero") -> PotentialCurve:
    return PotentialCurve(label, ConstantBody(0.0))


def square_well(depth: float, R0: float, label: str = "square_well") -> PotentialCurve:
    return PotentialCurve(label, SquareWellBody(depth, R0))


def hard_sphere(R0: float, label: str = "hard_sphere") -> PotentialCurve:
    """Zero potential outside an impenetrable core of radius ``R0``."""
    if R0 < 0:
        raise ValueError("core radius must be >= 0")
    return PotentialCurve(label, ConstantBody(0.0), R_core=float(R0))


def shifted(curve: PotentialCurve, dE: float, label: str | None = None) -> PotentialCurve:
    """Same curve moved rigidly by ``dE`` (body, tail and asymptote)."""
    return replace(curve, body=OffsetBody(curve.body, dE), asymptote=curve.asymptote + dE,
                   label=label or curve.label)


def apply_deformation(curve: PotentialCurve, d: InnerWallDeformation) -> PotentialCurve:
    """Add a clamped Gaussian to the inner part of ``curve``.

    Negative amplitude deepens the well (adds phase); positive removes phase.
    The curve is unchanged from ``R_join`` outward.
    """
    if d.center >= curve.R_join:
        raise ValueError(f"deformation center {d.center} must lie inside R_join = {curve.R_join}")
    if curve.deformation is not None:
        raise ValueError("curve already carries a deformation; start from the base curve")
    return replace(curve, deformation=d)


# ------------------------------------------------------ spin-orbit mixing


@dataclass(frozen=True)
class SOBranchBody:
    model: SpinOrbitModel
    upper: bool

    def __call__(self, R):
        a, d, b = self.model.matrix(R)
        mean = 0.5 * (a + d)
        half = np.sqrt(0.25 * (a - d) ** 2 + b * b)
        return mean + half if self.upper else mean - half


@dataclass(frozen=True)
class MixingAngle:
    """Rotation angle of the lower eigenvector, unwrapped along R."""

    model: SpinOrbitModel

    def __call__(self, R):
        R = np.atleast_1d(np.asarray(R, dtype=float))
        order = np.argsort(R)
        a, d, b = self.model.matrix(R[order])
        theta = 0.5 * np.arctan2(2.0 * b, a - d)
        theta = 0.5 * np.unwrap(2.0 * theta)
        out = np.empty_like(theta)
        out[order] = theta
        return out


def so_diagonalize_0g(m: SpinOrbitModel):
    """Pointwise eigen-decomposition of the 0g- spin-orbit matrix.

    Returns ``(lower, upper, mixing_angle)``; the two branches are curves
    without a separate tail and their asymptotes sit at ``A - V_so/3`` and
    ``A + 2 V_so/3`` for the common input asymptote ``A``.
    """
    d = m.V_so / 3.0
    A = m.V_sigma.asymptote
    lower = PotentialCurve(f"0g-({m.V_sigma.label}/{m.V_pi.label}) lower",
                           SOBranchBody(m, upper=False), asymptote=A - d)
    upper = PotentialCurve(f"0g-({m.V_sigma.label}/{m.V_pi.label}) upper",
                           SOBranchBody(m, upper=True), asymptote=A + 2 * d)
    return lower, upper, MixingAngle(m)


def inner_turning_point(curve: PotentialCurve, E: float = 0.0, R_lo: float = 1.0,
                        R_hi: float = 200.0) -> float:
    """Smallest R on the inner wall where ``V(R) = E``."""
    probe = np.geomspace(R_lo, R_hi, 8001)
    V = curve(probe) - E
    below = np.nonzero(V < 0)[0]
    if len(below) == 0:
        raise ValueError("potential never drops below the requested energy")
    i = below[0]
    if i == 0:
        return float(probe[0])
    return float(brentq(lambda r: float(curve(r)) - E, probe[i - 1], probe[i], xtol=1e-14))


def softmin(curves: Sequence[Callable], eps: float):
    """Smooth pointwise minimum of several curves (never above the true min).

    Polynomial blend: exact wherever the curves differ by more than ``eps``,
    C2 and below both inputs inside that band.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")

    def env(R):
        vals = [np.asarray(c(R), dtype=float) for c in curves]
        out = vals[0]
        for v in vals[1:]:
            h = np.maximum(eps - np.abs(out - v), 0.0) / eps
            out = np.minimum(out, v) - h**3 * eps / 6.0
        return out

    return env
