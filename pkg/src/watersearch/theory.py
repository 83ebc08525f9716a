"""Numerical check that the per-step and per-chunk objectives agree.

The per-step ("micro") objective trades distribution quality against the
green/red probability shift a bias of strength r induces:

    J(r) = T(r) + omega * W(r),        W(r) = 2 r (1 - P_G)

while the per-chunk ("macro") objective blends expected text similarity with
the expected green fraction:

    Q(r) = alpha * f(T(r)) + (1 - alpha) * (P_G + r (1 - P_G)).

With omega = (1 - alpha) / (2 alpha f'), both are maximized at the same
interior r*.  ``verify_theorem`` confirms this numerically for a family of
quality curves: dense grid, then golden-section refinement around each
argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError, DomainError

EDGE = 1e-6  # maximizers are sought on (EDGE, 1 - EDGE); r in (0,1) open


def watermark_effectiveness(r: float, green_mass: float) -> float:
    """Green-minus-red probability shift of a strength-r perturbation."""
    return 2.0 * r * (1.0 - green_mass)


def perturbed_green_mass(r: float, green_mass: float) -> float:
    """Green probability mass after a strength-r perturbation."""
    return green_mass + r * (1.0 - green_mass)


@dataclass(frozen=True)
class TradeoffFamily:
    """A quality curve plus the weights tying the two objectives together.

    ``quality`` is the (concave, quality(0) = 0) distribution-similarity
    curve; ``f`` maps it to sentence-level similarity and must be strictly
    increasing with constant slope ``fprime`` near the maximizer.
    """

    green_mass: float
    alpha: float
    quality: Callable[[float], float]
    f: Callable[[float], float] = field(default=lambda x: x)
    fprime: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.green_mass < 1.0:
            raise ConfigError(f"green_mass must lie in (0,1), got {self.green_mass}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.fprime <= 0:
            raise ConfigError(f"fprime must be > 0, got {self.fprime}")

    @classmethod
    def quadratic(
        cls,
        c: float,
        green_mass: float,
        alpha: float,
        f: Callable[[float], float] | None = None,
        fprime: float = 1.0,
    ) -> "TradeoffFamily":
        """Default family with quality(r) = -c r^2, c > 0."""
        if c <= 0:
            raise ConfigError(f"curvature c must be > 0, got {c}")
        return cls(
            green_mass=green_mass,
            alpha=alpha,
            quality=lambda r: -c * r * r,
            f=f if f is not None else (lambda x: x),
            fprime=fprime,
            label=f"quadratic(c={c})",
        )

    @classmethod
    def tabulated(
        cls,
        points: list[tuple[float, float]],
        green_mass: float,
        alpha: float,
        fprime: float = 1.0,
    ) -> "TradeoffFamily":
        """Quality curve given as (r, value) pairs, monotone-cubic interpolated."""
        interp = _MonotoneCubic(points)
        return cls(
            green_mass=green_mass,
            alpha=alpha,
            quality=interp,
            fprime=fprime,
            label=f"tabulated({len(points)} pts)",
        )


def theorem_omega(alpha: float, fprime: float) -> float:
    """The weight (1 - alpha) / (2 alpha f') that aligns the two objectives."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly in (0,1), got {alpha}")
    if fprime <= 0:
        raise DomainError(f"fprime must be > 0, got {fprime}")
    return (1.0 - alpha) / (2.0 * alpha * fprime)


def micro_objective(r: float, family: TradeoffFamily, omega: float) -> float:
    return family.quality(r) + omega * watermark_effectiveness(r, family.green_mass)


def macro_objective(r: float, family: TradeoffFamily) -> float:
    return family.alpha * family.f(family.quality(r)) + (
        1.0 - family.alpha
    ) * perturbed_green_mass(r, family.green_mass)


@dataclass
class TheoremCheck:
    r_micro: float
    r_macro: float
    gap: float
    interior: bool
    unique: bool
    grid_maximizers: list[float]

    @property
    def ok(self) -> bool:
        return self.unique


def verify_theorem(
    family: TradeoffFamily,
    grid_resolution: int = 4096,
    tol: float = 1e-9,
) -> TheoremCheck:
    """Maximize both objectives and report |r_micro - r_macro|.

    Boundary maxima are reported with ``interior=False`` and are excluded
    from the equality claim (the theorem concerns interior stationary
    points); families with several grid-level maximizers fail the check and
    list them all.
    """
    if grid_resolution < 1000:
        raise ConfigError(f"grid_resolution must be >= 1000, got {grid_resolution}")
    omega = theorem_omega(family.alpha, family.fprime)
    micro = lambda r: micro_objective(r, family, omega)
    macro = lambda r: macro_objective(r, family)
    r_micro, micro_interior, micro_peaks = _maximize(micro, grid_resolution, tol)
    r_macro, macro_interior, macro_peaks = _maximize(macro, grid_resolution, tol)
    peaks = sorted(set(micro_peaks) | set(macro_peaks))
    unique = len(micro_peaks) == 1 and len(macro_peaks) == 1
    return TheoremCheck(
        r_micro=r_micro,
        r_macro=r_macro,
        gap=abs(r_micro - r_macro),
        interior=micro_interior and macro_interior,
        unique=unique,
        grid_maximizers=peaks,
    )


def default_family_grid() -> list[TradeoffFamily]:
    """The 64 quadratic families exercised by the verification suite."""
    grid = []
    for c in (0.5, 1.0, 2.0, 4.0):
        for green_mass in (0.1, 0.25, 0.5, 0.75):
            for alpha in (0.25, 0.5, 0.75, 0.9):
                grid.append(TradeoffFamily.quadratic(c, green_mass, alpha))
    return grid


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _maximize(
    fn: Callable[[float], float], resolution: int, tol: float
) -> tuple[float, bool, list[float]]:
    lo, hi = EDGE, 1.0 - EDGE
    xs = [lo + (hi - lo) * i / (resolution - 1) for i in range(resolution)]
    ys = [fn(x) for x in xs]
    best = max(range(resolution), key=lambda i: ys[i])
    y_best = ys[best]
    # Strict local maxima within a whisker of the global max signal a
    # non-concave objective with ambiguous argmax.
    peaks = []
    for i in range(resolution):
        left = ys[i - 1] if i > 0 else -math.inf
        right = ys[i + 1] if i < resolution - 1 else -math.inf
        if ys[i] >= left and ys[i] >= right and ys[i] >= y_best - 1e-12:
            peaks.append(xs[i])
    peaks = _cluster(peaks, 2.0 * (hi - lo) / (resolution - 1))
    a = xs[best - 1] if best > 0 else lo
    b = xs[best + 1] if best < resolution - 1 else hi
    r = _golden_section(fn, a, b, tol)
    interior = best not in (0, resolution - 1)
    return r, interior, peaks


def _cluster(points: list[float], width: float) -> list[float]:
    out: list[float] = []
    for p in points:
        if not out or p - out[-1] > width:
            out.append(p)
        else:
            out[-1] = p  # extend the cluster; keep one representative
    return out


def _golden_section(
    fn: Callable[[float], float], a: float, b: float, tol: float
) -> float:
    c = b - (b - a) * _INV_PHI
    d = a + (b - a) * _INV_PHI
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INV_PHI
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INV_PHI
            fd = fn(d)
    return (a + b) / 2.0


class _MonotoneCubic:
    """Fritsch-Carlson monotone cubic interpolation through (x, y) pairs."""

    def __init__(self, points: list[tuple[float, float]]):
        if len(points) < 2:
            raise ConfigError("tabulated quality needs at least 2 points")
        pts = sorted(points)
        self.xs = [p[0] for p in pts]
        self.ys = [p[1] for p in pts]
        if len(set(self.xs)) != len(self.xs):
            raise ConfigError("tabulated quality has duplicate r values")
        n = len(pts)
        hs = [self.xs[i + 1] - self.xs[i] for i in range(n - 1)]
        deltas = [(self.ys[i + 1] - self.ys[i]) / hs[i] for i in range(n - 1)]
        ms = [0.0] * n
        ms[0] = deltas[0]
        ms[-1] = deltas[-1]
        for i in range(1, n - 1):
            if deltas[i - 1] * deltas[i] <= 0:
                ms[i] = 0.0
            else:
                w1 = 2 * hs[i] + hs[i - 1]
                w2 = hs[i] + 2 * hs[i - 1]
                ms[i] = (w1 + w2) / (w1 / deltas[i - 1] + w2 / deltas[i])
        self.ms = ms
        self.hs = hs
        self.deltas = deltas

    def __call__(self, x: float) -> float:
        xs = self.xs
        if x <= xs[0]:
            return self.ys[0] + self.ms[0] * (x - xs[0])
        if x >= xs[-1]:
            return self.ys[-1] + self.ms[-1] * (x - xs[-1])
        lo, hi = 0, len(xs) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xs[mid] <= x:
                lo = mid
            else:
                hi = mid
        h = self.hs[lo]
        t = (x - xs[lo]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return (
            h00 * self.ys[lo]
            + h10 * h * self.ms[lo]
            + h01 * self.ys[lo + 1]
            + h11 * h * self.ms[lo + 1]
        )
