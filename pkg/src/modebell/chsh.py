"""CHSH combinations, optimal phase bases, and violation thresholds.

Correlations derive from the outcome-group probabilities of the
protocol module. The standard four-setting combination is evaluated for
arbitrary phase bases, and a one-parameter family of bases (the average
phases form theta, -theta, -theta, -3*theta) admits closed forms whose
optimum is located numerically rather than hard-coded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .protocol import (
    GroupProbabilities,
    PhaseSettings,
    PostSelectionMode,
    group_probabilities,
)

#: Breaking ties in the optimizer toward the smallest non-negative angle
#: makes the reported optimum deterministic; the search covers one period.
_THETA_SEARCH_MAX = 0.5 * math.pi
_GRID_STEP_MAX = 1e-3
_REFINE_WIDTH_TOL = 1e-10


@dataclass(frozen=True)
class BasisAssignment:
    """The four phase settings of a CHSH run, in radians.

    phi_x0/phi_x1 are Alice's two settings and phi_y0/phi_y1 Bob's; the
    setting pair (x, y) uses phases (phi_x<x>, phi_y<y>).
    """

    phi_x0: float
    phi_x1: float
    phi_y0: float
    phi_y1: float

    def __post_init__(self) -> None:
        for value in (self.phi_x0, self.phi_x1, self.phi_y0, self.phi_y1):
            if not math.isfinite(value):
                raise ValidationError("basis phases must be finite")

    def phase_settings(self, x: int, y: int) -> PhaseSettings:
        if x not in (0, 1) or y not in (0, 1):
            raise ValidationError(f"setting labels must be 0 or 1, got {(x, y)}")
        phi_x = self.phi_x0 if x == 0 else self.phi_x1
        phi_y = self.phi_y0 if y == 0 else self.phi_y1
        return PhaseSettings(phi_x=phi_x, phi_y=phi_y)


@dataclass(frozen=True)
class ChshResult:
    """A CHSH value together with the four correlations that built it."""

    value: float
    correlations: dict[tuple[int, int], float]
    mode: PostSelectionMode

    def __post_init__(self) -> None:
        expected = {(0, 0), (0, 1), (1, 0), (1, 1)}
        if set(self.correlations) != expected:
            raise ValidationError("need exactly the four setting correlations")
        combo = (
            self.correlations[(0, 0)]
            + self.correlations[(0, 1)]
            + self.correlations[(1, 0)]
            - self.correlations[(1, 1)]
        )
        if abs(self.value - abs(combo)) > 1e-9:
            raise ValidationError("value must equal |C00 + C01 + C10 - C11|")


def correlation(groups: GroupProbabilities) -> float:
    """Binary-outcome correlation E[a*b] of one setting."""
    return groups.p_pp + groups.p_mm - groups.p_pm - groups.p_mp


def chsh_value(
    basis: BasisAssignment, overlap: float, mode: PostSelectionMode
) -> ChshResult:
    """CHSH combination |C00 + C01 + C10 - C11| for an arbitrary basis."""
    correlations: dict[tuple[int, int], float] = {}
    for x in (0, 1):
        for y in (0, 1):
            groups = group_probabilities(basis.phase_settings(x, y), overlap, mode)
            correlations[(x, y)] = correlation(groups)
    combo = (
        correlations[(0, 0)]
        + correlations[(0, 1)]
        + correlations[(1, 0)]
        - correlations[(1, 1)]
    )
    return ChshResult(value=abs(combo), correlations=correlations, mode=mode)


def theta_basis(theta: float) -> BasisAssignment:
    """Symmetric one-parameter basis.

    Both parties use (theta, -3*theta), so the average phases of the four
    setting pairs are theta, -theta, -theta and -3*theta.
    """
    return BasisAssignment(
        phi_x0=theta, phi_x1=-3.0 * theta, phi_y0=theta, phi_y1=-3.0 * theta
    )


def closed_form_chsh(theta: float, overlap: float, mode: PostSelectionMode) -> float:
    """Closed-form CHSH value on the symmetric theta basis.

    Keeping only cross-lab events gives v*|3 cos 2t - cos 6t|; keeping
    everything gives v*|3 cos^2 t - cos^2 3t|. Both reduce to the same
    v-linear scaling because every correlation is proportional to the
    overlap.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValidationError(f"overlap must lie in [0, 1], got {overlap!r}")
    if mode is PostSelectionMode.CROSS_LAB_ONLY:
        return overlap * abs(3.0 * math.cos(2.0 * theta) - math.cos(6.0 * theta))
    if mode is PostSelectionMode.NUMBER_RESOLVING:
        return overlap * abs(
            3.0 * math.cos(theta) ** 2 - math.cos(3.0 * theta) ** 2
        )
    raise ValidationError(
        "closed form is defined for the cross-lab-only and number-resolving modes"
    )


@dataclass(frozen=True)
class ThetaOptimum:
    """Result of the basis optimization at a fixed overlap."""

    theta: float
    value: float
    mode: PostSelectionMode
    overlap: float


def optimize_theta(overlap: float, mode: PostSelectionMode) -> ThetaOptimum:
    """Maximize the closed-form CHSH value over theta in [0, pi/2].

    A grid no coarser than 1e-3 locates the basin (first maximum wins, so
    ties resolve toward the smallest non-negative theta), then a
    golden-section refinement narrows it below 1e-10.
    """
    n_grid = int(math.ceil(_THETA_SEARCH_MAX / _GRID_STEP_MAX)) + 1
    grid = np.linspace(0.0, _THETA_SEARCH_MAX, n_grid)
    values = [closed_form_chsh(t, overlap, mode) for t in grid]
    best = int(np.argmax(values))
    step = grid[1] - grid[0]
    lo = max(0.0, grid[best] - step)
    hi = min(_THETA_SEARCH_MAX, grid[best] + step)

    theta = _golden_section_max(
        lambda t: closed_form_chsh(t, overlap, mode), lo, hi
    )
    return ThetaOptimum(
        theta=theta,
        value=closed_form_chsh(theta, overlap, mode),
        mode=mode,
        overlap=overlap,
    )


def _golden_section_max(func, lo: float, hi: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = func(c), func(d)
    while b - a > _REFINE_WIDTH_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = func(d)
    return 0.5 * (a + b)


def violation_threshold(mode: PostSelectionMode) -> float:
    """Smallest overlap whose optimized CHSH value reaches 2.

    Located by bisection on the optimized value; nothing about the
    answer is assumed beforehand.
    """
    def excess(v: float) -> float:
        return optimize_theta(v, mode).value - 2.0

    lo, hi = 0.0, 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise ValidationError("no violation threshold inside [0, 1]")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def theory_curve(
    mode: PostSelectionMode, overlaps: np.ndarray | None = None
) -> list[tuple[float, float]]:
    """Maximal CHSH value versus overlap, optimized point by point."""
    if overlaps is None:
        overlaps = np.linspace(0.0, 1.0, 101)
    curve = []
    for v in np.asarray(overlaps, dtype=float):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"overlap grid must lie in [0, 1], got {v!r}")
        curve.append((float(v), optimize_theta(float(v), mode).value))
    return curve
