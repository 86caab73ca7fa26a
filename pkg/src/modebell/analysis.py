"""Estimators and fits: calibration, visibility, fringes, and CHSH values.

Every estimator consumes click records or scan tallies, never the
hidden truth of the simulation, so the analysis path exercises exactly
what a real experiment would. Uncertainties come from resampling:
Poisson or multinomial re-draws for scan fits, window bootstrap for
CHSH estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .chsh import BasisAssignment
from .detectors import (
    ClickOnly,
    DetectorModel,
    EfficiencyMap,
    class_masks,
    observed_outcome_arrays,
    two_photon_resolution_efficiency,
)
from .errors import EstimationError, FitError, ValidationError
from .montecarlo import ClickRecord, FringeScanData, HomScanData
from .protocol import PostSelectionMode

# Bounded-iteration contract for the nonlinear least-squares engine: the
# solver may take at most this many iterations (TRF spends about one
# Jacobian plus one step evaluation per iteration) at relative step
# tolerance 1e-10.
_MAX_FIT_ITERATIONS = 200
_FIT_XTOL = 1e-10


# ---------------------------------------------------------------------------
# Shared record handling
# ---------------------------------------------------------------------------


def _records_to_arrays(
    records: Sequence[ClickRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if len(records) == 0:
        raise EstimationError("no click records supplied")
    x = np.fromiter((r.x for r in records), dtype=np.int64, count=len(records))
    y = np.fromiter((r.y for r in records), dtype=np.int64, count=len(records))
    window = np.fromiter(
        (r.window_id for r in records), dtype=np.int64, count=len(records)
    )
    counts = np.array([r.observed.counts for r in records], dtype=np.int64)
    return x, y, window, counts


def _single_click_channels(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Channels of the two lone clicks for rows with two separate clicks."""
    ones = counts == 1
    first = np.argmax(ones, axis=1)
    last = 3 - np.argmax(ones[:, ::-1], axis=1)
    return first, last


# ---------------------------------------------------------------------------
# Detector-efficiency calibration
# ---------------------------------------------------------------------------

_COINCIDENCE_CLASSES: tuple[tuple[int, int], ...] = (
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
    (2, 3),
)


def estimate_efficiencies(records: Sequence[ClickRecord]) -> EfficiencyMap:
    """Relative channel efficiencies from distinguishable-photon records.

    With fully distinguishable photons every two-channel coincidence
    class is equally likely before losses, so the observed class rates
    factor into per-channel efficiencies. Solves the log-linear system
    by least squares and normalizes the largest efficiency to one.
    Requires every one of the six coincidence classes to be populated.
    """
    _, _, _, counts = _records_to_arrays(records)
    masks = class_masks(counts)
    pair_rows = masks["inlab"] | masks["cross"]
    first, last = _single_click_channels(counts)

    class_counts = np.zeros(len(_COINCIDENCE_CLASSES), dtype=np.int64)
    for k, (i, j) in enumerate(_COINCIDENCE_CLASSES):
        class_counts[k] = int(np.sum(pair_rows & (first == i) & (last == j)))
    if np.any(class_counts == 0):
        empty = [
            f"({i},{j})"
            for (i, j), c in zip(_COINCIDENCE_CLASSES, class_counts)
            if c == 0
        ]
        raise EstimationError(
            "cannot calibrate: no events in coincidence classes " + ", ".join(empty)
        )

    # log N_ij = x_i + x_j + const, solved in the least-squares sense;
    # the additive gauge freedom drops out after normalization.
    design = np.zeros((len(_COINCIDENCE_CLASSES), 5))
    for k, (i, j) in enumerate(_COINCIDENCE_CLASSES):
        design[k, i] = 1.0
        design[k, j] = 1.0
        design[k, 4] = 1.0
    solution, *_ = np.linalg.lstsq(design, np.log(class_counts.astype(float)), rcond=None)
    eta = np.exp(solution[:4])
    eta = eta / eta.max()
    return EfficiencyMap(eta=tuple(float(e) for e in eta))


# ---------------------------------------------------------------------------
# Pairwise-overlap estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomVisibility:
    """Interference visibility estimated from bunching statistics."""

    v_alice: float
    v_bob: float

    @property
    def average(self) -> float:
        return 0.5 * (self.v_alice + self.v_bob)


def hom_visibility_ratio(
    records: Sequence[ClickRecord],
    efficiency: EfficiencyMap | None = None,
    detector: DetectorModel | None = None,
) -> HomVisibility:
    """Visibility from the in-lab coincidence to double-click ratio.

    Computes, per lab, one minus the ratio of corrected in-lab
    coincidences to corrected double clicks. On ideal number-resolved
    data at overlap v this estimator converges to 2v/(1+v), not v: the
    double-click rate grows with v, which rescales the naive ratio.
    """
    _, _, _, counts = _records_to_arrays(records)
    masks = class_masks(counts)
    eta = (efficiency or EfficiencyMap()).as_array()
    resolve = (
        1.0 if detector is None else two_photon_resolution_efficiency(detector)
    )
    if resolve <= 0.0:
        raise EstimationError(
            "detector model cannot resolve double clicks; ratio estimator undefined"
        )

    def corrected_doubles(channel: int) -> float:
        raw = int(np.sum(counts[:, channel] == 2))
        return raw / (eta[channel] ** 2 * resolve)

    def corrected_inlab(ch_a: int, ch_b: int) -> float:
        raw = int(np.sum(masks["inlab"] & (counts[:, ch_a] == 1) & (counts[:, ch_b] == 1)))
        return raw / (eta[ch_a] * eta[ch_b])

    results = []
    for ch_a, ch_b in ((0, 1), (2, 3)):
        doubles = corrected_doubles(ch_a) + corrected_doubles(ch_b)
        if doubles <= 0.0:
            raise EstimationError(
                "no double clicks observed; cannot form the visibility ratio"
            )
        results.append(1.0 - corrected_inlab(ch_a, ch_b) / doubles)
    return HomVisibility(v_alice=results[0], v_bob=results[1])


# ---------------------------------------------------------------------------
# Least-squares fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Parameters, resampled uncertainties, and goodness of one fit."""

    kind: str
    params: dict[str, float]
    std: dict[str, float]
    residual_sum_squares: float
    n_points: int

    def __post_init__(self) -> None:
        if set(self.params) != set(self.std):
            raise ValidationError("params and std must cover the same names")
        if any(s < 0.0 for s in self.std.values()):
            raise ValidationError("standard errors must be non-negative")
        if self.n_points < len(self.params):
            raise ValidationError("fit needs at least as many points as parameters")


def _dip_model(delay: np.ndarray, params: np.ndarray) -> np.ndarray:
    baseline, visibility, center, sigma = params
    return baseline * (
        1.0 - visibility * np.exp(-((delay - center) ** 2) / (2.0 * sigma**2))
    )


def _fit_dip_once(
    delay: np.ndarray, y: np.ndarray, p0: np.ndarray
) -> tuple[np.ndarray, float]:
    lower = [1e-12, 0.0, -np.inf, 1e-12]
    upper = [np.inf, 1.5, np.inf, np.inf]
    p0 = np.clip(p0, lower, upper)
    result = least_squares(
        lambda p: _dip_model(delay, p) - y,
        p0,
        bounds=(lower, upper),
        method="trf",
        xtol=_FIT_XTOL,
        ftol=None,
        gtol=None,
        max_nfev=_MAX_FIT_ITERATIONS * (len(p0) + 1),
    )
    if not result.success:
        raise FitError(f"coincidence-dip fit did not converge: {result.message}")
    return result.x, float(np.sum(result.fun**2))


def fit_hom_dip(
    scan: HomScanData,
    n_resamples: int = 200,
    seed: int = 0,
) -> FitResult:
    """Fit the in-lab coincidence dip versus delay.

    Model: baseline * (1 - visibility * exp(-(delay-center)^2 / (2 sigma^2))).
    Initial values come from a coarse grid over center and width
    candidates; uncertainties from Poisson re-draws of the fitted
    expectation (at least 200 resamples recommended).
    """
    delay = np.asarray(scan.delay, dtype=float)
    y = np.asarray(scan.inlab_coinc, dtype=float)
    if len(delay) < 5:
        raise FitError("need at least five scan points to fit the dip")
    if n_resamples < 2:
        raise ValidationError("need at least two resamples")

    baseline0 = float(np.mean(np.sort(y)[-max(3, len(y) // 4):]))
    if baseline0 <= 0.0:
        raise FitError("scan contains no coincidences to fit")
    depth0 = min(max(1.0 - float(y.min()) / baseline0, 0.05), 1.0)
    span = float(delay.max() - delay.min())
    centers = np.quantile(delay, [0.25, 0.4, 0.5, 0.6, 0.75])
    centers = np.append(centers, delay[int(np.argmin(y))])
    sigmas = np.geomspace(max(span / 50.0, 1e-6), span / 2.0, 8)

    best_p0, best_sse = None, np.inf
    for center in centers:
        for sigma in sigmas:
            candidate = np.array([baseline0, depth0, center, sigma])
            sse = float(np.sum((_dip_model(delay, candidate) - y) ** 2))
            if sse < best_sse:
                best_p0, best_sse = candidate, sse

    params, rss = _fit_dip_once(delay, y, best_p0)
    expected = _dip_model(delay, params)

    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(11, 0)))
    draws = []
    failures = 0
    for _ in range(int(n_resamples)):
        y_star = rng.poisson(np.maximum(expected, 0.0)).astype(float)
        try:
            p_star, _ = _fit_dip_once(delay, y_star, params)
        except FitError:
            failures += 1
            continue
        draws.append(p_star)
    if failures > n_resamples // 10:
        raise FitError(f"{failures}/{n_resamples} resample fits failed")
    spread = np.std(np.array(draws), axis=0, ddof=1)

    names = ("baseline", "visibility", "center", "sigma")
    return FitResult(
        kind="hom-dip",
        params=dict(zip(names, (float(p) for p in params))),
        std=dict(zip(names, (float(s) for s in spread))),
        residual_sum_squares=rss,
        n_points=len(delay),
    )


def _fringe_visibility(amplitude: float, mode: PostSelectionMode) -> float:
    """Map the fitted cosine amplitude to the pairwise overlap it implies."""
    if mode is PostSelectionMode.CROSS_LAB_ONLY:
        return amplitude
    if mode is PostSelectionMode.NUMBER_RESOLVING:
        return 2.0 * amplitude
    # discard-doubles: amplitude = 2v/(3-v)  =>  v = 3a/(2+a)
    return 3.0 * amplitude / (2.0 + amplitude)


def _solve_fringe(z: np.ndarray, corr: np.ndarray) -> tuple[float, float, float, float]:
    """Linear least squares of corr = b - amp*cos(z + 2*delta).

    z is the summed phase per point. Returns (baseline, amplitude,
    delta, rss); delta is reported in average-phase units, wrapped to
    (-pi/2, pi/2].
    """
    design = np.column_stack([np.ones_like(z), np.cos(z), np.sin(z)])
    coeffs, *_ = np.linalg.lstsq(design, corr, rcond=None)
    b, p, q = coeffs
    amplitude = float(np.hypot(p, q))
    two_delta = math.atan2(q, -p)
    delta = 0.5 * two_delta
    if delta <= -0.5 * math.pi:
        delta += math.pi
    elif delta > 0.5 * math.pi:
        delta -= math.pi
    rss = float(np.sum((design @ coeffs - corr) ** 2))
    return float(b), amplitude, float(delta), rss


_FULL_FRINGE = 2.0 * math.pi


def fit_fringe(
    scan: FringeScanData | tuple[np.ndarray, float, np.ndarray],
    mode: PostSelectionMode | None = None,
    n_resamples: int = 200,
    seed: int = 0,
) -> FitResult:
    """Fit a correlation fringe scanned in phi_y at fixed phi_x.

    The correlation is modelled as baseline - amplitude * cos(phi_x +
    phi_y + 2*phase_offset); phase_offset is expressed in average-phase
    units so that shifting every phase setting by -phase_offset centres
    the fringe. The reported visibility maps the amplitude back to the
    pairwise overlap implied by the post-selection mode. The scan must
    span at least one full fringe (2*pi in phi_y).

    Accepts simulated scan tallies, or a (phi_y, phi_x, correlations)
    tuple for noiseless plug-in inputs.
    """
    if isinstance(scan, FringeScanData):
        phi_y = np.asarray(scan.phi_y, dtype=float)
        phi_x = float(scan.phi_x)
        kept = scan.kept_total.astype(float)
        corr = scan.correlations()
        valid = kept > 0
        group_counts = np.column_stack([scan.n_pp, scan.n_pm, scan.n_mp, scan.n_mm])
        if mode is None:
            mode = scan.mode
    else:
        phi_y, phi_x, corr = scan
        phi_y = np.asarray(phi_y, dtype=float)
        corr = np.asarray(corr, dtype=float)
        phi_x = float(phi_x)
        valid = np.isfinite(corr)
        group_counts = None
        if mode is None:
            raise ValidationError("mode is required for bare correlation inputs")
    if n_resamples < 2:
        raise ValidationError("need at least two resamples")

    if np.sum(valid) < 4:
        raise FitError("need at least four populated scan points")
    span = float(phi_y.max() - phi_y.min())
    if span < _FULL_FRINGE - 1e-6:
        raise FitError(
            f"scan spans {span:.3f} rad of phi_y; a full fringe needs {_FULL_FRINGE:.3f}"
        )

    z = phi_x + phi_y[valid]
    y = corr[valid]
    baseline, amplitude, delta, rss = _solve_fringe(z, y)

    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(12, 0)))
    amps, deltas, baselines = [], [], []
    for _ in range(int(n_resamples)):
        if group_counts is not None:
            corr_star = np.empty(int(np.sum(valid)))
            for out_idx, point in enumerate(np.flatnonzero(valid)):
                n_point = int(group_counts[point].sum())
                probs = group_counts[point] / n_point
                redraw = rng.multinomial(n_point, probs)
                corr_star[out_idx] = (
                    redraw[0] + redraw[3] - redraw[1] - redraw[2]
                ) / n_point
        else:
            residuals = y - (baseline - amplitude * np.cos(z + 2.0 * delta))
            corr_star = (
                baseline
                - amplitude * np.cos(z + 2.0 * delta)
                + rng.choice(residuals, size=len(z), replace=True)
            )
        b_s, a_s, d_s, _ = _solve_fringe(z, corr_star)
        baselines.append(b_s)
        amps.append(a_s)
        deltas.append(d_s)

    amp_std = float(np.std(amps, ddof=1))
    params = {
        "baseline": baseline,
        "amplitude": amplitude,
        "phase_offset": delta,
        "visibility": _fringe_visibility(amplitude, mode),
    }
    std = {
        "baseline": float(np.std(baselines, ddof=1)),
        "amplitude": amp_std,
        "phase_offset": float(np.std(deltas, ddof=1)),
        "visibility": abs(
            _fringe_visibility(amplitude + amp_std, mode)
            - _fringe_visibility(amplitude, mode)
        ),
    }
    return FitResult(
        kind="fringe",
        params=params,
        std=std,
        residual_sum_squares=rss,
        n_points=int(np.sum(valid)),
    )


# ---------------------------------------------------------------------------
# Phase set points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetpointCalibration:
    """Compensated CHSH basis derived from fringe fits."""

    basis: BasisAssignment
    phase_offset: float
    warning: str | None


def derive_setpoints(
    fit_low: FitResult,
    fit_high: FitResult,
    targets: tuple[float, float] = (math.pi / 8.0, -3.0 * math.pi / 8.0),
    tolerance: float = 0.05,
) -> SetpointCalibration:
    """Phase settings hitting the target average phases after an offset.

    Takes the fringe fits measured at the two Alice settings, averages
    their fitted phase offsets, and shifts all four set points by the
    negative offset. Inconsistent offsets beyond the tolerance are
    surfaced as a warning rather than silently averaged away.
    """
    for fit in (fit_low, fit_high):
        if fit.kind != "fringe" or "phase_offset" not in fit.params:
            raise ValidationError("set points require two fringe fits")
    d1 = fit_low.params["phase_offset"]
    d2 = fit_high.params["phase_offset"]
    # Offsets live modulo pi in average-phase units.
    gap = (d1 - d2 + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    mean_offset = d2 + 0.5 * gap
    warning = None
    if abs(gap) > tolerance:
        warning = (
            f"fringe phase offsets disagree by {abs(gap):.4f} rad "
            f"(tolerance {tolerance:.4f}); set points may be miscalibrated"
        )
    basis = BasisAssignment(
        phi_x0=targets[0] - mean_offset,
        phi_x1=targets[1] - mean_offset,
        phi_y0=targets[0] - mean_offset,
        phi_y1=targets[1] - mean_offset,
    )
    return SetpointCalibration(basis=basis, phase_offset=mean_offset, warning=warning)


# ---------------------------------------------------------------------------
# CHSH estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SettingCorrelation:
    """Correlation estimate of one setting with its event counts."""

    x: int
    y: int
    value: float
    n_kept: int
    corrected_total: float


@dataclass(frozen=True)
class ChshEstimate:
    """Bootstrap CHSH estimate from click records."""

    value: float
    std: float
    mode: PostSelectionMode
    correlations: dict[tuple[int, int], SettingCorrelation]
    n_resamples: int


def _model_correlation(v: float, cos_phi: float, mode: PostSelectionMode) -> float:
    if mode is PostSelectionMode.CROSS_LAB_ONLY:
        return -v * cos_phi
    if mode is PostSelectionMode.NUMBER_RESOLVING:
        return -v * (1.0 + cos_phi) / 2.0
    return (1.0 - v - 2.0 * v * cos_phi) / (3.0 - v)


def _model_overlap(corr: float, cos_phi: float, mode: PostSelectionMode) -> float:
    if mode is PostSelectionMode.CROSS_LAB_ONLY:
        if abs(cos_phi) < 1e-9:
            return 0.0
        return -corr / cos_phi
    if mode is PostSelectionMode.NUMBER_RESOLVING:
        if abs(1.0 + cos_phi) < 1e-9:
            return 0.0
        return -2.0 * corr / (1.0 + cos_phi)
    denom = corr - 1.0 - 2.0 * cos_phi
    if abs(denom) < 1e-9:
        return 0.0
    return (3.0 * corr - 1.0) / denom


def estimate_chsh(
    records: Sequence[ClickRecord],
    mode: PostSelectionMode,
    efficiency: EfficiencyMap | None = None,
    detector: DetectorModel | None = None,
    n_resamples: int = 1000,
    seed: int = 0,
    basis: BasisAssignment | None = None,
    phase_noise_prior: float | None = None,
) -> ChshEstimate:
    """CHSH value and bootstrap uncertainty from click records.

    Events are classified from their observed clicks, weighted by
    inverse detection probability (per-channel efficiencies; resolved
    double clicks additionally by the detector model's two-photon
    resolution efficiency), grouped per setting, and combined into the
    four-setting CHSH estimate. The standard error bootstraps whole
    windows within each setting, at least 1000 resamples by default.

    When a nominal basis and a phase-noise prior (radians on the summed
    phase) are supplied, each resample also perturbs the nominal phases
    through the mode's correlation model, widening the reported error.
    """
    if n_resamples < 2:
        raise ValidationError("need at least two bootstrap resamples")
    eps2 = 1.0 if detector is None else two_photon_resolution_efficiency(detector)
    if (
        mode is PostSelectionMode.NUMBER_RESOLVING
        and detector is not None
        and isinstance(detector, ClickOnly)
    ):
        raise EstimationError(
            "click-only detectors never resolve double clicks; "
            "number-resolving estimation is impossible"
        )

    x, y, window, counts = _records_to_arrays(records)
    masks = class_masks(counts)
    eta = (efficiency or EfficiencyMap()).as_array()

    weights = np.zeros(len(counts))
    pair_rows = masks["inlab"] | masks["cross"]
    first, last = _single_click_channels(counts)
    weights[pair_rows] = 1.0 / (eta[first[pair_rows]] * eta[last[pair_rows]])
    double_rows = masks["double"]
    double_channel = np.argmax(counts == 2, axis=1)
    if eps2 > 0.0:
        weights[double_rows] = 1.0 / (eta[double_channel[double_rows]] ** 2 * eps2)

    if mode is PostSelectionMode.NUMBER_RESOLVING:
        kept = masks["double"] | masks["inlab"] | masks["cross"]
    elif mode is PostSelectionMode.DISCARD_DOUBLES:
        kept = masks["inlab"] | masks["cross"]
    else:
        kept = masks["cross"]

    a_out, b_out = observed_outcome_arrays(counts)
    group_idx = (a_out == -1) * 2 + (b_out == -1)

    settings = ((0, 0), (0, 1), (1, 0), (1, 1))
    per_window: dict[tuple[int, int], np.ndarray] = {}
    point: dict[tuple[int, int], SettingCorrelation] = {}
    for sx, sy in settings:
        rows = (x == sx) & (y == sy)
        if not rows.any():
            raise EstimationError(f"no records for setting {(sx, sy)}")
        windows_here = np.unique(window[rows])
        w_pos = np.searchsorted(windows_here, window[rows])
        g = np.zeros((len(windows_here), 4))
        use = kept[rows]
        np.add.at(
            g,
            (w_pos[use], group_idx[rows][use]),
            weights[rows][use],
        )
        totals = g.sum()
        if totals <= 0.0:
            raise EstimationError(f"no events kept for setting {(sx, sy)} under {mode.value}")
        summed = g.sum(axis=0)
        corr = (summed[0] + summed[3] - summed[1] - summed[2]) / totals
        per_window[(sx, sy)] = g
        point[(sx, sy)] = SettingCorrelation(
            x=sx,
            y=sy,
            value=float(corr),
            n_kept=int(np.sum(use)),
            corrected_total=float(totals),
        )

    combo = (
        point[(0, 0)].value
        + point[(0, 1)].value
        + point[(1, 0)].value
        - point[(1, 1)].value
    )
    value = abs(combo)

    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(13, 0)))
    boot_corr: dict[tuple[int, int], np.ndarray] = {}
    for key, g in per_window.items():
        n_w = g.shape[0]
        picks = rng.multinomial(n_w, np.full(n_w, 1.0 / n_w), size=int(n_resamples))
        resampled = picks @ g
        totals = resampled.sum(axis=1)
        safe = np.maximum(totals, 1e-300)
        corr = (
            resampled[:, 0] + resampled[:, 3] - resampled[:, 1] - resampled[:, 2]
        ) / safe
        corr[totals <= 0.0] = np.nan
        if phase_noise_prior is not None:
            if basis is None:
                raise ValidationError(
                    "phase-noise prior needs the nominal basis to propagate"
                )
            cos_nominal = math.cos(basis.phase_settings(*key).phi_sum)
            eps = rng.normal(0.0, float(phase_noise_prior), size=int(n_resamples))
            cos_shifted = np.cos(basis.phase_settings(*key).phi_sum + eps)
            v_hat = np.array(
                [_model_overlap(c, cos_nominal, mode) for c in corr]
            )
            corr = np.array(
                [
                    _model_correlation(v, c_s, mode)
                    for v, c_s in zip(v_hat, cos_shifted)
                ]
            )
        boot_corr[key] = corr

    combos = (
        boot_corr[(0, 0)]
        + boot_corr[(0, 1)]
        + boot_corr[(1, 0)]
        - boot_corr[(1, 1)]
    )
    combos = np.abs(combos)
    combos = combos[np.isfinite(combos)]
    if len(combos) < 2:
        raise EstimationError("bootstrap produced no usable resamples")
    std = float(np.std(combos, ddof=1))

    return ChshEstimate(
        value=float(value),
        std=std,
        mode=mode,
        correlations=point,
        n_resamples=int(n_resamples),
    )
