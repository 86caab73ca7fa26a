"""Seeded Monte Carlo simulation of complete experimental runs.

A run visits the four CHSH settings in a fixed order, acquiring a
configured number of fixed-length windows per setting. Pair counts per
window are Poisson, each pair's summed phase is perturbed by Gaussian
noise and a linear drift, the true detection pattern is drawn from the
closed-form distribution, and the detector model turns it into observed
clicks.

Reproducibility contract: every window derives its own random substream
from (master seed, stream tag, setting index, window index) alone, so
identical configurations reproduce byte-identical records and the
result does not depend on the order in which windows are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .chsh import BasisAssignment, theta_basis
from .detectors import (
    DetectorModel,
    EfficiencyMap,
    ObservedClicks,
    PseudoNumberResolving,
    class_masks,
    model_code,
    model_split_ratio,
    observed_outcome_arrays,
)
from .errors import ValidationError
from .protocol import PostSelectionMode

#: Fixed visiting order of the four settings within a run.
SETTINGS_ORDER: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))

#: Stream tags keeping the substreams of different simulation kinds apart.
STREAM_RUN = 0
STREAM_HOM = 1
STREAM_FRINGE = 2

#: Noise interpreted as a fraction of one full fringe. The correlation
#: fringe has period 2*pi in either party's phase, which is the default
#: meaning; configurations may narrow it (for example to pi).
DEFAULT_FRINGE_LENGTH = 2.0 * math.pi


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines a simulated experimental run.

    overlap is the pairwise photon overlap at zero delay; pair_rate the
    expected detected pairs per second; phase_noise_frac scales
    per-pair Gaussian noise on the summed phase as a fraction of
    fringe_length_rad; drift_rad_per_s adds a linear phase drift in
    wall time. The seed fixes every draw of the run.
    """

    overlap: float = 0.952
    pair_rate: float = 50.0
    acquisition_s: float = 1.0
    windows_per_setting: int = 30
    basis: BasisAssignment = field(default_factory=lambda: theta_basis(math.pi / 8.0))
    detector: DetectorModel = field(default_factory=PseudoNumberResolving)
    efficiency: EfficiencyMap = field(default_factory=EfficiencyMap)
    phase_noise_frac: float = 0.02
    fringe_length_rad: float = DEFAULT_FRINGE_LENGTH
    drift_rad_per_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.overlap <= 1.0:
            raise ValidationError(f"overlap must lie in [0, 1], got {self.overlap!r}")
        if self.pair_rate < 0.0 or not math.isfinite(self.pair_rate):
            raise ValidationError(f"pair rate must be non-negative, got {self.pair_rate!r}")
        if self.acquisition_s <= 0.0 or not math.isfinite(self.acquisition_s):
            raise ValidationError(
                f"acquisition time must be positive, got {self.acquisition_s!r}"
            )
        if self.windows_per_setting < 1:
            raise ValidationError("need at least one window per setting")
        if self.phase_noise_frac < 0.0:
            raise ValidationError("phase noise fraction must be non-negative")
        if self.fringe_length_rad <= 0.0:
            raise ValidationError("fringe length must be positive")
        if not math.isfinite(self.drift_rad_per_s):
            raise ValidationError("drift must be finite")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")

    @property
    def phase_noise_sigma(self) -> float:
        """Standard deviation of the per-pair summed-phase noise, radians."""
        return self.phase_noise_frac * self.fringe_length_rad


@dataclass(frozen=True)
class ClickRecord:
    """One simulated detection event."""

    window_id: int
    x: int
    y: int
    observed: ObservedClicks
    wall_time_s: float


@dataclass(frozen=True)
class ScanConfig:
    """Grid and per-point acquisition of a scan.

    points is the scanned variable (a delay for coherence scans, phi_y
    for fringe scans); coherence_sigma sets the width of the Gaussian
    overlap profile used by delay scans.
    """

    points: tuple[float, ...]
    coherence_sigma: float = 1.0
    acquisition_s: float = 1.0

    def __post_init__(self) -> None:
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0:
            raise ValidationError("scan grid must be non-empty")
        if any(not math.isfinite(p) for p in pts):
            raise ValidationError("scan grid must be finite")
        diffs = np.diff(pts)
        if len(pts) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValidationError("scan grid must be strictly monotone")
        if self.coherence_sigma <= 0.0:
            raise ValidationError("coherence sigma must be positive")
        if self.acquisition_s <= 0.0:
            raise ValidationError("per-point acquisition must be positive")
        object.__setattr__(self, "points", pts)


def _rng_for(seed: int, stream: int, a: int, b: int) -> np.random.Generator:
    """Independent substream addressed by (stream, a, b) under one master seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream, a, b))
    return np.random.default_rng(ss)


def _draw_pairs(
    rng: np.random.Generator,
    n: int,
    overlap: float,
    phi_sum: float,
    noise_sigma: float,
    drift: float,
    t_start: float,
    acquisition: float,
    eta: np.ndarray,
    detector: DetectorModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw all randomness for one window and run it through the kernel.

    Draw order (Poisson count is drawn by the caller): one standard
    normal per pair for phase noise, then six uniforms per pair
    (pattern, two detection draws, two routing draws, arrival time).
    """
    normals = rng.standard_normal(n)
    u = rng.random((n, 6))
    times = t_start + u[:, 5] * acquisition
    phi = phi_sum + noise_sigma * normals + drift * times
    cos_phi = np.cos(phi)
    patterns, counts = _kernel.sample_pairs(
        overlap,
        cos_phi,
        u[:, :5],
        eta,
        model_code(detector),
        model_split_ratio(detector),
    )
    return patterns, counts, times


def simulate_window_arrays(
    config: RunConfig, setting_index: int, window_index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate one window, returning (patterns, counts, wall_times).

    patterns are true pattern indices in canonical order, counts the
    observed per-channel clicks. Depends only on the configuration and
    the two indices, never on what was simulated before.
    """
    if not 0 <= setting_index < len(SETTINGS_ORDER):
        raise ValidationError(f"setting index must be 0..3, got {setting_index}")
    if not 0 <= window_index < config.windows_per_setting:
        raise ValidationError(f"window index out of range: {window_index}")
    x, y = SETTINGS_ORDER[setting_index]
    settings = config.basis.phase_settings(x, y)
    global_window = setting_index * config.windows_per_setting + window_index
    t_start = global_window * config.acquisition_s
    rng = _rng_for(config.seed, STREAM_RUN, setting_index, window_index)
    n = int(rng.poisson(config.pair_rate * config.acquisition_s))
    return _draw_pairs(
        rng,
        n,
        config.overlap,
        settings.phi_sum,
        config.phase_noise_sigma,
        config.drift_rad_per_s,
        t_start,
        config.acquisition_s,
        config.efficiency.as_array(),
        config.detector,
    )


def _records_from_arrays(
    counts: np.ndarray, times: np.ndarray, window_id: int, x: int, y: int
) -> list[ClickRecord]:
    records = []
    for row, t in zip(counts, times):
        reported = (int(row[0]), int(row[1]), int(row[2]), int(row[3]))
        records.append(
            ClickRecord(
                window_id=window_id,
                x=x,
                y=y,
                observed=ObservedClicks(counts=reported, lost=2 - sum(reported)),
                wall_time_s=float(t),
            )
        )
    return records


def simulate_window(
    config: RunConfig, setting_index: int, window_index: int
) -> list[ClickRecord]:
    """Simulate one window as a list of click records."""
    _, counts, times = simulate_window_arrays(config, setting_index, window_index)
    x, y = SETTINGS_ORDER[setting_index]
    global_window = setting_index * config.windows_per_setting + window_index
    return _records_from_arrays(counts, times, global_window, x, y)


def simulate_run(config: RunConfig) -> list[ClickRecord]:
    """Simulate a complete four-setting run in the fixed setting order."""
    records: list[ClickRecord] = []
    for setting_index in range(len(SETTINGS_ORDER)):
        for window_index in range(config.windows_per_setting):
            records.extend(simulate_window(config, setting_index, window_index))
    return records


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomScanData:
    """Per-delay tallies of a two-photon coincidence scan."""

    delay: np.ndarray
    inlab_coinc: np.ndarray
    double_clicks: np.ndarray
    total_pairs: np.ndarray

    def __len__(self) -> int:
        return len(self.delay)


@dataclass(frozen=True)
class FringeScanData:
    """Per-point outcome-group tallies of a phase scan at fixed phi_x."""

    phi_x: float
    phi_y: np.ndarray
    n_pp: np.ndarray
    n_pm: np.ndarray
    n_mp: np.ndarray
    n_mm: np.ndarray
    n_doubles: np.ndarray
    mode: PostSelectionMode

    def __len__(self) -> int:
        return len(self.phi_y)

    @property
    def kept_total(self) -> np.ndarray:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def correlations(self) -> np.ndarray:
        """Per-point correlation estimates; points with no kept events are NaN."""
        kept = self.kept_total
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(
                kept > 0,
                (self.n_pp + self.n_mm - self.n_pm - self.n_mp) / np.maximum(kept, 1),
                np.nan,
            )


def overlap_at_delay(peak_overlap: float, delay: float, coherence_sigma: float) -> float:
    """Gaussian overlap profile: peak * exp(-delay^2 / (2 sigma^2))."""
    return peak_overlap * math.exp(-(delay**2) / (2.0 * coherence_sigma**2))


def simulate_hom_scan(config: RunConfig, scan: ScanConfig) -> HomScanData:
    """Simulate a delay scan of the in-lab coincidence dip.

    Both phases sit at zero (in-lab and double-click probabilities do
    not depend on them); each scan point gets its own window whose
    overlap follows the Gaussian coherence profile.
    """
    delays = np.array(scan.points, dtype=float)
    inlab = np.zeros(len(delays), dtype=np.int64)
    doubles = np.zeros(len(delays), dtype=np.int64)
    totals = np.zeros(len(delays), dtype=np.int64)
    for j, delay in enumerate(delays):
        v_tau = overlap_at_delay(config.overlap, float(delay), scan.coherence_sigma)
        rng = _rng_for(config.seed, STREAM_HOM, j, 0)
        n = int(rng.poisson(config.pair_rate * scan.acquisition_s))
        _, counts, _ = _draw_pairs(
            rng,
            n,
            v_tau,
            0.0,
            config.phase_noise_sigma,
            config.drift_rad_per_s,
            j * scan.acquisition_s,
            scan.acquisition_s,
            config.efficiency.as_array(),
            config.detector,
        )
        masks = class_masks(counts)
        inlab[j] = int(masks["inlab"].sum())
        doubles[j] = int(masks["double"].sum())
        totals[j] = n
    return HomScanData(
        delay=delays, inlab_coinc=inlab, double_clicks=doubles, total_pairs=totals
    )


def simulate_fringe_scan(
    config: RunConfig,
    phi_x_fixed: float,
    phi_y_grid,
    mode: PostSelectionMode | None = None,
    acquisition_s: float | None = None,
) -> FringeScanData:
    """Simulate an interference fringe: scan phi_y at fixed phi_x.

    Wall time accumulates across scan points, so a non-zero drift chirps
    the fringe exactly as a slowly drifting interferometer would.
    Events are grouped under the given post-selection mode (cross-lab
    only when omitted); observed double clicks are tallied separately.
    """
    if mode is None:
        mode = PostSelectionMode.CROSS_LAB_ONLY
    phi_y = np.array([float(p) for p in np.atleast_1d(phi_y_grid)], dtype=float)
    if phi_y.size == 0:
        raise ValidationError("fringe grid must be non-empty")
    if not np.all(np.isfinite(phi_y)):
        raise ValidationError("fringe grid must be finite")
    acq = config.acquisition_s if acquisition_s is None else float(acquisition_s)
    if acq <= 0.0:
        raise ValidationError("per-point acquisition must be positive")

    shape = len(phi_y)
    groups = np.zeros((shape, 4), dtype=np.int64)
    doubles = np.zeros(shape, dtype=np.int64)
    for j, phi in enumerate(phi_y):
        rng = _rng_for(config.seed, STREAM_FRINGE, j, 0)
        n = int(rng.poisson(config.pair_rate * acq))
        _, counts, _ = _draw_pairs(
            rng,
            n,
            config.overlap,
            phi_x_fixed + float(phi),
            config.phase_noise_sigma,
            config.drift_rad_per_s,
            j * acq,
            acq,
            config.efficiency.as_array(),
            config.detector,
        )
        masks = class_masks(counts)
        doubles[j] = int(masks["double"].sum())
        if mode is PostSelectionMode.NUMBER_RESOLVING:
            kept = masks["double"] | masks["inlab"] | masks["cross"]
        elif mode is PostSelectionMode.DISCARD_DOUBLES:
            kept = masks["inlab"] | masks["cross"]
        else:
            kept = masks["cross"]
        a, b = observed_outcome_arrays(counts)
        groups[j, 0] = int(np.sum(kept & (a == 1) & (b == 1)))
        groups[j, 1] = int(np.sum(kept & (a == 1) & (b == -1)))
        groups[j, 2] = int(np.sum(kept & (a == -1) & (b == 1)))
        groups[j, 3] = int(np.sum(kept & (a == -1) & (b == -1)))
    return FringeScanData(
        phi_x=float(phi_x_fixed),
        phi_y=phi_y,
        n_pp=groups[:, 0],
        n_pm=groups[:, 1],
        n_mp=groups[:, 2],
        n_mm=groups[:, 3],
        n_doubles=doubles,
        mode=mode,
    )
