"""Detector response models for the four detection channels.

Three models cover the experimentally relevant readouts: ideal
photon-number resolution, saturating click detectors, and pseudo
number resolution built from a fiber splitter feeding two click
detectors. Losses are per-photon and per-channel.

detection_distribution enumerates the exact observed-click distribution
for a given true pattern; sample_detection draws from the same physics
by simulating each photon's fate, so the two routes cross-check each
other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .protocol import CHANNEL_NAMES, DetectionPattern, alice_outcome, bob_outcome

N_CHANNELS = 4


@dataclass(frozen=True)
class EfficiencyMap:
    """Per-channel detection efficiencies in channel order (da1..db2)."""

    eta: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if len(self.eta) != N_CHANNELS:
            raise ValidationError("need one efficiency per channel")
        for value in self.eta:
            if not 0.0 < value <= 1.0 or not math.isfinite(value):
                raise ValidationError(
                    f"efficiencies must lie in (0, 1], got {self.eta}"
                )

    @classmethod
    def from_dict(cls, mapping: dict[str, float]) -> "EfficiencyMap":
        missing = set(CHANNEL_NAMES) - set(mapping)
        if missing:
            raise ValidationError(f"efficiency map missing channels {sorted(missing)}")
        extra = set(mapping) - set(CHANNEL_NAMES)
        if extra:
            raise ValidationError(f"efficiency map has unknown channels {sorted(extra)}")
        return cls(eta=tuple(float(mapping[name]) for name in CHANNEL_NAMES))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(CHANNEL_NAMES, self.eta))

    def as_array(self) -> np.ndarray:
        return np.array(self.eta, dtype=float)


@dataclass(frozen=True)
class ObservedClicks:
    """Reported counts per channel plus the number of unregistered photons.

    lost counts photons that produced no individual reading, whether
    swallowed by loss or merged into a saturated click; reported counts
    plus lost always equal the two photons of the event.
    """

    counts: tuple[int, int, int, int]
    lost: int

    def __post_init__(self) -> None:
        if len(self.counts) != N_CHANNELS:
            raise ValidationError("need counts for all four channels")
        if any(c < 0 for c in self.counts):
            raise ValidationError("counts must be non-negative")
        if sum(self.counts) + self.lost != 2:
            raise ValidationError("reported counts plus lost photons must equal 2")

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class IdealNumberResolving:
    """Reports the exact number of detected photons per channel."""


@dataclass(frozen=True)
class ClickOnly:
    """Saturating detector: any number of detected photons reads as one click."""


@dataclass(frozen=True)
class PseudoNumberResolving:
    """Two click detectors behind a fiber splitter on each channel.

    Each detected photon routes independently to one of the two
    sub-detectors with probability split_ratio. A bunched pair reads as
    two only when both photons are detected and land on different
    sub-detectors; otherwise it reads as one click.
    """

    split_ratio: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ValidationError(
                f"split ratio must lie strictly inside (0, 1), got {self.split_ratio!r}"
            )


DetectorModel = IdealNumberResolving | ClickOnly | PseudoNumberResolving

#: Codes used by the sampling kernels.
MODEL_IDEAL, MODEL_CLICK_ONLY, MODEL_PSEUDO = 0, 1, 2


def model_code(model: DetectorModel) -> int:
    if isinstance(model, IdealNumberResolving):
        return MODEL_IDEAL
    if isinstance(model, ClickOnly):
        return MODEL_CLICK_ONLY
    if isinstance(model, PseudoNumberResolving):
        return MODEL_PSEUDO
    raise ValidationError(f"unknown detector model {model!r}")


def model_split_ratio(model: DetectorModel) -> float:
    return model.split_ratio if isinstance(model, PseudoNumberResolving) else 0.5


def two_photon_resolution_efficiency(model: DetectorModel) -> float:
    """Probability that a bunched pair with both photons detected reads as 2.

    1 for ideal number resolution, 0 for saturating click detectors, and
    the probability of the photons separating at the splitter otherwise.
    """
    if isinstance(model, IdealNumberResolving):
        return 1.0
    if isinstance(model, ClickOnly):
        return 0.0
    if isinstance(model, PseudoNumberResolving):
        s = model.split_ratio
        return 2.0 * s * (1.0 - s)
    raise ValidationError(f"unknown detector model {model!r}")


def model_name(model: DetectorModel) -> str:
    return {
        MODEL_IDEAL: "ideal-number-resolving",
        MODEL_CLICK_ONLY: "click-only",
        MODEL_PSEUDO: "pseudo-number-resolving",
    }[model_code(model)]


def model_from_name(name: str, split_ratio: float = 0.5) -> DetectorModel:
    if name in ("ideal-number-resolving", "ideal"):
        return IdealNumberResolving()
    if name == "click-only":
        return ClickOnly()
    if name in ("pseudo-number-resolving", "pseudo"):
        return PseudoNumberResolving(split_ratio=split_ratio)
    raise ValidationError(f"unknown detector model name {name!r}")


def _pattern_channels(pattern: DetectionPattern) -> tuple[int, int]:
    """Channels of the two photons, lower channel first."""
    channels = []
    for index, count in enumerate(pattern.counts):
        channels.extend([index] * count)
    return (channels[0], channels[1])


def detection_distribution(
    pattern: DetectionPattern,
    model: DetectorModel,
    efficiency: EfficiencyMap | None = None,
) -> dict[ObservedClicks, float]:
    """Exact distribution of observed clicks for one true pattern.

    Enumerates the detection state of each photon (and, for the pseudo
    model, the sub-detector routing of a bunched pair) and accumulates
    the probability of each distinguishable reading. Values sum to 1.
    """
    eff = (efficiency or EfficiencyMap()).eta
    ch1, ch2 = _pattern_channels(pattern)
    out: dict[ObservedClicks, float] = {}

    def add(counts: tuple[int, int, int, int], prob: float) -> None:
        if prob <= 0.0:
            return
        key = ObservedClicks(counts=counts, lost=2 - sum(counts))
        out[key] = out.get(key, 0.0) + prob

    eta1, eta2 = eff[ch1], eff[ch2]
    if ch1 != ch2:
        for det1 in (0, 1):
            for det2 in (0, 1):
                prob = (eta1 if det1 else 1.0 - eta1) * (eta2 if det2 else 1.0 - eta2)
                counts = [0, 0, 0, 0]
                counts[ch1] += det1
                counts[ch2] += det2
                add(tuple(counts), prob)
        return out

    # Bunched pair on one channel.
    eta = eta1
    p_both = eta * eta
    p_one = 2.0 * eta * (1.0 - eta)
    p_none = (1.0 - eta) * (1.0 - eta)
    resolve = two_photon_resolution_efficiency(model)

    def counts_for(n: int) -> tuple[int, int, int, int]:
        counts = [0, 0, 0, 0]
        counts[ch1] = n
        return tuple(counts)

    add(counts_for(2), p_both * resolve)
    add(counts_for(1), p_both * (1.0 - resolve) + p_one)
    add(counts_for(0), p_none)
    return out


def sample_detection(
    pattern: DetectionPattern,
    model: DetectorModel,
    efficiency: EfficiencyMap | None = None,
    rng: np.random.Generator | None = None,
) -> ObservedClicks:
    """Draw one observed reading by simulating each photon's fate."""
    counts = sample_detection_counts(pattern, model, efficiency, rng or np.random.default_rng(), 1)[0]
    reported = tuple(int(c) for c in counts)
    return ObservedClicks(counts=reported, lost=2 - sum(reported))


def sample_detection_counts(
    pattern: DetectionPattern,
    model: DetectorModel,
    efficiency: EfficiencyMap | None,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """Vectorized mechanistic sampler; returns an (n, 4) array of counts.

    Each photon survives loss independently; bunched survivors are
    routed through the sub-detector splitter for the pseudo model and
    merged for the click-only model. This mirrors the Monte Carlo kernel
    and is compared against detection_distribution in tests.
    """
    eff = (efficiency or EfficiencyMap()).eta
    ch1, ch2 = _pattern_channels(pattern)
    det1 = rng.random(n) < eff[ch1]
    det2 = rng.random(n) < eff[ch2]
    counts = np.zeros((n, N_CHANNELS), dtype=np.uint8)
    if ch1 != ch2:
        counts[:, ch1] += det1
        counts[:, ch2] += det2
        return counts

    n_det = det1.astype(np.uint8) + det2.astype(np.uint8)
    code = model_code(model)
    if code == MODEL_IDEAL:
        counts[:, ch1] = n_det
    elif code == MODEL_CLICK_ONLY:
        counts[:, ch1] = np.minimum(n_det, 1)
    else:
        s = model_split_ratio(model)
        route1 = rng.random(n) < s
        route2 = rng.random(n) < s
        resolved = route1 != route2
        counts[:, ch1] = np.where(n_det == 2, np.where(resolved, 2, 1), n_det)
    return counts


# ---------------------------------------------------------------------------
# Classification of observed click patterns (shared by the simulation and
# the estimators).
# ---------------------------------------------------------------------------

CLASS_VACUUM = "vacuum"
CLASS_PARTIAL = "partial"
CLASS_DOUBLE = "double"
CLASS_INLAB = "inlab"
CLASS_CROSS = "cross"


def classify_clicks(counts: tuple[int, int, int, int]) -> str:
    """Coarse class of an observed reading.

    'double': two clicks on one channel; 'inlab': one click on each
    channel of a single lab; 'cross': one click in each lab; 'partial':
    a single click anywhere; 'vacuum': no clicks.
    """
    total = sum(counts)
    if total == 0:
        return CLASS_VACUUM
    if total == 1:
        return CLASS_PARTIAL
    if total != 2:
        raise ValidationError(f"observed counts {counts} exceed two photons")
    if 2 in counts:
        return CLASS_DOUBLE
    if counts[0] == 1 and counts[1] == 1:
        return CLASS_INLAB
    if counts[2] == 1 and counts[3] == 1:
        return CLASS_INLAB
    return CLASS_CROSS


def observed_outcome(counts: tuple[int, int, int, int]) -> tuple[int, int]:
    """Binary outcome pair read locally from observed counts."""
    return (alice_outcome(counts[0], counts[1]), bob_outcome(counts[2], counts[3]))


def class_masks(counts: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized classify_clicks over an (n, 4) array of observed counts.

    Returns one boolean mask per class; the five masks partition the
    rows.
    """
    counts = np.asarray(counts)
    total = counts.sum(axis=1)
    double = (counts == 2).any(axis=1)
    alice_pair = (counts[:, 0] == 1) & (counts[:, 1] == 1)
    bob_pair = (counts[:, 2] == 1) & (counts[:, 3] == 1)
    inlab = (total == 2) & (alice_pair | bob_pair)
    cross = (total == 2) & ~double & ~inlab
    return {
        CLASS_VACUUM: total == 0,
        CLASS_PARTIAL: total == 1,
        CLASS_DOUBLE: double,
        CLASS_INLAB: inlab,
        CLASS_CROSS: cross,
    }


def observed_outcome_arrays(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized observed_outcome over an (n, 4) array of counts."""
    counts = np.asarray(counts)
    a = np.where(
        (counts[:, 0] == 2)
        | (counts[:, 1] == 2)
        | ((counts[:, 0] == 1) & (counts[:, 1] == 0)),
        -1,
        1,
    )
    b = np.where(
        (counts[:, 2] == 2)
        | (counts[:, 3] == 2)
        | ((counts[:, 2] == 1) & (counts[:, 3] == 0)),
        -1,
        1,
    )
    return a, b
