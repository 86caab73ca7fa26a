"""Detection-pattern distributions for the two-copy interference protocol.

Two photons are each split between the two labs: photon 1 over modes
(A1, B1), photon 2 over (A2, B2). Alice applies a phase phi_x to A2 and
recombines (A1, A2) on a 50/50 splitter feeding detectors (DA1, DA2);
Bob applies phi_y to B1 and recombines (B1, B2) into (DB1, DB2). With
exactly two photons there are ten possible detector click patterns.

This module provides the closed-form pattern distribution as a function
of the phases and the pairwise photon overlap, the matching brute-force
oracle built on fock_core, the mapping from click patterns to binary
outcomes, and outcome-group probabilities under the three post-selection
conventions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import fock_core
from .errors import ValidationError
from .fock_core import (
    E0,
    HALF_BEAM_SPLITTER,
    BeamSplitter,
    Phase,
    SinglePhotonWavefunction,
    TwoPhotonState,
    overlap_from_visibility,
)

# Spatial mode indices used by the protocol circuit. After the
# measurement splitters the same indices address the detector channels:
# A1 -> DA1, A2 -> DA2, B1 -> DB1, B2 -> DB2.
MODE_A1, MODE_A2, MODE_B1, MODE_B2 = 0, 1, 2, 3
N_MODES = 4

#: Detector channel names in index order.
CHANNEL_NAMES = ("da1", "da2", "db1", "db2")

_SQRT_HALF = 1.0 / math.sqrt(2.0)

#: Alice's measurement splitter: DA1 = (A1 + A2)/sqrt(2), DA2 = (A1 - A2)/sqrt(2).
ALICE_SPLITTER = BeamSplitter(MODE_A1, MODE_A2, HALF_BEAM_SPLITTER)

#: Bob's measurement splitter: DB1 = (B1 - B2)/sqrt(2), DB2 = (B1 + B2)/sqrt(2).
BOB_SPLITTER = BeamSplitter(
    MODE_B1, MODE_B2, np.array([[1.0, -1.0], [1.0, 1.0]]) * _SQRT_HALF
)


@dataclass(frozen=True)
class PhaseSettings:
    """One joint choice of the two measurement phases, in radians."""

    phi_x: float
    phi_y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.phi_x) and math.isfinite(self.phi_y)):
            raise ValidationError("phases must be finite")

    @property
    def phi_sum(self) -> float:
        return self.phi_x + self.phi_y

    @property
    def phi_mean(self) -> float:
        """Average phase; the natural variable of the interference fringes."""
        return 0.5 * (self.phi_x + self.phi_y)


@dataclass(frozen=True)
class DetectionPattern:
    """Photon counts on the four detector channels, totalling two."""

    n_a1: int
    n_a2: int
    n_b1: int
    n_b2: int

    def __post_init__(self) -> None:
        counts = self.counts
        if any(c not in (0, 1, 2) for c in counts):
            raise ValidationError(f"channel counts must be 0, 1 or 2, got {counts}")
        if sum(counts) != 2:
            raise ValidationError(f"pattern must contain exactly two photons, got {counts}")

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.n_a1, self.n_a2, self.n_b1, self.n_b2)

    @property
    def alice_total(self) -> int:
        return self.n_a1 + self.n_a2

    @property
    def bob_total(self) -> int:
        return self.n_b1 + self.n_b2

    @property
    def is_double(self) -> bool:
        """Both photons on one detector."""
        return 2 in self.counts

    @property
    def is_cross_lab(self) -> bool:
        """One photon in each lab."""
        return self.alice_total == 1 and self.bob_total == 1


#: The ten patterns in canonical order: four doubles, two in-lab
#: coincidences, then the four cross-lab coincidences.
PATTERNS: tuple[DetectionPattern, ...] = (
    DetectionPattern(2, 0, 0, 0),
    DetectionPattern(0, 2, 0, 0),
    DetectionPattern(0, 0, 2, 0),
    DetectionPattern(0, 0, 0, 2),
    DetectionPattern(1, 1, 0, 0),
    DetectionPattern(0, 0, 1, 1),
    DetectionPattern(1, 0, 1, 0),
    DetectionPattern(0, 1, 0, 1),
    DetectionPattern(1, 0, 0, 1),
    DetectionPattern(0, 1, 1, 0),
)


@dataclass(frozen=True)
class OutcomeGroup:
    """Pair of binary outcomes assigned to a detection pattern."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a not in (-1, 1) or self.b not in (-1, 1):
            raise ValidationError("outcomes must be +1 or -1")


def alice_outcome(n_a1: int, n_a2: int) -> int:
    """Alice's binary outcome from her two channel counts.

    A double click or a lone DA1 click reads -1; vacuum, a lone DA2
    click, or an in-lab coincidence reads +1.
    """
    if n_a1 == 2 or n_a2 == 2:
        return -1
    if n_a1 == 1 and n_a2 == 0:
        return -1
    return 1


def bob_outcome(n_b1: int, n_b2: int) -> int:
    """Bob's binary outcome; DB1 plays the -1 role, DB2 the +1 role."""
    if n_b1 == 2 or n_b2 == 2:
        return -1
    if n_b1 == 1 and n_b2 == 0:
        return -1
    return 1


def outcome_of(pattern: DetectionPattern) -> OutcomeGroup:
    """Binary outcome pair assigned to a two-photon detection pattern."""
    return OutcomeGroup(
        a=alice_outcome(pattern.n_a1, pattern.n_a2),
        b=bob_outcome(pattern.n_b1, pattern.n_b2),
    )


class PostSelectionMode(enum.Enum):
    """Which detection patterns enter the correlation estimate.

    NUMBER_RESOLVING keeps all ten patterns. DISCARD_DOUBLES drops the
    four double-click patterns, as unavoidable with detectors that
    cannot count photons. CROSS_LAB_ONLY additionally drops the in-lab
    coincidences, keeping only events with one photon in each lab.
    """

    NUMBER_RESOLVING = "number-resolving"
    DISCARD_DOUBLES = "discard-doubles"
    CROSS_LAB_ONLY = "cross-lab-only"

    @property
    def cli_name(self) -> str:
        return self.value

    @classmethod
    def from_name(cls, name: str) -> "PostSelectionMode":
        for mode in cls:
            if mode.value == name:
                return mode
        raise ValidationError(
            f"unknown post-selection mode {name!r}; "
            f"expected one of {[m.value for m in cls]}"
        )

    def keeps(self, pattern: DetectionPattern) -> bool:
        if self is PostSelectionMode.NUMBER_RESOLVING:
            return True
        if self is PostSelectionMode.DISCARD_DOUBLES:
            return not pattern.is_double
        return pattern.is_cross_lab


@dataclass(frozen=True)
class PatternDistribution:
    """Probabilities of the ten detection patterns at one phase setting."""

    probabilities: dict[DetectionPattern, float]

    def __post_init__(self) -> None:
        if set(self.probabilities) != set(PATTERNS):
            raise ValidationError("distribution must cover exactly the ten patterns")
        values = list(self.probabilities.values())
        if any(p < -1e-12 for p in values):
            raise ValidationError("pattern probabilities must be non-negative")
        total = sum(values)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"pattern probabilities must sum to 1, got {total}")

    def __getitem__(self, pattern: DetectionPattern) -> float:
        return self.probabilities[pattern]

    def as_array(self) -> np.ndarray:
        """Probabilities in canonical pattern order."""
        return np.array([self.probabilities[p] for p in PATTERNS])


def _check_overlap(v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"overlap must lie in [0, 1], got {v!r}")


def pattern_probabilities(settings: PhaseSettings, overlap: float) -> np.ndarray:
    """Closed-form pattern probabilities in canonical order.

    With pairwise overlap v and summed phase Phi = phi_x + phi_y:
    each double click has probability (1+v)/16, each in-lab coincidence
    (1-v)/8, the (DA1,DB1) and (DA2,DB2) coincidences (1 - v cos Phi)/8,
    and the (DA1,DB2) and (DA2,DB1) coincidences (1 + v cos Phi)/8.
    """
    _check_overlap(overlap)
    v = float(overlap)
    cos_phi = math.cos(settings.phi_sum)
    p_double = (1.0 + v) / 16.0
    p_inlab = (1.0 - v) / 8.0
    p_cross_minus = (1.0 - v * cos_phi) / 8.0
    p_cross_plus = (1.0 + v * cos_phi) / 8.0
    return np.array(
        [
            p_double,
            p_double,
            p_double,
            p_double,
            p_inlab,
            p_inlab,
            p_cross_minus,
            p_cross_minus,
            p_cross_plus,
            p_cross_plus,
        ]
    )


def pattern_distribution(settings: PhaseSettings, overlap: float) -> PatternDistribution:
    """Closed-form distribution over the ten detection patterns."""
    probs = pattern_probabilities(settings, overlap)
    return PatternDistribution(dict(zip(PATTERNS, probs.tolist())))


def build_protocol_state(settings: PhaseSettings, overlap: float) -> TwoPhotonState:
    """Exact two-photon state after the source splitters and phase shifters.

    Photon 1 enters mode A1 and is split over (A1, B1); photon 2 enters
    A2 and is split over (A2, B2) carrying an internal state with squared
    overlap `overlap` against photon 1. The phases sit on A2 and B1.
    """
    _check_overlap(overlap)
    photon1 = SinglePhotonWavefunction(
        amplitudes={MODE_A1: 1.0 + 0.0j}, internal=E0, n_modes=N_MODES
    )
    photon2 = SinglePhotonWavefunction(
        amplitudes={MODE_A2: 1.0 + 0.0j},
        internal=overlap_from_visibility(overlap),
        n_modes=N_MODES,
    )
    state = fock_core.product_state(photon1, photon2)
    circuit = [
        BeamSplitter(MODE_A1, MODE_B1, HALF_BEAM_SPLITTER),
        BeamSplitter(MODE_A2, MODE_B2, HALF_BEAM_SPLITTER),
        Phase(MODE_A2, settings.phi_x),
        Phase(MODE_B1, settings.phi_y),
    ]
    return fock_core.apply_circuit(state, circuit)


def pattern_distribution_oracle(
    settings: PhaseSettings, overlap: float
) -> PatternDistribution:
    """Pattern distribution computed by exact state evolution.

    Builds the protocol state, applies both measurement splitters in the
    fixed conventions, and reads occupation probabilities. Used to
    validate the closed forms; it must agree with pattern_distribution
    to near machine precision for every setting and overlap.
    """
    state = build_protocol_state(settings, overlap)
    state = fock_core.apply_element(state, ALICE_SPLITTER)
    state = fock_core.apply_element(state, BOB_SPLITTER)
    occ = fock_core.occupation_probabilities(state)

    probs = {pattern: 0.0 for pattern in PATTERNS}
    for occupation, prob in occ.items():
        pattern = DetectionPattern(*occupation)
        if pattern not in probs:
            raise ValidationError(f"oracle produced unexpected pattern {occupation}")
        probs[pattern] += prob
    # The evolved state keeps unit norm, so a bare renormalization guards
    # only against accumulated rounding.
    total = sum(probs.values())
    return PatternDistribution({p: q / total for p, q in probs.items()})


@dataclass(frozen=True)
class GroupProbabilities:
    """Joint outcome probabilities after post-selection at one setting."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if any(p < -1e-12 for p in values):
            raise ValidationError("group probabilities must be non-negative")
        total = sum(values)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"group probabilities must sum to 1, got {total}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)


def group_probabilities(
    settings: PhaseSettings, overlap: float, mode: PostSelectionMode
) -> GroupProbabilities:
    """Outcome-group probabilities under a post-selection convention.

    Sums the closed-form pattern probabilities over the kept patterns of
    each outcome group and renormalizes by the kept total.
    """
    probs = pattern_probabilities(settings, overlap)
    sums = {(1, 1): 0.0, (1, -1): 0.0, (-1, 1): 0.0, (-1, -1): 0.0}
    kept = 0.0
    for pattern, prob in zip(PATTERNS, probs):
        if not mode.keeps(pattern):
            continue
        outcome = outcome_of(pattern)
        sums[(outcome.a, outcome.b)] += prob
        kept += prob
    if kept <= 0.0:
        raise ValidationError("post-selection kept zero probability")
    return GroupProbabilities(
        p_pp=sums[(1, 1)] / kept,
        p_pm=sums[(1, -1)] / kept,
        p_mp=sums[(-1, 1)] / kept,
        p_mm=sums[(-1, -1)] / kept,
    )
