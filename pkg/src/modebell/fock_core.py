"""Exact two-photon states in small linear-optical networks.

Each photon carries a spatial mode index and a two-dimensional internal
label (a stand-in for its spectral/temporal degree of freedom). A
two-photon state is stored as a sparse map from unordered pairs of
(mode, internal) labels to complex amplitudes with bosonic
normalization, and evolves exactly under single-particle unitaries.

This layer is deliberately brute force. It is the reference the
closed-form protocol machinery is validated against, so it shares no
code with that machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError

# A spatial mode is addressed by a bare index; every operation checks the
# index against the mode count declared by the state it acts on.
ModeId = int

# Dimension of the internal (spectral/temporal) space. Two basis vectors
# are enough to encode any pairwise overlap between two photons.
INTERNAL_DIM = 2

# Single-particle label: (mode index, internal basis index).
Label = tuple[int, int]
LabelPair = tuple[Label, Label]

DEFAULT_PRUNE_THRESHOLD = 1e-15
_NORM_TOL = 1e-10
_INPUT_TOL = 1e-12

_SQRT2 = math.sqrt(2.0)

#: 50/50 beam splitter convention used throughout the package:
#: out_a = (in_a + in_b)/sqrt(2), out_b = (in_a - in_b)/sqrt(2).
HALF_BEAM_SPLITTER = np.array([[1.0, 1.0], [1.0, -1.0]]) / _SQRT2


@dataclass(frozen=True)
class InternalVector:
    """Unit vector in the two-dimensional internal space of one photon."""

    components: tuple[complex, complex]

    def __post_init__(self) -> None:
        norm_sq = sum(abs(c) ** 2 for c in self.components)
        if abs(norm_sq - 1.0) > _INPUT_TOL:
            raise ValidationError(
                f"internal vector must have unit norm, got |.|^2 = {norm_sq!r}"
            )

    def overlap(self, other: "InternalVector") -> complex:
        """Inner product <self|other>."""
        return sum(
            complex(a).conjugate() * complex(b)
            for a, b in zip(self.components, other.components)
        )


#: Reference internal states: E0 is the common basis vector, E1 orthogonal.
E0 = InternalVector((1.0 + 0.0j, 0.0 + 0.0j))
E1 = InternalVector((0.0 + 0.0j, 1.0 + 0.0j))


def overlap_from_visibility(v: float) -> InternalVector:
    """Internal vector whose squared overlap with E0 equals v.

    v = 1 gives a photon indistinguishable from one carrying E0 and
    v = 0 a fully distinguishable one; intermediate values interpolate.
    """
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"visibility must lie in [0, 1], got {v!r}")
    return InternalVector((complex(math.sqrt(v)), complex(math.sqrt(1.0 - v))))


@dataclass(frozen=True)
class SinglePhotonWavefunction:
    """One photon spread over spatial modes with a fixed internal state.

    amplitudes maps mode index to complex amplitude and must be
    normalized; n_modes declares the total mode count of the network the
    photon lives in.
    """

    amplitudes: Mapping[int, complex]
    internal: InternalVector
    n_modes: int

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValidationError("n_modes must be at least 1")
        for mode in self.amplitudes:
            if not 0 <= mode < self.n_modes:
                raise ValidationError(
                    f"mode index {mode} out of range for {self.n_modes} modes"
                )
        norm_sq = sum(abs(a) ** 2 for a in self.amplitudes.values())
        if abs(norm_sq - 1.0) > _INPUT_TOL:
            raise ValidationError(
                f"single-photon wavefunction must be normalized, got |.|^2 = {norm_sq!r}"
            )
        object.__setattr__(self, "amplitudes", MappingProxyType(dict(self.amplitudes)))


@dataclass(frozen=True)
class Phase:
    """Phase shifter: multiplies amplitudes on one mode by exp(i*phi)."""

    mode: ModeId
    phi: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValidationError("phase must be finite")

    def single_particle_unitary(self, n_modes: int) -> np.ndarray:
        _check_mode(self.mode, n_modes)
        u = np.eye(n_modes, dtype=complex)
        u[self.mode, self.mode] = complex(math.cos(self.phi), math.sin(self.phi))
        return u


@dataclass(frozen=True)
class BeamSplitter:
    """Two-mode mixer defined by a 2x2 unitary acting on (mode_a, mode_b)."""

    mode_a: ModeId
    mode_b: ModeId
    matrix: np.ndarray = field(default_factory=lambda: HALF_BEAM_SPLITTER.copy())

    def __post_init__(self) -> None:
        if self.mode_a == self.mode_b:
            raise ValidationError("beam splitter needs two distinct modes")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError(f"beam splitter matrix must be 2x2, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
            raise ValidationError("beam splitter matrix must be unitary to 1e-12")
        object.__setattr__(self, "matrix", m)

    def single_particle_unitary(self, n_modes: int) -> np.ndarray:
        _check_mode(self.mode_a, n_modes)
        _check_mode(self.mode_b, n_modes)
        u = np.eye(n_modes, dtype=complex)
        idx = [self.mode_a, self.mode_b]
        u[np.ix_(idx, idx)] = self.matrix
        return u


OpticalElement = Phase | BeamSplitter


def _check_mode(mode: int, n_modes: int) -> None:
    if not 0 <= mode < n_modes:
        raise ValidationError(f"mode index {mode} out of range for {n_modes} modes")


def _canonical_pair(a: Label, b: Label) -> LabelPair:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class TwoPhotonState:
    """Two bosons over n_modes spatial modes and INTERNAL_DIM internal states.

    amplitudes maps a canonically ordered, unordered pair of labels to a
    complex amplitude. A doubly occupied label (a, a) carries the usual
    bosonic normalization, so the squared magnitudes of all entries sum
    to one for a normalized state. Entries below the prune threshold are
    dropped at construction. Instances are immutable after construction.
    """

    n_modes: int
    amplitudes: Mapping[LabelPair, complex]
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValidationError("n_modes must be at least 1")
        cleaned: dict[LabelPair, complex] = {}
        for (a, b), amp in self.amplitudes.items():
            for mode, internal in (a, b):
                _check_mode(mode, self.n_modes)
                if not 0 <= internal < INTERNAL_DIM:
                    raise ValidationError(
                        f"internal index {internal} out of range"
                    )
            if abs(amp) < self.prune_threshold:
                continue
            key = _canonical_pair(a, b)
            cleaned[key] = cleaned.get(key, 0.0 + 0.0j) + complex(amp)
        object.__setattr__(self, "amplitudes", MappingProxyType(cleaned))

    def amplitude(self, a: Label, b: Label) -> complex:
        return self.amplitudes.get(_canonical_pair(a, b), 0.0 + 0.0j)


def norm(state: TwoPhotonState) -> float:
    """Total squared norm of the state."""
    return float(sum(abs(c) ** 2 for c in state.amplitudes.values()))


def product_state(
    psi1: SinglePhotonWavefunction, psi2: SinglePhotonWavefunction
) -> TwoPhotonState:
    """Symmetrized, normalized two-photon state of two independent photons.

    The bosonic symmetrization is applied over the joint (mode, internal)
    label, so partially overlapping photons interfere exactly as much as
    their single-particle overlap dictates. Two identical photons on the
    same mode produce a single doubly occupied label with amplitude 1.
    """
    if psi1.n_modes != psi2.n_modes:
        raise ValidationError("photons must share the same mode count")

    f = _flatten(psi1)
    g = _flatten(psi2)

    raw: dict[LabelPair, complex] = {}
    for a, fa in f.items():
        for b, gb in g.items():
            if a == b:
                key = (a, b)
                raw[key] = raw.get(key, 0.0 + 0.0j) + _SQRT2 * fa * gb
            else:
                key = _canonical_pair(a, b)
                raw[key] = raw.get(key, 0.0 + 0.0j) + fa * gb

    total = math.sqrt(sum(abs(c) ** 2 for c in raw.values()))
    if total <= 0.0:
        raise ValidationError("degenerate product state with zero norm")
    normalized = {k: c / total for k, c in raw.items()}
    return TwoPhotonState(n_modes=psi1.n_modes, amplitudes=normalized)


def _flatten(psi: SinglePhotonWavefunction) -> dict[Label, complex]:
    out: dict[Label, complex] = {}
    for mode, amp in psi.amplitudes.items():
        for internal, comp in enumerate(psi.internal.components):
            value = complex(amp) * complex(comp)
            if value != 0.0:
                out[(mode, internal)] = value
    return out


def apply_element(state: TwoPhotonState, element: OpticalElement) -> TwoPhotonState:
    """Evolve the state through one optical element, exactly.

    The element's single-particle unitary acts identically on each
    photon's mode label and leaves internal labels untouched. The norm
    is preserved to floating-point accuracy and the result is pruned.
    """
    u_mode = element.single_particle_unitary(state.n_modes)
    # Full single-particle unitary over (mode, internal) labels.
    u_full = np.kron(u_mode, np.eye(INTERNAL_DIM, dtype=complex))

    dim = state.n_modes * INTERNAL_DIM
    a_mat = np.zeros((dim, dim), dtype=complex)
    for (la, lb), amp in state.amplitudes.items():
        i = _flat_index(la)
        j = _flat_index(lb)
        if i == j:
            a_mat[i, i] = amp / _SQRT2
        else:
            a_mat[i, j] += amp / 2.0
            a_mat[j, i] += amp / 2.0

    a_out = u_full @ a_mat @ u_full.T

    new_amps: dict[LabelPair, complex] = {}
    for i in range(dim):
        for j in range(i, dim):
            if i == j:
                amp = _SQRT2 * a_out[i, i]
            else:
                amp = 2.0 * a_out[i, j]
            if abs(amp) >= state.prune_threshold:
                new_amps[(_unflat_index(i), _unflat_index(j))] = complex(amp)

    result = TwoPhotonState(
        n_modes=state.n_modes,
        amplitudes=new_amps,
        prune_threshold=state.prune_threshold,
    )
    before = norm(state)
    after = norm(result)
    if abs(after - before) > _NORM_TOL:
        raise ValidationError(
            f"element application changed the norm from {before} to {after}"
        )
    return result


def _flat_index(label: Label) -> int:
    mode, internal = label
    return mode * INTERNAL_DIM + internal


def _unflat_index(index: int) -> Label:
    return divmod(index, INTERNAL_DIM)


def occupation_probabilities(state: TwoPhotonState) -> dict[tuple[int, ...], float]:
    """Probability of each spatial occupation pattern, internals traced out.

    Keys are tuples of per-mode photon counts of length n_modes summing
    to two; values sum to the squared norm of the state. Patterns with
    zero probability after pruning are absent.
    """
    probs: dict[tuple[int, ...], float] = {}
    for (la, lb), amp in state.amplitudes.items():
        pattern = [0] * state.n_modes
        pattern[la[0]] += 1
        pattern[lb[0]] += 1
        key = tuple(pattern)
        probs[key] = probs.get(key, 0.0) + abs(amp) ** 2
    return probs


def apply_circuit(
    state: TwoPhotonState, elements: Iterable[OpticalElement]
) -> TwoPhotonState:
    """Apply a sequence of optical elements in order."""
    for element in elements:
        state = apply_element(state, element)
    return state
