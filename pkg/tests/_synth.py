"""Shared builders and randomized invariant batteries used across tests."""

from __future__ import annotations

import math

import numpy as np

from modebell.detectors import ObservedClicks
from modebell.fock_core import (
    BeamSplitter,
    InternalVector,
    Phase,
    SinglePhotonWavefunction,
    apply_circuit,
    norm,
    occupation_probabilities,
    overlap_from_visibility,
    product_state,
)
from modebell.montecarlo import (
    STREAM_RUN,
    ClickRecord,
    RunConfig,
    _rng_for,
    simulate_window_arrays,
)
from modebell.protocol import (
    PATTERNS,
    PhaseSettings,
    pattern_distribution,
    pattern_probabilities,
)


# ---------------------------------------------------------------------------
# Synthetic record construction
# ---------------------------------------------------------------------------


def records_from_pattern_counts(
    per_setting: dict[tuple[int, int], dict[tuple[int, int, int, int], int]],
    windows_per_setting: int = 10,
) -> list[ClickRecord]:
    """Deterministic records with given observed-count multiplicities.

    Events are spread round-robin over the windows of their setting so
    window bootstraps see a balanced layout.
    """
    records: list[ClickRecord] = []
    setting_order = sorted(per_setting)
    for s_idx, key in enumerate(setting_order):
        x, y = key
        event_idx = 0
        for counts, multiplicity in sorted(per_setting[key].items()):
            observed = ObservedClicks(counts=counts, lost=2 - sum(counts))
            for _ in range(multiplicity):
                window = s_idx * windows_per_setting + (event_idx % windows_per_setting)
                records.append(
                    ClickRecord(
                        window_id=window,
                        x=x,
                        y=y,
                        observed=observed,
                        wall_time_s=0.0,
                    )
                )
                event_idx += 1
    return records


def exact_records_for_settings(
    settings_by_key: dict[tuple[int, int], PhaseSettings],
    overlap: float,
    n_per_setting: int,
    windows_per_setting: int = 10,
) -> list[ClickRecord]:
    """Records whose frequencies equal the ideal pattern probabilities.

    n_per_setting must make every probability * n an integer (within
    1e-6) so the construction is exact; raises otherwise.
    """
    per_setting: dict[tuple[int, int], dict[tuple[int, int, int, int], int]] = {}
    for key, settings in settings_by_key.items():
        probs = pattern_probabilities(settings, overlap)
        counts_map: dict[tuple[int, int, int, int], int] = {}
        for pattern, p in zip(PATTERNS, probs):
            expected = p * n_per_setting
            rounded = round(expected)
            if abs(expected - rounded) > 1e-6:
                raise AssertionError(
                    f"n={n_per_setting} does not make {p} an integer count"
                )
            if rounded:
                counts_map[pattern.counts] = rounded
        per_setting[key] = counts_map
    return records_from_pattern_counts(per_setting, windows_per_setting)


# ---------------------------------------------------------------------------
# Randomized invariant batteries (shared between module tests and the
# acceptance gate)
# ---------------------------------------------------------------------------


def random_two_photon_state(rng: np.random.Generator):
    """Random normalized two-photon product state on 2..4 modes."""
    n_modes = int(rng.integers(2, 5))

    def random_photon() -> SinglePhotonWavefunction:
        amps = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
        amps /= np.linalg.norm(amps)
        comps = rng.normal(size=2) + 1j * rng.normal(size=2)
        comps /= np.linalg.norm(comps)
        return SinglePhotonWavefunction(
            amplitudes={i: complex(a) for i, a in enumerate(amps)},
            internal=InternalVector(tuple(complex(c) for c in comps)),
            n_modes=n_modes,
        )

    return product_state(random_photon(), random_photon())


def random_element(rng: np.random.Generator, n_modes: int):
    if rng.random() < 0.5:
        return Phase(mode=int(rng.integers(n_modes)), phi=float(rng.uniform(-6, 6)))
    a, b = rng.choice(n_modes, size=2, replace=False)
    # Random U(2) from a QR decomposition.
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    q = q @ np.diag(np.diag(r) / np.abs(np.diag(r)))
    return BeamSplitter(mode_a=int(a), mode_b=int(b), matrix=q)


def unitarity_battery(n: int = 1000, seed: int = 2024) -> float:
    """Worst norm change over random states and random elements."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        state = random_two_photon_state(rng)
        element = random_element(rng, state.n_modes)
        before = norm(state)
        after = norm(apply_circuit(state, [element]))
        worst = max(worst, abs(after - before))
    return worst


def oracle_equivalence_battery(n: int = 1000, seed: int = 7) -> float:
    """Worst per-entry gap between closed-form and brute-force distributions."""
    from modebell.protocol import pattern_distribution_oracle

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        settings = PhaseSettings(
            phi_x=float(rng.uniform(-2 * math.pi, 2 * math.pi)),
            phi_y=float(rng.uniform(-2 * math.pi, 2 * math.pi)),
        )
        v = float(rng.uniform(0.0, 1.0))
        closed = pattern_distribution(settings, v)
        brute = pattern_distribution_oracle(settings, v)
        for pattern in PATTERNS:
            gap = abs(closed.probabilities[pattern] - brute.probabilities[pattern])
            worst = max(worst, gap)
    return worst


def poisson_battery(n_windows: int = 100_000, rate: float = 5.0, seed: int = 3) -> float:
    """Sample-variance to sample-mean ratio of the per-window pair counts."""
    counts = np.empty(n_windows)
    for w in range(n_windows):
        rng = _rng_for(seed, STREAM_RUN, 0, w)
        counts[w] = rng.poisson(rate)
    return float(np.var(counts, ddof=1) / np.mean(counts))


def convergence_battery(n_pairs: int = 1_000_000, overlap: float = 0.7) -> float:
    """Worst z-score of empirical pattern frequencies vs the closed form.

    One huge noiseless window with ideal detectors; returns the largest
    |empirical - exact| / binomial sigma over the ten patterns.
    """
    from modebell.detectors import IdealNumberResolving

    config = RunConfig(
        overlap=overlap,
        pair_rate=float(n_pairs),
        acquisition_s=1.0,
        windows_per_setting=1,
        detector=IdealNumberResolving(),
        phase_noise_frac=0.0,
        seed=99,
    )
    patterns, _, _ = simulate_window_arrays(config, 0, 0)
    n = len(patterns)
    freq = np.bincount(patterns, minlength=10) / n
    settings = config.basis.phase_settings(0, 0)
    exact = pattern_probabilities(settings, overlap)
    sigma = np.sqrt(exact * (1.0 - exact) / n)
    return float(np.max(np.abs(freq - exact) / sigma))


def no_signaling_battery(n_grid: int = 40) -> float:
    """Worst variation of one party's marginal as the other's phase moves."""
    worst = 0.0
    grid = np.linspace(-math.pi, math.pi, n_grid)
    for v in (0.0, 0.3, 0.7, 1.0):
        alice_ref = None
        bob_ref = None
        for phi in grid:
            dist = pattern_distribution(PhaseSettings(phi_x=0.4, phi_y=float(phi)), v)
            marginal = _alice_plus_marginal(dist)
            if alice_ref is None:
                alice_ref = marginal
            worst = max(worst, abs(marginal - alice_ref))
            dist = pattern_distribution(PhaseSettings(phi_x=float(phi), phi_y=0.4), v)
            marginal = _bob_plus_marginal(dist)
            if bob_ref is None:
                bob_ref = marginal
            worst = max(worst, abs(marginal - bob_ref))
    return worst


def _alice_plus_marginal(dist) -> float:
    from modebell.protocol import outcome_of

    return sum(
        p for pattern, p in dist.probabilities.items() if outcome_of(pattern).a == 1
    )


def _bob_plus_marginal(dist) -> float:
    from modebell.protocol import outcome_of

    return sum(
        p for pattern, p in dist.probabilities.items() if outcome_of(pattern).b == 1
    )


def outcome_locality_check() -> bool:
    """Outcomes factor through per-lab counts only."""
    from modebell.protocol import alice_outcome, bob_outcome, outcome_of

    for pattern in PATTERNS:
        group = outcome_of(pattern)
        if group.a != alice_outcome(pattern.n_a1, pattern.n_a2):
            return False
        if group.b != bob_outcome(pattern.n_b1, pattern.n_b2):
            return False
    return True


def order_invariance_check(seed: int = 17) -> bool:
    """Windows reproduce identically when evaluated in scrambled order."""
    config = RunConfig(
        overlap=0.9, pair_rate=200.0, windows_per_setting=5, seed=seed
    )
    sequential = {}
    for s in range(4):
        for w in range(config.windows_per_setting):
            sequential[(s, w)] = simulate_window_arrays(config, s, w)
    shuffled_keys = list(sequential)
    rng = np.random.default_rng(0)
    rng.shuffle(shuffled_keys)
    for key in shuffled_keys:
        patterns, counts, times = simulate_window_arrays(config, *key)
        ref_patterns, ref_counts, ref_times = sequential[key]
        if not (
            np.array_equal(patterns, ref_patterns)
            and np.array_equal(counts, ref_counts)
            and np.array_equal(times, ref_times)
        ):
            return False
    return True
