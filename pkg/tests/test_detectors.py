"""Detector response models: exact distributions vs mechanistic sampling."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from modebell.detectors import (
    ClickOnly,
    EfficiencyMap,
    IdealNumberResolving,
    ObservedClicks,
    PseudoNumberResolving,
    class_masks,
    classify_clicks,
    detection_distribution,
    model_from_name,
    model_name,
    observed_outcome,
    observed_outcome_arrays,
    sample_detection,
    sample_detection_counts,
    two_photon_resolution_efficiency,
)
from modebell.errors import ValidationError
from modebell.protocol import PATTERNS, alice_outcome, bob_outcome

MODELS = (IdealNumberResolving(), ClickOnly(), PseudoNumberResolving(split_ratio=0.5))

etas = st.floats(min_value=0.01, max_value=1.0)


def all_observable_counts():
    """Every reported 4-tuple with at most two clicks total."""
    out = []
    for counts in itertools.product(range(3), repeat=4):
        if sum(counts) <= 2:
            out.append(counts)
    return out


class TestEfficiencyMap:
    def test_default_is_unit(self):
        assert EfficiencyMap().eta == (1.0, 1.0, 1.0, 1.0)

    def test_dict_round_trip(self):
        eff = EfficiencyMap(eta=(1.0, 0.8, 0.9, 0.7))
        assert EfficiencyMap.from_dict(eff.as_dict()) == eff

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            EfficiencyMap(eta=(1.0, 1.2, 1.0, 1.0))
        with pytest.raises(ValidationError):
            EfficiencyMap(eta=(-0.1, 1.0, 1.0, 1.0))
        with pytest.raises(ValidationError):
            EfficiencyMap(eta=(0.0, 1.0, 1.0, 1.0))


class TestModels:
    def test_resolution_efficiencies(self):
        assert two_photon_resolution_efficiency(IdealNumberResolving()) == 1.0
        assert two_photon_resolution_efficiency(ClickOnly()) == 0.0
        s = 0.3
        assert two_photon_resolution_efficiency(
            PseudoNumberResolving(split_ratio=s)
        ) == pytest.approx(2.0 * s * (1.0 - s))

    def test_name_round_trip(self):
        for model in MODELS:
            assert model_from_name(model_name(model)) == model

    def test_short_aliases(self):
        assert model_from_name("ideal") == IdealNumberResolving()
        assert model_from_name("pseudo", split_ratio=0.4) == PseudoNumberResolving(
            split_ratio=0.4
        )

    def test_unknown_name_rejected(self):
        with pytest.raises(ValidationError):
            model_from_name("avalanche")

    def test_split_ratio_validated(self):
        with pytest.raises(ValidationError):
            PseudoNumberResolving(split_ratio=0.0)
        with pytest.raises(ValidationError):
            PseudoNumberResolving(split_ratio=1.0)


class TestObservedClicks:
    def test_lost_must_balance(self):
        with pytest.raises(ValidationError):
            ObservedClicks(counts=(1, 0, 0, 0), lost=0)

    def test_total(self):
        assert ObservedClicks(counts=(1, 0, 1, 0), lost=0).total == 2


class TestDetectionDistribution:
    @given(st.sampled_from(PATTERNS), st.sampled_from(MODELS), etas, etas, etas, etas)
    @settings(max_examples=120, deadline=None)
    def test_normalized(self, pattern, model, e0, e1, e2, e3):
        dist = detection_distribution(
            pattern, model, EfficiencyMap(eta=(e0, e1, e2, e3))
        )
        assert abs(sum(dist.values()) - 1.0) < 1e-12
        assert all(p > 0.0 for p in dist.values())

    def test_unit_efficiency_ideal_is_identity(self):
        for pattern in PATTERNS:
            dist = detection_distribution(pattern, IdealNumberResolving())
            assert dist == {ObservedClicks(counts=pattern.counts, lost=0): 1.0}

    def test_click_only_never_reports_two(self):
        for pattern in PATTERNS:
            for clicks in detection_distribution(pattern, ClickOnly()):
                assert max(clicks.counts) <= 1

    def test_bunched_pair_split_between_outcomes(self):
        # One channel holding both photons, lossless pseudo model:
        # the pair resolves with probability 2s(1-s), else merges.
        s = 0.3
        pattern = PATTERNS[0]
        assert pattern.counts.count(2) == 1
        dist = detection_distribution(pattern, PseudoNumberResolving(split_ratio=s))
        resolved = ObservedClicks(counts=pattern.counts, lost=0)
        merged_counts = tuple(1 if c == 2 else 0 for c in pattern.counts)
        merged = ObservedClicks(counts=merged_counts, lost=1)
        assert dist[resolved] == pytest.approx(2.0 * s * (1.0 - s))
        assert dist[merged] == pytest.approx(1.0 - 2.0 * s * (1.0 - s))

    def test_loss_marginal_matches_binomial(self):
        # Cross pattern with distinct efficiencies: the total-click
        # distribution must match two independent Bernoulli trials.
        pattern = next(p for p in PATTERNS if p.counts == (0, 1, 1, 0))
        eff = EfficiencyMap(eta=(1.0, 0.8, 0.6, 1.0))
        dist = detection_distribution(pattern, IdealNumberResolving(), eff)
        by_total = {0: 0.0, 1: 0.0, 2: 0.0}
        for clicks, prob in dist.items():
            by_total[clicks.total] += prob
        assert by_total[2] == pytest.approx(0.8 * 0.6)
        assert by_total[0] == pytest.approx(0.2 * 0.4)
        assert by_total[1] == pytest.approx(0.8 * 0.4 + 0.2 * 0.6)


class TestSamplingAgreement:
    @pytest.mark.parametrize(
        "model, seed",
        [
            (IdealNumberResolving(), 101),
            (ClickOnly(), 102),
            (PseudoNumberResolving(split_ratio=0.35), 103),
        ],
        ids=["ideal", "click-only", "pseudo"],
    )
    def test_sampler_matches_distribution(self, model, seed):
        # Chi-squared goodness of fit per pattern, alpha shared across
        # the whole battery via a conservative per-test cut.
        eff = EfficiencyMap(eta=(0.95, 0.7, 0.85, 0.6))
        rng = np.random.default_rng(seed)
        n = 200_000
        for pattern in PATTERNS:
            dist = detection_distribution(pattern, model, eff)
            keys = sorted(dist, key=lambda c: c.counts)
            expected = np.array([dist[k] * n for k in keys])
            counts = sample_detection_counts(pattern, model, eff, rng, n)
            observed = np.array(
                [
                    int(np.all(counts == np.array(k.counts, dtype=np.uint8), axis=1).sum())
                    for k in keys
                ]
            )
            assert observed.sum() == n
            if len(keys) == 1:
                assert observed[0] == n
                continue
            chi2 = float(((observed - expected) ** 2 / expected).sum())
            cut = stats.chi2.ppf(1.0 - 1e-4, df=len(keys) - 1)
            assert chi2 < cut

    def test_single_draw_consistent(self):
        rng = np.random.default_rng(5)
        pattern = PATTERNS[0]
        clicks = sample_detection(pattern, ClickOnly(), rng=rng)
        assert clicks.total + clicks.lost == 2


class TestClassification:
    def test_scalar_vs_vectorized_classes(self):
        counts = all_observable_counts()
        arr = np.array(counts)
        masks = class_masks(arr)
        for i, c in enumerate(counts):
            label = classify_clicks(c)
            for name, mask in masks.items():
                assert bool(mask[i]) == (name == label)

    def test_masks_partition(self):
        arr = np.array(all_observable_counts())
        total = np.zeros(len(arr), dtype=int)
        for mask in class_masks(arr).values():
            total += mask.astype(int)
        assert np.all(total == 1)

    def test_scalar_vs_vectorized_outcomes(self):
        counts = all_observable_counts()
        arr = np.array(counts)
        a_vec, b_vec = observed_outcome_arrays(arr)
        for i, c in enumerate(counts):
            a, b = observed_outcome(c)
            assert a == alice_outcome(c[0], c[1])
            assert b == bob_outcome(c[2], c[3])
            assert (a, b) == (int(a_vec[i]), int(b_vec[i]))

    def test_three_clicks_rejected(self):
        with pytest.raises(ValidationError):
            classify_clicks((1, 1, 1, 0))
