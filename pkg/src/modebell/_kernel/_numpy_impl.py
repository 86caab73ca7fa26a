"""Vectorized numpy implementation of the per-pair sampling kernel.

This is the reference implementation and the fallback when the compiled
extension is unavailable. The compiled kernel mirrors the arithmetic
below operation for operation (same order of additions and comparisons)
so that both backends produce bit-identical output from the same random
inputs.

Inputs per pair: the cosine of the realized summed phase and five
uniform variates (pattern selection, two detection draws, two routing
draws). Randomness is drawn by the caller; the kernel is deterministic.
"""

from __future__ import annotations

import numpy as np

# Channel of each photon for the ten patterns in canonical order
# (doubles on channels 0..3, in-lab pairs (0,1) and (2,3), crosses
# (0,2), (1,3), (0,3), (1,2)). Photon 1 is the lower channel.
PHOTON1_CHANNEL = np.array([0, 1, 2, 3, 0, 2, 0, 1, 0, 1], dtype=np.uint8)
PHOTON2_CHANNEL = np.array([0, 1, 2, 3, 1, 3, 2, 3, 3, 2], dtype=np.uint8)

MODEL_IDEAL, MODEL_CLICK_ONLY, MODEL_PSEUDO = 0, 1, 2


def sample_pairs(
    overlap: float,
    cos_phi: np.ndarray,
    uniforms: np.ndarray,
    eta: np.ndarray,
    model_code: int,
    split_ratio: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample true patterns and observed counts for a batch of pairs.

    cos_phi has shape (n,); uniforms has shape (n, 5) with columns
    (pattern, detect1, detect2, route1, route2); eta has shape (4,).
    Returns (patterns, counts) with shapes (n,) and (n, 4), both uint8.
    """
    cos_phi = np.ascontiguousarray(cos_phi, dtype=np.float64)
    uniforms = np.asarray(uniforms, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    n = cos_phi.shape[0]
    if n == 0:
        return (np.zeros(0, dtype=np.uint8), np.zeros((0, 4), dtype=np.uint8))

    v = float(overlap)
    p_double = (1.0 + v) * 0.0625
    p_inlab = (1.0 - v) * 0.125
    vc = v * cos_phi
    p_minus = (1.0 - vc) * 0.125
    p_plus = (1.0 + vc) * 0.125

    # Running thresholds built by the exact addition sequence the
    # compiled kernel uses, so category boundaries match bit for bit.
    t1 = p_double
    t2 = t1 + p_double
    t3 = t2 + p_double
    t4 = t3 + p_double
    t5 = t4 + p_inlab
    t6 = t5 + p_inlab
    t7 = t6 + p_minus
    t8 = t7 + p_minus
    t9 = t8 + p_plus

    u0 = uniforms[:, 0]
    patterns = (
        (u0 >= t1).astype(np.uint8)
        + (u0 >= t2)
        + (u0 >= t3)
        + (u0 >= t4)
        + (u0 >= t5)
        + (u0 >= t6)
        + (u0 >= t7)
        + (u0 >= t8)
        + (u0 >= t9)
    ).astype(np.uint8)

    ch1 = PHOTON1_CHANNEL[patterns]
    ch2 = PHOTON2_CHANNEL[patterns]
    det1 = uniforms[:, 1] < eta[ch1]
    det2 = uniforms[:, 2] < eta[ch2]

    counts = np.zeros((n, 4), dtype=np.uint8)
    rows = np.arange(n)
    bunched = ch1 == ch2
    separate = ~bunched

    m1 = separate & det1
    counts[rows[m1], ch1[m1]] = 1
    m2 = separate & det2
    counts[rows[m2], ch2[m2]] = 1

    if bunched.any():
        n_det = (bunched & det1).astype(np.uint8) + (bunched & det2)
        if model_code == MODEL_IDEAL:
            reported = n_det
        elif model_code == MODEL_CLICK_ONLY:
            reported = np.minimum(n_det, 1).astype(np.uint8)
        elif model_code == MODEL_PSEUDO:
            s = float(split_ratio)
            resolved = (uniforms[:, 3] < s) != (uniforms[:, 4] < s)
            reported = np.where(
                n_det == 2, np.where(resolved, 2, 1), n_det
            ).astype(np.uint8)
        else:
            raise ValueError(f"unknown detector model code {model_code}")
        counts[rows[bunched], ch1[bunched]] = reported[bunched]

    return patterns, counts
