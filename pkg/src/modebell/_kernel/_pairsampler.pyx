# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pair sampling kernel.

Mirrors the numpy reference implementation operation for operation
(same addition sequence for the category thresholds, same comparison
directions) so both backends emit bit-identical output from identical
random inputs. Keep the two files in sync.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef int MODEL_IDEAL = 0
cdef int MODEL_CLICK_ONLY = 1
cdef int MODEL_PSEUDO = 2

# Channel of each photon for the ten canonical patterns; photon 1 is the
# lower channel.
cdef unsigned char[10] PH1 = [0, 1, 2, 3, 0, 2, 0, 1, 0, 1]
cdef unsigned char[10] PH2 = [0, 1, 2, 3, 1, 3, 2, 3, 3, 2]


def sample_pairs(
    double overlap,
    double[::1] cos_phi,
    double[:, :] uniforms,
    double[::1] eta,
    int model_code,
    double split_ratio,
):
    """Sample true patterns and observed counts for a batch of pairs.

    Same contract as the numpy reference: cos_phi (n,), uniforms (n, 5)
    with columns (pattern, detect1, detect2, route1, route2), eta (4,).
    Returns (patterns, counts) as uint8 arrays of shapes (n,) and (n, 4).
    """
    cdef Py_ssize_t n = cos_phi.shape[0]
    patterns_arr = np.zeros(n, dtype=np.uint8)
    counts_arr = np.zeros((n, 4), dtype=np.uint8)
    if n == 0:
        return patterns_arr, counts_arr
    if uniforms.shape[0] != n or uniforms.shape[1] != 5:
        raise ValueError("uniforms must have shape (n, 5)")
    if eta.shape[0] != 4:
        raise ValueError("eta must have shape (4,)")
    if model_code not in (MODEL_IDEAL, MODEL_CLICK_ONLY, MODEL_PSEUDO):
        raise ValueError(f"unknown detector model code {model_code}")

    cdef unsigned char[::1] patterns = patterns_arr
    cdef unsigned char[:, ::1] counts = counts_arr

    cdef double v = overlap
    cdef double p_double = (1.0 + v) * 0.0625
    cdef double p_inlab = (1.0 - v) * 0.125
    cdef double t1 = p_double
    cdef double t2 = t1 + p_double
    cdef double t3 = t2 + p_double
    cdef double t4 = t3 + p_double
    cdef double t5 = t4 + p_inlab
    cdef double t6 = t5 + p_inlab

    cdef double s = split_ratio
    cdef Py_ssize_t i
    cdef double vc, p_minus, p_plus, t7, t8, t9, u0
    cdef int k, c1, c2, n_det, reported
    cdef bint det1, det2, resolved

    for i in range(n):
        vc = v * cos_phi[i]
        p_minus = (1.0 - vc) * 0.125
        p_plus = (1.0 + vc) * 0.125
        t7 = t6 + p_minus
        t8 = t7 + p_minus
        t9 = t8 + p_plus

        u0 = uniforms[i, 0]
        k = 0
        if u0 >= t1:
            k += 1
        if u0 >= t2:
            k += 1
        if u0 >= t3:
            k += 1
        if u0 >= t4:
            k += 1
        if u0 >= t5:
            k += 1
        if u0 >= t6:
            k += 1
        if u0 >= t7:
            k += 1
        if u0 >= t8:
            k += 1
        if u0 >= t9:
            k += 1
        patterns[i] = <unsigned char> k

        c1 = PH1[k]
        c2 = PH2[k]
        det1 = uniforms[i, 1] < eta[c1]
        det2 = uniforms[i, 2] < eta[c2]

        if c1 != c2:
            if det1:
                counts[i, c1] = 1
            if det2:
                counts[i, c2] = 1
        else:
            n_det = (1 if det1 else 0) + (1 if det2 else 0)
            if model_code == MODEL_IDEAL:
                reported = n_det
            elif model_code == MODEL_CLICK_ONLY:
                reported = 1 if n_det > 0 else 0
            else:
                if n_det == 2:
                    resolved = (uniforms[i, 3] < s) != (uniforms[i, 4] < s)
                    reported = 2 if resolved else 1
                else:
                    reported = n_det
            counts[i, c1] = <unsigned char> reported

    return patterns_arr, counts_arr
