# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LIF step kernel.

Same elementwise operation order as the pure-Python fallback (leak scale,
then incoming rows in ascending spike-id order) so both backends produce
bit-identical potentials and spike sets.
"""

import numpy as np


def lif_step(double[::1] potentials, double[:, ::1] weights,
             long long[::1] spike_ids, double leak, double v_thresh,
             double v_reset):
    """Advance one synchronous LIF step in place; returns fired neuron ids."""
    cdef Py_ssize_t n = potentials.shape[0]
    cdef Py_ssize_t k = spike_ids.shape[0]
    cdef Py_ssize_t i, j, row
    cdef Py_ssize_t fired_count = 0

    for j in range(n):
        potentials[j] = potentials[j] * leak
    for i in range(k):
        row = <Py_ssize_t> spike_ids[i]
        for j in range(n):
            potentials[j] = potentials[j] + weights[row, j]

    fired_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] fired = fired_arr
    for j in range(n):
        if potentials[j] >= v_thresh:
            fired[fired_count] = j
            fired_count += 1
            potentials[j] = v_reset
    return fired_arr[:fired_count]
