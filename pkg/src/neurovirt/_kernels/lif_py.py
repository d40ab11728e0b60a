"""Pure-Python (numpy) LIF step kernel, fallback for the compiled core.

Accumulation order per neuron is fixed as leak first, then incoming rows
in ascending spike-id order, so results are bit-identical to the Cython
kernel under strict IEEE arithmetic.
"""

import numpy as np


def lif_step(potentials, weights, spike_ids, leak, v_thresh, v_reset):
    """Advance one synchronous LIF step in place; returns fired neuron ids."""
    potentials *= leak
    for idx in spike_ids:
        potentials += weights[idx]
    fired = np.nonzero(potentials >= v_thresh)[0].astype(np.int64)
    if fired.size:
        potentials[fired] = v_reset
    return fired
