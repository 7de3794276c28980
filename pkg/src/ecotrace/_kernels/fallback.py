"""Pure-Python kernels.

Reference implementations of the hot loops (1 Hz resampling, energy
summation, gap scanning). The compiled extension in _core.pyx mirrors
these bit for bit; both operate on array('d') buffers and plain floats
so results are interchangeable. Keep the arithmetic here in exact sync
with _core.pyx: same formula, same evaluation order.
"""

import math
from array import array

IMPLEMENTATION = "pure-python"


def resample_linear_1hz(times, powers):
    """Interpolate (times, powers) onto the integer-second grid.

    Returns (start_second, values) where values[i] is the power at
    start_second + i. The grid spans [ceil(times[0]), floor(times[-1])],
    so nothing is extrapolated. Grid points that coincide exactly with a
    source timestamp copy the source value unchanged.
    """
    n = len(times)
    start = math.ceil(times[0])
    stop = math.floor(times[n - 1])
    out = array("d")
    if stop < start:
        return start, out
    j = 0
    for t in range(start, stop + 1):
        while j < n - 2 and times[j + 1] < t:
            j += 1
        t0 = times[j]
        t1 = times[j + 1]
        if t == t0:
            v = powers[j]
        elif t == t1:
            v = powers[j + 1]
        else:
            v = powers[j] + (powers[j + 1] - powers[j]) * ((t - t0) / (t1 - t0))
        out.append(v)
    return start, out


def rect_sum(values):
    """Left-to-right sum of per-second watt readings (watt-seconds)."""
    total = 0.0
    for v in values:
        total += v
    return total


def trap_sum(times, powers):
    """Trapezoidal integral over a possibly non-uniform trace (watt-seconds)."""
    total = 0.0
    for i in range(len(times) - 1):
        total += (times[i + 1] - times[i]) * (powers[i] + powers[i + 1]) * 0.5
    return total


def find_gaps(times, min_gap):
    """Intervals between consecutive samples longer than min_gap seconds."""
    gaps = []
    for i in range(len(times) - 1):
        if times[i + 1] - times[i] > min_gap:
            gaps.append((times[i], times[i + 1]))
    return gaps
