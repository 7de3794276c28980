# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

C counterparts of fallback.py. The arithmetic (formula and evaluation
order) must stay identical to the pure-Python versions so that the two
implementations agree bit for bit on IEEE doubles.
"""

from cpython cimport array
from libc.math cimport ceil, floor

import array

IMPLEMENTATION = "compiled"

cdef array.array _D_TEMPLATE = array.array("d")


def resample_linear_1hz(times, powers):
    cdef double[:] ts = times
    cdef double[:] ps = powers
    cdef Py_ssize_t n = ts.shape[0]
    cdef long long start = <long long>ceil(ts[0])
    cdef long long stop = <long long>floor(ts[n - 1])
    cdef array.array out = array.clone(_D_TEMPLATE, 0, zero=False)
    if stop < start:
        return start, out
    array.resize(out, stop - start + 1)
    cdef double[:] ov = out
    cdef Py_ssize_t j = 0
    cdef long long t
    cdef double t0, t1, v
    for t in range(start, stop + 1):
        while j < n - 2 and ts[j + 1] < t:
            j += 1
        t0 = ts[j]
        t1 = ts[j + 1]
        if t == t0:
            v = ps[j]
        elif t == t1:
            v = ps[j + 1]
        else:
            v = ps[j] + (ps[j + 1] - ps[j]) * ((t - t0) / (t1 - t0))
        ov[t - start] = v
    return start, out


def rect_sum(values):
    cdef double[:] vs = values
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(vs.shape[0]):
        total += vs[i]
    return total


def trap_sum(times, powers):
    cdef double[:] ts = times
    cdef double[:] ps = powers
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(ts.shape[0] - 1):
        total += (ts[i + 1] - ts[i]) * (ps[i] + ps[i + 1]) * 0.5
    return total


def find_gaps(times, min_gap):
    cdef double[:] ts = times
    cdef double threshold = min_gap
    cdef Py_ssize_t i
    gaps = []
    for i in range(ts.shape[0] - 1):
        if ts[i + 1] - ts[i] > threshold:
            gaps.append((ts[i], ts[i + 1]))
    return gaps
