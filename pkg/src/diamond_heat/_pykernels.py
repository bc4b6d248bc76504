"""Pure numpy implementations of the real 1-d kernel sums.

Mirrors the compiled ``_ckernels`` module function for function; the term
counts are chosen by the caller, these routines only sum.
"""

import math

import numpy as np

# Rows of the (terms x points) work array processed at once.
_CHUNK = 1 << 16


def wrapped_gaussian(d, t, period, M):
    """``sum_{|m|<=M} exp(-(d + m P)^2 / 4t) / sqrt(4 pi t)``; ``d`` in ``[-P/2, P/2]``."""
    d = np.ascontiguousarray(d, dtype=float)
    out = np.zeros_like(d)
    inv4t = 1.0 / (4.0 * t)
    # Outer terms first: they are the smallest.
    for m in sorted(range(-M, M + 1), key=abs, reverse=True):
        z = d + m * period
        out += np.exp(-z * z * inv4t)
    return out / math.sqrt(4.0 * math.pi * t)


def cosine_series(d, t, period, K):
    """``1/P + (2/P) sum_{k=1..K} exp(-(2 pi k / P)^2 t) cos(2 pi k d / P)``."""
    d = np.ascontiguousarray(d, dtype=float)
    omega = 2.0 * math.pi / period
    out = np.zeros_like(d)
    for k in range(K, 0, -1):
        w = math.exp(-((omega * k) ** 2) * t)
        if w == 0.0:
            continue
        out += w * np.cos((omega * k) * d)
    return (1.0 + 2.0 * out) / period


def sine_series(a, b, t, L, K):
    """``(2/L) sum_{k=1..K} exp(-k^2 pi^2 t / L^2) sin(k pi a / L) sin(k pi b / L)``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    s = math.pi / L
    out = np.zeros(np.broadcast(a, b).shape)
    for k in range(K, 0, -1):
        w = math.exp(-((s * k) ** 2) * t)
        if w == 0.0:
            continue
        out += w * np.sin((s * k) * a) * np.sin((s * k) * b)
    return (2.0 / L) * out
