"""Accuracy, AUC, speedup ratio and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math

import numpy as np

EXACT_MAX_N = 20


def accuracy(pred, truth):
    """Percentage of matching labels."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("prediction and label lengths differ")
    if pred.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return 100.0 * float(np.count_nonzero(pred == truth)) / pred.size


def _average_ranks(v):
    """1-based ranks with ties sharing the mean rank."""
    v = np.asarray(v, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores, labels):
    """Probability that a random positive outscores a random negative; ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    r = _average_ranks(scores)
    u = r[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def speedup_ratio(time_baseline, time_srbo):
    if not (time_baseline > 0 and time_srbo > 0):
        raise ValueError("times must be positive")
    return float(time_baseline) / float(time_srbo)


def _normal_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _exact_upper_tail(ranks, w_plus):
    """P(W+ >= w_plus) under H0 by enumerating all 2^n sign patterns.

    Ranks may be half-integers under ties, so they are doubled to stay
    integral and the distribution is built by convolution.
    """
    r2 = np.rint(2.0 * np.asarray(ranks)).astype(np.int64)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    k = int(round(2.0 * w_plus))
    return float(counts[k:].sum() / counts.sum())


def wilcoxon_signed_rank(times_a, times_b, exact=None):
    """One-sided test of H0: median(a - b) <= 0 against a - b > 0.

    Returns (W+, Z, p). Zero differences are dropped. With n <= 20 (or
    ``exact=True``) p comes from the exact null distribution; otherwise
    from the normal approximation. Z is always the normal statistic.
    """
    a = np.asarray(times_a, dtype=np.float64)
    b = np.asarray(times_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples differ in length")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise ValueError("all paired differences are zero")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0
    sd = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
    z = (w_plus - mean) / sd
    if exact is None:
        exact = n <= EXACT_MAX_N
    p = _exact_upper_tail(ranks, w_plus) if exact else _normal_sf(z)
    return w_plus, z, p
