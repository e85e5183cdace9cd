"""Two-dimensional synthetic sets: Gaussian pairs, circle, XOR and two spirals."""
from __future__ import annotations

import numpy as np

from .data import Dataset

GENERATORS = ("gauss1", "gauss2", "gauss5", "circle", "xor", "spiral")


def _rng(seed):
    return np.random.default_rng(seed)


def _stack(pos, neg):
    X = np.vstack([pos, neg])
    y = np.r_[np.ones(len(pos)), -np.ones(len(neg))]
    return Dataset(X, y)


def gaussians(mu, n_per_class=200, seed=0, n_neg=None):
    """Class +1 from N((mu, mu), I), class -1 from N((-mu, -mu), I)."""
    rng = _rng(seed)
    n_neg = n_per_class if n_neg is None else n_neg
    pos = rng.normal(mu, 1.0, size=(n_per_class, 2))
    neg = rng.normal(-mu, 1.0, size=(n_neg, 2))
    return _stack(pos, neg)


def circle(n_per_class=200, seed=0, noise=0.1):
    """Inner disc (+1) inside a ring (-1)."""
    rng = _rng(seed)

    def ring(n, r_lo, r_hi):
        r = np.sqrt(rng.uniform(r_lo ** 2, r_hi ** 2, n))
        t = rng.uniform(0.0, 2 * np.pi, n)
        return np.c_[r * np.cos(t), r * np.sin(t)] + rng.normal(0.0, noise, (n, 2))

    return _stack(ring(n_per_class, 0.0, 1.0), ring(n_per_class, 1.5, 2.5))


def xor(n_per_class=200, seed=0, noise=0.25):
    """Four blobs at (+-1, +-1); label is the sign of x1 * x2."""
    rng = _rng(seed)

    def blobs(n, centers):
        pick = rng.integers(0, 2, n)
        return np.asarray(centers, dtype=float)[pick] + rng.normal(0.0, noise, (n, 2))

    pos = blobs(n_per_class, [[1, 1], [-1, -1]])
    neg = blobs(n_per_class, [[1, -1], [-1, 1]])
    return _stack(pos, neg)


def spiral(n_per_class=200, seed=0, turns=1.5, noise=0.05):
    """Two interleaved Archimedean spirals."""
    rng = _rng(seed)
    t = np.sqrt(rng.uniform(0.0, 1.0, n_per_class)) * turns * 2 * np.pi
    arm = np.c_[t * np.cos(t), t * np.sin(t)] / (turns * 2 * np.pi)
    pos = arm + rng.normal(0.0, noise, arm.shape)
    t2 = np.sqrt(rng.uniform(0.0, 1.0, n_per_class)) * turns * 2 * np.pi
    arm2 = -np.c_[t2 * np.cos(t2), t2 * np.sin(t2)] / (turns * 2 * np.pi)
    neg = arm2 + rng.normal(0.0, noise, arm2.shape)
    return _stack(pos, neg)


def generate(name, n_per_class=200, seed=0) -> Dataset:
    if name == "gauss1":
        return gaussians(1.0, n_per_class, seed)
    if name == "gauss2":
        return gaussians(2.0, n_per_class, seed)
    if name == "gauss5":
        return gaussians(5.0, n_per_class, seed)
    if name == "circle":
        return circle(n_per_class, seed)
    if name == "xor":
        return xor(n_per_class, seed)
    if name == "spiral":
        return spiral(n_per_class, seed)
    raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")


def anomaly_setup(mu_abnormal=-1.0, n_normal=200, seed=0, mu_normal=0.5, abnormal_frac=0.2):
    """(train, test) for one-class experiments.

    Normal points come from N((mu_normal, mu_normal), I) and abnormal ones
    from N((mu_abnormal, mu_abnormal), I), with abnormal_frac as many. The
    training set holds normal points only; the test set holds fresh normal
    points plus the abnormal ones, labelled +1 / -1.
    """
    rng = _rng(seed)
    train = rng.normal(mu_normal, 1.0, size=(n_normal, 2))
    test_pos = rng.normal(mu_normal, 1.0, size=(n_normal, 2))
    n_ab = max(1, int(round(abnormal_frac * n_normal)))
    test_neg = rng.normal(mu_abnormal, 1.0, size=(n_ab, 2))
    return Dataset(train), _stack(test_pos, test_neg)
