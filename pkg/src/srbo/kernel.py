"""Kernel evaluation and the label-signed Gram matrix used by both SVM duals.

The bias is never stored: ``augment_bias`` appends a constant feature, which
adds 1 to every kernel value.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

FULL_CACHE_MAX_ROWS = 8000


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    sigma: float = 1.0
    augment_bias: bool = True

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError("RBF kernel needs sigma > 0")

    def to_dict(self):
        return {"kind": self.kind, "sigma": float(self.sigma),
                "augment_bias": bool(self.augment_bias)}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], sigma=float(d.get("sigma", 1.0)),
                   augment_bias=bool(d.get("augment_bias", True)))


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if spec.kind == "linear":
        v = float(a @ b)
    else:
        d = a - b
        v = float(np.exp(-(d @ d) / (2.0 * spec.sigma ** 2)))
    return v + 1.0 if spec.augment_bias else v


def cross_kernel(spec: KernelSpec, A, B):
    """Kernel block K[i, j] = k(A[i], B[j]), augmentation included."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    K = A @ B.T
    if spec.kind == "rbf":
        # in-place to keep peak memory at one block
        K *= -2.0
        K += np.einsum("ij,ij->i", A, A)[:, None]
        K += np.einsum("ij,ij->i", B, B)[None, :]
        np.maximum(K, 0.0, out=K)
        K *= -1.0 / (2.0 * spec.sigma ** 2)
        np.exp(K, out=K)
    if spec.augment_bias:
        K += 1.0
    return K


class GramOracle:
    """On-demand access to Q = diag(y) (K + 1) diag(y), or H = K + 1 without labels.

    ``cache="full"`` materializes the matrix once; ``cache="rows"`` keeps an
    LRU of at most ``capacity`` rows. ``cache="auto"`` picks full up to
    ``FULL_CACHE_MAX_ROWS`` samples.
    """

    def __init__(self, X, spec: KernelSpec, labels=None, cache="auto", capacity=1024):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D array")
        self.X = X
        self.spec = spec
        if labels is not None:
            labels = np.asarray(labels, dtype=np.float64).ravel()
            if labels.shape[0] != X.shape[0]:
                raise ValueError("labels and features disagree on sample count")
            if not np.all(np.abs(labels) == 1.0):
                raise ValueError("labels must be +1/-1")
        self.labels = labels
        if cache == "auto":
            cache = "full" if X.shape[0] <= FULL_CACHE_MAX_ROWS else "rows"
        if cache not in ("full", "rows"):
            raise ValueError(f"unknown cache policy {cache!r}")
        self.cache = cache
        self.capacity = max(1, int(capacity))
        self._matrix = None
        self._rows = OrderedDict()
        self._lock = threading.Lock()
        self._diag = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def one_class(self):
        return self.labels is None

    def _sign(self, K, rows=None, cols=None):
        if self.labels is None:
            return K
        yr = self.labels if rows is None else self.labels[rows]
        yc = self.labels if cols is None else self.labels[cols]
        K *= yr[:, None]
        K *= yc[None, :]
        return K

    def matrix(self):
        """Dense Q (or H). Computed once and kept when the policy is full."""
        if self._matrix is not None:
            return self._matrix
        M = self._sign(cross_kernel(self.spec, self.X, self.X))
        if not np.all(np.isfinite(M)):
            raise FloatingPointError("non-finite Gram entries")
        if self.cache == "full":
            with self._lock:
                if self._matrix is None:
                    self._matrix = M
            return self._matrix
        return M

    def dense(self):
        """The cached dense matrix, or None under the row policy."""
        if self.cache == "full":
            return self.matrix()
        return None

    def _compute_row(self, i):
        x = self.X[i]
        if self.spec.kind == "linear":
            r = self.X @ x
        else:
            d = self.X - x
            r = np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * self.spec.sigma ** 2))
        if self.spec.augment_bias:
            r = r + 1.0
        if self.labels is not None:
            r = r * (self.labels[i] * self.labels)
        return r

    def row(self, i):
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"row {i} out of range for {self.n} samples")
        if self.cache == "full":
            return self.matrix()[i]
        with self._lock:
            r = self._rows.get(i)
            if r is not None:
                self._rows.move_to_end(i)
                return r
        # computed outside the lock; a racing duplicate is bit-identical
        r = self._compute_row(i)
        r.setflags(write=False)
        with self._lock:
            self._rows[i] = r
            self._rows.move_to_end(i)
            while len(self._rows) > self.capacity:
                self._rows.popitem(last=False)
        return r

    def diag(self):
        if self._diag is None:
            if self._matrix is not None:
                d = np.diag(self._matrix).copy()
            elif self.spec.kind == "rbf":
                d = np.ones(self.n)
            else:
                d = np.einsum("ij,ij->i", self.X, self.X)
            if self._matrix is None and self.spec.augment_bias:
                d = d + 1.0
            # y_i^2 = 1, so the diagonal carries no label sign
            self._diag = d
        return self._diag

    def submatrix(self, rows, cols=None):
        rows = np.asarray(rows, dtype=np.intp)
        cols = rows if cols is None else np.asarray(cols, dtype=np.intp)
        if self.cache == "full":
            return self.matrix()[np.ix_(rows, cols)]
        K = cross_kernel(self.spec, self.X[rows], self.X[cols])
        return self._sign(K, rows, cols)

    def matvec(self, v):
        """Q @ v, touching only the columns where v is nonzero."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"vector length {v.shape} does not match {self.n}")
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return np.zeros(self.n)
        if self.cache == "full":
            M = self.matrix()
            if 4 * nz.size >= self.n:
                return M @ v
            # Q is symmetric: gather rows, which are contiguous
            return v[nz] @ M[nz]
        out = np.zeros(self.n)
        for j in nz:
            out += v[j] * self.row(j)
        return out

    def quad_form(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != (self.n,) or b.shape != (self.n,):
            raise ValueError("quad_form vectors must have one entry per sample")
        ia = np.flatnonzero(a)
        ib = np.flatnonzero(b)
        if ia.size == 0 or ib.size == 0:
            return 0.0
        if self.cache == "full":
            return float(a[ia] @ self.matrix()[np.ix_(ia, ib)] @ b[ib])
        return float(sum(a[i] * (self.row(i)[ib] @ b[ib]) for i in ia))


def gram_row(oracle: GramOracle, i):
    return oracle.row(i)


def quad_form(oracle: GramOracle, a, b):
    return oracle.quad_form(a, b)
