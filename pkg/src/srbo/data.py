"""Dataset container, LIBSVM/CSV readers, seeded splitting and feature scaling."""
from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


class ParseError(DataError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataError("features must be 2-D")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        X.setflags(write=False)
        object.__setattr__(self, "features", X)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.float64).ravel()
            if y.shape[0] != X.shape[0]:
                raise DataError("label count does not match sample count")
            if not np.all((y == 1.0) | (y == -1.0)):
                raise DataError("labels must be +1 or -1")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def checksum(self):
        h = hashlib.sha256()
        h.update(np.asarray(self.features.shape, dtype=np.int64).tobytes())
        h.update(self.features.tobytes())
        if self.labels is not None:
            h.update(self.labels.tobytes())
        return h.hexdigest()

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        y = None if self.labels is None else self.labels[idx]
        return Dataset(self.features[idx], y)

    def with_features(self, X):
        return Dataset(X, self.labels)


def _text(stream):
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


def _map_label(tok, zero_as_negative, line):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad label {tok!r}", line) from None
    if v == 1.0:
        return 1.0
    if v == -1.0:
        return -1.0
    if v == 0.0 and zero_as_negative:
        return -1.0
    raise ParseError(f"label {tok!r} is not +1/-1", line)


def parse_libsvm(stream, zero_as_negative=False, n_features=None) -> Dataset:
    """Read ``<label> <idx>:<val> ...`` lines; indices are 1-based and strictly increasing."""
    rows, labels = [], []
    width = 0
    for lineno, raw in enumerate(_text(stream), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        labels.append(_map_label(toks[0], zero_as_negative, lineno))
        entries = {}
        last = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if idx <= last:
                raise ParseError(f"index {idx} not strictly increasing", lineno)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            entries[idx] = val
            last = idx
        width = max(width, last)
        rows.append(entries)
    if n_features is not None:
        if width > n_features:
            raise ParseError(f"feature index {width} exceeds n_features={n_features}")
        width = n_features
    X = np.zeros((len(rows), width))
    for r, entries in enumerate(rows):
        for idx, val in entries.items():
            X[r, idx - 1] = val
    return Dataset(X, np.array(labels) if rows else np.zeros(0))


def serialize_libsvm(data: Dataset) -> str:
    """Inverse of parse_libsvm; zeros are omitted, floats use shortest repr."""
    out = []
    for r in range(data.n_samples):
        lab = "+1" if data.labels is None or data.labels[r] > 0 else "-1"
        parts = [lab]
        for j in np.flatnonzero(data.features[r]):
            parts.append(f"{j + 1}:{float(data.features[r, j])!r}")
        out.append(" ".join(parts))
    return "\n".join(out) + ("\n" if out else "")


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def parse_csv(stream, label_column=None) -> Dataset:
    """Numeric CSV; a non-numeric first line is taken as a header.

    The label column must hold exactly two distinct values; the larger maps to +1.
    """
    lines = [ln.strip() for ln in _text(stream)]
    lines = [(i, ln) for i, ln in enumerate(lines, start=1) if ln]
    if lines and not all(_is_number(t) for t in lines[0][1].split(",")):
        lines = lines[1:]
    table = []
    width = None
    for lineno, ln in lines:
        cells = [c.strip() for c in ln.split(",")]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"ragged row: {len(cells)} fields, expected {width}", lineno)
        try:
            table.append([float(c) for c in cells])
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
    A = np.array(table, dtype=np.float64).reshape(len(table), width or 0)
    if label_column is None:
        return Dataset(A)
    col = label_column if label_column >= 0 else A.shape[1] + label_column
    if not 0 <= col < A.shape[1]:
        raise DataError(f"label column {label_column} out of range")
    raw = A[:, col]
    values = np.unique(raw)
    if values.size != 2:
        raise DataError(f"label column must have exactly 2 distinct values, found {values.size}")
    y = np.where(raw == values[1], 1.0, -1.0)
    return Dataset(np.delete(A, col, axis=1), y)


def load(path, fmt=None, label_column=-1, zero_as_negative=False) -> Dataset:
    if fmt is None:
        fmt = "csv" if str(path).lower().endswith(".csv") else "libsvm"
    with open(path) as fh:
        if fmt == "libsvm":
            return parse_libsvm(fh, zero_as_negative=zero_as_negative)
        if fmt == "csv":
            return parse_csv(fh, label_column=label_column)
    raise DataError(f"unknown format {fmt!r}")


_MASK64 = (1 << 64) - 1


def splitmix64(seed):
    """Infinite generator of 64-bit splitmix outputs."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def permutation(n, seed):
    """Fisher-Yates shuffle of range(n) driven by splitmix64(seed)."""
    perm = list(range(n))
    rng = splitmix64(seed)
    for i in range(n - 1, 0, -1):
        j = next(rng) % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.intp)


def split(data: Dataset, train_fraction=0.8, seed=0):
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must be in (0, 1)")
    n = data.n_samples
    n_train = int(math.floor(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise DataError(f"split of {n} samples at {train_fraction} leaves an empty side")
    perm = permutation(n, seed)
    return data.subset(perm[:n_train]), data.subset(perm[n_train:])


@dataclass(frozen=True)
class Scaler:
    method: str
    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: Dataset, method="minmax01"):
        X = data.features
        if method == "minmax01":
            lo, hi = X.min(axis=0), X.max(axis=0)
            shift, span = lo, hi - lo
        elif method == "zscore":
            shift, span = X.mean(axis=0), X.std(axis=0)
        elif method == "none":
            shift, span = np.zeros(X.shape[1]), np.ones(X.shape[1])
        else:
            raise DataError(f"unknown scaling method {method!r}")
        # constant features pass through untouched
        flat = ~(span > 0)
        shift = np.where(flat, 0.0, shift)
        span = np.where(flat, 1.0, span)
        return cls(method, shift, span)

    def transform(self, data: Dataset) -> Dataset:
        if data.n_features != self.shift.shape[0]:
            raise DataError("feature count differs from the fitted data")
        return data.with_features((data.features - self.shift) / self.scale)


def scale(train: Dataset, method="minmax01", *others: Dataset):
    """Fit on ``train`` and transform it plus any ``others`` with the same statistics."""
    sc = Scaler.fit(train, method)
    out = [sc.transform(train)] + [sc.transform(d) for d in others]
    return out[0] if not others else tuple(out)
