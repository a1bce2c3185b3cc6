"""Samples, train/test splits and the labelled, weighted training set."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._seeding import make_rng


class InsufficientDataError(ValueError):
    """A sample is too small for the requested operation."""


class DimensionMismatchError(ValueError):
    """Two inputs disagree on the number of features."""


class CSVParseError(ValueError):
    """A CSV file could not be read as a numeric matrix."""


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sample:
    """An ordered, immutable set of ``d``-dimensional observations.

    One-dimensional input is read as ``n`` scalar observations (``d = 1``).
    Non-finite entries are rejected at construction.
    """

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        if rows.ndim != 2:
            raise ValueError(f"sample must be 2-dimensional, got shape {rows.shape}")
        if rows.shape[0] < 1:
            raise InsufficientDataError("sample must contain at least one row")
        if rows.shape[1] < 1:
            raise ValueError("sample rows must have dimension >= 1")
        if not np.all(np.isfinite(rows)):
            raise ValueError("sample contains NaN or infinite entries")
        object.__setattr__(self, "rows", _frozen(rows))

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.n

    def take(self, idx):
        return Sample(self.rows[np.asarray(idx, dtype=int)])


@dataclass(frozen=True)
class SplitPlan:
    train_p_idx: np.ndarray
    test_p_idx: np.ndarray
    train_q_idx: np.ndarray
    test_q_idx: np.ndarray
    ratio: float
    seed: int
    c_train: float = field(init=False)
    c_test: float = field(init=False)

    def __post_init__(self):
        for name in ("train_p_idx", "test_p_idx", "train_q_idx", "test_q_idx"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n_tr, n_te = len(self.train_p_idx), len(self.test_p_idx)
        m_tr, m_te = len(self.train_q_idx), len(self.test_q_idx)
        object.__setattr__(self, "c_train", n_tr / (n_tr + m_tr))
        object.__setattr__(self, "c_test", n_te / (n_te + m_te))

    def apply(self, sp, sq):
        """Return ``(train_p, test_p, train_q, test_q)`` as Samples."""
        return (
            sp.take(self.train_p_idx),
            sp.take(self.test_p_idx),
            sq.take(self.train_q_idx),
            sq.take(self.test_q_idx),
        )


def _train_size(count, ratio, which):
    n_tr = math.floor(ratio * count)
    if n_tr < 1 or count - n_tr < 1:
        raise InsufficientDataError(
            f"insufficient data: sample {which} has {count} rows, "
            f"cannot split with ratio {ratio}"
        )
    return n_tr


def split(sp, sq, ratio=0.5, seed=0):
    """Partition both samples into train and test parts.

    Each sample is shuffled independently and its first ``floor(ratio * n)``
    shuffled rows form the training part. The shuffle depends on ``seed``
    only, through a counter-based generator.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    n_tr = _train_size(sp.n, ratio, "P")
    m_tr = _train_size(sq.n, ratio, "Q")
    rng = make_rng(seed)
    perm_p = rng.permutation(sp.n)
    perm_q = rng.permutation(sq.n)
    return SplitPlan(
        train_p_idx=np.sort(perm_p[:n_tr]),
        test_p_idx=np.sort(perm_p[n_tr:]),
        train_q_idx=np.sort(perm_q[:m_tr]),
        test_q_idx=np.sort(perm_q[m_tr:]),
        ratio=float(ratio),
        seed=int(seed),
    )


@dataclass(frozen=True)
class LabeledTrainSet:
    """Pooled training rows with label 1 for P, 0 for Q.

    ``weights`` are the per-row weights ``1 - c`` (P rows) and ``c`` (Q rows).
    ``sample_weight`` rescales them by the per-label row count so that a
    weighted sum of squared errors equals ``(1-c) E_P[(1-h)^2] + c E_Q[h^2]``;
    learners fit with ``sample_weight``.
    """

    features: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    c: float

    def __post_init__(self):
        for name in ("features", "labels", "weights"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_p(self):
        return int(np.sum(self.labels == 1))

    @property
    def n_q(self):
        return int(np.sum(self.labels == 0))

    @property
    def sample_weight(self):
        is_p = self.labels == 1
        return np.where(is_p, self.weights / self.n_p, self.weights / self.n_q)


def label_and_weight(train_p, train_q):
    if train_p.d != train_q.d:
        raise DimensionMismatchError(
            f"dimension mismatch: P has {train_p.d} columns, Q has {train_q.d}"
        )
    n_tr, m_tr = train_p.n, train_q.n
    c = n_tr / (n_tr + m_tr)
    features = np.vstack([train_p.rows, train_q.rows])
    labels = np.concatenate([np.ones(n_tr), np.zeros(m_tr)])
    weights = np.concatenate([np.full(n_tr, 1.0 - c), np.full(m_tr, c)])
    return LabeledTrainSet(features=features, labels=labels, weights=weights, c=c)


def read_csv(path, header=False):
    """Read a comma-separated numeric file into a :class:`Sample`.

    ``header=True`` skips the first line. Every remaining line is one
    observation; all columns must parse as floats ('.' decimal separator).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                raise CSVParseError(
                    f"parse error in {path} line {lineno}: non-numeric value"
                ) from None
    if not rows:
        raise CSVParseError(f"parse error in {path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CSVParseError(f"parse error in {path}: ragged rows {sorted(widths)}")
    try:
        return Sample(np.array(rows))
    except ValueError as exc:
        raise CSVParseError(f"parse error in {path}: {exc}") from None
