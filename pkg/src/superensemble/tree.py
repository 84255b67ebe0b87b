"""Unpruned binary decision trees with Hellinger, Gini and entropy split criteria.

Trees are stored as flat node arrays in pre-order (node 0 is the root and a
node's left child immediately follows it). Class labels are 1 (positive,
the majority class) and 0 (negative).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._accel import HAS_NUMBA, njit
from .data import Dataset

SQRT2 = math.sqrt(2.0)
# gains at or below this are rounding noise on a mathematically zero gain
MIN_GAIN = 1e-12
TIE_TOL = 1e-12


class Criterion(str, enum.Enum):
    HELLINGER = "hellinger"
    HELLINGER_AS_PRINTED = "hellinger_as_printed"
    GINI = "gini"
    ENTROPY = "entropy"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_").lower())
        except ValueError:
            choices = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown split criterion {value!r}; choose from {choices}") from None

    @property
    def code(self) -> int:
        return _CODES[self]


_CODES = {Criterion.HELLINGER: 0, Criterion.HELLINGER_AS_PRINTED: 1, Criterion.GINI: 2, Criterion.ENTROPY: 3}


# ---------------------------------------------------------------------------
# scalar scoring, shared by both backends


@njit
def _impurity(pos, neg, code):
    n = pos + neg
    p = pos / n
    q = neg / n
    if code == 2:
        return 1.0 - (p * p + q * q)
    h = 0.0
    if p > 0.0:
        h -= p * math.log2(p)
    if q > 0.0:
        h -= q * math.log2(q)
    return h


@njit
def _score(lp, ln, rp, rn, code):
    """Split score for left counts (lp, ln) and right counts (rp, rn); higher is better."""
    if code <= 1:
        tp = lp + rp
        tn = ln + rn
        fpl = lp / tp
        fnl = ln / tn
        fpr = rp / tp
        fnr = rn / tn
        if code == 0:
            a = math.sqrt(fpl) - math.sqrt(fnl)
            b = math.sqrt(fpr) - math.sqrt(fnr)
        else:
            a = fpl - fnl
            b = fpr - fnr
        return math.sqrt(a * a + b * b)
    n = lp + ln + rp + rn
    nl = lp + ln
    nr = rp + rn
    return _impurity(lp + rp, ln + rn, code) - (nl / n * _impurity(lp, ln, code) + nr / n * _impurity(rp, rn, code))


def hellinger_distance(counts_left, counts_right, variant="hellinger") -> float:
    """Hellinger distance between the class-conditional partition frequencies.

    ``counts_left`` and ``counts_right`` are ``(positives, negatives)``.
    ``variant="hellinger"`` takes square roots of the frequencies before
    differencing (the usual HDDT form); ``"hellinger_as_printed"`` differences
    the raw frequencies.
    """
    variant = Criterion.parse(variant)
    if variant not in (Criterion.HELLINGER, Criterion.HELLINGER_AS_PRINTED):
        raise ValueError(f"{variant.value} is not a Hellinger variant")
    (lp, ln), (rp, rn) = counts_left, counts_right
    if min(lp, ln, rp, rn) < 0:
        raise ValueError("class counts must be non-negative")
    if lp + rp < 1 or ln + rn < 1:
        raise ValueError("Hellinger distance needs both classes present at the parent node")
    return float(_score(float(lp), float(ln), float(rp), float(rn), variant.code))


def criterion_score(parent_counts, left_counts, right_counts, criterion) -> float:
    """Score a binary split of ``parent_counts`` into two non-empty children."""
    criterion = Criterion.parse(criterion)
    (lp, ln), (rp, rn) = left_counts, right_counts
    if lp + ln == 0 or rp + rn == 0:
        raise ValueError("both children of a split must be non-empty")
    if tuple(parent_counts) != (lp + rp, ln + rn):
        raise ValueError(f"parent counts {tuple(parent_counts)} do not equal left + right")
    if criterion in (Criterion.HELLINGER, Criterion.HELLINGER_AS_PRINTED):
        return hellinger_distance(left_counts, right_counts, criterion)
    return float(_score(float(lp), float(ln), float(rp), float(rn), criterion.code))


# ---------------------------------------------------------------------------
# numeric threshold scan


@njit
def _scan_numeric_nb(values, labels, code):
    """Scores of every cut between adjacent distinct sorted values, and the cut positions."""
    m = values.shape[0]
    tot_p = 0.0
    for i in range(m):
        tot_p += labels[i]
    tot_n = m - tot_p
    scores = np.empty(m, dtype=np.float64)
    cuts = np.empty(m, dtype=np.intp)
    c = 0
    lp = 0.0
    ln = 0.0
    for i in range(m - 1):
        if labels[i]:
            lp += 1.0
        else:
            ln += 1.0
        if values[i] < values[i + 1]:
            scores[c] = _score(lp, ln, tot_p - lp, tot_n - ln, code)
            cuts[c] = i
            c += 1
    return scores[:c], cuts[:c]


def _scan_numeric_np(values, labels, code):
    m = values.shape[0]
    cut = np.flatnonzero(values[:-1] < values[1:])
    if cut.size == 0:
        return np.empty(0), cut
    cum = np.cumsum(labels, dtype=np.float64)
    lp = cum[cut]
    ln = (cut + 1.0) - lp
    tot_p = cum[-1]
    tot_n = m - tot_p
    rp = tot_p - lp
    rn = tot_n - ln
    if code <= 1:
        fpl, fnl, fpr, fnr = lp / tot_p, ln / tot_n, rp / tot_p, rn / tot_n
        if code == 0:
            a = np.sqrt(fpl) - np.sqrt(fnl)
            b = np.sqrt(fpr) - np.sqrt(fnr)
        else:
            a = fpl - fnl
            b = fpr - fnr
        scores = np.sqrt(a * a + b * b)
    else:
        nl = lp + ln
        nr = rp + rn
        scores = _impurity_np(tot_p, tot_n, code) - (nl / m * _impurity_np(lp, ln, code)
                                                     + nr / m * _impurity_np(rp, rn, code))
    return scores, cut


def _impurity_np(pos, neg, code):
    n = pos + neg
    p = pos / n
    q = neg / n
    if code == 2:
        return 1.0 - (p * p + q * q)
    with np.errstate(divide="ignore", invalid="ignore"):
        hp = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        hq = np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return hp + hq


_scan_numeric = _scan_numeric_nb if HAS_NUMBA else _scan_numeric_np


def _midpoint(lo: float, hi: float) -> float:
    t = lo + (hi - lo) / 2.0
    return hi if t <= lo else t


@dataclass(frozen=True)
class SplitRule:
    """``numeric``: left iff ``x < threshold``; categorical: left iff ``x == value``."""

    feature: int
    categorical: bool
    threshold: float

    def goes_left(self, x) -> np.ndarray:
        col = np.asarray(x)[..., self.feature]
        return col == self.threshold if self.categorical else col < self.threshold


def best_split(X, y, categorical=None, criterion=Criterion.HELLINGER):
    """Best binary split of the rows ``X`` (labels ``y``) or ``None``.

    Numeric features are cut at midpoints between adjacent distinct values;
    categorical features (``categorical[j]`` true, ``X`` holding value
    indices) are split one value against the rest. Scores within ``TIE_TOL``
    of the best are ties, which go to the lowest feature index and then the
    lowest threshold or value index. ``None`` is returned when no candidate
    exists or no score exceeds ``MIN_GAIN``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8)
    code = Criterion.parse(criterion).code
    d = X.shape[1]
    if categorical is None:
        categorical = np.zeros(d, dtype=bool)
    n_pos = int(np.count_nonzero(y))
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    # candidates in tie-break order: feature, then threshold or value index
    scores, where = [], []
    for j in range(d):
        col = X[:, j]
        if categorical[j]:
            sc, pos = _scan_categorical(col, y, n_pos, n_neg, code)
        else:
            order = np.argsort(col, kind="stable")
            sc, pos = _scan_numeric(np.ascontiguousarray(col[order]), np.ascontiguousarray(y[order]), code)
        scores.append(sc)
        where.append(pos)
    flat = np.concatenate(scores)
    if flat.size == 0:
        return None
    top = float(flat.max())
    if top <= MIN_GAIN:
        return None
    # mathematically equal scores can differ in the last bits, so near-ties count as ties
    k = int(np.argmax(flat >= top - TIE_TOL))
    ends = np.cumsum([s.size for s in scores])
    j = int(np.searchsorted(ends, k, side="right"))
    i = int(where[j][k - (ends[j] - scores[j].size)])
    if categorical[j]:
        return SplitRule(j, True, float(i)), float(flat[k])
    sv = np.sort(X[:, j])
    return SplitRule(j, False, _midpoint(float(sv[i]), float(sv[i + 1]))), float(flat[k])


def _scan_categorical(col, y, n_pos, n_neg, code):
    codes = col.astype(np.intp)
    ok = codes >= 0
    size = int(codes.max()) + 1 if ok.any() else 0
    pos = np.bincount(codes[ok], weights=y[ok], minlength=size)
    cnt = np.bincount(codes[ok], minlength=size)
    n = y.shape[0]
    scores, values = [], []
    for v in range(size):
        c = int(cnt[v])
        if c == 0 or c == n:
            continue
        lp = float(pos[v])
        ln = c - lp
        scores.append(_score(lp, ln, n_pos - lp, n_neg - ln, code))
        values.append(v)
    return np.array(scores, dtype=np.float64), np.array(values, dtype=np.intp)


# ---------------------------------------------------------------------------
# tree model


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Fitted tree as pre-order node arrays.

    For a leaf ``feature[i] == -1`` and ``left[i] == right[i] == -1``.
    ``counts[i]`` holds the (positive, negative) training counts reaching
    node ``i``; ``label[i]`` is the plurality label (ties go to negative).
    """

    feature: np.ndarray
    threshold: np.ndarray
    is_categorical: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    counts: np.ndarray
    score: np.ndarray
    criterion: Criterion
    minsplit: int
    importances: np.ndarray
    categorical_features: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_features(self) -> int:
        return self.importances.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def rule(self, node: int) -> SplitRule:
        return SplitRule(int(self.feature[node]), bool(self.is_categorical[node]), float(self.threshold[node]))


def plurality(n_pos: int, n_neg: int) -> int:
    return 1 if n_pos > n_neg else 0


def default_minsplit(n_train: int, fraction: float = 0.1) -> int:
    return max(2, math.ceil(fraction * n_train))


def grow_tree(X, y, categorical=None, criterion=Criterion.HELLINGER, minsplit: int = 2) -> TreeModel:
    """Grow an unpruned tree on arrays.

    A node is split when it holds at least ``minsplit`` rows, contains both
    classes and has a split with positive score; otherwise it becomes a
    plurality-labelled leaf.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    criterion = Criterion.parse(criterion)
    n, d = X.shape
    if categorical is None:
        categorical = np.zeros(d, dtype=bool)
    categorical = np.asarray(categorical, dtype=bool)
    if minsplit < 2:
        raise ValueError(f"minsplit must be at least 2, got {minsplit}")
    n_pos = int(np.count_nonzero(y))
    if n_pos == 0 or n_pos == n:
        raise ValueError("training rows must contain both classes")

    feature, threshold, is_cat, left, right, label, counts, score = ([] for _ in range(8))
    importances = np.zeros(d, dtype=np.float64)
    # (row indices, parent node id or -1, is right child)
    stack = [(np.arange(n, dtype=np.intp), -1, False)]
    while stack:
        rows, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        yr = y[rows]
        p = int(np.count_nonzero(yr))
        q = rows.size - p
        counts.append((p, q))
        label.append(plurality(p, q))
        found = None
        if rows.size >= minsplit and p > 0 and q > 0:
            found = best_split(X[rows], yr, categorical, criterion)
        if found is None:
            feature.append(-1)
            threshold.append(0.0)
            is_cat.append(False)
            left.append(-1)
            right.append(-1)
            score.append(0.0)
            continue
        rule, s = found
        feature.append(rule.feature)
        threshold.append(rule.threshold)
        is_cat.append(rule.categorical)
        left.append(-1)
        right.append(-1)
        score.append(s)
        importances[rule.feature] += rows.size / n * s
        mask = rule.goes_left(X[rows])
        # right pushed first so the left subtree is numbered next (pre-order)
        stack.append((rows[~mask], node, True))
        stack.append((rows[mask], node, False))

    total = importances.sum()
    if total > 0:
        importances = importances / total
    return TreeModel(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=np.float64),
        is_categorical=np.array(is_cat, dtype=bool),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        label=np.array(label, dtype=np.int8),
        counts=np.array(counts, dtype=np.int64).reshape(-1, 2),
        score=np.array(score, dtype=np.float64),
        criterion=criterion,
        minsplit=int(minsplit),
        importances=importances,
        categorical_features=categorical.copy(),
    )


def fit_tree(dataset: Dataset, rows=None, criterion=Criterion.HELLINGER, minsplit: Optional[int] = None) -> TreeModel:
    """Fit a tree on ``rows`` of ``dataset``; ``minsplit`` defaults to 10% of the rows."""
    rows = np.arange(dataset.n) if rows is None else np.asarray(rows, dtype=np.intp)
    if minsplit is None:
        minsplit = default_minsplit(rows.size)
    return grow_tree(dataset.X[rows], dataset.y[rows], dataset.categorical_mask, criterion, minsplit)


@njit
def _route_nb(X, feature, threshold, is_cat, left, right, label):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int8)
    for r in range(n):
        i = 0
        while feature[i] >= 0:
            x = X[r, feature[i]]
            if is_cat[i]:
                go_left = x == threshold[i]
            else:
                go_left = x < threshold[i]
            i = left[i] if go_left else right[i]
        out[r] = label[i]
    return out


def _route_np(X, feature, threshold, is_cat, left, right, label):
    node = np.zeros(X.shape[0], dtype=np.intp)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        nd = node[active]
        x = X[active, feature[nd]]
        go_left = np.where(is_cat[nd], x == threshold[nd], x < threshold[nd])
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return label[node].astype(np.int8)


_route = _route_nb if HAS_NUMBA else _route_np


def predict_tree(model: TreeModel, X) -> np.ndarray:
    """Route each row of ``X`` (or a :class:`Dataset`) to a leaf and return its label."""
    if isinstance(X, Dataset):
        X = X.X
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected rows with {model.n_features} features, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int8)
    return _route(X, model.feature, model.threshold, model.is_categorical, model.left, model.right, model.label)


def rank_features(model: TreeModel, top_m: Optional[int] = None) -> list:
    """Feature indices with positive importance, most important first.

    Ties keep the lower index first. ``top_m`` truncates the list.
    """
    imp = model.importances
    order = sorted((j for j in range(imp.shape[0]) if imp[j] > 0), key=lambda j: (-imp[j], j))
    if top_m is not None:
        if top_m < 1:
            raise ValueError(f"top_m must be positive, got {top_m}")
        order = order[:top_m]
    return order
