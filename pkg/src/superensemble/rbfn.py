"""Gaussian radial-basis-function network trained by full-batch gradient descent.

The network output is ``f(z) = w0 + sum_j w_j * exp(-||z - c_j||^2 / (2 sigma_j^2))``
and training minimizes the squared error ``E = (1/n) sum_i v_i (f(z_i) - y_i)^2``
against 0/1 targets. With ``class_weight="balanced"`` (the default) each
class carries half of the total weight, ``v_i = n / (2 n_class(i))``; with
``class_weight="none"`` every ``v_i`` is 1 and ``E`` is the plain mean
squared error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from ._accel import HAS_NUMBA, njit

SIGMA_MIN = 1e-6
DEFAULT_K_GRID = (2, 3, 5, 8, 12, 16, 20)
KMEANS_MAX_ITER = 50
CLASS_WEIGHTS = ("balanced", "none")


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    centers: np.ndarray  # (k, d)
    widths: np.ndarray  # (k,)
    weights: np.ndarray  # (k,)
    bias: float = 0.0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        s = np.asarray(self.widths, dtype=np.float64).reshape(-1)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("network needs at least one hidden unit and one input")
        if s.shape[0] != c.shape[0] or w.shape[0] != c.shape[0]:
            raise ValueError("centers, widths and weights disagree on the hidden unit count")
        if np.any(s < SIGMA_MIN):
            raise ValueError(f"widths must be >= {SIGMA_MIN}")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class RbfTrainConfig:
    lr_w: float = 0.3
    lr_c: float = 0.3
    lr_sigma: float = 0.3
    max_iters: int = 100
    tolerance: float = 1e-8
    k_grid: tuple = DEFAULT_K_GRID
    seed: int = 0
    class_weight: str = "balanced"

    def __post_init__(self):
        if self.class_weight not in CLASS_WEIGHTS:
            raise ValueError(f"class_weight must be one of {', '.join(CLASS_WEIGHTS)}")
        if min(self.lr_w, self.lr_c, self.lr_sigma) <= 0:
            raise ValueError("learning rates must be positive")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if not self.k_grid or min(self.k_grid) < 1:
            raise ValueError("k_grid must be a non-empty list of positive counts")
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))

    def with_seed(self, seed: int) -> "RbfTrainConfig":
        return replace(self, seed=int(seed))


def gaussian_phi(x, c, sigma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if x.shape != c.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {c.shape}")
    if sigma < SIGMA_MIN:
        raise ValueError(f"sigma must be >= {SIGMA_MIN}")
    diff = x - c
    return math.exp(-float(diff @ diff) / (2.0 * sigma * sigma))


# ---------------------------------------------------------------------------
# kernels: hidden activations and batch gradients


@njit
def _activations_nb(Z, centers, widths):
    n, d = Z.shape
    k = centers.shape[0]
    phi = np.empty((n, k))
    dist2 = np.empty((n, k))
    for i in range(n):
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = Z[i, t] - centers[j, t]
                s += diff * diff
            dist2[i, j] = s
            phi[i, j] = math.exp(-s / (2.0 * widths[j] * widths[j]))
    return phi, dist2


def _activations_np(Z, centers, widths):
    diff = Z[:, None, :] - centers[None, :, :]
    dist2 = np.einsum("ijt,ijt->ij", diff, diff)
    phi = np.exp(-dist2 / (2.0 * widths * widths))
    return phi, dist2


@njit
def _gradients_nb(Z, y, v, centers, widths, weights, bias):
    n, d = Z.shape
    k = centers.shape[0]
    phi, dist2 = _activations_nb(Z, centers, widths)
    g_w = np.zeros(k)
    g_c = np.zeros((k, d))
    g_s = np.zeros(k)
    g_b = 0.0
    loss = 0.0
    for i in range(n):
        f = bias
        for j in range(k):
            f += weights[j] * phi[i, j]
        e = f - y[i]
        ev = e * v[i]
        loss += e * ev
        g_b += ev
        for j in range(k):
            a = ev * phi[i, j]
            g_w[j] += a
            b = a * weights[j] / (widths[j] * widths[j])
            for t in range(d):
                g_c[j, t] += b * (Z[i, t] - centers[j, t])
            g_s[j] += b * dist2[i, j] / widths[j]
    scale = 2.0 / n
    return loss / n, scale * g_b, scale * g_w, scale * g_c, scale * g_s


def _gradients_np(Z, y, v, centers, widths, weights, bias):
    n = Z.shape[0]
    phi, dist2 = _activations_np(Z, centers, widths)
    e = bias + phi @ weights - y
    ev = e * v
    scale = 2.0 / n
    a = ev[:, None] * phi  # (n, k)
    b = a * (weights / (widths * widths))
    g_c = scale * (b.T @ Z - b.sum(axis=0)[:, None] * centers)
    g_s = scale * (b * dist2).sum(axis=0) / widths
    return float(e @ ev) / n, scale * ev.sum(), scale * a.sum(axis=0), g_c, g_s


_activations = _activations_nb if HAS_NUMBA else _activations_np
_gradients_kernel = _gradients_nb if HAS_NUMBA else _gradients_np


def _check_inputs(net: RbfNetwork, Z):
    Z = np.asarray(Z, dtype=np.float64)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[1] != net.dim:
        raise ValueError(f"dimension mismatch: network expects {net.dim} inputs, got {Z.shape[1]}")
    return np.ascontiguousarray(Z), single


def forward(net: RbfNetwork, Z):
    """Network output for one input vector (returns a float) or a matrix of rows."""
    Z, single = _check_inputs(net, Z)
    if Z.shape[0] == 0:
        return np.empty(0)
    phi, _ = _activations(Z, net.centers, net.widths)
    out = net.bias + phi @ net.weights
    return float(out[0]) if single else out


def sample_weights(y, class_weight: str = "balanced") -> np.ndarray:
    """Per-sample weights ``v_i`` (mean 1) for the training error."""
    y = np.asarray(y).reshape(-1)
    if class_weight == "none":
        return np.ones(y.shape[0])
    if class_weight != "balanced":
        raise ValueError(f"class_weight must be one of {', '.join(CLASS_WEIGHTS)}")
    n = y.shape[0]
    n_pos = int(np.count_nonzero(y))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(n)
    return np.where(y != 0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def loss(net: RbfNetwork, Z, y, sample_weight=None) -> float:
    """Weighted squared error ``(1/n) sum v_i e_i^2``; plain MSE without weights."""
    Z, _ = _check_inputs(net, Z)
    e = forward(net, Z) - np.asarray(y, dtype=np.float64)
    v = np.ones_like(e) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    return float(e @ (e * v)) / e.shape[0]


@dataclass(frozen=True)
class Gradients:
    bias: float
    weights: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    loss: float = field(default=float("nan"))


def gradients(net: RbfNetwork, Z, y, sample_weight=None) -> Gradients:
    """Gradient of the (weighted) squared error with respect to every parameter.

    With ``e_i = f(z_i) - y_i`` and weights ``v_i`` (all 1 by default)::

        dE/dw0    = (2/n) sum v_i e_i
        dE/dw_j   = (2/n) sum v_i e_i phi_j(z_i)
        dE/dc_j   = (2/n) sum v_i e_i w_j phi_j(z_i) (z_i - c_j) / sigma_j^2
        dE/dsig_j = (2/n) sum v_i e_i w_j phi_j(z_i) ||z_i - c_j||^2 / sigma_j^3
    """
    Z, _ = _check_inputs(net, Z)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if Z.shape[0] == 0:
        raise ValueError("gradient of an empty batch is undefined")
    if y.shape[0] != Z.shape[0]:
        raise ValueError(f"{Z.shape[0]} inputs but {y.shape[0]} targets")
    v = np.ones(y.shape[0]) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=np.float64)
    if v.shape != y.shape:
        raise ValueError("sample_weight must have one entry per sample")
    E, g_b, g_w, g_c, g_s = _gradients_kernel(Z, y, v, net.centers, net.widths, net.weights, net.bias)
    return Gradients(float(g_b), g_w, g_c, g_s, float(E))


def predict_rbfn(net: RbfNetwork, Z) -> np.ndarray:
    """1 where the network output is at least 0.5, else 0."""
    out = np.atleast_1d(forward(net, Z))
    return (out >= 0.5).astype(np.int8)


# ---------------------------------------------------------------------------
# k-means center initialization


def _nearest(points, centers):
    _, dist2 = _activations(points, centers, np.ones(centers.shape[0]))
    return np.argmin(dist2, axis=1), dist2


def kmeans_centers(points, k: int, seed=0, return_labels: bool = False):
    """Lloyd's k-means from ``k`` distinct data points chosen by a seeded RNG.

    Runs until assignments stop changing or for 50 iterations. An empty
    cluster is re-seeded with the point farthest from its current center.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    distinct = np.unique(points, axis=0)
    if k < 1 or k > distinct.shape[0]:
        raise ValueError(f"k={k} exceeds the {distinct.shape[0]} distinct points")
    rng = np.random.default_rng(seed)
    centers = distinct[np.sort(rng.choice(distinct.shape[0], size=k, replace=False))].copy()
    labels = None
    for _ in range(KMEANS_MAX_ITER):
        new_labels, dist2 = _nearest(points, centers)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        own = dist2[np.arange(points.shape[0]), labels]
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = points[members].mean(axis=0)
            else:
                far = int(np.argmax(own))
                centers[j] = points[far]
                labels[far] = j
                own[far] = 0.0
    labels, _ = _nearest(points, centers)
    return (centers, labels) if return_labels else centers


def initial_widths(points, centers, labels) -> np.ndarray:
    """Mean member distance per cluster.

    Clusters with fewer than two members, or whose members all sit on the
    center, fall back to the mean pairwise distance of all points.
    """
    k = centers.shape[0]
    widths = np.zeros(k)
    fallback = None
    for j in range(k):
        members = points[labels == j]
        spread = 0.0
        if members.shape[0] >= 2:
            spread = float(np.sqrt(((members - centers[j]) ** 2).sum(axis=1)).mean())
        if spread <= SIGMA_MIN:
            if fallback is None:
                fallback = float(pdist(points).mean()) if points.shape[0] > 1 else 0.0
            spread = fallback
        widths[j] = max(spread, SIGMA_MIN)
    return widths


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainTrace:
    k: int
    losses: list
    validation_auc: Optional[float] = None


def _balanced_accuracy(y, pred) -> float:
    y = np.asarray(y)
    pos = y == 1
    return 0.5 * (float(np.mean(pred[pos] == 1)) + float(np.mean(pred[~pos] == 0)))


def fit_fixed_k(Z, y, k: int, config: RbfTrainConfig):
    """Initialize a ``k``-unit network and run gradient descent; returns (net, losses)."""
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    v = sample_weights(y, config.class_weight)
    rng = np.random.default_rng([config.seed, k])
    centers, labels = kmeans_centers(Z, k, seed=rng.integers(2**63), return_labels=True)
    widths = initial_widths(Z, centers, labels)
    w = rng.uniform(-0.1, 0.1, size=k + 1)
    bias, weights = float(w[0]), w[1:].copy()
    losses = []
    prev = None
    for _ in range(config.max_iters):
        E, g_b, g_w, g_c, g_s = _gradients_kernel(Z, y, v, centers, widths, weights, bias)
        losses.append(float(E))
        if prev is not None and abs(prev - E) < config.tolerance:
            break
        prev = E
        bias -= config.lr_w * g_b
        weights = weights - config.lr_w * g_w
        centers = centers - config.lr_c * g_c
        widths = np.maximum(widths - config.lr_sigma * g_s, SIGMA_MIN)
    return RbfNetwork(centers, widths, weights, bias), losses


def capped_k_grid(k_grid, n_train: int, n_distinct: int) -> list:
    cap = min(max(1, math.ceil(n_train / 10)), n_distinct)
    grid = [k for k in k_grid if k <= cap]
    return grid or [min(min(k_grid), cap)]


def train_rbfn(Z, y, config: RbfTrainConfig = RbfTrainConfig(), validation=None, trace: Optional[list] = None) -> RbfNetwork:
    """Train one network per candidate ``k`` and keep the best.

    With ``validation=(Z_val, y_val)`` the winner maximizes validation
    balanced accuracy; otherwise it minimizes final training error. Ties go
    to the earlier grid entry. Candidate counts above ``ceil(n/10)`` are
    dropped.
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    if Z.shape[0] != y.shape[0]:
        raise ValueError(f"{Z.shape[0]} inputs but {y.shape[0]} targets")
    if np.unique(y).size < 2:
        raise ValueError("training targets must contain both classes")
    n_distinct = np.unique(Z, axis=0).shape[0]
    best_net, best_key = None, None
    for k in capped_k_grid(config.k_grid, Z.shape[0], n_distinct):
        net, losses = fit_fixed_k(Z, y, k, config)
        record = TrainTrace(k, losses)
        if validation is not None:
            Zv, yv = validation
            record.validation_auc = _balanced_accuracy(yv, predict_rbfn(net, Zv))
            key = -record.validation_auc
        else:
            key = loss(net, Z, y, sample_weights(y, config.class_weight))
        if trace is not None:
            trace.append(record)
        if best_key is None or key < best_key:
            best_net, best_key = net, key
    return best_net
