"""Linear discriminant analysis on standardized features.

The discriminant directions solve ``S_B v = lambda (S_W + ridge I) v``. The
problem is reduced to a symmetric one through the Cholesky factor of the
regularized within-class scatter, so ``S_W^-1 S_B`` is never formed.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from .errors import (
    DegenerateClass,
    DegenerateCovariance,
    DimensionMismatch,
    RankCollapse,
    TooFewPoints,
)

DEFAULT_RIDGE_SCALE = 1e-6
EIGEN_FLOOR = 1e-12


def label_key(label):
    """Natural sort key, so "82g" orders before "125g"."""
    parts = re.split(r"(\d+)", str(label))
    return [(0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts]


def sorted_labels(labels):
    return sorted(set(labels), key=label_key)


@dataclass
class LdaModel:
    class_labels: list
    class_means: np.ndarray  # (C, p), raw feature units
    global_mean: np.ndarray  # (p,), raw feature units
    scale: np.ndarray  # (p,), per-feature standardization divisor
    directions: np.ndarray  # (k, p), unit rows, act on standardized features
    eigenvalues: np.ndarray  # (k,)
    explained_variance: np.ndarray  # (k,)
    projected_centroids: np.ndarray  # (C, k)
    feature_names: tuple = None
    ridge: float = 0.0

    @property
    def n_features(self):
        return self.directions.shape[1]

    @property
    def n_directions(self):
        return self.directions.shape[0]

    def standardize(self, X):
        return (X - self.global_mean) / self.scale

    def to_dict(self):
        return {
            "class_labels": list(self.class_labels),
            "class_means": self.class_means.tolist(),
            "global_mean": self.global_mean.tolist(),
            "scale": self.scale.tolist(),
            "directions": self.directions.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "projected_centroids": self.projected_centroids.tolist(),
            "feature_names": None if self.feature_names is None else list(self.feature_names),
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, d):
        arr = lambda key: np.asarray(d[key], dtype=float)
        names = d.get("feature_names")
        k = len(d["directions"])
        return cls(
            class_labels=list(d["class_labels"]),
            class_means=arr("class_means"),
            global_mean=arr("global_mean"),
            scale=arr("scale"),
            directions=arr("directions").reshape(k, -1),
            eigenvalues=arr("eigenvalues"),
            explained_variance=arr("explained_variance"),
            projected_centroids=arr("projected_centroids").reshape(-1, k),
            feature_names=None if names is None else tuple(names),
            ridge=float(d.get("ridge", 0.0)),
        )


def scatter_matrices(Z, labels, classes):
    """Within- and between-class scatter of the rows of ``Z``."""
    labels = np.asarray(labels, dtype=object)
    mu = Z.mean(axis=0)
    p = Z.shape[1]
    Sw = np.zeros((p, p))
    Sb = np.zeros((p, p))
    for c in classes:
        Zc = Z[labels == c]
        mc = Zc.mean(axis=0)
        D = Zc - mc
        Sw += D.T @ D
        d = (mc - mu)[:, None]
        Sb += len(Zc) * (d @ d.T)
    return Sw, Sb


def fit(X, labels, ridge_scale=DEFAULT_RIDGE_SCALE, feature_names=None):
    """Fit discriminant directions to the labeled rows of ``X``.

    Columns are standardized first (population statistics); constant columns
    are only centered. ``min(C - 1, p)`` directions are kept, ordered by
    eigenvalue, each scaled to unit norm with its largest component positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("features must be a 2-D matrix")
    labels = list(labels)
    if len(labels) != len(X):
        raise DimensionMismatch(f"{len(labels)} labels for {len(X)} rows")
    classes = sorted_labels(labels)
    if len(classes) < 2:
        raise DegenerateClass("need at least two classes")
    lab = np.asarray(labels, dtype=object)
    for c in classes:
        if np.count_nonzero(lab == c) < 2:
            raise DegenerateClass(f"class {c!r} has fewer than 2 samples")
    if len(X) < len(classes) + 1:
        raise DegenerateClass("need more samples than classes")

    n, p = X.shape
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale

    Sw, Sb = scatter_matrices(Z, labels, classes)
    ridge = ridge_scale * np.trace(Sw) / p
    A = Sw + ridge * np.eye(p)
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError:
        raise RankCollapse("within-class scatter is singular even after regularization") from None
    # M = L^-1 Sb L^-T
    M = solve_triangular(L, solve_triangular(L, Sb, lower=True).T, lower=True)
    M = (M + M.T) / 2
    evals, W = eigh(M)
    order = np.argsort(evals)[::-1]
    k = min(len(classes) - 1, p)
    evals, W = evals[order[:k]], W[:, order[:k]]
    if np.all(evals < EIGEN_FLOOR):
        raise RankCollapse("no discriminative direction above the eigenvalue floor")
    evals = np.clip(evals, 0.0, None)

    V = solve_triangular(L.T, W, lower=False).T
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    pivot = np.argmax(np.abs(V), axis=1)
    V *= np.sign(V[np.arange(k), pivot])[:, None]

    class_means = np.vstack([X[lab == c].mean(axis=0) for c in classes])
    model = LdaModel(
        class_labels=classes,
        class_means=class_means,
        global_mean=mean,
        scale=scale,
        directions=V,
        eigenvalues=evals,
        explained_variance=evals / evals.sum(),
        projected_centroids=np.empty((len(classes), k)),
        feature_names=None if feature_names is None else tuple(feature_names),
        ridge=float(ridge),
    )
    model.projected_centroids = project(model, class_means)
    return model


def project(model, X):
    """Discriminant-space coordinates of ``X`` (one row or a matrix)."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    Y = model.standardize(X) @ model.directions.T
    return Y[0] if single else Y


def classify(model, feature):
    """Nearest projected centroid. Returns ``(label, distances)``.

    Ties go to the earliest label in the model's order.
    """
    y = project(model, np.asarray(feature, dtype=float).reshape(-1))
    dist = np.linalg.norm(model.projected_centroids - y, axis=1)
    # distances equal up to round-off count as ties
    best = dist.min()
    winner = int(np.flatnonzero(dist <= best * (1 + 1e-12) + 1e-15)[0])
    return model.class_labels[winner], dist


def feature_contributions(model, names=None):
    """Per-direction ``[(name, weight), ...]`` sorted by |weight|, descending."""
    names = names or model.feature_names or [f"f{i}" for i in range(model.n_features)]
    out = []
    for v in model.directions:
        order = np.argsort(-np.abs(v), kind="stable")
        out.append([(names[i], float(v[i])) for i in order])
    return out


@dataclass
class LooResult:
    accuracy: float
    labels: list
    confusion: np.ndarray  # rows: true class, cols: predicted
    predictions: list


def leave_one_out(X, labels, ridge_scale=DEFAULT_RIDGE_SCALE):
    """Leave-one-out nearest-centroid accuracy."""
    X = np.asarray(X, dtype=float)
    labels = list(labels)
    classes = sorted_labels(labels)
    pos = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=int)
    predictions = []
    keep = np.ones(len(X), dtype=bool)
    for i in range(len(X)):
        keep[i] = False
        model = fit(X[keep], [l for l, k in zip(labels, keep) if k], ridge_scale)
        keep[i] = True
        pred, _ = classify(model, X[i])
        predictions.append(pred)
        confusion[pos[labels[i]], pos[pred]] += 1
    accuracy = float(np.trace(confusion) / max(len(X), 1))
    return LooResult(accuracy, classes, confusion, predictions)


def chi2_quantile_2dof(coverage):
    # closed form for two degrees of freedom
    return -2.0 * math.log1p(-coverage)


@dataclass
class ConfidenceEllipse:
    center: np.ndarray
    axes: np.ndarray  # semi-axis lengths, major first
    orientation: float  # major-axis angle in radians, in (-pi/2, pi/2]
    coverage: float = 0.95


def confidence_ellipse(points, coverage=0.95):
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DimensionMismatch("points must be (M, 2)")
    if len(points) < 3:
        raise TooFewPoints("need at least 3 points")
    cov = np.cov(points, rowvar=False)
    evals, evecs = np.linalg.eigh(cov)
    q = chi2_quantile_2dof(coverage)
    axes = np.sqrt(np.clip(evals[::-1], 0.0, None) * q)
    if axes[1] < 1e-9:
        raise DegenerateCovariance("points are collinear")
    major = evecs[:, 1]
    angle = math.atan2(major[1], major[0])
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return ConfidenceEllipse(points.mean(axis=0), axes, angle, coverage)
