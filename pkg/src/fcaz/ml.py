"""Multi-label baseline classifiers with a scikit-learn style interface.

Every estimator implements ``fit(X, Y) -> self``, ``predict(X)``,
``predict_proba(X)``, and ``get_params``/``set_params``, so it clones and
composes like any other estimator. Features are z-scored internally with
statistics from the training split only; the scaler travels with the model.
"""
from __future__ import annotations

import inspect
import json

import numpy as np

from .errors import DataSchemaError, ValidationError
from .validation import (
    check_array,
    check_bit_matrix,
    check_consistent_length,
    check_is_fitted,
    check_random_state,
)


class BaseEstimator:
    """Parameter handling compatible with the scikit-learn contract."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValidationError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def clone(estimator):
    return type(estimator)(**estimator.get_params())


class FeatureScaler:
    """Per-feature z-scoring; constant features scale by 1."""

    def fit(self, x: np.ndarray) -> "FeatureScaler":
        self.mean_ = x.mean(axis=0)
        std = x.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        check_is_fitted(self, "mean_")
        return (x - self.mean_) / self.scale_


class KNeighborsAzClassifier(BaseEstimator):
    """Per-label majority vote among the nearest training points.

    Distance ties resolve toward the lower training index; a tied vote
    (possible with an even neighbor count) resolves to 0.
    """

    def __init__(self, n_neighbors: int = 10):
        self.n_neighbors = n_neighbors

    def fit(self, x, y):
        x = check_array(x)
        y = check_bit_matrix(y)
        check_consistent_length(x, y)
        if len(x) < self.n_neighbors:
            raise ValidationError(
                f"need at least n_neighbors={self.n_neighbors} samples, got {len(x)}"
            )
        self.scaler_ = FeatureScaler().fit(x)
        self.x_ = self.scaler_.transform(x)
        self.y_ = y
        self.n_outputs_ = y.shape[1]
        return self

    def predict_proba(self, x):
        check_is_fitted(self, "x_")
        x = self.scaler_.transform(check_array(x))
        if x.shape[1] != self.x_.shape[1]:
            raise ValidationError("feature dimension mismatch")
        votes = np.empty((len(x), self.n_outputs_))
        train_sq = (self.x_ ** 2).sum(axis=1)
        chunk = max(1, int(2e7) // max(len(self.x_), 1))
        for start in range(0, len(x), chunk):
            q = x[start:start + chunk]
            d2 = train_sq[None, :] - 2.0 * (q @ self.x_.T) + (q ** 2).sum(axis=1)[:, None]
            idx = np.argsort(d2, axis=1, kind="stable")[:, : self.n_neighbors]
            votes[start:start + chunk] = self.y_[idx].mean(axis=1)
        return votes

    def predict(self, x):
        return (self.predict_proba(x) > 0.5).astype(np.uint8)


class _TreeNodes:
    """Flat array representation of a fitted tree."""

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.proba = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.proba.append(None)
        return len(self.feature) - 1

    def finalize(self, n_outputs: int):
        self.feature = np.array(self.feature, dtype=np.int32)
        self.threshold = np.array(self.threshold)
        self.left = np.array(self.left, dtype=np.int32)
        self.right = np.array(self.right, dtype=np.int32)
        self.proba = np.array(
            [np.zeros(n_outputs) if p is None else p for p in self.proba]
        )


def _best_split(x, y, feature_ids, min_leaf):
    """Best (impurity decrease, feature, threshold) over candidate features.

    Impurity is Gini summed over output labels. Ties resolve toward the
    smaller feature index, then the smaller threshold.
    """
    n = len(x)
    tot = y.sum(axis=0, dtype=np.float64)
    parent = float((2.0 * tot * (n - tot) / n).sum()) / n
    best = (1e-12, -1, 0.0)
    for f in feature_ids:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        cum = np.cumsum(y[order], axis=0, dtype=np.float64)
        nl = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & ((n - nl) >= min_leaf)
        if not valid.any():
            continue
        cl = cum[:-1]
        cr = tot[None, :] - cl
        nr = (n - nl).astype(np.float64)
        gl = (2.0 * cl * (nl[:, None] - cl) / nl[:, None]).sum(axis=1)
        gr = (2.0 * cr * (nr[:, None] - cr) / nr[:, None]).sum(axis=1)
        weighted = (gl + gr) / n
        weighted[~valid] = np.inf
        i = int(np.argmin(weighted))
        gain = parent - float(weighted[i])
        if gain > best[0]:
            best = (gain, int(f), float((xs[i] + xs[i + 1]) / 2.0))
    return best


class DecisionTreeAzClassifier(BaseEstimator):
    """Multi-label CART: threshold splits, Gini summed over output labels,
    grown until pure or the leaf floor. Deterministic for a fixed seed."""

    def __init__(self, random_state: int = 0, min_samples_leaf: int = 1,
                 max_features=None):
        self.random_state = random_state
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features

    def _n_candidate_features(self, d: int) -> int:
        if self.max_features is None:
            return d
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        return max(1, min(int(self.max_features), d))

    def fit(self, x, y):
        x = check_array(x)
        y = check_bit_matrix(y)
        check_consistent_length(x, y)
        rng = check_random_state(self.random_state)
        d = x.shape[1]
        m = self._n_candidate_features(d)
        nodes = _TreeNodes()
        self.n_outputs_ = y.shape[1]
        self.n_features_ = d
        self.scaler_ = FeatureScaler().fit(x)
        xs = self.scaler_.transform(x)

        # Iterative depth-first growth; left child before right keeps the
        # feature-subsampling draw order deterministic.
        root = nodes.add()
        stack = [(root, np.arange(len(xs)))]
        while stack:
            node, idx = stack.pop()
            sub_y = y[idx]
            pure = bool((sub_y == sub_y[0]).all())
            if pure or len(idx) < 2 * self.min_samples_leaf:
                nodes.proba[node] = sub_y.mean(axis=0)
                continue
            if m < d:
                feats = np.sort(rng.choice(d, size=m, replace=False))
            else:
                feats = np.arange(d)
            gain, f, thr = _best_split(xs[idx], sub_y, feats, self.min_samples_leaf)
            if f < 0:
                nodes.proba[node] = sub_y.mean(axis=0)
                continue
            mask = xs[idx, f] < thr
            left, right = nodes.add(), nodes.add()
            nodes.feature[node] = f
            nodes.threshold[node] = thr
            nodes.left[node] = left
            nodes.right[node] = right
            # push right first so the left child is processed first
            stack.append((right, idx[~mask]))
            stack.append((left, idx[mask]))
        nodes.finalize(self.n_outputs_)
        self.nodes_ = nodes
        return self

    def predict_proba(self, x):
        check_is_fitted(self, "nodes_")
        x = self.scaler_.transform(check_array(x))
        if x.shape[1] != self.n_features_:
            raise ValidationError("feature dimension mismatch")
        nd = self.nodes_
        pos = np.zeros(len(x), dtype=np.int32)
        active = nd.feature[pos] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = pos[rows]
            go_left = x[rows, nd.feature[cur]] < nd.threshold[cur]
            pos[rows] = np.where(go_left, nd.left[cur], nd.right[cur])
            active[rows] = nd.feature[pos[rows]] >= 0
        return nd.proba[pos]

    def predict(self, x):
        return (self.predict_proba(x) > 0.5).astype(np.uint8)


class RandomForestAzClassifier(BaseEstimator):
    """Bootstrap ensemble of the CART above with per-split sqrt features;
    prediction is the per-label majority across trees."""

    def __init__(self, n_estimators: int = 100, random_state: int = 0,
                 bootstrap: bool = True, max_features="sqrt",
                 min_samples_leaf: int = 1):
        self.n_estimators = n_estimators
        self.random_state = random_state
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf

    def fit(self, x, y):
        x = check_array(x)
        y = check_bit_matrix(y)
        check_consistent_length(x, y)
        if self.n_estimators < 1:
            raise ValidationError("n_estimators must be >= 1")
        rng = check_random_state(self.random_state)
        self.trees_ = []
        self.n_outputs_ = y.shape[1]
        n = len(x)
        for _ in range(self.n_estimators):
            seed = int(rng.integers(2 ** 31))
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTreeAzClassifier(
                random_state=seed,
                min_samples_leaf=self.min_samples_leaf,
                max_features=self.max_features,
            )
            self.trees_.append(tree.fit(x[idx], y[idx]))
        return self

    def predict_proba(self, x):
        """Fraction of trees voting 1 per label."""
        check_is_fitted(self, "trees_")
        votes = np.zeros((len(np.asarray(x)), self.n_outputs_))
        for tree in self.trees_:
            votes += tree.predict(x)
        return votes / len(self.trees_)

    def predict(self, x):
        return (self.predict_proba(x) > 0.5).astype(np.uint8)


MODEL_KINDS = {
    "knn": KNeighborsAzClassifier,
    "tree": DecisionTreeAzClassifier,
    "forest": RandomForestAzClassifier,
}


def model_kind(estimator) -> str:
    for kind, cls in MODEL_KINDS.items():
        if type(estimator) is cls:
            return kind
    raise ValidationError(f"unknown estimator type {type(estimator).__name__}")


def save_model(estimator, path) -> None:
    """Persist a fitted estimator to a self-describing .npz file."""
    kind = model_kind(estimator)
    arrays = {}
    meta = {"kind": kind, "params": estimator.get_params(),
            "n_outputs": estimator.n_outputs_}
    if kind == "knn":
        check_is_fitted(estimator, "x_")
        arrays.update(x=estimator.x_, y=estimator.y_,
                      mean=estimator.scaler_.mean_, scale=estimator.scaler_.scale_)
    elif kind == "tree":
        check_is_fitted(estimator, "nodes_")
        arrays.update(_tree_arrays(estimator, ""))
    else:
        check_is_fitted(estimator, "trees_")
        meta["n_trees"] = len(estimator.trees_)
        for i, tree in enumerate(estimator.trees_):
            arrays.update(_tree_arrays(tree, f"t{i}_"))
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez_compressed(path, **arrays)


def _tree_arrays(tree, prefix):
    nd = tree.nodes_
    return {
        prefix + "feature": nd.feature,
        prefix + "threshold": nd.threshold,
        prefix + "left": nd.left,
        prefix + "right": nd.right,
        prefix + "proba": nd.proba,
        prefix + "mean": tree.scaler_.mean_,
        prefix + "scale": tree.scaler_.scale_,
       }


def _load_tree(data, prefix, params, n_outputs):
    tree = DecisionTreeAzClassifier(**params)
    nodes = _TreeNodes()
    nodes.feature = data[prefix + "feature"]
    nodes.threshold = data[prefix + "threshold"]
    nodes.left = data[prefix + "left"]
    nodes.right = data[prefix + "right"]
    nodes.proba = data[prefix + "proba"]
    tree.nodes_ = nodes
    tree.n_outputs_ = n_outputs
    tree.n_features_ = len(data[prefix + "mean"])
    tree.scaler_ = FeatureScaler()
    tree.scaler_.mean_ = data[prefix + "mean"]
    tree.scaler_.scale_ = data[prefix + "scale"]
    return tree


def load_model(path):
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataSchemaError(f"cannot read model file: {exc}") from exc
    if "meta" not in data:
        raise DataSchemaError("model file is missing its metadata record")
    meta = json.loads(bytes(data["meta"]).decode())
    kind, params, n_out = meta["kind"], meta["params"], meta["n_outputs"]
    if kind == "knn":
        est = KNeighborsAzClassifier(**params)
        est.x_ = data["x"]
        est.y_ = data["y"]
        est.n_outputs_ = n_out
        est.scaler_ = FeatureScaler()
        est.scaler_.mean_ = data["mean"]
        est.scaler_.scale_ = data["scale"]
        return est
    if kind == "tree":
        return _load_tree(data, "", params, n_out)
    if kind == "forest":
        est = RandomForestAzClassifier(**params)
        tree_params = {
            "min_samples_leaf": params.get("min_samples_leaf", 1),
            "max_features": params.get("max_features", "sqrt"),
        }
        est.trees_ = [
            _load_tree(data, f"t{i}_", tree_params, n_out)
            for i in range(meta["n_trees"])
        ]
        est.n_outputs_ = n_out
        return est
    raise DataSchemaError(f"unknown model kind {kind!r}")
