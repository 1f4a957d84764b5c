"""Regression learners used as nuisance models.

Everything here is implemented from first principles on numpy arrays:

  linear  ordinary least squares (lstsq, rank-tolerant)
  tree    CART regression tree, exact variance-reduction splits
  gbm     gradient boosting over shallow trees
  rgbm    gradient boosting with L2-regularized leaf values and gains
  mlp     fully-connected ReLU net, Adam, early stopping on a val split

The tree grower and walker are numba-jitted: split search scans every
(feature, threshold) pair over presorted index columns, so fits are exact
and deterministic. Ties between equally good splits go to the lowest
feature index, then the lowest threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np
from numba import njit

from .errors import ConfigError, DataError, InsufficientDataError, ParameterError

KINDS = ("linear", "tree", "gbm", "rgbm", "mlp")


@dataclass(frozen=True)
class LearnerSpec:
    """Hyperparameters for one learner. Use the classmethod factories; they
    carry the calibrated per-kind defaults."""

    kind: str
    max_depth: int = 3
    min_leaf: int = 20
    n_stages: int = 300
    learning_rate: float = 0.05
    subsample: float = 1.0
    l2_leaf: float = 0.0
    hidden_layers: tuple[int, ...] = (100, 50, 25)
    epochs: int = 200
    batch_size: int = 64
    step_size: float = 1e-3
    l2: float = 0.0
    patience: int = 20
    val_fraction: float = 0.1

    @classmethod
    def linear(cls) -> "LearnerSpec":
        return cls(kind="linear")

    @classmethod
    def tree(cls, max_depth: int = 6, min_leaf: int = 10) -> "LearnerSpec":
        return cls(kind="tree", max_depth=max_depth, min_leaf=min_leaf)

    @classmethod
    def gbm(
        cls,
        max_depth: int = 2,
        n_stages: int = 120,
        learning_rate: float = 0.05,
        min_leaf: int = 100,
        subsample: float = 1.0,
    ) -> "LearnerSpec":
        return cls(
            kind="gbm", max_depth=max_depth, n_stages=n_stages,
            learning_rate=learning_rate, min_leaf=min_leaf, subsample=subsample,
        )

    @classmethod
    def rgbm(
        cls,
        max_depth: int = 4,
        n_stages: int = 250,
        learning_rate: float = 0.05,
        min_leaf: int = 30,
        l2_leaf: float = 2.0,
        subsample: float = 1.0,
    ) -> "LearnerSpec":
        return cls(
            kind="rgbm", max_depth=max_depth, n_stages=n_stages,
            learning_rate=learning_rate, min_leaf=min_leaf, l2_leaf=l2_leaf,
            subsample=subsample,
        )

    @classmethod
    def mlp(
        cls,
        hidden_layers: tuple[int, ...] = (100, 50, 25),
        epochs: int = 200,
        batch_size: int = 64,
        step_size: float = 1e-3,
        l2: float = 5e-3,
        patience: int = 20,
    ) -> "LearnerSpec":
        return cls(
            kind="mlp", hidden_layers=tuple(hidden_layers), epochs=epochs,
            batch_size=batch_size, step_size=step_size, l2=l2, patience=patience,
        )

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("tree", "gbm", "rgbm"):
            if self.max_depth < 0:
                raise ConfigError("max_depth must be >= 0")
            if self.min_leaf < 1:
                raise ConfigError("min_leaf must be >= 1")
        if self.kind in ("gbm", "rgbm"):
            if self.n_stages < 1:
                raise ConfigError("n_stages must be >= 1")
            if not (0.0 < self.learning_rate <= 1.0):
                raise ConfigError("learning_rate must lie in (0, 1]")
            if not (0.0 < self.subsample <= 1.0):
                raise ConfigError("subsample must lie in (0, 1]")
            if self.l2_leaf < 0:
                raise ConfigError("l2_leaf must be >= 0")
        if self.kind == "mlp":
            if len(self.hidden_layers) == 0 or any(h < 1 for h in self.hidden_layers):
                raise ConfigError("mlp needs a non-empty tuple of positive layer widths")
            if self.epochs < 1 or self.batch_size < 1:
                raise ConfigError("epochs and batch_size must be >= 1")
            if self.patience < 0:
                raise ConfigError("patience must be >= 0 (0 disables early stopping)")
            if self.step_size <= 0:
                raise ConfigError("step_size must be positive")
            if not (0.0 < self.val_fraction < 0.5):
                raise ConfigError("val_fraction must lie in (0, 0.5)")
            if self.l2 < 0:
                raise ConfigError("l2 must be >= 0")

    def label(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "tree":
            return f"tree(d{self.max_depth})"
        if self.kind == "gbm":
            return f"gbm(d{self.max_depth},m{self.n_stages})"
        if self.kind == "rgbm":
            return f"rgbm(d{self.max_depth},m{self.n_stages},l2={self.l2_leaf:g})"
        return "mlp(" + "-".join(str(h) for h in self.hidden_layers) + ")"

    def param_count(self, n_features: int) -> int:
        """Rough capacity count, used only to break selection ties."""
        if self.kind == "linear":
            return n_features + 1
        if self.kind == "tree":
            return 2 ** self.max_depth
        if self.kind in ("gbm", "rgbm"):
            return self.n_stages * (2 ** self.max_depth)
        sizes = (n_features, *self.hidden_layers, 1)
        return int(sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_layers"] = list(self.hidden_layers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown learner spec fields: {sorted(unknown)}")
        if "hidden_layers" in d:
            d["hidden_layers"] = tuple(int(h) for h in d["hidden_layers"])
        spec = cls(**d)
        spec.validate()
        return spec


# --------------------------------------------------------------------------
# CART kernels. `idx` holds, per feature column, the row indices sorted by
# that feature. Nodes own contiguous index ranges; splitting stably
# partitions every column in place, which preserves each column's internal
# sort order.
# --------------------------------------------------------------------------

@njit(cache=True)
def _grow(X, y, idx, max_depth, min_leaf, l2_leaf,
          feature, threshold, left, right, value, leaf_of):  # pragma: no cover
    n = idx.shape[0]
    d = idx.shape[1]
    max_nodes = feature.shape[0]
    stack_lo = np.empty(max_nodes, np.int64)
    stack_hi = np.empty(max_nodes, np.int64)
    stack_dep = np.empty(max_nodes, np.int64)
    stack_node = np.empty(max_nodes, np.int64)
    mask = np.zeros(n, np.bool_)
    scratch = np.empty(n, np.int64)

    n_nodes = 1
    sp = 0
    stack_lo[sp] = 0
    stack_hi[sp] = n
    stack_dep[sp] = 0
    stack_node[sp] = 0
    sp += 1

    while sp > 0:
        sp -= 1
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_dep[sp]
        node = stack_node[sp]
        m = hi - lo

        tot = 0.0
        for p in range(lo, hi):
            tot += y[idx[p, 0]]
        value[node] = tot / (m + l2_leaf)
        feature[node] = -1

        if depth >= max_depth or m < 2 * min_leaf:
            for p in range(lo, hi):
                leaf_of[idx[p, 0]] = node
            continue

        base = tot * tot / (m + l2_leaf)
        best_gain = base
        best_f = -1
        best_nl = 0
        best_thr = 0.0
        for j in range(d):
            s = 0.0
            for p in range(lo, hi - 1):
                r = idx[p, j]
                s += y[r]
                nl = p - lo + 1
                nr = m - nl
                if nl < min_leaf:
                    continue
                if nr < min_leaf:
                    break
                xv = X[r, j]
                xn = X[idx[p + 1, j], j]
                if xn <= xv:
                    continue
                gain = s * s / (nl + l2_leaf) + (tot - s) * (tot - s) / (nr + l2_leaf)
                if gain > best_gain:
                    best_gain = gain
                    best_f = j
                    best_nl = nl
                    best_thr = 0.5 * (xv + xn)

        if best_f < 0:
            for p in range(lo, hi):
                leaf_of[idx[p, 0]] = node
            continue

        for p in range(lo, hi):
            r = idx[p, best_f]
            mask[r] = X[r, best_f] <= best_thr
        for j in range(d):
            a = lo
            b = 0
            for p in range(lo, hi):
                r = idx[p, j]
                if mask[r]:
                    idx[a, j] = r
                    a += 1
                else:
                    scratch[b] = r
                    b += 1
            for q in range(b):
                idx[a + q, j] = scratch[q]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        stack_lo[sp] = lo + best_nl
        stack_hi[sp] = hi
        stack_dep[sp] = depth + 1
        stack_node[sp] = right_id
        sp += 1
        stack_lo[sp] = lo
        stack_hi[sp] = lo + best_nl
        stack_dep[sp] = depth + 1
        stack_node[sp] = left_id
        sp += 1
    return n_nodes


@njit(cache=True)
def _apply(Xq, feature, threshold, left, right, value):  # pragma: no cover
    nq = Xq.shape[0]
    out = np.empty(nq)
    for i in range(nq):
        node = 0
        while feature[node] >= 0:
            if Xq[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


class _Tree:
    """Flat-array CART regression tree."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "n_nodes")

    def __init__(self, X, y, idx, max_depth, min_leaf, l2_leaf, leaf_of):
        n = idx.shape[0]
        cap = min(2 ** (max_depth + 1) - 1 if max_depth < 40 else 2 * n, 2 * n)
        cap = max(cap, 1)
        self.feature = np.full(cap, -1, dtype=np.int64)
        self.threshold = np.zeros(cap)
        self.left = np.zeros(cap, dtype=np.int64)
        self.right = np.zeros(cap, dtype=np.int64)
        self.value = np.zeros(cap)
        self.n_nodes = _grow(
            X, y, idx, max_depth, min_leaf, float(l2_leaf),
            self.feature, self.threshold, self.left, self.right,
            self.value, leaf_of,
        )

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        return _apply(
            np.ascontiguousarray(Xq, dtype=np.float64),
            self.feature, self.threshold, self.left, self.right, self.value,
        )

    def leaf_values(self) -> np.ndarray:
        return self.value[: self.n_nodes][self.feature[: self.n_nodes] < 0]


def _presort(X: np.ndarray) -> np.ndarray:
    return np.argsort(X, axis=0, kind="stable").astype(np.int64)


@njit(cache=True)
def _boost_grow(X, y, idx0, n_stages, max_depth, min_leaf, l2_leaf, lr,
                features, thresholds, lefts, rights, values,
                train_loss):  # pragma: no cover
    """Full boosting loop: grow n_stages trees on running residuals.
    Tree s lives in row s of the stacked node arrays."""
    n = X.shape[0]
    f0 = 0.0
    for i in range(n):
        f0 += y[i]
    f0 /= n
    resid = np.empty(n)
    for i in range(n):
        resid[i] = y[i] - f0
    idx = np.empty_like(idx0)
    leaf_of = np.empty(n, np.int64)
    for s in range(n_stages):
        idx[:] = idx0
        _grow(X, resid, idx, max_depth, min_leaf, l2_leaf,
              features[s], thresholds[s], lefts[s], rights[s], values[s],
              leaf_of)
        acc = 0.0
        for i in range(n):
            resid[i] -= lr * values[s, leaf_of[i]]
            acc += resid[i] * resid[i]
        train_loss[s] = acc / n
    return f0


@njit(cache=True)
def _boost_apply(Xq, features, thresholds, lefts, rights, values,
                 lr, f0):  # pragma: no cover
    nq = Xq.shape[0]
    n_stages = features.shape[0]
    out = np.full(nq, f0)
    for i in range(nq):
        acc = 0.0
        for s in range(n_stages):
            node = 0
            while features[s, node] >= 0:
                if Xq[i, features[s, node]] <= thresholds[s, node]:
                    node = lefts[s, node]
                else:
                    node = rights[s, node]
            acc += values[s, node]
        out[i] += lr * acc
    return out


# --------------------------------------------------------------------------
# Fitted-model wrappers
# --------------------------------------------------------------------------

class FittedModel:
    """A trained learner: deterministic predict plus fit diagnostics."""

    def __init__(self, spec: LearnerSpec, predict_fn: Callable[[np.ndarray], np.ndarray],
                 n_features: int, diagnostics: dict):
        self.spec = spec
        self._predict = predict_fn
        self.n_features = n_features
        self.diagnostics = diagnostics

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X)
        if X.shape[1] != self.n_features:
            raise DataError(
                f"model was fit on {self.n_features} features, got {X.shape[1]}"
            )
        return self._predict(X)


def _check_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"feature matrix must be 2-d, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    return X


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = _check_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size != X.shape[0]:
        raise DataError("y must be 1-d with one entry per row of X")
    if not np.all(np.isfinite(y)):
        raise DataError("y contains non-finite values")
    if X.shape[0] < 10:
        raise InsufficientDataError(f"need at least 10 rows to fit, got {X.shape[0]}")
    return X, y


def _fit_linear(spec, X, y, rng_seed) -> FittedModel:
    Xd = np.column_stack([np.ones(X.shape[0]), X])
    coef, _, rank, _ = np.linalg.lstsq(Xd, y, rcond=None)
    resid = y - Xd @ coef
    diag = {"train_mse": float(np.mean(resid ** 2)), "rank": int(rank)}
    return FittedModel(spec, lambda Xq: np.column_stack([np.ones(Xq.shape[0]), Xq]) @ coef,
                       X.shape[1], diag)


def _fit_tree(spec, X, y, rng_seed) -> FittedModel:
    Xc = np.ascontiguousarray(X)
    idx = _presort(Xc)
    leaf_of = np.empty(X.shape[0], dtype=np.int64)
    tree = _Tree(Xc, y, idx, spec.max_depth, spec.min_leaf, 0.0, leaf_of)
    pred_train = tree.value[leaf_of]
    diag = {
        "train_mse": float(np.mean((y - pred_train) ** 2)),
        "n_leaves": int(np.sum(tree.feature[: tree.n_nodes] < 0)),
    }
    return FittedModel(spec, tree.predict, X.shape[1], diag)


def _fit_boosting(spec, X, y, rng_seed) -> FittedModel:
    lam = float(spec.l2_leaf) if spec.kind == "rgbm" else 0.0
    Xc = np.ascontiguousarray(X)
    n = Xc.shape[0]
    idx0 = _presort(Xc)
    cap = max(min(2 ** (spec.max_depth + 1) - 1 if spec.max_depth < 40 else 2 * n, 2 * n), 1)
    features = np.full((spec.n_stages, cap), -1, dtype=np.int64)
    thresholds = np.zeros((spec.n_stages, cap))
    lefts = np.zeros((spec.n_stages, cap), dtype=np.int64)
    rights = np.zeros((spec.n_stages, cap), dtype=np.int64)
    values = np.zeros((spec.n_stages, cap))
    train_losses = np.empty(spec.n_stages)

    if spec.subsample >= 1.0:
        f0 = _boost_grow(
            Xc, y, idx0, spec.n_stages, spec.max_depth, spec.min_leaf, lam,
            spec.learning_rate, features, thresholds, lefts, rights, values,
            train_losses,
        )
    else:
        # subsampled stages keep the python loop; each stage refits on a
        # bernoulli row subset but the running residual covers all rows
        rng = np.random.default_rng(rng_seed)
        f0 = float(y.mean())
        resid = y - f0
        leaf_of = np.empty(n, dtype=np.int64)
        for s in range(spec.n_stages):
            take = rng.random(n) < spec.subsample
            if take.sum() < max(2 * spec.min_leaf, 10):
                take[:] = True
            idx = np.empty((int(take.sum()), idx0.shape[1]), dtype=np.int64)
            for j in range(idx0.shape[1]):
                col = idx0[:, j]
                idx[:, j] = col[take[col]]
            _grow(Xc, resid, idx, spec.max_depth, spec.min_leaf, lam,
                  features[s], thresholds[s], lefts[s], rights[s], values[s],
                  leaf_of)
            resid -= spec.learning_rate * _apply(
                Xc, features[s], thresholds[s], lefts[s], rights[s], values[s]
            )
            train_losses[s] = np.mean(resid ** 2)

    def predict(Xq: np.ndarray) -> np.ndarray:
        Xq = np.ascontiguousarray(Xq, dtype=np.float64)
        return _boost_apply(Xq, features, thresholds, lefts, rights, values,
                            spec.learning_rate, f0)

    diag = {"train_loss": train_losses, "train_mse": float(train_losses[-1])}
    return FittedModel(spec, predict, X.shape[1], diag)


# --------------------------------------------------------------------------
# MLP
# --------------------------------------------------------------------------

class MlpNet:
    """Bare fully-connected net: ReLU hidden layers, linear output, mean
    squared error loss. Weights are float64; gradients come from manual
    backprop so they can be finite-difference checked."""

    def __init__(self, layer_sizes: tuple[int, ...], rng_seed):
        rng = np.random.default_rng(rng_seed)
        self.sizes = tuple(layer_sizes)
        self.W = []
        self.b = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            self.W.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
            self.b.append(np.zeros(fan_out))

    def forward(self, X: np.ndarray) -> np.ndarray:
        a = X
        for W, b in zip(self.W[:-1], self.b[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return (a @ self.W[-1] + self.b[-1])[:, 0]

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        d = self.forward(X) - y
        return float(np.mean(d * d))

    def grads(self, X: np.ndarray, y: np.ndarray, l2: float = 0.0):
        """d(loss)/d(params) for loss = mean((f(X) - y)^2) + l2*sum(W^2)."""
        n = X.shape[0]
        acts = [X]
        a = X
        for W, b in zip(self.W[:-1], self.b[:-1]):
            a = np.maximum(a @ W + b, 0.0)
            acts.append(a)
        pred = (a @ self.W[-1] + self.b[-1])[:, 0]

        gW = [None] * len(self.W)
        gb = [None] * len(self.b)
        delta = (2.0 / n) * (pred - y)[:, None]
        for k in range(len(self.W) - 1, -1, -1):
            gW[k] = acts[k].T @ delta + 2.0 * l2 * self.W[k]
            gb[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.W[k].T) * (acts[k] > 0.0)
        return gW, gb

    def get_params(self):
        return [w.copy() for w in self.W], [b.copy() for b in self.b]

    def set_params(self, W, b):
        self.W = [w.copy() for w in W]
        self.b = [v.copy() for v in b]


class _Adam:
    def __init__(self, net: MlpNet, step_size: float):
        self.lr = step_size
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.mW = [np.zeros_like(w) for w in net.W]
        self.vW = [np.zeros_like(w) for w in net.W]
        self.mb = [np.zeros_like(b) for b in net.b]
        self.vb = [np.zeros_like(b) for b in net.b]

    def step(self, net: MlpNet, gW, gb):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in range(len(net.W)):
            self.mW[k] = self.beta1 * self.mW[k] + (1 - self.beta1) * gW[k]
            self.vW[k] = self.beta2 * self.vW[k] + (1 - self.beta2) * gW[k] ** 2
            net.W[k] -= self.lr * (self.mW[k] / c1) / (np.sqrt(self.vW[k] / c2) + self.eps)
            self.mb[k] = self.beta1 * self.mb[k] + (1 - self.beta1) * gb[k]
            self.vb[k] = self.beta2 * self.vb[k] + (1 - self.beta2) * gb[k] ** 2
            net.b[k] -= self.lr * (self.mb[k] / c1) / (np.sqrt(self.vb[k] / c2) + self.eps)


def _as_seedseq(rng_seed) -> np.random.SeedSequence:
    if isinstance(rng_seed, np.random.SeedSequence):
        return rng_seed
    return np.random.SeedSequence(rng_seed)


def _fit_mlp(spec, X, y, rng_seed) -> FittedModel:
    """patience > 0 trains with early stopping on a held-out val split and
    restores the best weights; patience == 0 trains the full epoch budget
    on all rows (no split, no restore)."""
    ss = _as_seedseq(rng_seed).spawn(3)
    n, d = X.shape
    early_stop = spec.patience > 0

    x_mu, x_sd = X.mean(axis=0), X.std(axis=0)
    x_sd = np.where(x_sd < 1e-12, 1.0, x_sd)
    y_mu, y_sd = float(y.mean()), float(y.std())
    if y_sd < 1e-12:
        y_sd = 1.0
    Xs = (X - x_mu) / x_sd
    ys = (y - y_mu) / y_sd

    if early_stop:
        n_val = max(1, int(round(spec.val_fraction * n)))
        perm = np.random.default_rng(ss[0]).permutation(n)
        val_idx, tr_idx = perm[:n_val], perm[n_val:]
        Xtr, ytr = Xs[tr_idx], ys[tr_idx]
        Xval, yval = Xs[val_idx], ys[val_idx]
    else:
        Xtr, ytr = Xs, ys
        Xval, yval = None, None

    net = MlpNet((d, *spec.hidden_layers, 1), ss[1])
    opt = _Adam(net, spec.step_size)
    shuffle_rng = np.random.default_rng(ss[2])

    best_val = np.inf
    best_params = net.get_params()
    best_epoch = 0
    wait = 0
    train_curve, val_curve = [], []
    n_tr = Xtr.shape[0]
    for epoch in range(spec.epochs):
        order = shuffle_rng.permutation(n_tr)
        running, nb = 0.0, 0
        for start in range(0, n_tr, spec.batch_size):
            rows = order[start:start + spec.batch_size]
            gW, gb = net.grads(Xtr[rows], ytr[rows], spec.l2)
            opt.step(net, gW, gb)
            running += net.loss(Xtr[rows], ytr[rows])
            nb += 1
        train_curve.append(running / nb)
        if not early_stop:
            best_epoch = epoch
            continue
        v = net.loss(Xval, yval)
        val_curve.append(v)
        if v < best_val - 1e-9:
            best_val = v
            best_params = net.get_params()
            best_epoch = epoch
            wait = 0
        else:
            wait += 1
            if wait >= spec.patience:
                break
    if early_stop:
        net.set_params(*best_params)

    def predict(Xq: np.ndarray) -> np.ndarray:
        return net.forward((Xq - x_mu) / x_sd) * y_sd + y_mu

    diag = {
        "train_curve": np.asarray(train_curve),
        "val_curve": np.asarray(val_curve),
        "best_epoch": best_epoch,
        "epochs_run": len(train_curve),
        "train_mse": float(np.mean((y - predict(X)) ** 2)),
    }
    return FittedModel(spec, predict, d, diag)


_FITTERS = {
    "linear": _fit_linear,
    "tree": _fit_tree,
    "gbm": _fit_boosting,
    "rgbm": _fit_boosting,
    "mlp": _fit_mlp,
}


def fit(spec: LearnerSpec, X: np.ndarray, y: np.ndarray, rng_seed=0) -> FittedModel:
    """Train one learner. Same (spec, X, y, rng_seed) always gives the same
    model; the tree family ignores the seed unless subsampling is on."""
    spec.validate()
    X, y = _check_xy(X, y)
    return _FITTERS[spec.kind](spec, X, y, rng_seed)


def grad_check(spec: LearnerSpec, X: np.ndarray, y: np.ndarray, h: float = 1e-5) -> float:
    """Compare backprop gradients against central finite differences.

    Returns the maximum relative discrepancy over every weight and bias.
    Cost is one loss evaluation per parameter per side: keep the net tiny.
    An empty hidden_layers tuple checks the bare linear output layer.
    """
    X = _check_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    net = MlpNet((X.shape[1], *spec.hidden_layers, 1), rng_seed=0)
    gW, gb = net.grads(X, y, spec.l2)
    worst = 0.0
    for params, grads in ((net.W, gW), (net.b, gb)):
        for arr, g in zip(params, grads):
            flat, gflat = arr.ravel(), g.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up = net.loss(X, y) + spec.l2 * sum(float(np.sum(w * w)) for w in net.W)
                flat[i] = keep - h
                dn = net.loss(X, y) + spec.l2 * sum(float(np.sum(w * w)) for w in net.W)
                flat[i] = keep
                fd = (up - dn) / (2.0 * h)
                rel = abs(gflat[i] - fd) / max(abs(gflat[i]), abs(fd), 1e-8)
                worst = max(worst, rel)
    return worst


def smoothness_gap(rng_seed, target: str = "smooth") -> tuple[float, float]:
    """Head-to-head approximation test on a noiseless synthetic target.

    target="smooth": a rotated sinusoid plus a radial bowl; the MLP should
    win. target="axis_step": an axis-aligned staircase; the tree ensemble
    should win. Returns (mse_gbm, mse_mlp) on held-out points.
    """
    if target not in ("smooth", "axis_step"):
        raise ParameterError(f"unknown target {target!r}")
    rng = np.random.default_rng(rng_seed)
    d = 30
    X = rng.standard_normal((3000, d))
    if target == "smooth":
        w = rng.standard_normal(d)
        w /= np.linalg.norm(w)
        y = np.sin(X @ w) + np.sum(X * X, axis=1) / d
    else:
        y = (
            1.0 * (X[:, 0] > 0.0)
            + 0.7 * (X[:, 1] > -0.3)
            + 0.4 * (X[:, 2] > 0.5)
        )
    Xtr, ytr, Xte, yte = X[:2000], y[:2000], X[2000:], y[2000:]
    m_gbm = fit(LearnerSpec.gbm(), Xtr, ytr, rng_seed=0)
    m_mlp = fit(LearnerSpec.mlp(), Xtr, ytr, rng_seed=0)
    mse_gbm = float(np.mean((yte - m_gbm.predict(Xte)) ** 2))
    mse_mlp = float(np.mean((yte - m_mlp.predict(Xte)) ** 2))
    return mse_gbm, mse_mlp
