"""k-NN, logistic regression and a one-hidden-layer network, all binary, in numpy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateLabelsError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "knn" | "logreg" | "nn"
    knn_k: int = 5
    learning_rate: float | None = None
    epochs: int | None = None
    l2: float = 0.0
    hidden: tuple[int, ...] = (32,)
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("knn", "logreg", "nn"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.batch_size < 1 or self.l2 < 0 or any(h < 1 for h in self.hidden):
            raise ValueError(f"invalid model spec {self}")

    @property
    def lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return {"logreg": 2.0, "nn": 0.01}.get(self.kind, 0.0)

    @property
    def n_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return {"logreg": 2000, "nn": 50}.get(self.kind, 1)

    @property
    def name(self) -> str:
        return self.kind

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(**{**self.__dict__, "seed": seed})

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    return y.astype(float)


class KNN:
    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y):
        _check_labels(y)
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_features = self.X.shape[1]
        self._sq = np.einsum("ij,ij->i", self.X, self.X)
        return self

    def predict(self, X, chunk: int = 1024) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        k = min(self.k, len(self.X))
        classes = np.unique(self.y)
        out = np.empty(len(X), dtype=np.int64)
        for start in range(0, len(X), chunk):
            block = X[start:start + chunk]
            d2 = self._sq[None, :] - 2.0 * block @ self.X.T + np.einsum("ij,ij->i", block, block)[:, None]
            np.maximum(d2, 0.0, out=d2)
            kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
            nearest = np.empty((len(block), k), dtype=np.int64)
            for r in range(len(block)):
                cand = np.flatnonzero(d2[r] <= kth[r])
                # equal distances resolve by training index
                nearest[r] = cand[np.argsort(d2[r, cand], kind="stable")[:k]]
            # argmax keeps the first maximum: vote ties go to the smaller label
            votes = (self.y[nearest][:, :, None] == classes[None, None, :]).sum(axis=1)
            out[start:start + chunk] = classes[np.argmax(votes, axis=1)]
        return out


class LogisticRegression:
    """Full-batch gradient descent on mean cross-entropy plus (l2/2)||w||^2."""

    def __init__(self, lr: float = 2.0, epochs: int = 2000, l2: float = 0.0):
        self.lr, self.epochs, self.l2 = lr, epochs, l2
        self.losses: list[float] = []

    def init(self, n_features: int):
        self.w = np.zeros(n_features)
        self.b = 0.0
        self.n_features = n_features
        return self

    def loss_and_grad(self, X, y):
        p = sigmoid(X @ self.w + self.b)
        loss = _bce(p, y) + 0.5 * self.l2 * float(self.w @ self.w)
        r = (p - y) / len(y)
        return loss, X.T @ r + self.l2 * self.w, float(r.sum())

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = _check_labels(y)
        self.init(X.shape[1])
        self.losses = []
        for _ in range(self.epochs):
            loss, gw, gb = self.loss_and_grad(X, y)
            self.losses.append(loss)
            self.w -= self.lr * gw
            self.b -= self.lr * gb
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return sigmoid(X @ self.w + self.b)

    def predict(self, X) -> np.ndarray:
        # p == 0.5 goes to label 0
        return (self.predict_proba(X) > 0.5).astype(np.int64)


class NeuralNetwork:
    """ReLU hidden layers, sigmoid output, seeded mini-batch SGD on cross-entropy."""

    def __init__(self, hidden=(32,), lr: float = 0.01, epochs: int = 50,
                 batch_size: int = 32, seed: int = 0):
        self.hidden = tuple(hidden)
        self.lr, self.epochs, self.batch_size, self.seed = lr, epochs, batch_size, seed
        self.losses: list[float] = []

    def init(self, n_features: int):
        rng = np.random.default_rng(self.seed)
        sizes = [n_features, *self.hidden, 1]
        # He init for ReLU layers, Glorot for the sigmoid output
        self.params = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            scale = np.sqrt(2.0 / (fan_in + fan_out)) if last else np.sqrt(2.0 / fan_in)
            self.params.append([rng.normal(0.0, scale, (fan_in, fan_out)), np.zeros(fan_out)])
        self.n_features = n_features
        self._rng = rng
        return self

    def _forward(self, X):
        acts = [X]
        h = X
        for W, b in self.params[:-1]:
            h = np.maximum(h @ W + b, 0.0)
            acts.append(h)
        W, b = self.params[-1]
        return acts, sigmoid((h @ W + b)[:, 0])

    def loss_and_grad(self, X, y):
        acts, p = self._forward(X)
        loss = _bce(p, y)
        delta = ((p - y) / len(y))[:, None]
        grads = []
        for layer in range(len(self.params) - 1, -1, -1):
            W, _ = self.params[layer]
            a = acts[layer]
            grads.append([a.T @ delta, delta.sum(axis=0)])
            if layer:
                delta = (delta @ W.T) * (a > 0)
        grads.reverse()
        return loss, grads

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = _check_labels(y)
        self.init(X.shape[1])
        self.losses = []
        n = len(y)
        for _ in range(self.epochs):
            order = self._rng.permutation(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                loss, grads = self.loss_and_grad(X[batch], y[batch])
                total += loss * len(batch)
                for (W, b), (gW, gb) in zip(self.params, grads):
                    W -= self.lr * gW
                    b -= self.lr * gb
            self.losses.append(total / n)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return self._forward(X)[1]

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)


def build(spec: ModelSpec):
    if spec.kind == "knn":
        return KNN(spec.knn_k)
    if spec.kind == "logreg":
        return LogisticRegression(spec.lr, spec.n_epochs, spec.l2)
    return NeuralNetwork(spec.hidden, spec.lr, spec.n_epochs, spec.batch_size, spec.seed)


def train(spec: ModelSpec, X, y):
    return build(spec).fit(X, y)


def predict(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and len(X) == 0:
        if X.shape[1] != model.n_features:
            raise ValueError(f"expected {model.n_features} features, got shape {X.shape}")
        return np.zeros(0, dtype=np.int64)
    return model.predict(X)


def accuracy(predicted, actual) -> float:
    predicted, actual = np.asarray(predicted), np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {actual.shape}")
    if predicted.size == 0:
        raise ValueError("accuracy of an empty prediction is undefined")
    return int((predicted == actual).sum()) / predicted.size


@dataclass
class AccuracyReport:
    model: ModelSpec
    source_data: str
    replicate_accuracies: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.replicate_accuracies))

    accuracy = mean
