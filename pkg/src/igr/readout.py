"""Linear readouts: closed-form ridge regression and a logistic classifier.

The ridge readout follows the convention that the bias is weight ``w_0``
paired with a constant feature ``X_0 = 1`` and is penalised together with
all other weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.special


class SingularNormalMatrixError(np.linalg.LinAlgError):
    pass


class DimensionMismatchError(ValueError):
    pass


class ZeroVarianceTargetError(ValueError):
    pass


class ZeroNormTargetError(ValueError):
    pass


DEFAULT_RIDGE_LAMBDA = 5e-4


@dataclass
class RidgeReadout:
    weights: np.ndarray          # (features + 1,), weights[0] is the bias
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    labels: list = field(default_factory=list)

    @property
    def bias(self) -> float:
        return float(self.weights[0])

    @property
    def feature_count(self) -> int:
        return self.weights.size - 1

    def to_json(self) -> str:
        return json.dumps({"lambda": self.ridge_lambda,
                           "weights": [float(w) for w in self.weights],
                           "labels": list(self.labels)}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RidgeReadout":
        data = json.loads(text)
        return cls(np.asarray(data["weights"], dtype=float), float(data["lambda"]),
                   list(data.get("labels", [])))


def with_bias(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.hstack([np.ones((X.shape[0], 1)), X])


def ridge_cost(weights, X, y, ridge_lambda) -> float:
    """J(W) = 1/2 sum (y - W.X)^2 + lambda/2 sum_{i>=0} w_i^2."""
    r = np.asarray(y, dtype=float) - with_bias(X) @ weights
    return 0.5 * float(r @ r) + 0.5 * ridge_lambda * float(weights @ weights)


def ridge_fit(X, y, ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
              labels: Optional[Sequence[str]] = None) -> RidgeReadout:
    """Closed-form ridge solution W = Y X^T (X X^T + lambda I)^-1.

    ``X`` is (T, N) with one row per training step; the constant bias
    column is added here.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    A = with_bias(X)
    y = np.asarray(y, dtype=float).ravel()
    if A.shape[0] != y.size:
        raise DimensionMismatchError(f"{A.shape[0]} rows but {y.size} targets")
    gram = A.T @ A
    gram[np.diag_indices_from(gram)] += ridge_lambda
    rhs = A.T @ y
    try:
        factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalMatrixError(
            "normal matrix is not positive definite; use ridge_lambda > 0") from exc
    w = scipy.linalg.cho_solve(factor, rhs)
    return RidgeReadout(w, float(ridge_lambda), list(labels or []))


def ridge_predict(readout: RidgeReadout, X) -> np.ndarray:
    A = with_bias(X)
    if A.shape[1] != readout.weights.size:
        raise DimensionMismatchError(
            f"readout expects {readout.feature_count} features, got {A.shape[1] - 1}")
    return A @ readout.weights


def _pair(y_target, y_pred):
    y_target = np.asarray(y_target, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_target.shape != y_pred.shape:
        raise DimensionMismatchError("target and prediction lengths differ")
    return y_target, y_pred


def nmse(y_target, y_pred) -> float:
    """Mean squared error over the population variance of the target."""
    y_target, y_pred = _pair(y_target, y_pred)
    if y_target.size < 2:
        raise ValueError("need at least two samples")
    var = np.var(y_target)
    if var == 0:
        raise ZeroVarianceTargetError("target has zero variance")
    return float(np.mean((y_target - y_pred) ** 2) / var)


def prediction_error(y_target, y_pred) -> float:
    """Sum of squared errors over the target's sum of squares."""
    y_target, y_pred = _pair(y_target, y_pred)
    norm = float(y_target @ y_target)
    if norm == 0:
        raise ZeroNormTargetError("target is identically zero")
    d = y_target - y_pred
    return float(d @ d) / norm


# --------------------------------------------------------------------------
# logistic readout

def sigmoid(z):
    return scipy.special.expit(z)


@dataclass
class LogisticReadout:
    weights: np.ndarray     # (classes, features + 1), column 0 is the bias
    learning_rate: float = 0.1
    epochs: int = 20
    mode: str = "online"

    def outputs(self, features) -> np.ndarray:
        return sigmoid(with_bias(features) @ self.weights.T)


def squared_error(weights, features, labels) -> float:
    """E = 1/2 sum_n sum_c (y_nc - g(W x_n)_c)^2 over the whole set."""
    h = sigmoid(with_bias(features) @ weights.T)
    return 0.5 * float(np.sum((np.asarray(labels) - h) ** 2))


def squared_error_gradient(weights, features, labels) -> np.ndarray:
    A = with_bias(features)
    h = sigmoid(A @ weights.T)
    delta = (h - np.asarray(labels)) * h * (1.0 - h)
    return delta.T @ A


def logistic_fit(features, labels, learning_rate: float = 0.1, epochs: int = 20,
                 seed: int = 0, mode: str = "online", init_scale: float = 0.01) -> LogisticReadout:
    """Gradient descent on the squared error of a sigmoid output layer.

    ``mode="online"`` applies the update after every sample (the error of
    one sample is summed over its class outputs); ``mode="batch"`` takes one
    full-batch step per epoch.  Weights start uniform in
    ``[-init_scale, init_scale]`` from ``seed``.
    """
    X = np.asarray(features, dtype=float)
    Y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError("features and one-hot labels must be 2-D with equal rows")
    if not learning_rate > 0:
        raise ValueError("learning_rate must be positive")
    if mode not in ("online", "batch"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-init_scale, init_scale, size=(Y.shape[1], X.shape[1] + 1))
    if mode == "batch":
        for _ in range(epochs):
            W -= learning_rate * squared_error_gradient(W, X, Y)
    else:
        W = _online_epochs(W, with_bias(X), Y, learning_rate, epochs)
    if not np.all(np.isfinite(W)):
        raise FloatingPointError("logistic weights diverged")
    return LogisticReadout(W, learning_rate, epochs, mode)


def _online_epochs(W, A, Y, lr, epochs):
    for _ in range(epochs):
        for a, y in zip(A, Y):
            h = sigmoid(W @ a)
            W -= lr * np.outer((h - y) * h * (1.0 - h), a)
    return W


def classify(readout: LogisticReadout, features) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return np.argmax(readout.outputs(features), axis=1)


def accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DimensionMismatchError("prediction and truth lengths differ")
    return float(np.mean(predicted == truth))


def one_hot(labels, classes: int = 10) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.size, classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


@dataclass
class RegressionReport:
    nmse_train: float
    nmse_test: float
    prediction_error_train: float
    prediction_error_test: float
    target: np.ndarray
    predicted: np.ndarray
    train_length: int
    readout: Optional[RidgeReadout] = None
    extra: dict = field(default_factory=dict)

    def metrics(self) -> dict:
        return {"nmse_train": self.nmse_train, "nmse_test": self.nmse_test,
                "prediction_error_train": self.prediction_error_train,
                "prediction_error_test": self.prediction_error_test}


def evaluate_regression(readout: RidgeReadout, X, y, train_length: int) -> RegressionReport:
    """Metrics on the first ``train_length`` rows and on the remainder."""
    y = np.asarray(y, dtype=float).ravel()
    pred = ridge_predict(readout, X)
    T = train_length
    return RegressionReport(
        nmse_train=nmse(y[:T], pred[:T]), nmse_test=nmse(y[T:], pred[T:]),
        prediction_error_train=prediction_error(y[:T], pred[:T]),
        prediction_error_test=prediction_error(y[T:], pred[T:]),
        target=y, predicted=pred, train_length=T, readout=readout)
