"""Two-class soft-margin RBF SVM verifier.

The dual problem is solved by sequential pairwise optimization: at each step
the maximally KKT-violating pair is updated analytically within its box
constraints while the equality constraint is preserved. Class 1 (the radio
under verification) maps to y = +1, class 2 to y = -1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidShape, InvalidValue, TrainingFailed


@dataclass
class SvmModel:
    support_vectors: np.ndarray       # rows in scaled feature space
    dual_coeffs: np.ndarray           # alpha_j * y_j
    bias: float
    kernel_zeta: float
    cost_c: float = 1.0
    feature_indices: np.ndarray | None = None
    scaler_mean: np.ndarray | None = None
    scaler_scale: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def save(self, path) -> None:
        data = {
            "feature_indices": (
                None if self.feature_indices is None
                else [int(i) for i in self.feature_indices]
            ),
            "scaler_mean": list(self.scaler_mean),
            "scaler_scale": list(self.scaler_scale),
            "kernel_zeta": self.kernel_zeta,
            "cost_c": self.cost_c,
            "bias": self.bias,
            "support_vectors": [list(row) for row in self.support_vectors],
            "dual_coeffs": list(self.dual_coeffs),
        }
        Path(path).write_text(json.dumps(data))

    @classmethod
    def load(cls, path) -> "SvmModel":
        data = json.loads(Path(path).read_text())
        fi = data["feature_indices"]
        return cls(
            support_vectors=np.array(data["support_vectors"], dtype=np.float64),
            dual_coeffs=np.array(data["dual_coeffs"], dtype=np.float64),
            bias=float(data["bias"]),
            kernel_zeta=float(data["kernel_zeta"]),
            cost_c=float(data["cost_c"]),
            feature_indices=None if fi is None else np.array(fi, dtype=np.int64),
            scaler_mean=np.array(data["scaler_mean"], dtype=np.float64),
            scaler_scale=np.array(data["scaler_scale"], dtype=np.float64),
        )


def rbf_kernel(A: np.ndarray, B: np.ndarray, zeta: float) -> np.ndarray:
    a2 = np.sum(A**2, axis=1)[:, None]
    b2 = np.sum(B**2, axis=1)[None, :]
    d2 = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-zeta * d2)


def _fit_scaler(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def train_svm(
    X: np.ndarray,
    labels: np.ndarray,
    c: float = 1.0,
    zeta: float | None = None,
    tolerance: float = 1e-3,
    max_updates: int = 1_000_000,
    feature_indices=None,
    seed=0,
) -> SvmModel:
    """Train the verifier on raw (unscaled) feature rows.

    ``labels`` holds class tags 1/2 or y values +1/-1. A per-feature
    standardizer is fit on the training rows and stored with the model;
    ``zeta`` defaults to 1 / n_features after standardization.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    # Class tag 1 and label +1 both map to y = +1; tag 2 / label -1 to y = -1.
    y = np.where(labels == 1, 1.0, -1.0)
    n, f = X.shape
    if len(np.unique(y)) < 2:
        raise InvalidValue("both classes must be present")
    if zeta is None:
        zeta = 1.0 / f
    if zeta <= 0:
        raise InvalidValue("zeta must be > 0")

    mean, scale = _fit_scaler(X)
    Z = (X - mean) / scale
    K = rbf_kernel(Z, Z, zeta)
    Q = (y[:, None] * y[None, :]) * K

    alpha = np.zeros(n)
    grad = -np.ones(n)               # gradient of 1/2 a'Qa - e'a
    objective_log = []
    n_updates = 0
    converged = False
    log_every = max(1, n)

    while n_updates < max_updates:
        yg = -y * grad
        up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        gap = yg[i] - yg[j]
        if gap < tolerance:
            converged = True
            break

        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 1e-12:
            quad = 1e-12
        d = gap / quad
        # Box limits: alpha_i + y_i d in [0, c], alpha_j - y_j d in [0, c].
        if y[i] > 0:
            d = min(d, c - alpha[i])
        else:
            d = min(d, alpha[i])
        if y[j] > 0:
            d = min(d, alpha[j])
        else:
            d = min(d, c - alpha[j])
        if d <= 0:
            converged = True
            break
        da_i = y[i] * d
        da_j = -y[j] * d
        alpha[i] += da_i
        alpha[j] += da_j
        grad += Q[:, i] * da_i + Q[:, j] * da_j
        n_updates += 1
        if n_updates % log_every == 0:
            objective_log.append(float(0.5 * alpha @ grad - 0.5 * alpha.sum()))

    yg = -y * grad
    free = (alpha > 1e-8) & (alpha < c - 1e-8)
    if free.any():
        bias = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)

    sv = alpha > 1e-12
    # Dual objective in maximization form: e'a - 1/2 a'Qa.
    dual_objective = float(alpha.sum() - 0.5 * alpha @ (Q @ alpha))
    diagnostics = {
        "n_updates": n_updates,
        "converged": converged,
        "dual_objective": dual_objective,
        "objective_log": [-v for v in objective_log],
        "alphas": alpha[sv],
        "y": y[sv],
        "sum_alpha_y": float(np.sum(alpha * y)),
    }
    model = SvmModel(
        support_vectors=Z[sv],
        dual_coeffs=alpha[sv] * y[sv],
        bias=bias,
        kernel_zeta=zeta,
        cost_c=c,
        feature_indices=(
            None if feature_indices is None
            else np.asarray(feature_indices, dtype=np.int64)
        ),
        scaler_mean=mean,
        scaler_scale=scale,
        diagnostics=diagnostics,
    )
    if not converged:
        raise TrainingFailed(
            f"no convergence after {n_updates} pair updates",
            model=model, diagnostics=diagnostics,
        )
    return model


def svm_score(model: SvmModel, fp: np.ndarray):
    """Decision value(s): sum_j alpha_j y_j K(sv_j, fp) + bias.

    Accepts a single retained-feature fingerprint or a matrix of rows, in the
    raw (unscaled) retained-feature space."""
    fp = np.asarray(fp, dtype=np.float64)
    single = fp.ndim == 1
    rows = fp.reshape(1, -1) if single else fp
    if rows.shape[1] != model.support_vectors.shape[1]:
        raise InvalidShape(
            f"expected {model.support_vectors.shape[1]} features, "
            f"got {rows.shape[1]}"
        )
    Z = (rows - model.scaler_mean) / model.scaler_scale
    k = rbf_kernel(Z, model.support_vectors, model.kernel_zeta)
    scores = k @ model.dual_coeffs + model.bias
    return float(scores[0]) if single else scores


def svm_decide(model: SvmModel, fp: np.ndarray):
    """+1 for authorized, -1 otherwise; a score of exactly 0 rejects."""
    s = svm_score(model, fp)
    if np.isscalar(s) or getattr(s, "ndim", 0) == 0:
        return 1 if s > 0 else -1
    return np.where(np.asarray(s) > 0, 1, -1)


def margin(model: SvmModel, fp: np.ndarray, y):
    """Signed scaled distance from the boundary: m = 2 y f(fp)."""
    y_arr = np.asarray(y)
    if not np.all(np.isin(y_arr, (-1, 1))):
        raise InvalidValue("y must be +1 or -1")
    return 2.0 * y_arr * svm_score(model, fp)
