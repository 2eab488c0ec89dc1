"""Per-radio feature selection: eight ranking/projection methods.

Every method consumes a two-class labeled fingerprint set (class 1 is the
radio whose identity is under verification, class 2 is every other authorized
radio) and returns either a ranked feature order or a linear projection basis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as spstats

from .errors import (
    InvalidCount,
    InvalidNeighborCount,
    InvalidRelevance,
    InvalidShape,
    InvalidValue,
    NumericalFailure,
    SingularScatter,
)


@dataclass
class LabeledFingerprintSet:
    """Training matrix plus per-row class labels (1 or 2)."""

    X: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.X.ndim != 2 or len(self.labels) != self.X.shape[0]:
            raise InvalidShape("matrix/label shape mismatch")
        if not set(np.unique(self.labels)) <= {1, 2}:
            raise InvalidValue("labels must be 1 or 2")
        if self.n1 == 0 or self.n2 == 0:
            raise InvalidValue("both classes must be non-empty")

    @property
    def n1(self) -> int:
        return int(np.sum(self.labels == 1))

    @property
    def n2(self) -> int:
        return int(np.sum(self.labels == 2))

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def X1(self) -> np.ndarray:
        return self.X[self.labels == 1]

    @property
    def X2(self) -> np.ndarray:
        return self.X[self.labels == 2]


@dataclass
class FeatureRanking:
    method: str
    scores: np.ndarray              # one score per feature, feature-indexed
    order: np.ndarray               # best-first feature indices
    retained_count: int | None = None
    direction: str = "descending"   # how scores map to the order
    meta: dict = field(default_factory=dict)


@dataclass
class ProjectionBasis:
    method: str
    basis: np.ndarray               # (n_features, n_components)
    mean: np.ndarray                # centering vector
    eigenvalues: np.ndarray | None = None

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.basis


def _default_bins(n_rows: int) -> int:
    return max(2, int(np.ceil(np.sqrt(n_rows))))


def _class_histograms(a: np.ndarray, b: np.ndarray, bins: int):
    """Per-class histograms over shared pooled-range edges; probabilities."""
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi <= lo:
        hi = lo + 1.0  # both classes constant and equal: one shared bin
    edges = np.linspace(lo, hi, bins + 1)
    pa, _ = np.histogram(a, bins=edges)
    pb, _ = np.histogram(b, bins=edges)
    return pa / len(a), pb / len(b)


def bhattacharyya(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(np.sqrt(np.asarray(p) * np.asarray(q))))


# ---------------------------------------------------------------------------
# DRA
# ---------------------------------------------------------------------------

def rank_dra(relevance) -> FeatureRanking:
    """Rank by a relevance vector with entries in [0, 1], descending.
    Ties break toward the lower feature index."""
    lam = np.asarray(relevance, dtype=np.float64)
    if lam.ndim != 1:
        raise InvalidShape("relevance must be a vector")
    if np.any(lam < 0) or np.any(lam > 1) or not np.all(np.isfinite(lam)):
        raise InvalidRelevance("relevance entries must lie in [0, 1]")
    order = np.argsort(-lam, kind="stable")
    return FeatureRanking(method="dra", scores=lam, order=order)


def load_relevance(path) -> np.ndarray:
    """Plain-text relevance file: one float per line (or whitespace split)."""
    return np.loadtxt(Path(path), dtype=np.float64).ravel()


def train_grlvq_relevance(
    fset: LabeledFingerprintSet,
    epochs: int = 30,
    learn_rates: tuple[float, float] = (0.05, 0.01),
    seed=0,
) -> np.ndarray:
    """Relevance-learning vector quantization surrogate.

    One prototype per class; relevance entries are updated multiplicatively
    from the signed gradient of the relative-distance cost, renormalized to
    sum 1 after every update, and finally rescaled to a maximum of 1.
    """
    rng = np.random.default_rng(seed)
    X, y = fset.X, fset.labels
    n, f = X.shape
    eps_p, eps_l = learn_rates

    # Standardize so no feature dominates distances by raw scale.
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd

    protos = np.stack([Z[y == 1].mean(axis=0), Z[y == 2].mean(axis=0)])
    protos += rng.normal(0, 1e-3, protos.shape)
    lam = np.full(f, 1.0 / f)

    for _ in range(epochs):
        for i in rng.permutation(n):
            x = Z[i]
            own = 0 if y[i] == 1 else 1
            d_own_v = (x - protos[own]) ** 2
            d_oth_v = (x - protos[1 - own]) ** 2
            d_own = float(lam @ d_own_v)
            d_oth = float(lam @ d_oth_v)
            denom = d_own + d_oth
            if denom <= 0:
                continue
            xi_own = d_oth / denom**2
            xi_oth = d_own / denom**2
            protos[own] += eps_p * xi_own * lam * (x - protos[own])
            protos[1 - own] -= eps_p * xi_oth * lam * (x - protos[1 - own])
            grad = xi_own * d_own_v - xi_oth * d_oth_v
            lam = lam * np.exp(-eps_l * grad)
            lam /= lam.sum()

    return lam / lam.max()


# ---------------------------------------------------------------------------
# LDA / PCA
# ---------------------------------------------------------------------------

def project_lda(fset: LabeledFingerprintSet,
                ridge_scale: float = 1e-6) -> ProjectionBasis:
    """Fisher discriminant direction w = S_w^-1 (mu1 - mu2), ridge-stabilized."""
    X1, X2 = fset.X1, fset.X2
    mu1, mu2 = X1.mean(axis=0), X2.mean(axis=0)
    d1, d2 = X1 - mu1, X2 - mu2
    s_w = d1.T @ d1 + d2.T @ d2
    f = fset.n_features
    eps = ridge_scale * np.trace(s_w) / f
    s_w = s_w + eps * np.eye(f)
    try:
        w = np.linalg.solve(s_w, mu1 - mu2)
    except np.linalg.LinAlgError as exc:
        raise SingularScatter("within-class scatter not invertible") from exc
    if not np.all(np.isfinite(w)):
        raise SingularScatter("within-class scatter ill-conditioned")
    return ProjectionBasis(
        method="lda", basis=w.reshape(-1, 1), mean=np.zeros(f),
    )


def project_pca(fset: LabeledFingerprintSet, n_r: int) -> ProjectionBasis:
    """Top-n_r eigenvectors of the mean-removed covariance, eigenvalue
    descending; component signs fixed so the largest-magnitude loading is
    positive."""
    f = fset.n_features
    if not 1 <= n_r <= f:
        raise InvalidCount(f"n_r must lie in [1, {f}]")
    mean = fset.X.mean(axis=0)
    Xc = fset.X - mean
    cov = (Xc.T @ Xc) / fset.X.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    idx = np.argsort(evals)[::-1][:n_r]
    basis = evecs[:, idx]
    for j in range(basis.shape[1]):
        k = np.argmax(np.abs(basis[:, j]))
        if basis[k, j] < 0:
            basis[:, j] = -basis[:, j]
    return ProjectionBasis(
        method="pca", basis=basis, mean=mean, eigenvalues=evals[idx],
    )


# ---------------------------------------------------------------------------
# NCA
# ---------------------------------------------------------------------------

def _nca_objective_and_grad(Z, same, w, psi, lam_r):
    n, f = Z.shape
    u = w**2
    loss = 0.0
    grad = np.zeros(f)
    for i in range(n):
        D = np.abs(Z - Z[i])          # (n, f)
        d = D @ u
        k = np.exp(-d / psi)
        k[i] = 0.0
        tot = k.sum()
        if tot <= 0 or not np.isfinite(tot):
            continue
        p = k / tot
        li = (~same[i]).astype(np.float64)
        li[i] = 0.0
        pl = p * li
        loss += pl.sum()
        # d(loss_i)/dw_r = (-2 w_r / psi) [ sum_j p l |D| - (sum p l)(sum p |D|) ]
        grad += (-2.0 * w / psi) * (pl @ D - pl.sum() * (p @ D))
    loss /= n
    grad /= n
    loss += lam_r * np.sum(u)
    grad += 2.0 * lam_r * w
    return loss, grad


def rank_nca(
    fset: LabeledFingerprintSet,
    lam_r: float | None = None,
    psi: float = 1.0,
    iterations: int = 200,
    seed=0,
) -> FeatureRanking:
    """Neighborhood component analysis feature weights.

    Minimizes the regularized leave-one-out soft error over per-feature
    weights with gradient descent; a halving backstep keeps the objective
    non-increasing. Scores are the squared weights, descending.
    """
    if psi <= 0:
        raise InvalidValue("kernel width psi must be > 0")
    X, y = fset.X, fset.labels
    n, f = X.shape
    if lam_r is None:
        lam_r = 1.0 / n
    if lam_r < 0:
        raise InvalidValue("regularizer must be >= 0")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    same = y[:, None] == y[None, :]

    w = np.ones(f)
    step = 1.0 / n
    obj, grad = _nca_objective_and_grad(Z, same, w, psi, lam_r)
    history = [obj]
    for _ in range(iterations):
        if not np.isfinite(obj):
            raise NumericalFailure("NCA objective became non-finite")
        trial_step = step
        for _ in range(30):
            w_new = w - trial_step * grad
            obj_new, grad_new = _nca_objective_and_grad(Z, same, w_new, psi, lam_r)
            if obj_new <= obj + 1e-12:
                break
            trial_step *= 0.5
        else:
            break  # no improving step at any scale: converged
        w, obj, grad = w_new, obj_new, grad_new
        history.append(obj)
        if np.linalg.norm(trial_step * grad) < 1e-10:
            break

    scores = w**2
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(
        method="nca", scores=scores, order=order,
        meta={"objective_history": history, "psi": psi, "lambda_r": lam_r},
    )


# ---------------------------------------------------------------------------
# POEACC
# ---------------------------------------------------------------------------

def _poe_per_feature(fset: LabeledFingerprintSet, bins: int) -> np.ndarray:
    """Histogram-overlap Bayes-error estimate per feature, with class priors."""
    n = fset.X.shape[0]
    pi1, pi2 = fset.n1 / n, fset.n2 / n
    poe = np.empty(fset.n_features)
    X1, X2 = fset.X1, fset.X2
    for r in range(fset.n_features):
        p1, p2 = _class_histograms(X1[:, r], X2[:, r], bins)
        poe[r] = np.sum(np.minimum(pi1 * p1, pi2 * p2))
    return poe


def rank_poeacc(
    fset: LabeledFingerprintSet,
    w_rho: float = 0.5,
    w_alpha: float = 0.5,
    bins: int | None = None,
) -> FeatureRanking:
    """Greedy probability-of-error + average-correlation ranking.

    The first feature minimizes the normalized POE; each later pick minimizes
    the weighted sum of its normalized POE and its normalized mean absolute
    correlation to the features already selected.
    """
    if not (0.0 < w_rho < 1.0 and 0.0 < w_alpha < 1.0):
        raise InvalidValue("weights must lie strictly inside (0, 1)")
    if abs(w_rho + w_alpha - 1.0) > 1e-12:
        raise InvalidValue("weights must sum to 1")
    n, f = fset.X.shape
    if bins is None:
        bins = _default_bins(n)

    poe = _poe_per_feature(fset, bins)
    span = poe.max() - poe.min()
    rho_bar = (poe - poe.min()) / span if span > 0 else np.zeros(f)

    sd = fset.X.std(axis=0)
    degenerate = sd == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.abs(np.corrcoef(fset.X, rowvar=False))
    corr[~np.isfinite(corr)] = 0.0   # zero-variance features contribute 0

    order = np.empty(f, dtype=np.int64)
    scores = np.empty(f)
    remaining = np.ones(f, dtype=bool)

    first = int(np.argmin(rho_bar))
    order[0] = first
    scores[first] = rho_bar[first]
    remaining[first] = False
    acc_sum = corr[:, first].copy()

    for step in range(1, f):
        rem = np.nonzero(remaining)[0]
        acc = acc_sum[rem] / step
        span = acc.max() - acc.min()
        acc_norm = (acc - acc.min()) / span if span > 0 else np.zeros(len(rem))
        combined = w_rho * rho_bar[rem] + w_alpha * acc_norm
        pick = rem[int(np.argmin(combined))]
        order[step] = pick
        scores[pick] = combined[int(np.argmin(combined))]
        remaining[pick] = False
        acc_sum += corr[:, pick]

    return FeatureRanking(
        method="poeacc", scores=scores, order=order, direction="greedy",
        meta={"poe": poe, "degenerate_features": np.nonzero(degenerate)[0]},
    )


# ---------------------------------------------------------------------------
# Bhattacharyya coefficient
# ---------------------------------------------------------------------------

def rank_bc(fset: LabeledFingerprintSet, bins: int | None = None) -> FeatureRanking:
    """Per-feature class-histogram overlap; least overlap ranks first."""
    if bins is not None and bins < 2:
        raise InvalidValue("need at least 2 histogram bins")
    if bins is None:
        bins = _default_bins(fset.X.shape[0])
    X1, X2 = fset.X1, fset.X2
    bc = np.empty(fset.n_features)
    for r in range(fset.n_features):
        p1, p2 = _class_histograms(X1[:, r], X2[:, r], bins)
        bc[r] = bhattacharyya(p1, p2)
    order = np.argsort(bc, kind="stable")
    return FeatureRanking(
        method="bc", scores=bc, order=order, direction="ascending",
    )


# ---------------------------------------------------------------------------
# Welch t-test
# ---------------------------------------------------------------------------

def welch_t(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch t statistic and Welch-Satterthwaite degrees of freedom."""
    n1, n2 = len(a), len(b)
    v1, v2 = a.var(ddof=1), b.var(ddof=1)
    se2 = v1 / n1 + v2 / n2
    dmean = a.mean() - b.mean()
    if se2 == 0.0:
        t = np.inf * np.sign(dmean) if dmean != 0 else 0.0
        return float(t), float(n1 + n2 - 2)
    t = dmean / np.sqrt(se2)
    dof = se2**2 / (v1**2 / ((n1 - 1) * n1**2) + v2**2 / ((n2 - 1) * n2**2))
    return float(t), float(dof)


def rank_ttest(fset: LabeledFingerprintSet, alpha: float = 0.05) -> FeatureRanking:
    """Two-sided Welch t-test per feature; order by ascending p-value.

    ``retained_count`` is the number of features significant at ``alpha``.
    Features with zero variance in both classes and equal means carry p = 1
    and are flagged as excluded.
    """
    if fset.n1 < 2 or fset.n2 < 2:
        raise InvalidValue("both classes need at least 2 samples")
    X1, X2 = fset.X1, fset.X2
    f = fset.n_features
    pvals = np.empty(f)
    tvals = np.empty(f)
    excluded = []
    for r in range(f):
        t, dof = welch_t(X1[:, r], X2[:, r])
        tvals[r] = t
        if t == 0.0 and X1[:, r].var(ddof=1) == 0 and X2[:, r].var(ddof=1) == 0:
            pvals[r] = 1.0
            excluded.append(r)
        elif np.isinf(t):
            pvals[r] = 0.0
        else:
            pvals[r] = 2.0 * spstats.t.sf(abs(t), dof)
    order = np.argsort(pvals, kind="stable")
    return FeatureRanking(
        method="ttest", scores=pvals, order=order, direction="ascending",
        retained_count=int(np.sum(pvals < alpha)),
        meta={"t": tvals, "alpha": alpha,
              "excluded_features": np.array(excluded, dtype=np.int64)},
    )


# ---------------------------------------------------------------------------
# Relief-F
# ---------------------------------------------------------------------------

def rank_relieff(fset: LabeledFingerprintSet, n_k: int = 10) -> FeatureRanking:
    """Deterministic full-pass Relief-F weights.

    Every training row serves once as the reference. Nearest hits/misses use
    Euclidean distance over all features; the per-feature difference is
    normalized by that feature's max-min over the whole training set (a
    constant feature contributes zero). Weights rank descending.
    """
    X, y = fset.X, fset.labels
    n, f = X.shape
    for c in (1, 2):
        if np.sum(y == c) < n_k + 1:
            raise InvalidNeighborCount(
                f"class {c} needs at least {n_k + 1} members"
            )
    span = X.max(axis=0) - X.min(axis=0)
    scale = np.where(span > 0, span, np.inf)   # constant feature -> diff 0

    sq = np.sum(X**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, np.inf)

    priors = {c: float(np.mean(y == c)) for c in (1, 2)}
    w = np.zeros(f)
    for i in range(n):
        ci = y[i]
        cj = 3 - ci
        hit_pool = np.nonzero(y == ci)[0]
        miss_pool = np.nonzero(y == cj)[0]
        hits = hit_pool[np.argsort(d2[i, hit_pool], kind="stable")[:n_k]]
        misses = miss_pool[np.argsort(d2[i, miss_pool], kind="stable")[:n_k]]
        diff_h = np.abs(X[hits] - X[i]) / scale
        diff_m = np.abs(X[misses] - X[i]) / scale
        w -= diff_h.sum(axis=0) / (n * n_k)
        w += (priors[cj] / (1.0 - priors[ci])) * diff_m.sum(axis=0) / (n * n_k)

    order = np.argsort(-w, kind="stable")
    return FeatureRanking(method="relieff", scores=w, order=order)


# ---------------------------------------------------------------------------
# Selection + export
# ---------------------------------------------------------------------------

def select_top(ranking: FeatureRanking, n_r: int) -> np.ndarray:
    if not 1 <= n_r <= len(ranking.order):
        raise InvalidCount(
            f"n_r {n_r} exceeds ranked count {len(ranking.order)}"
        )
    return ranking.order[:n_r].copy()


def export_ranking(ranking: FeatureRanking, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_index", "score", "rank", "method"])
        for rank, idx in enumerate(ranking.order):
            writer.writerow(
                [int(idx), repr(float(ranking.scores[idx])), rank,
                 ranking.method]
            )
