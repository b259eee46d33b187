"""Monte Carlo Shapley values, importance normalization and rank coherence.

The Shapley estimator is the permutation sampler with interventional
(marginal) imputation: for every instance and every sampled feature ordering
one background row is drawn, and features outside the coalition take their
values from that row. Walking through an ordering turns the background row
into the instance one feature at a time, so each permutation yields a full
set of marginal contributions that sums exactly to
``f(instance) - f(background row)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .config import RunConfig
from .data import Dataset
from .errors import InputError
from .safe_eval import _KIND_CODE, _mlp_config, fold_designs
from .models import fit_model
from .whitening import fit_whitening

__all__ = [
    "DEFAULT_M",
    "ShapleyResult",
    "shapley_mc",
    "normalize_importance",
    "aggregate_multivariate_importance",
    "spearman",
    "rank_features",
    "FeatureImportance",
    "ShapleyReport",
    "run_shapley_pipeline",
    "rank_correlation_matrix",
]

DEFAULT_M = 50


@dataclass
class ShapleyResult:
    """Per-instance contributions and global importances of one model output.

    Attributes
    ----------
    contributions : ndarray, shape (n, g)
        Estimated contribution of each feature group for each explained row.
    standard_errors : ndarray, shape (n, g)
        Monte Carlo standard error of each contribution (sd over
        permutations divided by ``sqrt(M)``; zero when ``M == 1``).
    features : list of str
        Group names, one per column of ``contributions``.
    M : int
        Number of sampled permutations per instance.
    seed : int
    baseline : ndarray, shape (n,)
        Mean model output over the background rows drawn for each instance.
    """

    contributions: np.ndarray
    standard_errors: np.ndarray
    features: list[str]
    M: int
    seed: int
    baseline: np.ndarray

    @property
    def mean_abs(self) -> np.ndarray:
        """Global importances: mean absolute contribution per feature."""
        return np.abs(self.contributions).mean(axis=0)

    @property
    def mean_abs_se(self) -> np.ndarray:
        """Approximate Monte Carlo standard error of :attr:`mean_abs`."""
        n = self.contributions.shape[0]
        return np.sqrt((self.standard_errors**2).sum(axis=0)) / n

    @property
    def importance(self) -> np.ndarray:
        """Percentages summing to 100."""
        return normalize_importance(self.mean_abs)


def _as_groups(k: int, groups, features) -> tuple[list[list[int]], list[str]]:
    if groups is None:
        groups = [[j] for j in range(k)]
    groups = [list(g) for g in groups]
    flat = sorted(c for g in groups for c in g)
    if flat != list(range(k)):
        raise InputError("feature groups must partition the design-matrix columns")
    if features is None:
        features = [f"f{j + 1}" for j in range(len(groups))]
    if len(features) != len(groups):
        raise InputError("need one feature name per group")
    return groups, list(features)


def shapley_mc(
    predict: Callable[[np.ndarray], np.ndarray],
    X_background,
    X_explain,
    M: int = DEFAULT_M,
    seed: int = 0,
    *,
    groups: Sequence[Sequence[int]] | None = None,
    features: Sequence[str] | None = None,
) -> ShapleyResult | list[ShapleyResult]:
    """Permutation-sampling Shapley values with marginal imputation.

    Parameters
    ----------
    predict
        Model prediction function (e.g. ``model.predict``). A matrix output
        yields one :class:`ShapleyResult` per output column.
    X_background, X_explain
        Background rows used for imputation and rows to explain.
    M
        Permutations per explained row.
    seed
        Instance ``i`` draws its orderings and background rows from a stream
        seeded by ``(seed, i)``, so results do not depend on batch layout.
    groups
        Column-index lists treated as single players (e.g. a one-hot block).
    """
    Xb = np.asarray(X_background, dtype=np.float64)
    Xe = np.asarray(X_explain, dtype=np.float64)
    if Xb.ndim != 2 or Xb.shape[0] == 0:
        raise InputError("background set is empty")
    if Xe.ndim != 2 or Xe.shape[1] != Xb.shape[1]:
        raise InputError("explain rows must be a matrix with the background's columns")
    if M < 1:
        raise InputError(f"M must be at least 1, got {M}")
    n, k = Xe.shape
    groups, features = _as_groups(k, groups, features)
    g = len(groups)
    member = np.zeros((g, k), dtype=bool)
    for j, cols in enumerate(groups):
        member[j, cols] = True

    # position of each group within each sampled ordering, and background rows
    pos = np.empty((n, M, g), dtype=np.int64)
    bg = np.empty((n, M), dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        perms = np.argsort(rng.random((M, g)), axis=1)
        pos[i] = np.argsort(perms, axis=1)
        bg[i] = rng.integers(0, Xb.shape[0], M)

    steps = np.arange(g + 1)
    out_dim = None
    contrib = None
    base = np.zeros(n)
    sums = sq = None
    for m in range(M):
        # rows (i, t): groups whose position is < t come from the instance
        from_inst = pos[:, m, None, :] < steps[None, :, None]          # n x (g+1) x g
        col_mask = from_inst.astype(np.float64) @ member.astype(np.float64) > 0  # n x (g+1) x k
        hybrid = np.where(col_mask, Xe[:, None, :], Xb[bg[:, m]][:, None, :])
        f = np.asarray(predict(hybrid.reshape(-1, k)), dtype=np.float64)
        f = f.reshape(n, g + 1, -1)
        if out_dim is None:
            out_dim = f.shape[2]
            sums = np.zeros((n, g, out_dim))
            sq = np.zeros((n, g, out_dim))
            base = np.zeros((n, out_dim))
        diffs = np.diff(f, axis=1)                                       # n x g x out
        idx = pos[:, m, :]
        phi = np.take_along_axis(diffs, idx[:, :, None], axis=1)
        sums += phi
        sq += phi * phi
        base += f[:, 0, :]
    contrib = sums / M
    if M > 1:
        var = np.maximum(sq / M - contrib**2, 0.0) * M / (M - 1)
        se = np.sqrt(var / M)
    else:
        se = np.zeros_like(contrib)
    base /= M
    squeeze = np.ndim(predict(Xe[:1])) == 1
    results = [
        ShapleyResult(contrib[:, :, o], se[:, :, o], features, M, seed, base[:, o])
        for o in range(out_dim)
    ]
    return results[0] if squeeze else results


def normalize_importance(phi_bar) -> np.ndarray:
    """Percentages ``100 * phi_bar / sum(phi_bar)``.

    Raises
    ------
    InputError
        If the input is empty, negative or all zero.
    """
    v = np.asarray(phi_bar, dtype=np.float64)
    if v.size == 0 or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InputError("importances must be finite and non-negative")
    s = v.sum()
    if not s > 0:
        raise InputError("all importances are zero; percentages are undefined")
    return 100.0 * v / s


def aggregate_multivariate_importance(per_dim, lambdas) -> np.ndarray:
    """Lambda-weighted combination of per-dimension importance percentages.

    ``per_dim`` has one row per whitened dimension; ``lambdas`` must be
    non-negative and sum to one.
    """
    P = np.asarray(per_dim, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    if P.ndim != 2 or lam.ndim != 1 or P.shape[0] != lam.size:
        raise InputError(f"shape mismatch: {P.shape} importances vs {lam.shape} weights")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise InputError("lambda weights must be non-negative and sum to 1")
    return lam @ P


def spearman(rank_a, rank_b) -> float:
    """Spearman's rho ``1 - 6 sum d^2 / (d (d^2 - 1))`` of two rank vectors.

    The inputs are rankings (e.g. from :func:`rank_features`); they are
    used as given.
    """
    a = np.asarray(rank_a, dtype=np.float64)
    b = np.asarray(rank_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("rankings must be vectors of equal length")
    d = a.size
    if d < 2:
        raise InputError("need at least two ranked items")
    return float(1.0 - 6.0 * np.sum((a - b) ** 2) / (d * (d * d - 1)))


def rank_features(importances) -> np.ndarray:
    """Descending ranks (1 = most important) with average ranks for ties."""
    v = np.asarray(importances, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InputError("importances must be finite")
    return rankdata(-v, method="average")


@dataclass
class FeatureImportance:
    """Fold-level global Shapley values and percentages of one model."""

    target: str
    model: str
    features: list[str]
    shapley: list[list[float]] = field(default_factory=list)
    importance: list[list[float]] = field(default_factory=list)

    def mean_sd(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(getattr(self, which), dtype=np.float64)
        sd = a.std(axis=0, ddof=1) if a.shape[0] > 1 else np.zeros(a.shape[1])
        return a.mean(axis=0), sd

    def ranking(self) -> np.ndarray:
        return rank_features(self.mean_sd("importance")[0])

    def to_dict(self) -> dict:
        return {"target": self.target, "model": self.model, "features": self.features,
                "shapley": self.shapley, "importance": self.importance}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureImportance":
        return cls(d["target"], d["model"], list(d["features"]),
                   [list(r) for r in d["shapley"]], [list(r) for r in d["importance"]])


@dataclass
class ShapleyReport:
    entries: list[FeatureImportance]
    metadata: dict

    def entry(self, target: str, model: str) -> FeatureImportance:
        for e in self.entries:
            if e.target == target and e.model == model:
                return e
        raise KeyError((target, model))

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "ShapleyReport":
        return cls([FeatureImportance.from_dict(e) for e in d["entries"]], d["metadata"])


def _whitened_predict(model, transform):
    def f(X):
        out = model.predict(X)
        return transform.apply(out if out.ndim == 2 else out[:, None])
    return f


def run_shapley_pipeline(dataset: Dataset, config: RunConfig) -> ShapleyReport:
    """Cross-validated Shapley importances for every configured target and model.

    Each fold fits on the training rows and explains the test rows with the
    training rows as background. Univariate runs explain each target's model
    directly. Multivariate runs fit one joint model, explain each whitened
    output dimension separately, and combine the per-dimension percentages
    with the fold's lambda weights; the combined raw Shapley values use the
    same weights.
    """
    features = config.feature_list(dataset.names)
    config.updated(features=features).validate(dataset.names)
    meta = {"models": list(config.models), "folds": config.folds, "seed": config.seed,
            "M": config.shapley_m, "features": features,
            "multivariate": config.multivariate, "targets": list(config.targets),
            "scheme": config.scheme if config.multivariate else None}
    entries = []
    jobs = [("multi(" + ",".join(config.targets) + ")", list(config.targets))] \
        if config.multivariate else [(t, [t]) for t in config.targets]
    for label, targets in jobs:
        Y_all = dataset.matrix(targets)
        for kind in config.models:
            fi = FeatureImportance(label, kind, list(features))
            for fd in fold_designs(dataset, features, kind, config.folds, config.seed):
                Ytr = Y_all[fd.train_rows]
                model = fit_model(kind, fd.X_train, Ytr if config.multivariate else Ytr[:, 0],
                                  _mlp_config(config, fd.fold, kind))
                seed = int(np.random.SeedSequence(
                    [config.seed, fd.fold, _KIND_CODE[kind], 2]).generate_state(1)[0])
                if config.multivariate:
                    t = fit_whitening(Ytr if config.whiten_on == "train" else Y_all, config.scheme)
                    res = shapley_mc(_whitened_predict(model, t), fd.X_train, fd.X_test,
                                     config.shapley_m, seed, groups=fd.groups, features=features)
                    phi = t.lambdas @ np.array([r.mean_abs for r in res])
                    imp = aggregate_multivariate_importance([r.importance for r in res], t.lambdas)
                else:
                    res = shapley_mc(model.predict, fd.X_train, fd.X_test, config.shapley_m, seed,
                                     groups=fd.groups, features=features)
                    phi, imp = res.mean_abs, res.importance
                fi.shapley.append(phi.tolist())
                fi.importance.append(imp.tolist())
            entries.append(fi)
    return ShapleyReport(entries, meta)


def rank_correlation_matrix(entries: Sequence[FeatureImportance]) -> tuple[list[str], np.ndarray]:
    """Pairwise Spearman correlations of the entries' importance rankings."""
    labels = [f"{e.target}/{e.model}" for e in entries]
    ranks = [e.ranking() for e in entries]
    k = len(ranks)
    out = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = spearman(ranks[a], ranks[b])
    return labels, out
