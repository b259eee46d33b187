"""SAFE evaluation: accuracy (RGA), robustness (RGR) and explainability (RGE).

Every metric is an RGX_p value with different argument roles:

* RGA: truth vs. predictions,
* RGR: predictions vs. perturbed predictions,
* RGE: full-model predictions vs. predictions of a model refitted without one
  feature. Reported as the contribution ``1 - RGX_p`` so that an irrelevant
  feature scores about 0; the raw concordance is kept alongside.

The pipelines run k-fold cross-validation and collect fold-level values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import RunConfig
from .data import CONTINUOUS, Dataset, column_stats, encode, standardize
from .errors import ConfigError, InputError
from .models import MLPConfig, fit_model
from .rank_core import shift_to_positive
from .rgx import rgx_p
from .whitening import WhiteningTransform, fit_whitening

__all__ = [
    "FoldStats",
    "ModelEntry",
    "SafeReport",
    "kfold_split",
    "perturb",
    "rga",
    "rgr",
    "rge",
    "rge_concordance",
    "FoldDesign",
    "fold_designs",
    "stream_seed",
    "run_univariate_pipeline",
    "run_multivariate_pipeline",
    "run_safe_eval",
]

_KIND_CODE = {"ols": 0, "mlp": 1}
_PURPOSE_MODEL = 0
_PURPOSE_NOISE = 1


def stream_seed(*keys: int) -> int:
    """Derive an independent 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def kfold_split(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``k`` test folds.

    Fold sizes differ by at most one; indices inside each fold are sorted.
    """
    if k < 2:
        raise InputError(f"need at least 2 folds, got {k}")
    if n < k:
        raise InputError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def perturb(predictions, scale: float = 0.5, seed: int | np.random.Generator | None = None):
    """Add Gaussian noise with standard deviation ``scale * sd(predictions)``.

    The sample standard deviation (``n - 1``) is used. Constant predictions
    are returned unchanged with a ``RuntimeWarning``.
    """
    if not scale > 0:
        raise InputError(f"perturbation scale must be positive, got {scale}")
    y = np.asarray(predictions, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sd = float(y.std(ddof=1)) if y.size > 1 else 0.0
    if sd == 0:
        warnings.warn("constant predictions: perturbation skipped", RuntimeWarning, stacklevel=2)
        return y.copy()
    return y + rng.normal(0.0, scale * sd, size=y.shape)


def rga(y_true, y_pred, p: float = 1.0) -> float:
    """Rank graduation accuracy ``RGX_p(truth, prediction)``."""
    return rgx_p(y_true, y_pred, p).value


def rgr(y_pred, y_perturbed, p: float = 1.0) -> float:
    """Rank graduation robustness ``RGX_p(prediction, perturbed prediction)``."""
    return rgx_p(y_pred, y_perturbed, p).value


def rge_concordance(y_full, y_reduced, p: float = 1.0) -> float:
    """Raw ``RGX_p(full-model predictions, reduced-model predictions)``."""
    return rgx_p(y_full, y_reduced, p).value


def rge(y_full, y_reduced, p: float = 1.0) -> float:
    """Explainability contribution ``1 - RGX_p(full, reduced)`` of the removed feature."""
    return 1.0 - rge_concordance(y_full, y_reduced, p)


@dataclass
class FoldStats:
    """Fold-level values of one metric; ``sd`` uses the ``n - 1`` denominator."""

    values: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def sd(self) -> float:
        return float(np.std(self.values, ddof=1)) if len(self.values) > 1 else 0.0


@dataclass
class ModelEntry:
    """SAFE metrics of one model on one target (or one whitened target block)."""

    target: str
    model: str
    rga: FoldStats = field(default_factory=FoldStats)
    rgr: FoldStats = field(default_factory=FoldStats)
    rge: dict[str, FoldStats] = field(default_factory=dict)
    rge_concordance: dict[str, FoldStats] = field(default_factory=dict)
    lambdas: list[list[float]] | None = None

    def metric_rows(self) -> list[tuple[str, FoldStats]]:
        return [("RGA", self.rga), ("RGR", self.rgr)] + [
            (f"RGE_{name}", stats) for name, stats in self.rge.items()
        ]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "model": self.model,
            "rga": self.rga.values,
            "rgr": self.rgr.values,
            "rge": {k: v.values for k, v in self.rge.items()},
            "rge_concordance": {k: v.values for k, v in self.rge_concordance.items()},
            "lambdas": self.lambdas,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelEntry":
        return cls(
            d["target"],
            d["model"],
            FoldStats(list(d["rga"])),
            FoldStats(list(d["rgr"])),
            {k: FoldStats(list(v)) for k, v in d["rge"].items()},
            {k: FoldStats(list(v)) for k, v in d["rge_concordance"].items()},
            d.get("lambdas"),
        )


@dataclass
class SafeReport:
    """Fold-level SAFE metrics for a set of (target, model) pairs plus run metadata."""

    entries: list[ModelEntry]
    metadata: dict

    def entry(self, target: str, model: str) -> ModelEntry:
        for e in self.entries:
            if e.target == target and e.model == model:
                return e
        raise KeyError((target, model))

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "SafeReport":
        return cls([ModelEntry.from_dict(e) for e in d["entries"]], d["metadata"])

    @staticmethod
    def combine(reports: Sequence["SafeReport"]) -> "SafeReport":
        if not reports:
            raise InputError("nothing to combine")
        meta = dict(reports[0].metadata)
        meta["targets"] = [t for r in reports for t in r.metadata.get("targets", [])]
        meta["shifts"] = [s for r in reports for s in r.metadata.get("shifts", [])]
        return SafeReport([e for r in reports for e in r.entries], meta)


@dataclass
class FoldDesign:
    """Encoded train/test matrices of one fold for one model kind."""

    fold: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    X_train: np.ndarray
    X_test: np.ndarray
    groups: list[list[int]]
    train: Dataset
    test: Dataset


def fold_designs(dataset: Dataset, features: Sequence[str], kind: str, folds: int, seed: int):
    """Yield one :class:`FoldDesign` per fold.

    Continuous features are z-scored with training-fold statistics only;
    categorical features are one-hot encoded (reference level dropped for
    OLS, full encoding for the MLP).
    """
    cont = [f for f in features if dataset.kinds[f] == CONTINUOUS]
    n = dataset.n_rows
    for i, test_rows in enumerate(kfold_split(n, folds, seed)):
        train_rows = np.setdiff1d(np.arange(n), test_rows)
        train = dataset.take(train_rows)
        test = dataset.take(test_rows)
        stats = column_stats(train, cont)
        tr = standardize(train, stats)
        te = standardize(test, stats)
        Xtr, groups = encode(tr, features, drop_first=(kind == "ols"))
        Xte, _ = encode(te, features, drop_first=(kind == "ols"))
        yield FoldDesign(i, train_rows, test_rows, Xtr, Xte, groups, train, test)


def _drop(X: np.ndarray, cols: list[int]) -> np.ndarray:
    return np.delete(X, cols, axis=1)


def _mlp_config(config: RunConfig, fold: int, kind: str) -> MLPConfig:
    return MLPConfig(
        hidden=config.hidden,
        max_iter=config.max_iter,
        learning_rate=config.learning_rate,
        seed=stream_seed(config.seed, fold, _KIND_CODE[kind], _PURPOSE_MODEL),
    )


class _ShiftLog:
    def __init__(self):
        self.records: list[dict] = []

    def positive(self, y: np.ndarray, **where) -> np.ndarray:
        shifted, shift = shift_to_positive(y)
        if shift:
            self.records.append({**where, "shift": shift})
        return shifted


def _check(config: RunConfig, dataset: Dataset, targets: Sequence[str], kinds: Sequence[str]):
    config.validate(dataset.names)
    for t in targets:
        if dataset.kinds[t] != CONTINUOUS:
            raise ConfigError(f"target {t!r} must be continuous")
    for k in kinds:
        if k not in _KIND_CODE:
            raise ConfigError(f"unknown model kind {k!r}")


def _metadata(config: RunConfig, targets, features, mode: str) -> dict:
    return {
        "mode": mode,
        "targets": list(targets),
        "features": list(features),
        "models": list(config.models),
        "p": config.p,
        "folds": config.folds,
        "seed": config.seed,
        "perturb_scale": config.perturb_scale,
        "scheme": config.scheme if mode == "multivariate" else None,
        "whiten_on": config.whiten_on if mode == "multivariate" else None,
        "sd_convention": "sample (n-1)",
        "rge_convention": "contribution = 1 - RGX_p(full, reduced)",
        "shifts": [],
    }


def run_univariate_pipeline(
    dataset: Dataset,
    target: str,
    model_kinds: Sequence[str] | None = None,
    config: RunConfig | None = None,
) -> SafeReport:
    """Cross-validated RGA, RGR and per-feature RGE for one target.

    For each fold and model: fit on the training rows, predict the test
    rows, compare with the truth (RGA), with a perturbed copy of the
    predictions (RGR), and with the predictions of a model refitted without
    each feature in turn (RGE). Predictions with non-positive entries are
    shifted before being used as the response argument; each shift is
    recorded in ``metadata["shifts"]``.
    """
    config = config or RunConfig(targets=[target])
    kinds = list(model_kinds or config.models)
    features = config.feature_list([c for c in dataset.names if c != target]) \
        if config.features is None else list(config.features)
    features = [f for f in features if f not in config.targets and f != target]
    _check(config.updated(targets=[target], features=features), dataset, [target], kinds)
    meta = _metadata(config, [target], features, "univariate")
    log = _ShiftLog()
    entries = []
    for kind in kinds:
        entry = ModelEntry(target, kind)
        entry.rge = {f: FoldStats() for f in features}
        entry.rge_concordance = {f: FoldStats() for f in features}
        for fd in fold_designs(dataset, features, kind, config.folds, config.seed):
            ytr = fd.train[target].astype(np.float64)
            yte = fd.test[target].astype(np.float64)
            mcfg = _mlp_config(config, fd.fold, kind)
            model = fit_model(kind, fd.X_train, ytr, mcfg)
            pred = model.predict(fd.X_test)
            where = {"target": target, "model": kind, "fold": fd.fold, "dim": 0}
            truth = log.positive(yte, metric="RGA", **where)
            entry.rga.values.append(rga(truth, pred, config.p))
            noise_rng = np.random.default_rng(
                stream_seed(config.seed, fd.fold, _KIND_CODE[kind], _PURPOSE_NOISE, 0)
            )
            pred_pos = log.positive(pred, metric="RGR/RGE", **where)
            entry.rgr.values.append(rgr(pred_pos, perturb(pred, config.perturb_scale, noise_rng), config.p))
            for f, cols in zip(features, fd.groups):
                reduced = fit_model(kind, _drop(fd.X_train, cols), ytr, mcfg)
                pred_r = reduced.predict(_drop(fd.X_test, cols))
                conc = rge_concordance(pred_pos, pred_r, config.p)
                entry.rge_concordance[f].values.append(conc)
                entry.rge[f].values.append(1.0 - conc)
        entries.append(entry)
    meta["shifts"] = log.records
    return SafeReport(entries, meta)


def _whitened(transform: WhiteningTransform, Y: np.ndarray) -> np.ndarray:
    return transform.apply(Y if Y.ndim == 2 else Y[:, None])


def run_multivariate_pipeline(
    dataset: Dataset,
    targets: Sequence[str],
    model_kinds: Sequence[str] | None = None,
    config: RunConfig | None = None,
) -> SafeReport:
    """Cross-validated lambda-weighted SAFE metrics on whitened targets.

    Per fold the whitening is fitted on the training targets (or on all
    rows when ``config.whiten_on == "full"``), and the same matrix is applied
    to test truths, full-model predictions, perturbed predictions and
    reduced-model predictions. Models are fitted jointly on the raw targets.
    Per-coordinate RGX values are combined with the fold's lambda weights;
    those weights are reported in each entry.
    """
    targets = list(targets)
    config = config or RunConfig(targets=targets, multivariate=True)
    kinds = list(model_kinds or config.models)
    features = config.feature_list(dataset.names) if config.features is None else list(config.features)
    features = [f for f in features if f not in targets]
    _check(config.updated(targets=targets, features=features), dataset, targets, kinds)
    meta = _metadata(config, targets, features, "multivariate")
    label = "multi(" + ",".join(targets) + ")"
    log = _ShiftLog()
    Y_all = dataset.matrix(targets)
    full_transform = fit_whitening(Y_all, config.scheme) if config.whiten_on == "full" else None
    entries = []
    for kind in kinds:
        entry = ModelEntry(label, kind, lambdas=[])
        entry.rge = {f: FoldStats() for f in features}
        entry.rge_concordance = {f: FoldStats() for f in features}
        for fd in fold_designs(dataset, features, kind, config.folds, config.seed):
            Ytr = Y_all[fd.train_rows]
            Yte = Y_all[fd.test_rows]
            t = full_transform or fit_whitening(Ytr, config.scheme)
            lam = t.lambdas
            entry.lambdas.append(lam.tolist())
            mcfg = _mlp_config(config, fd.fold, kind)
            model = fit_model(kind, fd.X_train, Ytr, mcfg)
            W_true = _whitened(t, Yte)
            W_hat = _whitened(t, model.predict(fd.X_test))
            d = W_true.shape[1]
            acc = np.zeros(d)
            rob = np.zeros(d)
            W_hat_pos = np.empty_like(W_hat)
            for j in range(d):
                where = {"target": label, "model": kind, "fold": fd.fold, "dim": j}
                truth = log.positive(W_true[:, j], metric="RGA", **where)
                acc[j] = rga(truth, W_hat[:, j], config.p)
                W_hat_pos[:, j] = log.positive(W_hat[:, j], metric="RGR/RGE", **where)
                noise_rng = np.random.default_rng(
                    stream_seed(config.seed, fd.fold, _KIND_CODE[kind], _PURPOSE_NOISE, j)
                )
                rob[j] = rgr(W_hat_pos[:, j], perturb(W_hat[:, j], config.perturb_scale, noise_rng),
                             config.p)
            entry.rga.values.append(float(lam @ acc))
            entry.rgr.values.append(float(lam @ rob))
            for f, cols in zip(features, fd.groups):
                reduced = fit_model(kind, _drop(fd.X_train, cols), Ytr, mcfg)
                W_red = _whitened(t, reduced.predict(_drop(fd.X_test, cols)))
                conc = np.array([rge_concordance(W_hat_pos[:, j], W_red[:, j], config.p)
                                 for j in range(d)])
                entry.rge_concordance[f].values.append(float(lam @ conc))
                entry.rge[f].values.append(float(lam @ (1.0 - conc)))
        entries.append(entry)
    meta["shifts"] = log.records
    return SafeReport(entries, meta)


def run_safe_eval(dataset: Dataset, config: RunConfig) -> SafeReport:
    """Run the pipeline selected by ``config``.

    Univariate mode evaluates each target separately and concatenates the
    entries; multivariate mode evaluates all targets jointly.
    """
    if config.multivariate:
        return run_multivariate_pipeline(dataset, config.targets, config.models, config)
    return SafeReport.combine(
        [run_univariate_pipeline(dataset, t, config.models, config) for t in config.targets]
    )
