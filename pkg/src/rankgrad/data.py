"""Tabular datasets: CSV ingestion, standardization, encoding and synthetic data."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "CONTINUOUS",
    "CATEGORICAL",
    "Dataset",
    "SynthSpec",
    "ingest_csv",
    "read_csv_text",
    "write_csv",
    "column_stats",
    "standardize",
    "encode",
    "synth_generate",
]

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
_MISSING = {"", "na", "nan", "null", "none"}


@dataclass
class Dataset:
    """Rectangular table with typed columns.

    Continuous columns are float arrays; categorical columns are arrays of
    strings whose levels are listed in ``levels`` in order of first
    appearance.
    """

    columns: dict[str, np.ndarray]
    kinds: dict[str, str]
    levels: dict[str, list[str]] = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError(f"columns have different lengths: {sorted(lengths)}")
        for name in self.columns:
            if name not in self.kinds:
                raise DataError(f"no kind declared for column {name!r}")
            if self.kinds[name] == CATEGORICAL and name not in self.levels:
                self.levels[name] = _first_appearance(self.columns[name])

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}; have {self.names}") from None

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            {k: v[rows] for k, v in self.columns.items()},
            dict(self.kinds),
            {k: list(v) for k, v in self.levels.items()},
            self.provenance,
        )

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        for n in names:
            if self.kinds.get(n) != CONTINUOUS:
                raise DataError(f"column {n!r} is not continuous")
        return np.column_stack([self[n] for n in names]).astype(np.float64)

    def replace(self, **columns: np.ndarray) -> "Dataset":
        new = dict(self.columns)
        new.update(columns)
        return Dataset(new, dict(self.kinds), {k: list(v) for k, v in self.levels.items()},
                       self.provenance)


def _first_appearance(values) -> list[str]:
    seen: dict[str, None] = {}
    for v in values:
        seen.setdefault(str(v), None)
    return list(seen)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv_text(
    text: str,
    schema: Mapping[str, str] | None = None,
    provenance: str = "",
) -> Dataset:
    """Parse CSV text with a header row. See :func:`ingest_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("empty file: no header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"duplicate column names in header: {header}")
    body = rows[1:]
    schema = dict(schema or {})
    unknown = set(schema) - set(header)
    if unknown:
        raise DataError(f"schema names columns missing from the header: {sorted(unknown)}")
    for kind in schema.values():
        if kind not in (CONTINUOUS, CATEGORICAL):
            raise DataError(f"unknown column kind {kind!r}")

    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} cells, found {len(r)}")
        for name, cell in zip(header, r):
            if cell.strip().lower() in _MISSING:
                raise DataError(f"missing value at line {lineno} (data row {lineno - 1}), column {name!r}")

    columns: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    for j, name in enumerate(header):
        cells = [r[j].strip() for r in body]
        kind = schema.get(name)
        if kind is None:
            kind = CONTINUOUS if all(_is_float(c) for c in cells) else CATEGORICAL
        if kind == CONTINUOUS:
            vals = np.empty(len(cells))
            for i, c in enumerate(cells):
                try:
                    vals[i] = float(c)
                except ValueError:
                    raise DataError(
                        f"line {i + 2}: column {name!r} is declared continuous but holds {c!r}"
                    ) from None
            if not np.all(np.isfinite(vals)):
                raise DataError(f"column {name!r} contains non-finite numbers")
            columns[name] = vals
        else:
            columns[name] = np.array(cells, dtype=object)
        kinds[name] = kind
    return Dataset(columns, kinds, provenance=provenance)


def ingest_csv(path: str | Path, schema: Mapping[str, str] | None = None) -> Dataset:
    """Load a UTF-8 CSV file with a header row.

    Column kinds come from ``schema`` (name -> ``"continuous"`` or
    ``"categorical"``); undeclared columns are continuous when every cell
    parses as a number and categorical otherwise. Rows with missing cells are
    rejected, never imputed.

    Raises
    ------
    DataError
        On unreadable files, schema mismatches and missing values. Messages
        name the offending line and column.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {p}: {exc}") from exc
    return read_csv_text(text, schema, provenance=f"csv:{p.name}")


def write_csv(dataset: Dataset, path: str | Path | None = None) -> str:
    """Serialize ``dataset`` to CSV; floats use the shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(dataset.names)
    cols = [dataset[n] for n in dataset.names]
    for i in range(dataset.n_rows):
        w.writerow([repr(float(c[i])) if dataset.kinds[n] == CONTINUOUS else str(c[i])
                    for n, c in zip(dataset.names, cols)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def column_stats(dataset: Dataset, names: Sequence[str] | None = None) -> dict[str, tuple[float, float]]:
    """Mean and sample standard deviation (``n - 1`` denominator) of continuous columns."""
    if names is None:
        names = [n for n in dataset.names if dataset.kinds[n] == CONTINUOUS]
    stats = {}
    for n in names:
        x = dataset.matrix([n])[:, 0]
        if x.size < 2:
            raise DataError(f"column {n!r} needs at least two rows for a standard deviation")
        sd = float(x.std(ddof=1))
        if sd == 0:
            raise DataError(f"column {n!r} has zero variance and cannot be standardized")
        stats[n] = (float(x.mean()), sd)
    return stats


def standardize(dataset: Dataset, stats: Mapping[str, tuple[float, float]] | None = None) -> Dataset:
    """Z-score continuous columns with the supplied (e.g. training-fold) statistics.

    Columns absent from ``stats`` and categorical columns are left untouched.
    When ``stats`` is omitted the dataset's own statistics are used.
    """
    if stats is None:
        stats = column_stats(dataset)
    out = {}
    for name, (mu, sd) in stats.items():
        if sd == 0:
            raise DataError(f"column {name!r} has zero variance")
        out[name] = (dataset.matrix([name])[:, 0] - mu) / sd
    return dataset.replace(**out)


def encode(
    dataset: Dataset,
    features: Sequence[str],
    *,
    drop_first: bool,
) -> tuple[np.ndarray, list[list[int]]]:
    """Numeric design matrix for ``features``.

    Categorical features are one-hot encoded against the dataset's level
    list; ``drop_first`` drops the first level (reference coding). Returns
    the matrix and, per feature, the list of its column indices so that a
    feature can be removed or permuted as a block.
    """
    blocks = []
    groups: list[list[int]] = []
    col = 0
    for name in features:
        kind = dataset.kinds.get(name)
        if kind is None:
            raise DataError(f"unknown feature {name!r}")
        if kind == CONTINUOUS:
            block = dataset[name].astype(np.float64)[:, None]
        else:
            levels = dataset.levels[name][1:] if drop_first else dataset.levels[name]
            vals = dataset[name]
            block = np.column_stack([(vals == lv).astype(np.float64) for lv in levels]) \
                if levels else np.zeros((dataset.n_rows, 0))
        blocks.append(block)
        groups.append(list(range(col, col + block.shape[1])))
        col += block.shape[1]
    if not blocks:
        return np.zeros((dataset.n_rows, 0)), groups
    return np.hstack(blocks), groups


_LINKS = ("linear", "exp", "nonlinear", "noise")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic regression dataset with known relevant features.

    Features ``x1..xk`` are jointly Gaussian with common pairwise
    ``correlation``. Each target is a link of a linear index of the features
    (features listed in ``irrelevant`` get coefficient 0), plus Gaussian
    noise, then standardized and squashed through the logistic function so
    the target lies in ``(0, 1)``. ``link="noise"`` ignores the features.
    """

    n: int = 500
    n_features: int = 5
    correlation: float = 0.3
    link: str = "linear"
    noise_sd: float = 0.0
    n_targets: int = 1
    irrelevant: tuple[int, ...] = ()
    sector_levels: int = 0
    coefficients: tuple[float, ...] | None = None

    def validate(self) -> None:
        if self.n < 4 or self.n_features < 1 or self.n_targets < 1:
            raise DataError("synthetic spec needs n >= 4, n_features >= 1, n_targets >= 1")
        if self.link not in _LINKS:
            raise DataError(f"unknown link {self.link!r}; choose from {_LINKS}")
        if not -1.0 / max(self.n_features - 1, 1) < self.correlation < 1.0:
            raise DataError("correlation must keep the feature covariance positive definite")
        if self.noise_sd < 0:
            raise DataError("noise_sd must be non-negative")
        if self.link == "noise" and self.noise_sd == 0:
            raise DataError("link 'noise' needs noise_sd > 0")
        if any(not 0 <= i < self.n_features for i in self.irrelevant):
            raise DataError("irrelevant feature index out of range")
        if len(self.irrelevant) >= self.n_features and self.link != "noise":
            raise DataError("at least one feature must be relevant")
        if self.coefficients is not None and len(self.coefficients) != self.n_features:
            raise DataError("need one coefficient per feature")
        if self.sector_levels == 1 or self.sector_levels < 0:
            raise DataError("sector_levels must be 0 or at least 2")


def _squash(s: np.ndarray) -> np.ndarray:
    sd = s.std()
    if sd == 0:
        raise DataError("synthetic target is constant; add signal or noise")
    return 1.0 / (1.0 + np.exp(-(s - s.mean()) / sd))


def synth_generate(spec: SynthSpec, seed: int = 0) -> Dataset:
    """Generate a deterministic synthetic dataset from ``spec``."""
    spec.validate()
    rng = np.random.default_rng(seed)
    k = spec.n_features
    cov = np.full((k, k), spec.correlation)
    np.fill_diagonal(cov, 1.0)
    x = rng.standard_normal((spec.n, k)) @ np.linalg.cholesky(cov).T

    if spec.coefficients is not None:
        beta = np.asarray(spec.coefficients, dtype=np.float64)
    else:
        beta = np.linspace(1.0, 0.5, k)
    beta = beta.copy()
    beta[list(spec.irrelevant)] = 0.0
    relevant = np.flatnonzero(beta)

    sector = None
    sector_effect = np.zeros(spec.n)
    if spec.sector_levels:
        codes = rng.integers(0, spec.sector_levels, spec.n)
        effects = np.linspace(-1.0, 1.0, spec.sector_levels)
        sector = np.array([f"S{c + 1}" for c in codes], dtype=object)
        sector_effect = effects[codes]

    targets = {}
    for t in range(spec.n_targets):
        b = beta.copy()
        if t > 0:
            b[relevant] *= 1.0 + 0.5 * rng.uniform(-1.0, 1.0, relevant.size)
        index = x @ b + sector_effect
        if spec.link == "linear":
            s = index
        elif spec.link == "exp":
            s = np.exp(index)
        elif spec.link == "nonlinear":
            j = relevant[0]
            s = index + 1.5 * (x[:, j] ** 2 - 1.0)
        else:
            s = np.zeros(spec.n)
        s = s + spec.noise_sd * rng.standard_normal(spec.n)
        targets[f"y{t + 1}"] = _squash(s)

    columns: dict[str, np.ndarray] = {f"x{j + 1}": x[:, j] for j in range(k)}
    kinds = {name: CONTINUOUS for name in columns}
    levels = {}
    if sector is not None:
        columns["Sector"] = sector
        kinds["Sector"] = CATEGORICAL
        levels["Sector"] = [f"S{i + 1}" for i in range(spec.sector_levels)]
    for name, y in targets.items():
        columns[name] = y
        kinds[name] = CONTINUOUS
    return Dataset(columns, kinds, levels, provenance=f"synthetic:{spec}:seed={seed}")
