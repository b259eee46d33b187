"""Correlation whitening and the whitening-based multivariate Gini / RGX_p.

Conventions: data are ``n x d`` arrays with units in rows. A fitted
transform maps a row ``y`` to ``W @ (y / sd)``, where ``sd`` are the column
standard deviations of the fitting data and ``W`` satisfies
``W.T @ W = C^{-1}`` for the fitted correlation matrix ``C``. Dividing by the
standard deviations before applying ``W`` is what makes both schemes
invariant to positive rescaling of the columns. Data are not centered, so the
whitened coordinates keep non-zero means; those means define the lambda
weights used to aggregate per-coordinate metrics.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateInputError, InputError, SingularityError
from .rank_core import gini, shift_to_positive
from .rgx import rgx_p

__all__ = [
    "Scheme",
    "WhiteningTransform",
    "MultivariateResult",
    "correlation_matrix",
    "fit_whitening",
    "fit_zca_cor",
    "fit_cholesky",
    "lambda_weights",
    "positive_coordinates",
    "multivariate_gini",
    "multivariate_rgx_p",
]

SINGULAR_RTOL = 1e-10
# whitened coordinates have unit variance, so means below this are rounding noise
ZERO_MEAN_ATOL = 1e-12


class Scheme(str, enum.Enum):
    ZCA_COR = "zca-cor"
    CHOLESKY = "cholesky"


def _as_matrix(data: ArrayLike, name: str = "data") -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array")
    if arr.shape[0] < 2:
        raise InputError(f"{name} needs at least 2 rows")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def correlation_matrix(data: ArrayLike) -> np.ndarray:
    """Pearson correlation matrix of the columns of ``data``.

    Raises
    ------
    DegenerateInputError
        If a column is constant.
    """
    arr = _as_matrix(data)
    sd = arr.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DegenerateInputError(
            f"correlation undefined: constant column(s) {np.flatnonzero(sd == 0).tolist()}"
        )
    c = np.corrcoef(arr, rowvar=False)
    c = np.atleast_2d(c)
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    return np.clip(c, -1.0, 1.0)


@dataclass(frozen=True)
class WhiteningTransform:
    """A fitted whitening map ``y -> matrix @ (y / scale)``."""

    matrix: np.ndarray
    scale: np.ndarray
    correlation: np.ndarray
    whitened_means: np.ndarray
    lambdas: np.ndarray
    scheme: Scheme
    shifts: np.ndarray | None = field(default=None)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, data: ArrayLike) -> np.ndarray:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape[1] != self.dim:
            raise InputError(f"expected {self.dim} columns, got {arr.shape[1]}")
        return (arr / self.scale) @ self.matrix.T

    def with_shifts(self, shifts: ArrayLike) -> "WhiteningTransform":
        return WhiteningTransform(
            self.matrix, self.scale, self.correlation, self.whitened_means,
            self.lambdas, self.scheme, np.asarray(shifts, dtype=np.float64),
        )

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "matrix": self.matrix.tolist(),
            "scale": self.scale.tolist(),
            "correlation": self.correlation.tolist(),
            "whitened_means": self.whitened_means.tolist(),
            "lambdas": self.lambdas.tolist(),
            "shifts": None if self.shifts is None else self.shifts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WhiteningTransform":
        shifts = d.get("shifts")
        return cls(
            np.asarray(d["matrix"], dtype=np.float64),
            np.asarray(d["scale"], dtype=np.float64),
            np.asarray(d["correlation"], dtype=np.float64),
            np.asarray(d["whitened_means"], dtype=np.float64),
            np.asarray(d["lambdas"], dtype=np.float64),
            Scheme(d["scheme"]),
            None if shifts is None else np.asarray(shifts, dtype=np.float64),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WhiteningTransform":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _checked_eigh(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(c)
    top = vals.max()
    bad = vals < SINGULAR_RTOL * top
    if np.any(bad):
        raise SingularityError(
            f"correlation matrix is singular: {int(bad.sum())} eigenvalue(s) below "
            f"{SINGULAR_RTOL:g} * {top:.4g}; offending directions (columns): "
            f"{np.round(vecs[:, bad], 6).T.tolist()}",
            directions=vecs[:, bad],
        )
    return vals, vecs


def lambda_weights(whitened_means: ArrayLike, atol: float = 0.0) -> np.ndarray:
    """Aggregation weights ``|m_i| / sum_j |m_j|``.

    Means are treated as all zero when every ``|m_i| <= atol``.

    Raises
    ------
    DegenerateInputError
        If every mean is zero, which happens when the data were centered
        before whitening. Whiten the raw (uncentered) responses instead.
    """
    m = np.abs(np.asarray(whitened_means, dtype=np.float64))
    s = m.sum()
    if not (s > 0 and m.max() > atol):
        raise DegenerateInputError(
            "all whitened means are zero; lambda weights are undefined "
            "(whiten uncentered responses, not z-scores)"
        )
    return m / s


def fit_whitening(data: ArrayLike, scheme: Scheme | str = Scheme.ZCA_COR) -> WhiteningTransform:
    """Fit a correlation-based whitening transform on ``data``.

    ``zca-cor`` uses ``W = O D^{-1/2} O'`` from the eigendecomposition
    ``C = O D O'``; ``cholesky`` uses ``W = L'`` from ``C^{-1} = L L'``.
    Both satisfy ``W' W = C^{-1}`` and differ by an orthogonal factor.

    Raises
    ------
    SingularityError
        If an eigenvalue of ``C`` is below ``1e-10`` times the largest.
    """
    scheme = Scheme(scheme)
    arr = _as_matrix(data)
    c = correlation_matrix(arr)
    vals, vecs = _checked_eigh(c)
    if scheme is Scheme.ZCA_COR:
        w = (vecs / np.sqrt(vals)) @ vecs.T
        w = 0.5 * (w + w.T)
    else:
        cinv = (vecs / vals) @ vecs.T
        cinv = 0.5 * (cinv + cinv.T)
        w = np.linalg.cholesky(cinv).T
    scale = arr.std(axis=0, ddof=1)
    means = ((arr / scale) @ w.T).mean(axis=0)
    return WhiteningTransform(w, scale, c, means, lambda_weights(means, ZERO_MEAN_ATOL), scheme)


def fit_zca_cor(data: ArrayLike) -> WhiteningTransform:
    return fit_whitening(data, Scheme.ZCA_COR)


def fit_cholesky(data: ArrayLike) -> WhiteningTransform:
    return fit_whitening(data, Scheme.CHOLESKY)


def positive_coordinates(
    y_star: np.ndarray, z_star: np.ndarray | None = None, rel_eps: float = 1e-9
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Shift each whitened response coordinate to be strictly positive.

    A coordinate of ``y_star`` with a non-positive entry gets the shift
    ``-min + rel_eps * range``; the same shift is added to the matching
    column of ``z_star``, whose ordering is therefore unchanged. Returns the
    shifted arrays and the per-coordinate shifts (zero where none was needed).
    """
    y_out = np.array(y_star, dtype=np.float64, copy=True)
    z_out = None if z_star is None else np.array(z_star, dtype=np.float64, copy=True)
    shifts = np.zeros(y_out.shape[1])
    for i in range(y_out.shape[1]):
        y_out[:, i], shifts[i] = shift_to_positive(y_out[:, i], rel_eps)
        if z_out is not None:
            z_out[:, i] += shifts[i]
    return y_out, z_out, shifts


@dataclass(frozen=True)
class MultivariateResult:
    """Lambda-weighted aggregate of per-coordinate metric values."""

    value: float
    components: np.ndarray
    lambdas: np.ndarray
    shifts: np.ndarray
    transform: WhiteningTransform

    def __float__(self) -> float:
        return self.value


def multivariate_gini(
    data: ArrayLike,
    transform: WhiteningTransform | None = None,
    *,
    shift: bool = True,
) -> MultivariateResult:
    """Multivariate Gini index ``sum_i lambda_i * G(Y*_i)``.

    ``transform`` defaults to a ZCA-cor whitening fitted on ``data``. With
    ``shift=False`` a whitened coordinate with non-positive entries raises
    instead of being shifted.
    """
    arr = _as_matrix(data)
    t = fit_whitening(arr) if transform is None else transform
    ystar = t.apply(arr)
    if shift:
        ystar, _, shifts = positive_coordinates(ystar)
    else:
        shifts = np.zeros(ystar.shape[1])
    comps = np.array([gini(ystar[:, i]) for i in range(ystar.shape[1])])
    return MultivariateResult(
        float(np.dot(t.lambdas, comps)), comps, t.lambdas, shifts, t.with_shifts(shifts)
    )


def multivariate_rgx_p(
    y: ArrayLike,
    z: ArrayLike,
    p: float = 1.0,
    scheme: Scheme | str = Scheme.ZCA_COR,
    *,
    transform: WhiteningTransform | None = None,
    shift: bool = True,
) -> MultivariateResult:
    """Multivariate RGX_p: ``sum_i lambda_i * RGX_p(Y*_i, Z*_i)``.

    The whitening is fitted on ``y`` (unless ``transform`` is given) and the
    same matrix is applied to ``z``; the weights come from the ``y`` side.
    """
    ya = _as_matrix(y, "y")
    za = _as_matrix(z, "z")
    if ya.shape != za.shape:
        raise InputError(f"shape mismatch: y {ya.shape} vs z {za.shape}")
    t = fit_whitening(ya, scheme) if transform is None else transform
    ystar, zstar = t.apply(ya), t.apply(za)
    if shift:
        ystar, zstar, shifts = positive_coordinates(ystar, zstar)
    else:
        shifts = np.zeros(ystar.shape[1])
    comps = np.array([rgx_p(ystar[:, i], zstar[:, i], p).value for i in range(t.dim)])
    return MultivariateResult(
        float(np.dot(t.lambdas, comps)), comps, t.lambdas, shifts, t.with_shifts(shifts)
    )
