"""Step CDFs, Cramer-von Mises divergences and related distances on the line.

Distributions are finite weighted atom sets (:class:`StepCDF`). CDFs are
evaluated right-continuously. Integrals ``int (.) dF`` against a step CDF are
weighted sums over its atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import InputError

__all__ = [
    "StepCDF",
    "BVReport",
    "CvmWassersteinCheck",
    "empirical_cdf",
    "mixture_cdf",
    "discretize",
    "uniform_grid",
    "cvm_p",
    "concordance_function",
    "self_concordance",
    "wasserstein_1d",
    "energy_distance",
    "cramer_distance",
    "verify_cvm_wasserstein",
    "energy_cvm_factor",
    "cdf_inner",
    "bias_variance_decompose",
    "global_decompose",
]

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous distribution function of a finite weighted atom set."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if loc.ndim != 1 or loc.shape != w.shape or loc.size == 0:
            raise InputError("locations and weights must be equal-length non-empty vectors")
        if np.any(np.diff(loc) <= 0):
            raise InputError("atom locations must be strictly increasing")
        if np.any(w <= 0):
            raise InputError("atom weights must be positive")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise InputError(f"atom weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def __call__(self, x: ArrayLike) -> np.ndarray:
        idx = np.searchsorted(self.locations, x, side="right")
        return np.concatenate(([0.0], self.cumulative))[idx]

    def quantile(self, q: ArrayLike) -> np.ndarray:
        """Generalized inverse ``inf{x : F(x) >= q}``; ``q <= 0`` maps to the first atom."""
        # searchsorted on the cumulative sums with a tiny tolerance so that
        # q equal to a cumulative value (up to rounding) hits its own atom
        c = self.cumulative
        idx = np.searchsorted(c, np.asarray(q, dtype=np.float64) - 1e-15, side="left")
        return self.locations[np.clip(idx, 0, c.size - 1)]

    def mean(self) -> float:
        return float(np.dot(self.locations, self.weights))


def empirical_cdf(sample: ArrayLike, weights: ArrayLike | None = None) -> StepCDF:
    """Normalized empirical CDF with duplicate locations merged.

    >>> empirical_cdf([1, 1, 2]).weights.tolist()
    [0.6666666666666666, 0.3333333333333333]
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("empty sample")
    if not np.all(np.isfinite(x)):
        raise InputError("sample contains non-finite entries")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != x.shape:
            raise InputError("weights and sample differ in length")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InputError("weights must be positive and finite")
    loc, inv = np.unique(x, return_inverse=True)
    merged = np.bincount(inv.ravel(), weights=w, minlength=loc.size)
    return StepCDF(loc, merged / merged.sum())


def _from_atoms(loc: np.ndarray, w: np.ndarray) -> StepCDF:
    keep = w > 0
    loc, w = loc[keep], w[keep]
    order = np.argsort(loc, kind="stable")
    loc, w = loc[order], w[order]
    uniq, inv = np.unique(loc, return_inverse=True)
    merged = np.bincount(inv.ravel(), weights=w, minlength=uniq.size)
    return StepCDF(uniq, merged / merged.sum())


def mixture_cdf(components: Sequence[StepCDF], probs: ArrayLike) -> StepCDF:
    """Pointwise probability-weighted average of step CDFs."""
    pr = np.asarray(probs, dtype=np.float64)
    if len(components) == 0 or pr.shape != (len(components),):
        raise InputError("need one probability per component")
    if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
        raise InputError("mixture probabilities must be non-negative and sum to 1")
    loc = np.concatenate([c.locations for c in components])
    w = np.concatenate([c.weights * p for c, p in zip(components, pr)])
    return _from_atoms(loc, w)


def discretize(ppf: Callable[[np.ndarray], np.ndarray], n: int) -> StepCDF:
    """``n`` equally weighted atoms at the mid-quantiles ``ppf((i - 1/2)/n)``."""
    if n < 1:
        raise InputError("n must be at least 1")
    q = (np.arange(n) + 0.5) / n
    return empirical_cdf(ppf(q))


def uniform_grid(n: int) -> StepCDF:
    """Uniform law on ``[0, 1]`` discretized as atoms ``k/n``, ``k = 1..n``."""
    if n < 1:
        raise InputError("n must be at least 1")
    return StepCDF(np.arange(1, n + 1) / n, np.full(n, 1.0 / n))


def cvm_p(x: StepCDF, y: StepCDF, p: float = 2.0) -> float:
    """Cramer-von Mises divergence ``int |F_x - F_y|^p dF_x`` (no p-th root).

    Both CDFs are evaluated right-continuously at the atoms of ``x``. The
    divergence is not symmetric in its arguments.
    """
    if not p > 0:
        raise InputError(f"p must be positive, got {p}")
    diff = np.abs(x(x.locations) - y(x.locations))
    return float(np.dot(x.weights, diff**p))


def concordance_function(x: StepCDF, y: StepCDF) -> StepCDF:
    """Distribution on ``[0, 1]`` of ``F_y(X)`` for ``X ~ x``.

    For continuous laws its CDF is ``q -> F_x(F_y^{-1}(q))``. For step CDFs
    the pushforward is the right-continuous discretization that agrees with
    that composition away from its jump points, and puts every atom ``x_i`` at
    ``F_y(x_i)`` with the weight of ``x_i``. ``C(1) = 1`` holds because
    ``F_y <= 1``.
    """
    return _from_atoms(y(x.locations), x.weights.copy())


def self_concordance(x: StepCDF) -> StepCDF:
    """Law of ``F_x(X)``: atoms at the cumulative weights of ``x``.

    For ``n`` equally weighted atoms this is :func:`uniform_grid` ``(n)``.
    """
    return StepCDF(x.cumulative, x.weights.copy())


def _quantile_segments(x: StepCDF, y: StepCDF):
    """Breakpoints of ``[0, 1]`` on which both quantile functions are constant."""
    edges = np.union1d(x.cumulative, y.cumulative)
    edges = np.concatenate(([0.0], edges[edges < 1.0], [1.0]))
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return widths, x.quantile(mids), y.quantile(mids)


def wasserstein_1d(x: StepCDF, y: StepCDF, p: float = 1.0) -> float:
    """``W_p`` between two step CDFs by exact quantile-segment enumeration."""
    if not p >= 1:
        raise InputError(f"Wasserstein order must be >= 1, got {p}")
    widths, qx, qy = _quantile_segments(x, y)
    return float(np.dot(widths, np.abs(qx - qy) ** p) ** (1.0 / p))


def energy_distance(x: StepCDF, y: StepCDF) -> float:
    """``2 E|X - Y| - E|X - X'| - E|Y - Y'|`` as exact double sums over atoms."""

    def mean_abs(a: StepCDF, b: StepCDF) -> float:
        d = np.abs(a.locations[:, None] - b.locations[None, :])
        return float(a.weights @ d @ b.weights)

    return max(2.0 * mean_abs(x, y) - mean_abs(x, x) - mean_abs(y, y), 0.0)


def cramer_distance(x: StepCDF, y: StepCDF) -> float:
    """``int (F_x - F_y)^2 dt`` over the real line, by segment enumeration."""
    pts = np.union1d(x.locations, y.locations)
    if pts.size < 2:
        return 0.0
    gap = x(pts[:-1]) - y(pts[:-1])
    return float(np.dot(np.diff(pts), gap**2))


@dataclass(frozen=True)
class CvmWassersteinCheck:
    """Both sides of ``CvM_p(x, y)^(1/p) = W_p(U, C_{x,y})`` on a grid."""

    cvm_root: float
    wasserstein: float
    grid: int
    p: float

    @property
    def residual(self) -> float:
        return abs(self.cvm_root - self.wasserstein)


def verify_cvm_wasserstein(x: StepCDF, y: StepCDF, p: float = 2.0) -> CvmWassersteinCheck:
    """Compare ``CvM_p(x, y)^(1/p)`` with ``W_p(U, C_{x,y})``.

    ``U`` is the uniform law discretized on the cumulative weights of ``x``
    (the grid ``k/n`` for ``n`` equally weighted atoms). With that reference
    both sides are the same finite sum, so the residual is rounding only;
    the continuous identity is recovered as the discretization is refined.
    """
    if not p >= 1:
        raise InputError(f"Wasserstein order must be >= 1, got {p}")
    lhs = cvm_p(x, y, p) ** (1.0 / p)
    rhs = wasserstein_1d(self_concordance(x), concordance_function(x, y), p)
    return CvmWassersteinCheck(lhs, rhs, x.locations.size, p)


def energy_cvm_factor(x: StepCDF, y: StepCDF) -> dict[str, float]:
    """Measure how ``E(U, C_{x,y})`` relates to ``CvM_2`` taken in both argument orders.

    Returns the energy distance between the uniform reference and the
    concordance law, both ``CvM_2`` values and the two ratios.
    """
    e = energy_distance(self_concordance(x), concordance_function(x, y))
    fwd = cvm_p(x, y, 2.0)
    rev = cvm_p(y, x, 2.0)
    return {
        "energy": e,
        "cvm2_xy": fwd,
        "cvm2_yx": rev,
        "ratio_xy": e / fwd if fwd > 0 else float("nan"),
        "ratio_yx": e / rev if rev > 0 else float("nan"),
    }


def cdf_inner(f: StepCDF, g: StepCDF, h: StepCDF, k: StepCDF, truth: StepCDF) -> float:
    """``int (F - G)(H - K) dT`` evaluated at the atoms of ``truth``."""
    a = truth.locations
    return float(np.dot(truth.weights, (f(a) - g(a)) * (h(a) - k(a))))


@dataclass(frozen=True)
class BVReport:
    """Terms of a squared-CvM error decomposition.

    For :func:`bias_variance_decompose` ``approx_term`` is zero; for
    :func:`global_decompose` ``variance_term`` is zero, ``approx_term`` is the
    sub-optimality ``int (F_T - F_D)^2 dF`` and ``bias_term`` the estimation
    error ``int (F_D - F)^2 dF``.
    """

    total_error: float
    variance_term: float
    bias_term: float
    approx_term: float
    residual: float
    orthogonality: float = 0.0

    @property
    def identity_holds(self) -> bool:
        return abs(self.residual) <= 1e-10 * max(1.0, self.total_error)


def bias_variance_decompose(
    ensemble: Sequence[StepCDF], truth: StepCDF, probs: ArrayLike | None = None
) -> BVReport:
    """Split ``E int (F_D - F)^2 dF`` into variance around the mean model plus bias.

    Parameters
    ----------
    ensemble : sequence of StepCDF
        Trained models ``F_D``, one per dataset draw.
    truth : StepCDF
        The target distribution ``F``; integrals are taken against it.
    probs : array_like, optional
        Probabilities of the draws; uniform when omitted.
    """
    if len(ensemble) == 0:
        raise InputError("empty ensemble")
    pr = np.full(len(ensemble), 1.0 / len(ensemble)) if probs is None else np.asarray(probs, float)
    if pr.shape != (len(ensemble),) or np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
        raise InputError("ensemble probabilities must be non-negative and sum to 1")
    a = truth.locations
    w = truth.weights
    f = truth(a)
    members = np.stack([m(a) for m in ensemble])
    fhat = pr @ members
    # fixed-order reductions keep the report bit-reproducible
    total = float(pr @ ((members - f) ** 2 @ w))
    variance = float(pr @ ((members - fhat) ** 2 @ w))
    bias = float(((fhat - f) ** 2) @ w)
    return BVReport(total, variance, bias, 0.0, total - (variance + bias))


def global_decompose(
    f_t: StepCDF,
    f_d: StepCDF,
    truth: StepCDF,
    family: Sequence[StepCDF] = (),
    tol: float = 1e-6,
) -> BVReport:
    """Split ``int (F_T - F)^2 dF`` into sub-optimality and estimation error.

    ``f_d`` must be the least-squares projection of ``truth`` onto a convex
    family containing ``f_t``. This is checked through the first-order
    condition ``int (H - F_D)(F_D - F) dF = 0`` for ``H`` in ``family`` and for
    ``H = f_t``; the largest absolute value is stored in ``orthogonality``.

    Raises
    ------
    InputError
        If the orthogonality residual exceeds ``tol``.
    """
    checks = [cdf_inner(h, f_d, f_d, truth, truth) for h in (f_t, *family)]
    ortho = max(abs(c) for c in checks)
    if ortho > tol:
        raise InputError(
            f"f_d does not look like the projection of truth onto the family "
            f"(orthogonality residual {ortho:.3g} > {tol:g})"
        )
    total = cdf_inner(f_t, truth, f_t, truth, truth)
    approx = cdf_inner(f_t, f_d, f_t, f_d, truth)
    estimation = cdf_inner(f_d, truth, f_d, truth, truth)
    return BVReport(total, 0.0, estimation, approx, total - (approx + estimation), ortho)
