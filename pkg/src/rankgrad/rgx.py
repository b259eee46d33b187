"""The S_p variability index and the RGX_p / WRGX_p metric family.

``RGX_p(Y, Z)`` is one minus the ratio of two p-power areas: the area
between the concordance curve ``L_{Y,Z}`` and the Lorenz curve ``L_Y`` over
the area between the dual Lorenz curve ``L_Y^c`` and ``L_Y``. It equals 1
when ``Z`` orders the units like ``Y`` and 0 when it orders them like ``-Y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from .errors import DegenerateInputError, InputError
from .rank_core import (
    RankedSample,
    concordance_curve,
    dual_lorenz_curve,
    lorenz_curve,
    pl_power_integral,
    ranked_sample,
    segment_power_means,
)

__all__ = [
    "RgxResult",
    "s_p",
    "s_inf",
    "rgx_p",
    "wrgx_p",
    "rgx_monotone_check",
    "DEFAULT_P_GRID",
]

DEFAULT_P_GRID = (1.0, 2.0)


@dataclass(frozen=True)
class RgxResult:
    """Value of an RGX-type metric with its two areas.

    ``numerator`` and ``denominator`` are the p-power areas computed on curves
    divided by the response total, so they do not depend on the response
    scale. ``value == 1 - numerator / denominator``.
    """

    value: float
    p: float
    numerator: float
    denominator: float

    def __float__(self) -> float:
        return self.value


def _check_p(p: float) -> float:
    p = float(p)
    if not (np.isfinite(p) and p > 0):
        raise InputError(f"p must be a positive finite number, got {p}")
    return p


def s_p(y: RankedSample | ArrayLike, p: float) -> float:
    """Variability index ``(1/(N*mean)) * (int |L^c - L|^p dt)^(1/p)``.

    Accepts non-negative samples containing zeros (the response must still
    have a positive total). ``s_p(y, 1)`` equals the Gini index.
    """
    p = _check_p(p)
    s = ranked_sample(y, allow_zeros=True)
    low = lorenz_curve(s).normalized()
    high = dual_lorenz_curve(s).normalized()
    return float(pl_power_integral(low, high, p) ** (1.0 / p))


def s_inf(y: RankedSample | ArrayLike) -> float:
    """Limit of :func:`s_p` as ``p -> inf``: the largest normalized gap ``L^c - L``."""
    s = ranked_sample(y, allow_zeros=True)
    gap = dual_lorenz_curve(s).knots - lorenz_curve(s).knots
    return float(np.max(gap) / s.total)


def _curves(y, z):
    s = ranked_sample(y)
    low = lorenz_curve(s).normalized()
    high = dual_lorenz_curve(s).normalized()
    mid = concordance_curve(s, z).normalized()
    return s, low, mid, high


def _result(num: float, den: float, p: float) -> RgxResult:
    if den <= 0:
        raise DegenerateInputError(
            "RGX is undefined for a constant response (Lorenz and dual Lorenz curves coincide)"
        )
    value = min(max(1.0 - num / den, 0.0), 1.0)
    return RgxResult(value, p, num, den)


def rgx_p(y: RankedSample | ArrayLike, z: ArrayLike, p: float = 1.0) -> RgxResult:
    """Rank Graduation metric of order ``p`` between response ``y`` and score ``z``.

    Parameters
    ----------
    y : array_like or RankedSample
        Strictly positive response vector.
    z : array_like
        Scores of the same length; only the ordering they induce matters.
    p : float
        Order of the metric, ``p > 0``. ``p = 1`` gives the classical RGX.

    Raises
    ------
    DegenerateInputError
        If ``y`` is constant.
    """
    p = _check_p(p)
    _, low, mid, high = _curves(y, z)
    num = pl_power_integral(low, mid, p)
    den = pl_power_integral(low, high, p)
    return _result(num, den, p)


def wrgx_p(y: RankedSample | ArrayLike, z: ArrayLike, p: float = 1.0) -> RgxResult:
    """Weighted RGX_p: segment ``i`` is weighted by ``Y_(i) / sum(Y)`` instead of ``1/N``.

    Here ``Y_(i)`` is the ``i``-th smallest response, so the integrals are
    taken against the measure whose distribution function is the normalized
    Lorenz curve.
    """
    p = _check_p(p)
    s, low, mid, high = _curves(y, z)
    weights = s.sorted_values / s.total
    num_gap = np.clip(mid.knots - low.knots, 0.0, None)
    den_gap = np.clip(high.knots - low.knots, 0.0, None)
    num = float(np.dot(weights, segment_power_means(num_gap, p)))
    den = float(np.dot(weights, segment_power_means(den_gap, p)))
    return _result(num, den, p)


def rgx_monotone_check(
    y: RankedSample | ArrayLike,
    z: ArrayLike,
    f: Callable[[np.ndarray], np.ndarray],
    p: float = 1.0,
) -> tuple[RgxResult, RgxResult]:
    """Return ``(RGX_p(y, z), RGX_p(y, f(z)))`` after checking that ``f`` is monotone on ``z``.

    For increasing ``f`` the two values coincide; for decreasing ``f`` and
    ``p = 1`` they sum to one (when ``z`` has no ties).

    Raises
    ------
    InputError
        If ``f`` is not strictly monotone over the observed values of ``z``.
    """
    zarr = np.asarray(z, dtype=np.float64)
    fz = np.asarray(f(zarr), dtype=np.float64)
    if fz.shape != zarr.shape:
        raise InputError("f must map the score vector elementwise")
    ux = np.unique(zarr)
    steps = np.sign(np.diff(np.asarray(f(ux), dtype=np.float64)))
    if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
        raise InputError("f is not strictly monotone on the observed scores")
    return rgx_p(y, zarr, p), rgx_p(y, fz, p)
