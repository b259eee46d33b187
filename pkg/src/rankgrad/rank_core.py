"""Orderings, Lorenz-type curves and exact piecewise-linear integration.

All curves for a sample of size ``N`` live on the knot grid ``k/N``,
``k = 0..N``, and are linear between knots. The three curves built from a
response ``Y`` (and optionally a score ``Z``) are

* the Lorenz curve ``L_Y``: cumulative sums of ``Y`` in ascending order,
* the dual Lorenz curve ``L_Y^c``: cumulative sums in descending order,
* the concordance curve ``L_{Y,Z}``: cumulative sums of ``Y`` taken in the
  order induced by ``Z``.

``L_Y <= L_{Y,Z} <= L_Y^c`` at every knot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .errors import InputError, NonPositiveError

__all__ = [
    "RankedSample",
    "PLCurve",
    "compute_ranks",
    "ranked_sample",
    "shift_to_positive",
    "lorenz_curve",
    "dual_lorenz_curve",
    "concordance_curve",
    "segment_power_means",
    "pl_power_integral",
    "gini",
    "gini_area",
    "pietra",
]


def _as_vector(values: ArrayLike, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise InputError(f"{name} needs at least 2 entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def compute_ranks(values: ArrayLike) -> np.ndarray:
    """Return the stable ascending ordering of ``values``.

    Entry ``i`` of the result is the (0-based) index of the ``i``-th smallest
    value. Ties keep their original relative order, so the ordering is
    deterministic.

    >>> compute_ranks([2.0, 1.0, 2.0]).tolist()
    [1, 0, 2]
    """
    arr = _as_vector(values)
    return np.argsort(arr, kind="stable")


@dataclass(frozen=True)
class RankedSample:
    """A response vector together with its induced ordering.

    Use :func:`ranked_sample` to build one; the constructor does not validate.
    """

    values: np.ndarray
    ordering: np.ndarray
    total: float

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def mean(self) -> float:
        return self.total / self.n

    @property
    def sorted_values(self) -> np.ndarray:
        return self.values[self.ordering]


def ranked_sample(values: ArrayLike, *, allow_zeros: bool = False) -> RankedSample:
    """Validate ``values`` and wrap them in a :class:`RankedSample`.

    Values must be strictly positive. ``allow_zeros=True`` relaxes this to
    non-negative with a positive total; only the variability index accepts
    such samples.
    """
    if isinstance(values, RankedSample):
        return values
    arr = _as_vector(values)
    if allow_zeros:
        if np.any(arr < 0) or arr.sum() <= 0:
            raise NonPositiveError("values must be non-negative with a positive sum")
    elif np.any(arr <= 0):
        bad = np.flatnonzero(arr <= 0)
        raise NonPositiveError(
            f"values must be strictly positive; {bad.size} entries are not "
            f"(first at index {bad[0]}: {float(arr[bad[0]])!r}). "
            "Use shift_to_positive() to apply a disclosed shift."
        )
    arr = arr.copy()
    arr.setflags(write=False)
    ordering = np.argsort(arr, kind="stable")
    ordering.setflags(write=False)
    return RankedSample(arr, ordering, float(arr.sum()))


def shift_to_positive(values: ArrayLike, rel_eps: float = 1e-9) -> tuple[np.ndarray, float]:
    """Shift ``values`` so that every entry is strictly positive.

    Returns the shifted copy and the shift that was added. Vectors that are
    already positive are returned unchanged with shift ``0.0``. Otherwise the
    shift is ``-min + rel_eps * range`` (``rel_eps`` alone if the range is 0).

    Orderings are unaffected but Lorenz areas are not, so callers should
    report the shift alongside any metric computed from the result.
    """
    arr = np.asarray(values, dtype=np.float64)
    lo = float(arr.min())
    if lo > 0:
        return arr.copy(), 0.0
    spread = float(arr.max()) - lo
    shift = -lo + (rel_eps * spread if spread > 0 else rel_eps)
    return arr + shift, shift


@dataclass(frozen=True)
class PLCurve:
    """Piecewise-linear curve on ``[0, 1]`` with knots at ``k/N``.

    ``knots[k]`` is the curve value at ``t = k/N``; ``knots[0] == 0``.
    """

    knots: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=np.float64)
        if k.ndim != 1 or k.size < 2:
            raise InputError("a PLCurve needs at least two knots")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "n", k.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def __call__(self, t: ArrayLike) -> np.ndarray:
        return np.interp(t, self.grid, self.knots)

    def normalized(self) -> "PLCurve":
        """The curve divided by its end value."""
        return PLCurve(self.knots / self.knots[-1])


def _cumulative(ordered_values: np.ndarray, total: float) -> np.ndarray:
    knots = np.concatenate(([0.0], np.cumsum(ordered_values)))
    knots[-1] = total
    return knots


def _prefix_matches(groups_in_order: np.ndarray, n_groups: int) -> np.ndarray:
    """Knots ``k`` at which the first ``k`` items form the ``k`` smallest groups.

    ``groups_in_order`` are dense tie-group ids (0 = smallest value) listed in
    the order under study. At such knots the partial sums equal the Lorenz
    partial sums exactly, whatever the summation order.
    """
    n = groups_in_order.size
    sorted_groups = np.sort(groups_in_order)
    last_pos = np.full(n_groups, -1)
    np.maximum.at(last_pos, groups_in_order, np.arange(n))
    # largest position of any item whose group is strictly below g
    last_below = np.concatenate(([-1], np.maximum.accumulate(last_pos)))[:-1]
    k = np.arange(1, n + 1)
    g = sorted_groups
    ok = (np.maximum.accumulate(groups_in_order) <= g) & (last_below[g] < k)
    return np.concatenate(([True], ok))


def lorenz_curve(sample: RankedSample | ArrayLike) -> PLCurve:
    """Lorenz curve: knot ``k`` holds the sum of the ``k`` smallest values."""
    s = ranked_sample(sample)
    return PLCurve(_cumulative(s.sorted_values, s.total))


def dual_lorenz_curve(sample: RankedSample | ArrayLike) -> PLCurve:
    """Dual Lorenz curve: knot ``k`` holds the sum of the ``k`` largest values."""
    s = ranked_sample(sample)
    return PLCurve(_cumulative(s.sorted_values[::-1], s.total))


def concordance_curve(sample: RankedSample | ArrayLike, scores: ArrayLike) -> PLCurve:
    """Cumulative sums of the response taken in the ascending order of ``scores``.

    Where the partial sums must coincide with the Lorenz or dual Lorenz
    curve (the prefix holds the same multiset of values) the knots are copied
    from that curve, so touching points are exact zeros of the gap rather
    than rounding noise. This matters for ``p < 1``, where ``gap**p``
    magnifies tiny residues.
    """
    s = ranked_sample(sample)
    z = _as_vector(scores, "scores")
    if z.size != s.n:
        raise InputError(f"length mismatch: response has {s.n} entries, scores {z.size}")
    order = np.argsort(z, kind="stable")
    knots = _cumulative(s.values[order], s.total)
    uniq, groups = np.unique(s.values, return_inverse=True)
    g = groups.ravel()[order]
    low = _prefix_matches(g, uniq.size)
    knots[low] = _cumulative(s.sorted_values, s.total)[low]
    high = _prefix_matches(uniq.size - 1 - g, uniq.size)
    knots[high] = _cumulative(s.sorted_values[::-1], s.total)[high]
    return PLCurve(knots)


def _gap_knots(lower: PLCurve, upper: PLCurve) -> np.ndarray:
    if lower.n != upper.n:
        raise InputError(f"curves live on different grids (N={lower.n} vs N={upper.n})")
    d = upper.knots - lower.knots
    scale = max(float(np.max(np.abs(lower.knots))), float(np.max(np.abs(upper.knots))), 1e-300)
    if np.any(d < -1e-12 * scale):
        k = int(np.argmin(d))
        raise InputError(f"upper curve lies below lower curve at knot {k} (gap {d[k]:.3g})")
    return np.clip(d, 0.0, None)


def segment_power_means(gaps: np.ndarray, p: float) -> np.ndarray:
    """Mean of ``d(s)**p`` over each segment of a non-negative linear gap.

    ``gaps`` holds the gap at the ``N+1`` knots; the result has ``N`` entries,
    the exact average of ``(d0 + (d1 - d0) s)**p`` for ``s`` in ``[0, 1]``.
    """
    if not p > 0:
        raise InputError(f"p must be positive, got {p}")
    d0 = gaps[:-1]
    d1 = gaps[1:]
    hi = np.maximum(d0, d1)
    lo = np.minimum(d0, d1)
    out = np.zeros_like(hi)
    pos = hi > 0
    # mean = hi**p * (1 - r**(p+1)) / ((p+1)(1 - r)), r = lo/hi, written with
    # expm1 so that nearly flat segments keep full precision
    with np.errstate(divide="ignore"):
        u = np.log1p((lo[pos] - hi[pos]) / hi[pos])
    ratio = np.ones_like(u)
    flat = u == 0
    nf = ~flat
    ratio[nf] = np.expm1((p + 1) * u[nf]) / (np.expm1(u[nf]) * (p + 1))
    out[pos] = hi[pos] ** p * ratio
    return out


def pl_power_integral(lower: PLCurve, upper: PLCurve, p: float) -> float:
    """Exact value of ``int_0^1 (upper - lower)**p dt`` for ``upper >= lower``.

    The gap is linear and non-negative on every segment, so each segment is
    integrated in closed form; no quadrature is involved.

    Raises
    ------
    InputError
        If ``p <= 0``, the grids differ, or ``upper`` dips below ``lower``
        by more than ``1e-12`` of the curve scale.
    """
    if not p > 0:
        raise InputError(f"p must be positive, got {p}")
    gaps = _gap_knots(lower, upper)
    return float(np.mean(segment_power_means(gaps, p)))


def gini(sample: RankedSample | ArrayLike) -> float:
    """Gini index ``1 - 2 * int_0^1 L(t) dt`` of the normalized Lorenz curve."""
    s = ranked_sample(sample)
    lhat = lorenz_curve(s).knots / s.total
    area = (np.sum(lhat) - 0.5 * (lhat[0] + lhat[-1])) / s.n
    return float(max(1.0 - 2.0 * area, 0.0))


def gini_area(sample: RankedSample | ArrayLike) -> float:
    """Gini index as the area between dual and plain Lorenz curves over ``N * mean``."""
    s = ranked_sample(sample)
    area = pl_power_integral(lorenz_curve(s), dual_lorenz_curve(s), 1.0)
    return area / s.total


def pietra(sample: RankedSample | ArrayLike) -> float:
    """Pietra index: largest gap between the equality line and the normalized Lorenz curve.

    The gap is linear between knots, so the supremum is attained at a knot.
    """
    s = ranked_sample(sample)
    lhat = lorenz_curve(s).knots / s.total
    t = np.arange(s.n + 1) / s.n
    return float(np.max(t - lhat))
