"""Closed-form energies and large-k analyses.

Equilateral stars and two disjoint intervals admit exact minimal-energy
formulas; this module evaluates them, tracks the normalized remainder
c_k = (E_k - pi^2 k^2 / L^2) / k, clusters its tail into limit-point
estimates, fits Weyl coefficients, and scans for non-monotonicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

__all__ = [
    "CkPoint",
    "LimitSetEstimate",
    "StarLimitSets",
    "star_dirichlet_energy",
    "star_neumann_energy",
    "star_limit_sets",
    "two_interval_neumann_energy",
    "two_interval_dirichlet_energy",
    "rotation_orbit",
    "ck_sequence",
    "limit_points",
    "weyl_fit",
    "lmax_tracking",
    "monotonicity_scan",
]

PI2 = math.pi**2


@dataclass(frozen=True)
class CkPoint:
    k: int
    energy: float
    c_k: float


@dataclass(frozen=True)
class LimitSetEstimate:
    points: tuple[tuple[float, int], ...]  # (cluster value, tail support count)
    predicted: tuple[float, ...] | None
    match: bool | None

    def values(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.points)


@dataclass(frozen=True)
class StarLimitSets:
    """Predicted c_k limit sets of the equilateral m-star.

    ``points`` is the catalog prediction; ``attained`` is the accumulation
    set computed directly from the closed-form energies.  They coincide
    except in the natural problem with even m, where the catalog set lists
    one extra point (2 pi^2 (m/2) / L^2) that the energy sequence never
    approaches; ``discrepancy`` flags that case.
    """

    points: tuple[float, ...]
    attained: tuple[float, ...]
    discrepancy: bool


def _split_index(m: int, k: int) -> tuple[int, int]:
    if k < 1:
        raise ValidationError("k must be >= 1")
    j, r = divmod(k - 1, m)
    return j, r + 1


def star_dirichlet_energy(m: int, total_length: float, k: int) -> float:
    """Minimal Dirichlet k-partition energy of the equilateral m-star
    (p = inf): pi^2 m^2 j^2 / L^2 when k = jm + 1, else
    pi^2 m^2 (j + 1/2)^2 / L^2 with k = jm + r, r in {2..m}."""
    if m < 3:
        raise ValidationError("star closed forms need m >= 3")
    L = float(total_length)
    j, r = _split_index(m, k)
    if r == 1:
        return PI2 * m * m * j * j / (L * L)
    return PI2 * m * m * (j + 0.5) ** 2 / (L * L)


def star_neumann_energy(m: int, total_length: float, k: int) -> float:
    """Minimal natural (rigid) k-partition energy of the equilateral
    m-star (p = inf): pi^2 m^2 (j + 1/2)^2 / L^2 for r <= floor(m/2),
    pi^2 m^2 (j + 1)^2 / L^2 for larger r."""
    if m < 3:
        raise ValidationError("star closed forms need m >= 3")
    L = float(total_length)
    j, r = _split_index(m, k)
    if r <= m // 2:
        return PI2 * m * m * (j + 0.5) ** 2 / (L * L)
    return PI2 * m * m * (j + 1.0) ** 2 / (L * L)


def star_limit_sets(m: int, total_length: float, problem: str) -> StarLimitSets:
    if m < 3:
        raise ValidationError("star limit sets need m >= 3")
    L2 = float(total_length) ** 2
    if problem == "dirichlet":
        pts = {-2.0 * PI2 / L2}
        pts |= {2.0 * PI2 * (s - 1.0 - m / 2.0) / L2 for s in range(1, m)}
        attained = {-2.0 * PI2 / L2}
        attained |= {2.0 * PI2 * (m / 2.0 - r) / L2 for r in range(2, m + 1)}
        return StarLimitSets(
            tuple(sorted(pts)), tuple(sorted(attained)), discrepancy=False
        )
    if problem != "natural":
        raise ValidationError(f"unknown problem {problem!r}")
    attained = {2.0 * PI2 * (m / 2.0 - r) / L2 for r in range(1, m // 2 + 1)}
    attained |= {2.0 * PI2 * (m - r) / L2 for r in range(m // 2 + 1, m + 1)}
    if m % 2 == 0:
        pts = {0.0} | {2.0 * PI2 * s / L2 for s in range(1, m // 2 + 1)}
        return StarLimitSets(tuple(sorted(pts)), tuple(sorted(attained)), discrepancy=True)
    half = (m - 1) // 2
    pts = {0.0}
    pts |= {2.0 * PI2 * s / L2 for s in range(1, half + 1)}
    pts |= {2.0 * PI2 * (t - 0.5) / L2 for t in range(1, half + 1)}
    return StarLimitSets(tuple(sorted(pts)), tuple(sorted(attained)), discrepancy=False)


# ---------------------------------------------------------------------------
# Two disjoint intervals [0,1] and [0,a]
# ---------------------------------------------------------------------------


def _ceil_scaled(a, k: int, numerator: str) -> int:
    """ceil(a k / (a+1)) or ceil(k / (a+1)); exact for Fraction/int a,
    with an integer snap for float a."""
    if isinstance(a, (int, Fraction)):
        af = Fraction(a)
        x = af * k / (af + 1) if numerator == "a" else Fraction(k) / (af + 1)
        return int(math.ceil(x))
    x = a * k / (a + 1.0) if numerator == "a" else k / (a + 1.0)
    snapped = round(x)
    if abs(x - snapped) <= 1e-11 * max(1.0, abs(x)):
        return int(snapped)
    return int(math.ceil(x))


def _two_interval_term(a, i: int, k: int) -> float:
    af = float(a)
    return max(PI2 * i * i, PI2 * (k - i) * (k - i) / (af * af))


def two_interval_neumann_energy(a, k: int) -> float:
    """Minimal natural k-partition energy (p = inf) of [0,1] u [0,a]:
    min over i of max(pi^2 i^2, pi^2 (k-i)^2 / a^2), evaluated at the two
    candidate allocations around k/(a+1)."""
    if not float(a) > 0:
        raise ValidationError("a must be positive")
    if k < 2:
        raise ValidationError("two intervals need k >= 2")
    c2 = _ceil_scaled(a, k, "one")  # clusters on the unit interval
    c1 = _ceil_scaled(a, k, "a")  # clusters on the length-a interval
    candidates = {min(max(c2, 1), k - 1), min(max(k - c1, 1), k - 1)}
    return min(_two_interval_term(a, i, k) for i in candidates)


def two_interval_neumann_energy_bruteforce(a, k: int) -> float:
    """Independent enumeration over every split; the anchor oracle for the
    closed form above."""
    if k < 2:
        raise ValidationError("two intervals need k >= 2")
    return min(_two_interval_term(a, i, k) for i in range(1, k))


def two_interval_dirichlet_energy(a, k: int) -> float:
    """Dirichlet minimal energy via the interval shift: each interval
    component absorbs one extra cluster, so the value equals the natural
    energy at k - 2."""
    if k < 4:
        raise ValidationError("Dirichlet two-interval energy needs k >= 4")
    return two_interval_neumann_energy(a, k - 2)


# ---------------------------------------------------------------------------
# Rotation map
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2^27 + 1, Dekker splitting constant


def _two_product(x: float, y: float) -> tuple[float, float]:
    p = x * y
    xs = _SPLITTER * x
    x_hi = xs - (xs - x)
    x_lo = x - x_hi
    ys = _SPLITTER * y
    y_hi = ys - (ys - y)
    y_lo = y - y_hi
    err = ((x_hi * y_hi - p) + x_hi * y_lo + x_lo * y_hi) + x_lo * y_lo
    return p, err


def rotation_orbit(alpha, k: int) -> float:
    """Fractional part of k * alpha in [0, 1).

    Exact for Fraction alpha; for float alpha the product is formed in
    double-double arithmetic so the error stays below 1e-12 up to k = 1e6.
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    if isinstance(alpha, (int, Fraction)):
        x = Fraction(alpha) * k
        return float(x - math.floor(x))
    p, err = _two_product(float(alpha), float(k))
    frac = p - math.floor(p)
    frac += err
    if frac >= 1.0:
        frac -= 1.0
    elif frac < 0.0:
        frac += 1.0
    return frac


# ---------------------------------------------------------------------------
# c_k sequences, limit sets, fits
# ---------------------------------------------------------------------------


def ck_sequence(energy_fn, total_length: float, k_range) -> list[CkPoint]:
    """c_k = (E(k) - pi^2 k^2 / L^2) / k over the given k values."""
    L2 = float(total_length) ** 2
    out = []
    for k in k_range:
        e = energy_fn(k)
        out.append(CkPoint(k, e, (e - PI2 * k * k / L2) / k))
    if not out:
        raise ValidationError("empty k range")
    return out


def limit_points(
    seq,
    eps: float | None = None,
    tail_fraction: float = 0.5,
    predicted=None,
    match_tol: float | None = None,
) -> LimitSetEstimate:
    """Cluster the tail of a c_k sequence by eps-merging.

    ``seq`` is a list of CkPoint or bare values; the last ``tail_fraction``
    of it is sorted and split wherever consecutive values differ by more
    than eps (default: 1e-3 of the tail's value range).  When ``predicted``
    is given, ``match`` records whether the clusters and the prediction
    agree within ``match_tol`` (default eps).
    """
    values = [p.c_k if isinstance(p, CkPoint) else float(p) for p in seq]
    if not values:
        raise ValidationError("empty sequence")
    n_tail = max(1, int(math.ceil(len(values) * tail_fraction)))
    tail = sorted(values[-n_tail:])
    if eps is None:
        spread = tail[-1] - tail[0]
        eps = 1e-3 * spread if spread > 0 else 1e-12
    if eps <= 0:
        raise ValidationError("eps must be positive")
    clusters = []
    start = 0
    for i in range(1, len(tail) + 1):
        if i == len(tail) or tail[i] - tail[i - 1] > eps:
            chunk = tail[start:i]
            clusters.append((sum(chunk) / len(chunk), len(chunk)))
            start = i
    match = None
    if predicted is not None:
        tol = eps if match_tol is None else match_tol
        pred = sorted(predicted)
        vals = [v for v, _ in clusters]
        ok = all(any(abs(p - v) <= tol for v in vals) for p in pred)
        ok = ok and all(any(abs(p - v) <= tol for p in pred) for v in vals)
        match = ok
    return LimitSetEstimate(tuple(clusters), tuple(sorted(predicted)) if predicted is not None else None, match)


def weyl_fit(points) -> tuple[float, float, float]:
    """Least squares E ~ A k^2 + B k on the top half of the k range;
    returns (A, B, rms residual)."""
    pts = [(int(k), float(e)) for k, e in points]
    if len(pts) < 10:
        raise ValidationError("weyl_fit needs at least 10 points")
    ks = np.array([k for k, _ in pts], dtype=float)
    es = np.array([e for _, e in pts])
    cut = 0.5 * (ks.min() + ks.max())
    mask = ks >= cut
    if mask.sum() < 2:
        raise ValidationError("degenerate fit window")
    design = np.stack([ks[mask] ** 2, ks[mask]], axis=1)
    coef, *_ = np.linalg.lstsq(design, es[mask], rcond=None)
    resid = design @ coef - es[mask]
    rms = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), float(coef[1]), rms


def lmax_tracking(results) -> tuple[list[tuple[int, float, float]], bool]:
    """Per-k largest cluster length and the product k * L_max.

    ``results`` holds (k, OptimizeResult) pairs, (k, L_max) pairs, or
    OptimizeResult objects with .partition.  Returns the rows and a flag
    set when the product's tail grows monotonically by more than 20% over
    the last half of the range (suggesting L_max is not O(1/k))."""
    rows = []
    for item in results:
        if isinstance(item, tuple) and isinstance(item[1], (int, float)):
            k, lmax = item
        elif isinstance(item, tuple):
            k, res = item
            lmax = max(c.total_length for c in res.partition.clusters)
        else:
            res = item
            k = res.partition.k
            lmax = max(c.total_length for c in res.partition.clusters)
        rows.append((int(k), float(lmax), int(k) * float(lmax)))
    rows.sort()
    if len(rows) < 4:
        return rows, False
    tail = [p for _, _, p in rows[len(rows) // 2 :]]
    monotone_up = all(b > a for a, b in zip(tail[:-1], tail[1:]))
    grew = tail[-1] > 1.2 * tail[0]
    return rows, bool(monotone_up and grew)


def monotonicity_scan(energy_fn, k_range, tol: float = 1e-9) -> list[tuple[int, float, float]]:
    """k values where the minimal energy strictly decreases from k to k+1."""
    ks = sorted(set(int(k) for k in k_range))
    out = []
    prev_k = None
    prev_e = None
    for k in ks:
        e = energy_fn(k)
        if prev_k is not None and k == prev_k + 1 and e < prev_e - tol:
            out.append((prev_k, prev_e, e))
        prev_k, prev_e = k, e
    return out
