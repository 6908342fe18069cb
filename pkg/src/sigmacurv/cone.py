"""Garding cone membership, rejection sampling and the cone inequalities."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DomainError, SamplingError
from .symfun import LambdaVec, esp_table, sigma, sigma_omit, _values

DEFAULT_MAX_ATTEMPTS = 100_000
DEFAULT_SCALE_RANGE = (1e-2, 1e2)


def in_gamma(lam, k: int) -> bool:
    """True iff sigma_j(lam) > 0 for every 1 <= j <= k."""
    v = _values(lam)
    if k < 1 or k > v.size:
        raise DomainError(f"k={k} outside [1, {v.size}]")
    e = esp_table(v, k)
    return bool(np.all(e[1:] > 0))


def in_gamma_batch(values, k: int) -> np.ndarray:
    e = esp_table(values, k)
    return np.all(e[..., 1:] > 0, axis=-1)


@dataclass(frozen=True)
class ConeSample:
    lam: LambdaVec
    n: int
    k: int
    seed: int | None
    attempts: int

    def __post_init__(self):
        v = self.lam.values
        if not in_gamma(v, self.k):
            raise DomainError("ConeSample outside Gamma_k")
        if np.any(np.diff(v) > 0):
            raise DomainError("ConeSample must be sorted non-increasing")

    @property
    def values(self) -> np.ndarray:
        return self.lam.values


def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=size))


def _candidates(rng, n, size, force_negative_min, scale_range):
    lo, hi = scale_range
    if force_negative_min is not None:
        # lambda_i > |lambda_n| is necessary in Gamma_{n-1}; draw relative to it
        mag = force_negative_min * (1.0 + np.abs(rng.standard_exponential(size)))
        rel = _log_uniform(rng, 1e-3, hi, (size, n - 1))
        lam = np.empty((size, n))
        lam[:, : n - 1] = mag[:, None] * (1.0 + rel)
        lam[:, n - 1] = -mag
    else:
        scale = _log_uniform(rng, lo, hi, size)
        shift = rng.uniform(0.0, 2.0, size)
        lam = scale[:, None] * (rng.standard_normal((size, n)) + shift[:, None])
    return -np.sort(-lam, axis=1)


def sample_gamma_batch(
    n: int,
    k: int,
    count: int,
    rng: np.random.Generator,
    *,
    force_negative_min: float | None = None,
    multiplicity: int | None = None,
    scale_range: tuple[float, float] = DEFAULT_SCALE_RANGE,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[np.ndarray, int]:
    """Draw ``count`` sorted points of Gamma_k; returns ``(array, attempts)``.

    The attempt budget is ``max_attempts`` per requested point.
    """
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    if force_negative_min is not None:
        if k != n - 1:
            raise DomainError("force_negative_min is only supported for k = n - 1")
        if force_negative_min <= 0:
            raise DomainError("force_negative_min must be positive")
    if multiplicity is not None and not 1 <= multiplicity <= n:
        raise DomainError(f"multiplicity {multiplicity} outside [1, {n}]")
    if scale_range[0] <= 0 or scale_range[1] <= scale_range[0]:
        raise DomainError("scale_range must be 0 < lo < hi")
    budget = max_attempts * max(1, count)
    out = np.empty((count, n))
    got = attempts = 0
    while got < count:
        if attempts >= budget:
            raise SamplingError(f"could not fill {count} samples of Gamma_{k}", attempts)
        size = int(min(budget - attempts, max(64, 2 * (count - got))))
        lam = _candidates(rng, n, size, force_negative_min, scale_range)
        attempts += size
        ok = in_gamma_batch(lam, k)
        if multiplicity is not None and multiplicity > 1:
            m = multiplicity
            lam[:, 1:m] = lam[:, :1]
            ok &= in_gamma_batch(lam, k)
            if m < n:
                ok &= lam[:, m - 1] > lam[:, m]
            if force_negative_min is not None:
                ok &= lam[:, -1] < -force_negative_min
        lam = lam[ok][: count - got]
        out[got : got + len(lam)] = lam
        got += len(lam)
    return out, attempts


def sample_gamma(
    n: int,
    k: int,
    *,
    force_negative_min: float | None = None,
    multiplicity: int | None = None,
    scale_range: tuple[float, float] = DEFAULT_SCALE_RANGE,
    seed: int | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> ConeSample:
    """One point of Gamma_k, deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    lam, attempts = sample_gamma_batch(
        n,
        k,
        1,
        rng,
        force_negative_min=force_negative_min,
        multiplicity=multiplicity,
        scale_range=scale_range,
        max_attempts=max_attempts,
    )
    return ConeSample(LambdaVec(lam[0]), n, k, seed, attempts)


@dataclass(frozen=True)
class NegativePartReport:
    worst_ratio: float
    violated: bool


def negative_part_ratio(values, k: int) -> np.ndarray:
    """max_i (-lam_i) k / ((n-k) lam_1) over negative entries; 0 if none.

    ``values`` is sorted non-increasing along the last axis.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    if k == n:
        return np.zeros(v.shape[:-1])
    neg = np.where(v < 0, -v, 0.0).max(axis=-1)
    return neg * k / ((n - k) * v[..., 0])


def negative_part_bound(sample, k: int | None = None) -> NegativePartReport:
    if isinstance(sample, ConeSample):
        v, k = sample.values, sample.k
    else:
        v = _values(sample)
        if k is None:
            raise DomainError("k is required for a raw eigenvalue vector")
    ratio = float(negative_part_ratio(v, k))
    return NegativePartReport(ratio, ratio > 1 + 1e-12)


def cnk_ratio(lam, k: int) -> float:
    """lam_1 sigma_{k-1}(lam|1) / sigma_k(lam), lam sorted non-increasing."""
    v = _values(lam)
    return v[0] * sigma_omit(v, k - 1, [0]) / sigma(v, k)


def cnk_ratio_batch(values, k: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    dropped = v.copy()
    dropped[..., 0] = 0.0
    return v[..., 0] * esp_table(dropped, k - 1)[..., k - 1] / esp_table(v, k)[..., k]


def estimate_Cnk(n: int, k: int, trials: int, seed: int | None = None, **opts) -> float:
    """Empirical minimum of lam_1 sigma_{k-1}(lam|1) / sigma_k(lam) over Gamma_k.

    This is an upper estimate of the optimal constant, not a certified one.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lam, _ = sample_gamma_batch(n, k, trials, rng, **opts)
    return float(cnk_ratio_batch(lam, k).min())


def omitted_positivity(values, k: int) -> np.ndarray:
    """min over subsets S, 1 <= j, j + |S| <= k of sigma_j(lam|S) / scale.

    Scale is sigma_j(|lam| | S), so the result is a relative margin; a
    positive value for every row means the third cone inequality holds.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    worst = np.full(v.shape[:-1], np.inf)
    for s in range(0, k):
        for subset in combinations(range(n), s):
            w = v.copy()
            w[..., list(subset)] = 0.0
            e = esp_table(w, k - s)
            ea = esp_table(np.abs(w), k - s)
            rel = e[..., 1:] / ea[..., 1:]
            worst = np.minimum(worst, rel.min(axis=-1))
    return worst


def is_semi_convex(kappa_field, K0: float) -> bool:
    """True iff every principal curvature at every point is >= -K0."""
    if K0 < 0:
        raise DomainError("K0 must be non-negative")
    rows = [_values(k) for k in kappa_field]
    if not rows:
        raise DomainError("empty curvature field")
    return all(bool(np.all(r >= -K0)) for r in rows)


def write_samples_csv(path, values) -> None:
    v = np.atleast_2d(np.asarray(values, dtype=float))
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"lambda_{i + 1}" for i in range(v.shape[1])])
        for row in v:
            w.writerow([repr(float(x)) for x in row])


def read_samples_csv(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(x) for x in r] for r in rows[1:]])
