"""Elementary symmetric functions sigma_k and the derivatives of F = sigma_k.

Indices are 0-based throughout.  All evaluation goes through one prefix
recurrence,

    e_k^(m) = e_k^(m-1) + lambda_m * e_{k-1}^(m-1),

run over the last axis, so every function here also accepts a stack of
vectors with shape ``(..., n)``.  Deleted-index values ``sigma_k(lambda|S)``
are obtained by running the same recurrence with the omitted entries left
out; setting an entry to zero is bitwise-equivalent (it only ever adds
``0.0``), which is how the batched variants drop indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError

__all__ = [
    "LambdaVec",
    "SigmaHessian",
    "SigmaDerivatives",
    "esp_table",
    "sigma",
    "sigma_omit",
    "sigma_grad",
    "sigma_hess",
    "sigma_derivatives",
    "sigma_batch",
    "sigma_omit_batch",
]


@dataclass(frozen=True)
class LambdaVec:
    """An ordered vector of eigenvalues / principal curvatures."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 2:
            raise DomainError("LambdaVec needs n >= 2 entries")
        if not np.all(np.isfinite(v)):
            raise DomainError("LambdaVec entries must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def sorted(self) -> tuple[np.ndarray, np.ndarray]:
        """Entries in non-increasing order and the (stable) permutation used."""
        perm = np.argsort(-self.values, kind="stable")
        return self.values[perm], perm

    def omit(self, indices: Iterable[int]) -> np.ndarray:
        keep = np.ones(self.n, dtype=bool)
        keep[list(indices)] = False
        return self.values[keep]

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.values.tolist())


def _values(lam) -> np.ndarray:
    if isinstance(lam, LambdaVec):
        return lam.values
    v = np.asarray(lam, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DomainError("expected a one-dimensional eigenvalue vector")
    return v


def esp_table(values, kmax: int) -> np.ndarray:
    """All of ``e_0 .. e_kmax`` of ``values`` along the last axis.

    Entries with ``k`` larger than the vector length come out as 0, which is
    the convention ``sigma_k = 0`` for ``k > n``.
    """
    v = np.asarray(values, dtype=float)
    e = np.zeros(v.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for m in range(v.shape[-1]):
        lm = v[..., m, None]
        top = min(m + 1, kmax)
        # right-hand side is read before assignment: uses the previous prefix
        e[..., 1 : top + 1] = e[..., 1 : top + 1] + lm * e[..., 0:top]
    return e


def _check_k(k, n, lo=0):
    if not isinstance(k, (int, np.integer)) or k < lo or k > n:
        raise DomainError(f"k={k} outside [{lo}, {n}]")


def sigma(lam, k: int) -> float:
    """k-th elementary symmetric polynomial of ``lam`` (sigma_0 = 1)."""
    v = _values(lam)
    _check_k(k, v.size)
    return float(esp_table(v, k)[k])


def _omit_indices(n, omitted) -> list[int]:
    idx = sorted(set(int(i) for i in omitted))
    if len(idx) != len(omitted):
        raise DomainError("repeated index in omitted set")
    for i in idx:
        if i < 0 or i >= n:
            raise DomainError(f"omitted index {i} outside [0, {n})")
    return idx


def sigma_omit(lam, k: int, omitted: Iterable[int] = ()) -> float:
    """sigma_k of ``lam`` with the entries in ``omitted`` deleted."""
    v = _values(lam)
    omitted = list(omitted)
    idx = _omit_indices(v.size, omitted)
    reduced = np.delete(v, idx)
    _check_k(k, reduced.size)
    return float(esp_table(reduced, k)[k])


def sigma_grad(lam, k: int) -> np.ndarray:
    """Gradient of sigma_k: component p is sigma_{k-1}(lam|p)."""
    v = _values(lam)
    _check_k(k, v.size, lo=1)
    return np.array([sigma_omit(v, k - 1, [p]) for p in range(v.size)])


@dataclass(frozen=True)
class SigmaHessian:
    """Second derivatives of F(A) = sigma_k(lambda(A)) at a diagonal A.

    ``same`` holds the (pp, rr) entries ``sigma_{k-2}(lam|pr)`` and ``swap``
    the (pq, qp) entries ``-sigma_{k-2}(lam|pq)``; both have zero diagonal.
    Every other entry of the four-index tensor is zero.
    """

    k: int
    same: np.ndarray
    swap: np.ndarray

    @property
    def n(self) -> int:
        return self.same.shape[0]

    def entry(self, p: int, q: int, r: int, s: int) -> float:
        if p == q and r == s and p != r:
            return float(self.same[p, r])
        if p == s and q == r and p != q:
            return float(self.swap[p, q])
        return 0.0

    def full(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n, n, n))
        for p in range(n):
            for r in range(n):
                if p != r:
                    out[p, p, r, r] = self.same[p, r]
                    out[p, r, r, p] = self.swap[p, r]
        return out


def sigma_hess(lam, k: int) -> SigmaHessian:
    v = _values(lam)
    n = v.size
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise DomainError(f"sigma_hess needs k >= 2, got {k}")
    _check_k(k, n, lo=2)
    same = np.zeros((n, n))
    for p in range(n):
        for r in range(p + 1, n):
            same[p, r] = same[r, p] = sigma_omit(v, k - 2, [p, r])
    return SigmaHessian(int(k), same, -same.copy())


@dataclass(frozen=True)
class SigmaDerivatives:
    k: int
    grad: np.ndarray
    hess: SigmaHessian | None = field(default=None)


def sigma_derivatives(lam, k: int) -> SigmaDerivatives:
    hess = sigma_hess(lam, k) if k >= 2 else None
    return SigmaDerivatives(int(k), sigma_grad(lam, k), hess)


# -- batched variants ------------------------------------------------------


def sigma_batch(values, k: int) -> np.ndarray:
    """sigma_k over the last axis of a ``(..., n)`` array."""
    v = np.asarray(values, dtype=float)
    _check_k(k, v.shape[-1])
    return esp_table(v, k)[..., k]


def sigma_omit_batch(values, k: int, omitted: Iterable[int]) -> np.ndarray:
    """sigma_k(lam|omitted) over the last axis of a ``(..., n)`` array."""
    v = np.array(values, dtype=float, copy=True)
    idx = _omit_indices(v.shape[-1], list(omitted))
    _check_k(k, v.shape[-1] - len(idx))
    v[..., idx] = 0.0
    return esp_table(v, k)[..., k]
