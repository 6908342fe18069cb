"""The concavity inequality for F = sigma_{n-1} when lambda_n is very negative.

For lambda in Gamma_{n-1}, sorted with lambda_1 = ... = lambda_m > lambda_{m+1},
and xi with xi_i = 0 for 1 < i <= m, the quantity

    -sum_{p!=q} F^{pp,qq} xi_p xi_q + (sum_i F^{ii} xi_i)^2 / F
        + 2 sum_{i>m} F^{ii} xi_i^2 / (lambda_1 - lambda_i) - F^{11} xi_1^2 / lambda_1

is nonnegative once lambda_n < -K0.  This module evaluates the four terms
directly from sigma values, the split ``lhs = F*I + Omega*II`` with
``Omega = -sigma_n``, the reduced quadratic form ``II = eta^T (D + s s^T) eta``
in ``eta_i = xi_i / lambda_i^2``, and both routes to its determinant.

Indices are 0-based; "the block" means indices ``0 .. m-1``.
"""

from __future__ import annotations

import csv
import time
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConeViolationError, DomainError, SamplingError, SingularityError
from .symfun import LambdaVec, esp_table, _values

GROUPING_RTOL = 1e-8
VIOLATION_RTOL = 1e-9
CHUNK_SIZE = 5000


def k0_threshold(n: int, f_max: float) -> float:
    """K0 = max(1, (f_max / (n-2))^(1/(n-1))).

    With sigma_{n-1} <= f_max and lambda_n < -K0 this makes
    Omega / (lambda_1 F) > 1/(n-2) strictly, so the determinant bracket
    1/2 + (1 - n/2) Omega / (lambda_1 F) is negative.
    """
    if n < 3:
        raise DomainError("the concavity inequality needs n >= 3")
    if not f_max > 0:
        raise DomainError("f_max must be positive")
    return max(1.0, (f_max / (n - 2)) ** (1.0 / (n - 1)))


def detect_multiplicity(sorted_values, rtol: float = GROUPING_RTOL) -> int:
    """Size of the leading group within rtol * max(1, lambda_1) of lambda_1."""
    v = np.asarray(sorted_values, dtype=float)
    tol = rtol * max(1.0, abs(v[0]))
    return int(np.sum(v[0] - v <= tol)) if v.size else 0


@dataclass(frozen=True)
class ConcavitySetup:
    lam: LambdaVec
    m: int
    xi: np.ndarray
    K0: float | None = None

    def __post_init__(self):
        v = self.lam.values
        n = v.size
        xi = np.array(self.xi, dtype=float).reshape(-1)
        if xi.size != n:
            raise DomainError("xi must have the same length as lambda")
        if np.any(np.diff(v) > 0):
            raise DomainError("lambda must be sorted non-increasing")
        if not 1 <= self.m <= n:
            raise DomainError(f"multiplicity {self.m} outside [1, {n}]")
        if np.any(v[: self.m] != v[0]):
            raise DomainError("leading block must be bitwise equal")
        if self.m < n and not v[self.m - 1] > v[self.m]:
            raise DomainError("lambda_m must exceed lambda_{m+1}")
        if np.any(xi[1 : self.m] != 0.0):
            raise DomainError("xi must vanish on indices 1..m-1 of the leading block")
        xi.flags.writeable = False
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.lam.n

    @property
    def hypothesis_holds(self) -> bool:
        """lambda in Gamma_{n-1} and lambda_n < -K0 (False when K0 is unset)."""
        v = self.lam.values
        e = esp_table(v, v.size - 1)
        return self.K0 is not None and bool(np.all(e[1:] > 0)) and v[-1] < -self.K0

    @classmethod
    def from_values(cls, lam, xi, K0=None, rtol: float = GROUPING_RTOL):
        """Sort, group the leading block, snap it to lambda_1 and zero xi on it."""
        v = np.asarray(_values(lam), dtype=float)
        xi = np.asarray(xi, dtype=float)
        perm = np.argsort(-v, kind="stable")
        v, xi = v[perm].copy(), xi[perm].copy()
        m = detect_multiplicity(v, rtol)
        v[1:m] = v[0]
        xi[1:m] = 0.0
        return cls(LambdaVec(v), m, xi, K0)


class Terms(NamedTuple):
    neg_hess: np.ndarray
    square: np.ndarray
    gap: np.ndarray
    first: np.ndarray


def _derivative_tables(lam):
    """F, Omega, F^{ii} and F^{ii,jj} for a (B, n) stack."""
    n = lam.shape[-1]
    e = esp_table(lam, n)
    F, Omega = e[..., n - 1], -e[..., n]
    Fi = np.empty_like(lam)
    Fij = np.zeros(lam.shape + (n,))
    for p in range(n):
        w = lam.copy()
        w[..., p] = 0.0
        Fi[..., p] = esp_table(w, n - 2)[..., n - 2]
        for q in range(p + 1, n):
            w2 = w.copy()
            w2[..., q] = 0.0
            Fij[..., p, q] = Fij[..., q, p] = esp_table(w2, n - 3)[..., n - 3]
    return F, Omega, Fi, Fij


def lhs_terms_batch(lam, xi, m: int):
    """The four left-hand terms, each from sigma values only."""
    lam = np.asarray(lam, dtype=float)
    xi = np.asarray(xi, dtype=float)
    F, Omega, Fi, Fij = _derivative_tables(lam)
    neg_hess = -np.einsum("...p,...pq,...q->...", xi, Fij, xi)
    square = np.sum(Fi * xi, axis=-1) ** 2 / F
    lam1 = lam[..., :1]
    gap = 2.0 * np.sum(Fi[..., m:] * xi[..., m:] ** 2 / (lam1 - lam[..., m:]), axis=-1)
    first = -Fi[..., 0] * xi[..., 0] ** 2 / lam[..., 0]
    return F, Omega, Fi, Terms(neg_hess, square, gap, first)


def split_batch(lam, xi, m: int, F, Omega):
    """I and II of the split lhs = F*I + Omega*II."""
    lam1 = lam[..., :1]
    tail = xi[..., m:] ** 2 / (lam1 - lam[..., m:])
    I = (
        np.sum(xi**2 / lam**2, axis=-1)
        + 2.0 * np.sum(tail / lam[..., m:], axis=-1)
        - xi[..., 0] ** 2 / lam[..., 0] ** 2
    )
    II = (
        (Omega / F) * np.sum(xi / lam**2, axis=-1) ** 2
        + np.sum(2.0 * xi**2 / lam**3, axis=-1)
        + 2.0 * np.sum(tail / lam[..., m:] ** 2, axis=-1)
        - xi[..., 0] ** 2 / lam[..., 0] ** 3
    )
    return I, II


def reduced_index(n: int, m: int) -> np.ndarray:
    return np.concatenate([[0], np.arange(m, n)])


def quadratic_form_batch(lam, m: int, F, Omega):
    """(a_matrix, D_diag, s_scale) on the reduced index set {0} + {m..n-1}."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    ratio = Omega / F
    if np.any(ratio < 0):
        raise ConeViolationError("Omega / F < 0: lambda is not in the required cone region")
    l1 = lam[..., 0]
    rest = lam[..., m:]
    D = np.concatenate([l1[..., None], 2 * l1[..., None] * rest / (l1[..., None] - rest)], axis=-1)
    s = np.sqrt(ratio)
    # coefficients of II read directly off its expansion in eta
    idx = reduced_index(n, m)
    lr = lam[..., idx]
    diag = 2 * lr
    diag[..., 0] -= l1
    diag[..., 1:] += 2 * rest**2 / (l1[..., None] - rest)
    d = idx.size
    a = np.broadcast_to(ratio[..., None, None], lam.shape[:-1] + (d, d)).copy()
    a[..., np.arange(d), np.arange(d)] += diag
    return a, D, s


class DetRoutes(NamedTuple):
    direct: np.ndarray
    closed: np.ndarray
    lemma: np.ndarray


def _bareiss_det(rows: list[list[int]]) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    M = [list(r) for r in rows]
    d = len(M)
    sign, prev = 1, 1
    for k in range(d - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, d) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        pivot = M[k][k]
        for i in range(k + 1, d):
            for j in range(k + 1, d):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
        prev = pivot
    return sign * M[d - 1][d - 1]


def exact_rank_one_det(D_diag, s) -> float:
    """det(diag(D) + s s^T) for float inputs, computed without rounding.

    Every float is a dyadic rational, so the matrix is scaled to integers
    and eliminated exactly; only the final conversion rounds.
    """
    D = [Fraction(float(x)) for x in np.asarray(D_diag).reshape(-1)]
    sv = [Fraction(float(x)) for x in np.broadcast_to(s, (len(D),))]
    entries = [[sv[i] * sv[j] + (D[i] if i == j else 0) for j in range(len(D))] for i in range(len(D))]
    scale = max(e.denominator for row in entries for e in row)
    ints = [[e.numerator * (scale // e.denominator) for e in row] for row in entries]
    return float(Fraction(_bareiss_det(ints), scale ** len(D)))


def det_rank_one(D_diag, s_scale, n: int, lam1, F, Omega, *, exact: bool = True) -> DetRoutes:
    """det(D + s s^T) by dense elimination, by the closed bracket, and by the lemma.

    ``direct`` eliminates the dense matrix; with ``exact=True`` (default) in
    exact integer arithmetic, otherwise by floating LU with partial
    pivoting.  The dense matrix is ill-conditioned once Omega/F is large
    (one eigenvalue ~ Omega/F), and floating LU then loses ~ eps * cond.
    ``closed`` is det(D) (1/2 + (1 - n/2) Omega / (lambda_1 F)), valid when
    s_k^2 = Omega / F for every k; ``lemma`` is det(D)(1 + sum s_k^2 / d_k),
    valid for any D and s.
    """
    D = np.asarray(D_diag, dtype=float)
    if np.any(D == 0):
        raise SingularityError("zero diagonal entry in D")
    s = np.asarray(s_scale, dtype=float)
    if s.ndim < D.ndim:
        s = s[..., None]
    s = np.broadcast_to(s, D.shape)
    if exact:
        flatD, flats = D.reshape(-1, D.shape[-1]), s.reshape(-1, D.shape[-1])
        direct = np.array([exact_rank_one_det(a, b) for a, b in zip(flatD, flats)]).reshape(D.shape[:-1])
    else:
        A = np.zeros(D.shape + (D.shape[-1],))
        A[..., np.arange(D.shape[-1]), np.arange(D.shape[-1])] = D
        A += s[..., :, None] * s[..., None, :]
        direct = np.linalg.det(A)
    detD = np.prod(D, axis=-1)
    closed = detD * (0.5 + (1.0 - n / 2.0) * np.asarray(Omega) / (np.asarray(lam1) * np.asarray(F)))
    lemma = detD * (1.0 + np.sum(s**2 / D, axis=-1))
    return DetRoutes(direct, closed, lemma)


@dataclass
class ConcavityReport:
    F: float
    Omega: float
    term_neg_hess: float
    term_square: float
    term_gap: float
    term_first: float
    lhs: float
    I: float = float("nan")
    II: float = float("nan")
    eta: np.ndarray | None = None
    a_matrix: np.ndarray | None = None
    D_diag: np.ndarray | None = None
    s_scale: float = float("nan")
    det_direct: float = float("nan")
    det_closed: float = float("nan")
    min_eigenvalue: float = float("nan")

    @property
    def terms(self) -> tuple[float, float, float, float]:
        return (self.term_neg_hess, self.term_square, self.term_gap, self.term_first)

    @property
    def magnitude(self) -> float:
        return float(sum(abs(t) for t in self.terms))

    @property
    def decomposition_error(self) -> float:
        fi, oii = self.F * self.I, self.Omega * self.II
        return abs(self.lhs - (fi + oii)) / (abs(fi) + abs(oii) + abs(self.lhs))

    @property
    def det_error(self) -> float:
        return abs(self.det_direct - self.det_closed) / max(abs(self.det_direct), abs(self.det_closed))


def _check_setup(setup: ConcavitySetup):
    v, xi = setup.lam.values, setup.xi
    n = v.size
    if n < 3:
        raise DomainError("the concavity inequality needs n >= 3")
    if not esp_table(v, n - 1)[n - 1] > 0:
        raise ConeViolationError("sigma_{n-1}(lambda) <= 0")
    if v[0] == 0:
        raise SingularityError("lambda_1 = 0")


def lhs(setup: ConcavitySetup) -> ConcavityReport:
    """Evaluate the four terms and their sum."""
    _check_setup(setup)
    v, xi = setup.lam.values[None], setup.xi[None]
    F, Omega, _, t = lhs_terms_batch(v, xi, setup.m)
    terms = [float(x[0]) for x in t]
    return ConcavityReport(float(F[0]), float(Omega[0]), *terms, lhs=sum(terms))


def decompose(setup: ConcavitySetup) -> tuple[float, float, float, float]:
    """(F, Omega, I, II)."""
    _check_setup(setup)
    v, xi = setup.lam.values, setup.xi
    if np.any(v == 0):
        raise SingularityError("the split divides by every lambda_i")
    e = esp_table(v, v.size)
    F, Omega = e[-2], -e[-1]
    I, II = split_batch(v[None], xi[None], setup.m, np.array([F]), np.array([Omega]))
    return float(F), float(Omega), float(I[0]), float(II[0])


def quadratic_form(setup: ConcavitySetup):
    """(a_matrix, D_diag, s_scale) of II on the reduced index set."""
    _check_setup(setup)
    v = setup.lam.values
    if not v[-1] < 0:
        raise DomainError("quadratic form reduction needs lambda_n < 0")
    e = esp_table(v, v.size)
    a, D, s = quadratic_form_batch(v[None], setup.m, np.array([e[-2]]), np.array([-e[-1]]))
    return a[0], D[0], float(s[0])


def full_report(setup: ConcavitySetup) -> ConcavityReport:
    """lhs, split, quadratic form, determinants and spectrum in one report."""
    rep = lhs(setup)
    _, _, rep.I, rep.II = decompose(setup)
    v = setup.lam.values
    rep.eta = setup.xi / v**2
    if v[-1] < 0:
        rep.a_matrix, rep.D_diag, rep.s_scale = quadratic_form(setup)
        routes = det_rank_one(rep.D_diag, rep.s_scale, setup.n, v[0], rep.F, rep.Omega)
        rep.det_direct, rep.det_closed = float(routes.direct), float(routes.closed)
        A = np.diag(rep.D_diag) + rep.s_scale**2
        rep.min_eigenvalue = float(np.linalg.eigvalsh(A)[0])
    return rep


# -- campaign -----------------------------------------------------------------


def evaluate_batch(lam, xi, m: int) -> dict[str, np.ndarray]:
    """Every per-trial quantity the campaign records, for one multiplicity."""
    n = lam.shape[-1]
    F, Omega, _, t = lhs_terms_batch(lam, xi, m)
    total = t.neg_hess + t.square + t.gap + t.first
    mag = np.abs(t.neg_hess) + np.abs(t.square) + np.abs(t.gap) + np.abs(t.first)
    I, II = split_batch(lam, xi, m, F, Omega)
    fi, oii = F * I, Omega * II
    denom = np.abs(fi) + np.abs(oii) + np.abs(total)
    dec = np.divide(np.abs(total - (fi + oii)), denom, out=np.zeros_like(denom), where=denom > 0)
    _, D, s = quadratic_form_batch(lam, m, F, Omega)
    routes = det_rank_one(D, s, n, lam[..., 0], F, Omega)
    det_err = np.abs(routes.direct - routes.closed) / np.maximum(np.abs(routes.direct), np.abs(routes.closed))
    A = np.zeros(D.shape + (D.shape[-1],))
    d = D.shape[-1]
    A[..., np.arange(d), np.arange(d)] = D
    A += (s**2)[..., None, None]
    eig = np.linalg.eigvalsh(A)
    return {
        "F": F,
        "Omega": Omega,
        "neg_hess": t.neg_hess,
        "square": t.square,
        "gap": t.gap,
        "first": t.first,
        "lhs": total,
        "magnitude": mag,
        "I": I,
        "II": II,
        "decomposition_error": dec,
        "det_direct": routes.direct,
        "det_closed": routes.closed,
        "det_error": det_err,
        "detD": np.prod(D, axis=-1),
        "min_eig": eig[..., 0],
        "max_eig": eig[..., -1],
    }


@dataclass
class CampaignReport:
    n: int
    f_max: float
    k0: float
    trials: int
    seed: int
    region: str
    multiplicity_schedule: list[int]
    violations: list[dict] = field(default_factory=list)
    hypothesis_violated: list[dict] = field(default_factory=list)
    min_lhs_relative: float | None = None
    min_lhs: float | None = None
    min_eig: float | None = None
    min_eig_relative: float | None = None
    min_I: float | None = None
    max_detD: float | None = None
    max_decomposition_error: float | None = None
    max_det_error: float | None = None
    elapsed_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "f_max": self.f_max,
            "k0": self.k0,
            "trials": self.trials,
            "seed": self.seed,
            "region": self.region,
            "multiplicity_schedule": list(self.multiplicity_schedule),
            "violations": self.violations,
            "n_violations": len(self.violations),
            "hypothesis_violated": self.hypothesis_violated,
            "min_lhs_relative": self.min_lhs_relative,
            "min_lhs": self.min_lhs,
            "min_eig": self.min_eig,
            "min_eig_relative": self.min_eig_relative,
            "min_I": self.min_I,
            "max_detD": self.max_detD,
            "max_decomposition_error": self.max_decomposition_error,
            "max_det_error": self.max_det_error,
            "elapsed_seconds": self.elapsed_seconds,
        }


def _region_samples(rng, n, m, count, f_max, K0, region, hi=1e2, max_attempts=100_000):
    """Gamma_{n-1} points with sigma_{n-1} <= f_max and lambda_n in the region.

    sigma_{n-1} is affine in lambda_n, sigma_{n-1} = P + lambda_n Q with
    P = prod(lambda') and Q = sigma_{n-2}(lambda') > 0 for the leading
    entries lambda'.  So we draw lambda' > 0, draw the target value of
    sigma_{n-1} uniformly in its admissible interval, and solve for lambda_n.
    Along the segment from lambda_n = 0 sigma_{n-1} stays positive, which
    keeps the point in the component Gamma_{n-1}.
    """
    out = np.empty((count, n))
    got = attempts = 0
    while got < count:
        if attempts > max_attempts * count:
            raise SamplingError("could not place samples in the requested region", attempts)
        size = max(64, 2 * (count - got))
        attempts += size
        lead = K0 * (1.0 + np.exp(rng.uniform(np.log(1e-3), np.log(hi), (size, n - 1))))
        lead = -np.sort(-lead, axis=1)
        lead[:, 1:m] = lead[:, :1]
        e = esp_table(lead, n - 1)
        P, Q = e[:, n - 1], e[:, n - 2]
        u = rng.random(size)
        if region == "hypothesis":
            lo, top = np.zeros(size), np.minimum(f_max, P - K0 * Q)
        else:
            lo, top = np.maximum(0.0, P - K0 * Q), np.minimum(f_max, P)
        F = lo + (top - lo) * u
        lam = np.empty((size, n))
        lam[:, : n - 1] = lead
        lam[:, n - 1] = (F - P) / Q
        ok = (top > lo) & (F > lo) & (F < top)
        if m < n:
            ok &= lam[:, m - 1] > lam[:, m]
        holds = in_hypothesis_region(lam, f_max, K0)
        if region == "hypothesis":
            ok &= holds
        else:
            ok &= in_gamma_rows(lam) & (lam[:, -1] > -K0) & (lam[:, -1] < 0)
        lam = lam[ok][: count - got]
        out[got : got + len(lam)] = lam
        got += len(lam)
    return out, attempts


def in_gamma_rows(lam) -> np.ndarray:
    n = lam.shape[-1]
    return np.all(esp_table(lam, n - 1)[..., 1:] > 0, axis=-1)


def in_hypothesis_region(lam, f_max, K0) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = esp_table(lam, n - 1)
    return np.all(e[..., 1:] > 0, axis=-1) & (e[..., n - 1] <= f_max) & (lam[..., -1] < -K0)


def _run_chunk(args):
    n, f_max, K0, seed, chunk, start, count, schedule, region, max_attempts = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, chunk]))
    L = len(schedule)
    trial_ids = np.arange(start, start + count)
    rows = []
    stats = []
    for pos, m in enumerate(schedule):
        ids = trial_ids[trial_ids % L == pos]
        if ids.size == 0:
            continue
        lam, _ = _region_samples(rng, n, m, ids.size, f_max, K0, region, max_attempts=max_attempts)
        xi = rng.standard_normal(lam.shape)
        xi[:, 1:m] = 0.0
        r = evaluate_batch(lam, xi, m)
        holds = in_hypothesis_region(lam, f_max, K0)
        rel = r["lhs"] / r["magnitude"]
        stats.append(
            (
                float(rel.min()),
                float(r["lhs"].min()),
                float(r["min_eig"].min()),
                float((r["min_eig"] / r["max_eig"]).min()),
                float(r["I"].min()),
                float(r["detD"].max()),
                float(r["decomposition_error"].max()),
                float(r["det_error"].max()),
            )
        )
        bad = np.flatnonzero(r["lhs"] < -VIOLATION_RTOL * r["magnitude"])
        for j in bad:
            rows.append(
                {
                    "trial": int(ids[j]),
                    "label": "counterexample" if holds[j] else "hypothesis-violated",
                    "m": int(m),
                    "lambda": lam[j].tolist(),
                    "xi": xi[j].tolist(),
                    "terms": [float(r[k][j]) for k in ("neg_hess", "square", "gap", "first")],
                    "lhs": float(r["lhs"][j]),
                    "magnitude": float(r["magnitude"][j]),
                }
            )
    return rows, stats


def verify(
    n: int,
    f_max: float,
    trials: int,
    multiplicity_schedule: Sequence[int] | None = None,
    seed: int = 0,
    *,
    region: str = "hypothesis",
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
    max_attempts: int = 100_000,
) -> CampaignReport:
    """Monte Carlo campaign over the hypothesis region.

    ``region="below-threshold"`` samples lambda_n in (-K0, 0) instead; any
    negative lhs found there is labelled "hypothesis-violated" and carries
    no claim.  Trials are split into fixed chunks with seeds derived from
    ``(seed, chunk_index)``, so the result does not depend on ``workers``.
    """
    if region not in ("hypothesis", "below-threshold"):
        raise DomainError(f"unknown region {region!r}")
    K0 = k0_threshold(n, f_max)
    if trials < 0:
        raise DomainError("trials must be non-negative")
    schedule = sorted(set(multiplicity_schedule or (1, 2, n - 1)))
    if any(not 1 <= m <= n - 1 for m in schedule):
        raise DomainError("multiplicities must lie in [1, n-1]")
    report = CampaignReport(n, f_max, K0, trials, seed, region, schedule)
    t0 = time.perf_counter()
    jobs = [
        (n, f_max, K0, seed, c, start, min(chunk_size, trials - start), schedule, region, max_attempts)
        for c, start in enumerate(range(0, trials, chunk_size))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    rows = sorted((r for res in results for r in res[0]), key=lambda r: r["trial"])
    report.violations = [r for r in rows if r["label"] == "counterexample"]
    report.hypothesis_violated = [r for r in rows if r["label"] != "counterexample"]
    stats = [s for res in results for s in res[1]]
    if stats:
        cols = list(zip(*stats))
        report.min_lhs_relative = min(cols[0])
        report.min_lhs = min(cols[1])
        report.min_eig = min(cols[2])
        report.min_eig_relative = min(cols[3])
        report.min_I = min(cols[4])
        report.max_detD = max(cols[5])
        report.max_decomposition_error = max(cols[6])
        report.max_det_error = max(cols[7])
    report.elapsed_seconds = time.perf_counter() - t0
    return report


def write_counterexamples_csv(path, rows: list[dict]) -> None:
    path = Path(path)
    n = len(rows[0]["lambda"]) if rows else 0
    header = (
        ["trial", "label", "m"]
        + [f"lambda_{i + 1}" for i in range(n)]
        + [f"xi_{i + 1}" for i in range(n)]
        + ["term_neg_hess", "term_square", "term_gap", "term_first", "lhs"]
    )
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(
                [r["trial"], r["label"], r["m"]]
                + [repr(x) for x in r["lambda"]]
                + [repr(x) for x in r["xi"]]
                + [repr(x) for x in r["terms"]]
                + [repr(r["lhs"])]
            )
