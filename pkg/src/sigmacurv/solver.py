"""Damped Newton solver for sigma_k(kappa) = f(X, nu) on radial graphs.

The unknown is rho at the grid nodes.  The Jacobian is a forward-difference
Jacobian whose columns are grouped by a greedy colouring of the stencil
pattern: columns that never feed the same residual entry are perturbed
together, so one residual evaluation fills a whole colour class.  The result
is identical to column-by-column differencing up to rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    AdmissibilityError,
    ConeViolationError,
    DomainError,
    NonConvergenceError,
    RHSPositivityError,
)
from .geometry import RadialGraph, SphericalGrid, curvature_sigmas, shape_data
from .symfun import esp_table, sigma_batch

log = logging.getLogger(__name__)

DAMPING_FLOOR = 2.0**-20

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PrescribedRHS:
    """A positive right-hand side f(X, nu), vectorized over nodes.

    ``evaluator`` maps (size, n+1) arrays X and nu to (size,) values.
    ``d_X`` and ``d_nu`` are optional gradient evaluators returning
    (size, n+1); missing ones are replaced by central differences.
    """

    evaluator: Evaluator
    name: str = "custom"
    params: dict = field(default_factory=dict)
    d_X: Evaluator | None = None
    d_nu: Evaluator | None = None

    def __call__(self, X, nu) -> np.ndarray:
        val = np.asarray(self.evaluator(np.asarray(X, float), np.asarray(nu, float)), dtype=float)
        val = np.broadcast_to(val, np.shape(X)[:-1])
        bad = ~(val > 0)
        if np.any(bad):
            node = int(np.flatnonzero(bad.reshape(-1))[0])
            raise RHSPositivityError(f"f <= 0 at node {node} (value {val.reshape(-1)[node]!r})")
        return val

    def gradients(self, X, nu, step: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
        """(d f / d X, d f / d nu), analytic where given, else central differences."""
        X = np.asarray(X, float)
        nu = np.asarray(nu, float)
        gx = self.d_X(X, nu) if self.d_X else _central(lambda x: self(x, nu), X, step)
        gn = self.d_nu(X, nu) if self.d_nu else _central(lambda v: self(X, v), nu, step)
        return gx, gn

    def bounds(self, X, nu, step: float = 1e-4) -> dict:
        """inf f, sup f, a Lipschitz proxy and a C^{1,1} proxy on the sampled bundle.

        The C^{1,1} proxy is the largest second difference of f along the
        coordinate directions of (X, nu); it is a sampled proxy, not a norm.
        """
        X = np.asarray(X, float)
        nu = np.asarray(nu, float)
        f0 = self(X, nu)
        gx, gn = self.gradients(X, nu)
        lip = float(np.max(np.sqrt(np.sum(gx**2, axis=-1) + np.sum(gn**2, axis=-1))))
        second = 0.0
        for which in (0, 1):
            base = (X, nu)[which]
            for c in range(base.shape[-1]):
                e = np.zeros_like(base)
                e[:, c] = step
                plus = self(X + e, nu) if which == 0 else self(X, nu + e)
                minus = self(X - e, nu) if which == 0 else self(X, nu - e)
                second = max(second, float(np.max(np.abs(plus - 2 * f0 + minus))) / step**2)
        return {
            "inf_f": float(f0.min()),
            "sup_f": float(f0.max()),
            "lip_f": lip,
            "f_norm": float(np.max(np.abs(f0))) + lip + second,
        }

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


def _central(fun, base, step):
    out = np.empty_like(base)
    for c in range(base.shape[-1]):
        e = np.zeros_like(base)
        e[:, c] = step
        out[:, c] = (fun(base + e) - fun(base - e)) / (2 * step)
    return out


def constant_rhs(value: float) -> PrescribedRHS:
    if not value > 0:
        raise RHSPositivityError(f"constant right-hand side must be positive, got {value}")
    c = float(value)
    return PrescribedRHS(
        lambda X, nu: np.full(X.shape[:-1], c),
        name="constant",
        params={"value": c},
        d_X=lambda X, nu: np.zeros_like(X),
        d_nu=lambda X, nu: np.zeros_like(nu),
    )


def round_radius(value: float, n: int, k: int) -> float:
    """Radius r of the round sphere with sigma_k = value, i.e. C(n, k) / r^k = value."""
    return (comb(n, k) / value) ** (1.0 / k)


def axis_perturbed_rhs(
    base: float, amplitude: float, n: int, k: int | None = None, power: float | None = None
) -> PrescribedRHS:
    """f = (base + amplitude <nu, e_1>) (r0 / |X|)^power.

    r0 is the round radius for ``base``, so the sphere of radius r0 is the
    unperturbed solution.  The radial factor with power > k supplies the
    barrier behaviour that makes the problem solvable; without it the
    nu-dependent term is obstructed by the Minkowski identity
    int sigma_k nu dA = 0 on closed hypersurfaces.
    """
    k = n - 1 if k is None else k
    power = float(k + 1) if power is None else float(power)
    if not base > 0 or abs(amplitude) >= base:
        raise RHSPositivityError("need base > |amplitude| for a positive right-hand side")
    if power <= k:
        raise DomainError("power must exceed k")
    r0 = round_radius(base, n, k)

    def f(X, nu):
        return (base + amplitude * nu[..., 0]) * (r0 / np.linalg.norm(X, axis=-1)) ** power

    def d_X(X, nu):
        r = np.linalg.norm(X, axis=-1)
        return (-power * f(X, nu) / r**2)[..., None] * X

    def d_nu(X, nu):
        out = np.zeros_like(nu)
        out[..., 0] = amplitude * (r0 / np.linalg.norm(X, axis=-1)) ** power
        return out

    params = {"base": float(base), "amplitude": float(amplitude), "power": power, "r0": r0}
    return PrescribedRHS(f, name="axis-perturbed", params=params, d_X=d_X, d_nu=d_nu)


def parse_rhs(text: str, n: int, k: int | None = None) -> PrescribedRHS:
    """Named built-ins: ``constant:C`` and ``axis-perturbed:BASE,AMP[,POWER]``."""
    name, _, args = text.partition(":")
    try:
        vals = [float(a) for a in args.split(",") if a.strip()]
    except ValueError as exc:
        raise DomainError(f"bad rhs parameters in {text!r}") from exc
    if name == "constant" and len(vals) == 1:
        return constant_rhs(vals[0])
    if name == "axis-perturbed" and len(vals) in (2, 3):
        return axis_perturbed_rhs(vals[0], vals[1], n, k, vals[2] if len(vals) == 3 else None)
    raise DomainError(f"unknown rhs {text!r}; expected constant:C or axis-perturbed:BASE,AMP[,POWER]")


# -- residual -------------------------------------------------------------------


def _pointwise(grid, rho, dr, ddr, rhs, k):
    X, nu, e = curvature_sigmas(grid, rho, k, dr, ddr)
    return e[:, k] - rhs(X, nu), np.all(e[:, 1:] > 0, axis=1)


def _evaluate(grid, rho, rhs, k):
    r, ok = _pointwise(grid, rho, grid.gradient(rho), grid.hessian(rho), rhs, k)
    return r, bool(np.all(ok))


def residual(graph: RadialGraph, rhs: PrescribedRHS, k: int | None = None) -> np.ndarray:
    """Per-node sigma_k(kappa) - f(X, nu); k defaults to n - 1."""
    k = graph.grid.n - 1 if k is None else k
    _check_k(graph.grid.n, k)
    return _evaluate(graph.grid, graph.rho, rhs, k)[0]


def _check_k(n, k):
    if not 1 <= k <= n - 1:
        raise DomainError(f"k={k} outside [1, {n - 1}]")


# -- jacobian ---------------------------------------------------------------------


def _jet_jacobian(grid, rho, rhs, k, step):
    """Chain rule through the jet (rho, D rho, D^2 rho).

    The discrete residual is a pointwise function of the jet and the jet is
    linear in rho, so J = sum_c diag(dR/d jet_c) S_c with S_c the stencil
    matrices.  The pointwise partials are central differences with steps
    scaled to each jet component.
    """
    dr, ddr = grid.gradient(rho), grid.hessian(rho)
    scale = np.maximum(np.abs(rho), 1e-3)

    def partial(kind, a=None, b=None):
        h = step * np.maximum(
            scale, np.abs(rho if kind == 0 else dr[:, a] if kind == 1 else ddr[:, a, b])
        )
        vals = []
        for sign in (1.0, -1.0):
            r, dr_, ddr_ = rho.copy(), dr.copy(), ddr.copy()
            if kind == 0:
                r = r + sign * h
            elif kind == 1:
                dr_[:, a] += sign * h
            else:
                ddr_[:, a, b] += sign * h
                if a != b:
                    ddr_[:, b, a] += sign * h
            vals.append(_pointwise(grid, r, dr_, ddr_, rhs, k)[0])
        return (vals[0] - vals[1]) / (2 * h)

    J = sp.diags(partial(0))
    for a, G in enumerate(grid.gradient_matrices):
        J = J + sp.diags(partial(1, a)) @ G
    for (a, b), H in grid.hessian_matrices.items():
        J = J + sp.diags(partial(2, a, b)) @ H
    return J.tocsc()


@lru_cache(maxsize=8)
def _coloring(n: int, resolution: int):
    """Sparsity pattern (rows, cols) and a greedy distance-2 column colouring."""
    grid = SphericalGrid(n, resolution)
    offs = grid.stencil_offsets()
    rows = np.repeat(np.arange(grid.size), len(offs))
    cols = np.stack([grid.neighbor(o) for o in offs], axis=1).reshape(-1)
    A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(grid.size, grid.size))
    A.sum_duplicates()
    rows, cols = A.nonzero()
    conflict = (A.T @ A).tocsr()
    color = np.full(grid.size, -1)
    for j in range(grid.size):
        nb = conflict.indices[conflict.indptr[j] : conflict.indptr[j + 1]]
        used = set(color[nb][color[nb] >= 0].tolist())
        c = 0
        while c in used:
            c += 1
        color[j] = c
    return rows, cols, color


def _column_jacobian(grid, rho, rhs, k, step):
    """Forward differences in rho, one residual call per colour class."""
    r0 = _evaluate(grid, rho, rhs, k)[0]
    rows, cols, color = _coloring(grid.n, grid.resolution)
    eps = step * np.maximum(1.0, np.abs(rho))
    diff = np.empty((color.max() + 1, grid.size))
    for c in range(color.max() + 1):
        pert = rho + np.where(color == c, eps, 0.0)
        diff[c] = _evaluate(grid, pert, rhs, k)[0] - r0
    vals = diff[color[cols], rows] / eps[cols]
    return sp.csc_matrix((vals, (rows, cols)), shape=(grid.size, grid.size))


def jacobian(grid: SphericalGrid, rho, rhs: PrescribedRHS, k: int, method: str = "jet", step: float | None = None):
    """d residual / d rho as a sparse CSC matrix.

    ``method="jet"`` (default) differentiates through the pointwise jet;
    ``method="columns"`` perturbs rho itself, which loses accuracy near the
    poles where one node's perturbation is amplified by 1 / sin^2.
    """
    rho = np.asarray(rho, dtype=float)
    if method == "jet":
        return _jet_jacobian(grid, rho, rhs, k, 1e-5 if step is None else step)
    if method == "columns":
        return _column_jacobian(grid, rho, rhs, k, 1e-7 if step is None else step)
    raise DomainError(f"unknown jacobian method {method!r}")


# -- solve ------------------------------------------------------------------------


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 30
    damping_floor: float = DAMPING_FLOOR
    k: int | None = None
    jacobian: str = "jet"
    fd_step: float | None = None
    homotopy_steps: int = 0


@dataclass(frozen=True, eq=False)
class SolveResult:
    graph: RadialGraph
    residual_max: float
    iterations: int
    kappa_max: float
    admissible: bool
    estimate_report: dict
    k: int
    history: tuple = ()

    def to_dict(self) -> dict:
        return {
            "residual_max": self.residual_max,
            "iterations": self.iterations,
            "kappa_max": self.kappa_max,
            "admissible": self.admissible,
            "k": self.k,
            "history": list(self.history),
            "estimate_report": self.estimate_report,
        }


def _newton(grid, rho, rhs, k, opts, history):
    r, ok = _evaluate(grid, rho, rhs, k)
    res = float(np.max(np.abs(r)))
    history.append(res)
    it = 0
    while res > opts.tol:
        if it >= opts.max_iter:
            raise NonConvergenceError(
                f"no convergence after {it} iterations (residual {res:.3e})",
                best=RadialGraph(grid, rho),
                history=list(history),
            )
        J = jacobian(grid, rho, rhs, k, opts.jacobian, opts.fd_step)
        delta = spla.spsolve(J, -r)
        t = 1.0
        saw_admissible = False
        while True:
            trial = rho + t * delta
            if np.all(trial > 0):
                r_t, ok_t = _evaluate(grid, trial, rhs, k)
                res_t = float(np.max(np.abs(r_t)))
                saw_admissible |= ok_t
                if ok_t and res_t < res:
                    break
            t *= 0.5
            if t < opts.damping_floor:
                best = RadialGraph(grid, rho)
                if not saw_admissible:
                    raise AdmissibilityError("every damped step leaves the admissible cone", best=best)
                raise NonConvergenceError(
                    f"line search stalled at residual {res:.3e}", best=best, history=list(history)
                )
        rho, r, res = trial, r_t, res_t
        it += 1
        history.append(res)
        log.debug("newton %d: step %.3g residual %.3e", it, t, res)
    return rho, res, it


def solve(rhs: PrescribedRHS, initial: RadialGraph, opts: SolveOptions | None = None) -> SolveResult:
    """Damped Newton from an admissible ``initial`` graph."""
    opts = opts or SolveOptions()
    grid = initial.grid
    k = grid.n - 1 if opts.k is None else opts.k
    _check_k(grid.n, k)
    if not opts.tol > 0:
        raise DomainError("tol must be positive")
    _, ok = _evaluate(grid, initial.rho, rhs, k)
    if not ok:
        raise ConeViolationError(f"initial graph is not admissible (kappa outside Gamma_{k} somewhere)")
    rho = np.array(initial.rho)
    history: list[float] = []
    iterations = 0
    if opts.homotopy_steps > 0:
        X, nu, _ = curvature_sigmas(grid, rho, k)
        c0 = float(np.mean(rhs(X, nu)))
        for s in range(1, opts.homotopy_steps):
            t = s / opts.homotopy_steps
            stage = PrescribedRHS(lambda X, nu, t=t: (1 - t) * c0 + t * rhs(X, nu), name="homotopy")
            rho, _, it = _newton(grid, rho, stage, k, opts, history)
            iterations += it
    rho, res, it = _newton(grid, rho, rhs, k, opts, history)
    iterations += it
    graph = RadialGraph(grid, rho)
    shape = shape_data(graph)
    # fresh, independent evaluation of the final state
    final = shape_data_residual(shape, rhs, k)
    admissible = bool(np.all(_cone_margin(shape.kappa, k) > 0))
    if not admissible:
        raise AdmissibilityError("converged graph is not admissible", best=graph)
    kappa_max = float(np.max(np.abs(shape.kappa)))
    report = _estimate_report(shape, rhs, k, kappa_max)
    return SolveResult(graph, float(np.max(np.abs(final))), iterations, kappa_max, admissible, report, k, tuple(history))


def _cone_margin(kappa, k):
    return esp_table(kappa, k)[:, 1:].min(axis=1)


def shape_data_residual(shape, rhs: PrescribedRHS, k: int) -> np.ndarray:
    """Residual from an eigendecomposition-based geometry pass."""
    return sigma_batch(shape.kappa, k) - rhs(shape.X, shape.nu)


def _estimate_report(shape, rhs, k, kappa_max) -> dict:
    grid = shape.grid
    rho = shape.rho
    dr = grid.gradient(rho)
    metric = np.einsum("pia,pia->pi", grid.dz, grid.dz)
    lip_X = float(np.max(np.sqrt(np.sum(dr**2 / metric, axis=1))))
    out = {
        "n": grid.n,
        "k": k,
        "resolution": grid.resolution,
        "sup_X": float(np.max(np.linalg.norm(shape.X, axis=1))),
        "lip_X": lip_X,
        "kappa_max": kappa_max,
        "rhs": rhs.describe(),
    }
    out.update(rhs.bounds(shape.X, shape.nu))
    return out


def curvature_report(result: SolveResult) -> dict:
    """kappa_max next to the quantities the curvature bound depends on."""
    return dict(result.estimate_report)


def refinement_rows(results) -> list[dict]:
    """One flat row per result, for refinement tables."""
    rows = []
    for res in results:
        rep = res.estimate_report
        rows.append(
            {
                "resolution": rep["resolution"],
                "kappa_max": rep["kappa_max"],
                "sup_X": rep["sup_X"],
                "lip_X": rep["lip_X"],
                "inf_f": rep["inf_f"],
                "f_norm": rep["f_norm"],
                "residual_max": res.residual_max,
                "iterations": res.iterations,
            }
        )
    return rows
