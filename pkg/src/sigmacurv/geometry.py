"""Star-shaped hypersurfaces as radial graphs X = rho(z) z over a gridded S^n.

Angles are (a_1, ..., a_n): a_1 .. a_{n-1} are polar angles in (0, pi) sampled
at half steps, so no node sits on a pole; a_n is periodic on [0, 2 pi).  The
embedding is

    x_0 = S cos a_n,  x_1 = S sin a_n,  S = sin a_1 ... sin a_{n-1},
    x_{n+1-j} = sin a_1 ... sin a_{j-1} cos a_j      (j = 1 .. n-1),

so for n = 2 this is the usual (sin t cos p, sin t sin p, cos t) and the
polar axis is the last ambient coordinate.  Crossing the pole a_i = 0 (or
pi) lands on (a_i, pi - a_j for i < j < n, a_n + pi), which is how ghost
values are filled; fields differentiated across a pole are therefore always
scalars or ambient-coordinate components, never chart components.

Derivatives of rho are second-order centred differences; derivatives of z
are analytic, so a constant rho reproduces the round sphere to rounding.
The second fundamental form uses the outward normal, h_ij = -<X_ij, nu>.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DomainError

ONE, SIN, COS = 0, 1, 2


def _trig(kind, order, a):
    if kind == ONE:
        return np.ones_like(a) if order == 0 else np.zeros_like(a)
    if kind == SIN:
        return (np.sin(a), np.cos(a), -np.sin(a))[order]
    return (np.cos(a), -np.sin(a), -np.cos(a))[order]


def _factor_table(n: int) -> np.ndarray:
    """kinds[c, axis] of the trig factor of ambient component c."""
    kinds = np.full((n + 1, n), ONE)
    kinds[0, : n - 1] = SIN
    kinds[0, n - 1] = COS
    kinds[1, :] = SIN
    for j in range(1, n):
        c = n + 1 - j
        kinds[c, : j - 1] = SIN
        kinds[c, j - 1] = COS
    return kinds


def embed(angles: np.ndarray, orders: tuple[int, ...] | None = None) -> np.ndarray:
    """Unit-sphere point (or a partial derivative of it) at ``angles`` (..., n).

    ``orders[a]`` is the derivative order in angle a (0, 1 or 2).
    """
    angles = np.asarray(angles, dtype=float)
    n = angles.shape[-1]
    orders = orders or (0,) * n
    kinds = _factor_table(n)
    out = np.ones(angles.shape[:-1] + (n + 1,))
    for c in range(n + 1):
        for a in range(n):
            out[..., c] *= _trig(kinds[c, a], orders[a], angles[..., a])
    return out


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Offset product grid on S^n with periodic last angle and pole reflection."""

    n: int
    resolution: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"unsupported sphere dimension n={self.n}")
        if self.resolution < 8:
            raise DomainError("resolution must be at least 8")
        if self.resolution % 2:
            raise DomainError("resolution must be even (pole reflection shifts by pi)")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.n

    @property
    def size(self) -> int:
        return self.resolution**self.n

    @cached_property
    def steps(self) -> np.ndarray:
        N = self.resolution
        return np.array([np.pi / N] * (self.n - 1) + [2 * np.pi / N])

    @cached_property
    def axes(self) -> list[np.ndarray]:
        N = self.resolution
        polar = (np.arange(N) + 0.5) * np.pi / N
        return [polar] * (self.n - 1) + [np.arange(N) * 2 * np.pi / N]

    @cached_property
    def angles(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    @cached_property
    def z(self) -> np.ndarray:
        return embed(self.angles)

    @cached_property
    def dz(self) -> np.ndarray:
        """(size, n, n+1) first derivatives of the embedding."""
        n = self.n
        return np.stack([embed(self.angles, tuple(int(a == i) for a in range(n))) for i in range(n)], axis=1)

    @cached_property
    def ddz(self) -> np.ndarray:
        """(size, n, n, n+1) second derivatives of the embedding."""
        n = self.n
        out = np.empty((self.size, n, n, n + 1))
        for i in range(n):
            for j in range(n):
                orders = [0] * n
                orders[i] += 1
                orders[j] += 1
                out[:, i, j] = embed(self.angles, tuple(orders))
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the round-sphere measure."""
        w = np.prod(self.steps) * np.ones(self.size)
        for j in range(self.n - 1):
            w *= np.sin(self.angles[:, j]) ** (self.n - 1 - j)
        return w

    def canonical(self, raw: np.ndarray) -> np.ndarray:
        """Flat node index of raw (possibly out-of-range) multi-indices (..., n)."""
        N, n = self.resolution, self.n
        idx = np.array(raw, dtype=np.int64, copy=True)
        for a in range(n - 1):
            for low in (True, False):
                hit = idx[..., a] < 0 if low else idx[..., a] >= N
                if not np.any(hit):
                    continue
                idx[..., a] = np.where(hit, (-1 - idx[..., a]) if low else (2 * N - 1 - idx[..., a]), idx[..., a])
                for j in range(a + 1, n - 1):
                    idx[..., j] = np.where(hit, N - 1 - idx[..., j], idx[..., j])
                idx[..., n - 1] = np.where(hit, idx[..., n - 1] + N // 2, idx[..., n - 1])
        idx[..., n - 1] %= N
        if np.any(idx < 0) or np.any(idx >= N):
            raise DomainError("stencil reaches more than one cell past a pole")
        return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.shape)

    @cached_property
    def multi_index(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.size), self.shape), axis=-1)

    def neighbor(self, offset: tuple[int, ...]) -> np.ndarray:
        return self._neighbors[tuple(offset)]

    @cached_property
    def _neighbors(self) -> dict[tuple[int, ...], np.ndarray]:
        out = {}
        for off in product((-1, 0, 1), repeat=self.n):
            if sum(map(abs, off)) <= 2:
                out[off] = self.canonical(self.multi_index + np.array(off))
        return out

    def stencil_offsets(self) -> list[tuple[int, ...]]:
        return list(self._neighbors)

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Centred first differences; ``f`` is (size, ...) -> (size, n, ...)."""
        f = np.asarray(f)
        out = np.empty((self.size, self.n) + f.shape[1:])
        for a in range(self.n):
            e = tuple(int(b == a) for b in range(self.n))
            m = tuple(-x for x in e)
            out[:, a] = (f[self.neighbor(e)] - f[self.neighbor(m)]) / (2 * self.steps[a])
        return out

    def hessian(self, f: np.ndarray) -> np.ndarray:
        """Centred second differences (pure and mixed): (size, n, n, ...)."""
        f = np.asarray(f)
        n = self.n
        out = np.empty((self.size, n, n) + f.shape[1:])
        for a in range(n):
            ea = np.array([int(b == a) for b in range(n)])
            out[:, a, a] = (f[self.neighbor(tuple(ea))] - 2 * f + f[self.neighbor(tuple(-ea))]) / self.steps[a] ** 2
            for b in range(a + 1, n):
                eb = np.array([int(c == b) for c in range(n)])
                pp = f[self.neighbor(tuple(ea + eb))]
                pm = f[self.neighbor(tuple(ea - eb))]
                mp = f[self.neighbor(tuple(-ea + eb))]
                mm = f[self.neighbor(tuple(-ea - eb))]
                out[:, a, b] = out[:, b, a] = (pp - pm - mp + mm) / (4 * self.steps[a] * self.steps[b])
        return out


    @cached_property
    def gradient_matrices(self) -> list:
        """Sparse matrices G_a with (G_a f)[p] = gradient(f)[p, a]."""
        out = []
        rows = np.arange(self.size)
        for a in range(self.n):
            e = tuple(int(b == a) for b in range(self.n))
            m = tuple(-x for x in e)
            w = np.full(self.size, 1 / (2 * self.steps[a]))
            out.append(
                sp.csr_matrix(
                    (np.concatenate([w, -w]), (np.concatenate([rows, rows]), np.concatenate([self.neighbor(e), self.neighbor(m)]))),
                    shape=(self.size, self.size),
                )
            )
        return out

    @cached_property
    def hessian_matrices(self) -> dict:
        """Sparse matrices H_ab (a <= b) with (H_ab f)[p] = hessian(f)[p, a, b]."""
        rows = np.arange(self.size)
        out = {}
        for a in range(self.n):
            for b in range(a, self.n):
                ea = np.array([int(c == a) for c in range(self.n)])
                eb = np.array([int(c == b) for c in range(self.n)])
                if a == b:
                    terms = [(ea, 1.0), (0 * ea, -2.0), (-ea, 1.0)]
                    scale = 1 / self.steps[a] ** 2
                else:
                    terms = [(ea + eb, 1.0), (ea - eb, -1.0), (-ea + eb, -1.0), (-ea - eb, 1.0)]
                    scale = 1 / (4 * self.steps[a] * self.steps[b])
                r = np.concatenate([rows] * len(terms))
                c = np.concatenate([self.neighbor(tuple(off)) for off, _ in terms])
                v = np.concatenate([np.full(self.size, w * scale) for _, w in terms])
                out[(a, b)] = sp.csr_matrix((v, (r, c)), shape=(self.size, self.size))
        return out


def build_grid(n: int, resolution: int) -> SphericalGrid:
    return SphericalGrid(n, resolution)


@dataclass(frozen=True, eq=False)
class RadialGraph:
    grid: SphericalGrid
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        if rho.size != self.grid.size:
            raise DomainError("rho must have one value per grid node")
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
            raise DomainError("rho must be positive everywhere (strictly star-shaped)")
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_function(cls, grid: SphericalGrid, func: Callable[[np.ndarray], np.ndarray]):
        """rho = func(z) with z the (size, n+1) unit vectors of the grid."""
        return cls(grid, func(grid.z))

    def with_rho(self, rho) -> "RadialGraph":
        return RadialGraph(self.grid, rho)


def sphere(grid: SphericalGrid, radius: float = 1.0, center=None) -> RadialGraph:
    """Round sphere of ``radius`` about ``center`` (which must be inside it)."""
    if center is None:
        return RadialGraph(grid, np.full(grid.size, float(radius)))
    c = np.asarray(center, dtype=float)
    if np.linalg.norm(c) >= radius:
        raise DomainError("center must lie inside the sphere")
    cz = grid.z @ c
    return RadialGraph(grid, cz + np.sqrt(cz**2 - c @ c + radius**2))


def ellipsoid(grid: SphericalGrid, axes) -> RadialGraph:
    """Axis-aligned ellipsoid with semi-axes ``axes`` (ambient order)."""
    a = np.asarray(axes, dtype=float)
    if a.size != grid.n + 1:
        raise DomainError("need one semi-axis per ambient dimension")
    return RadialGraph(grid, 1.0 / np.sqrt(np.sum(grid.z**2 / a**2, axis=-1)))


def ellipsoid_curvatures(points: np.ndarray, axes) -> np.ndarray:
    """Closed-form principal curvatures of an ellipsoid at points on it.

    For the level set of sum x_i^2 / a_i^2 the shape operator is the
    tangential part of diag(2 / a^2) divided by |grad|; returned sorted
    non-increasing, shape (..., n).
    """
    x = np.asarray(points, dtype=float)
    a2 = np.asarray(axes, dtype=float) ** 2
    grad = 2 * x / a2
    gnorm = np.linalg.norm(grad, axis=-1)
    nu = grad / gnorm[..., None]
    d = x.shape[-1]
    P = np.eye(d) - nu[..., :, None] * nu[..., None, :]
    _, vecs = np.linalg.eigh(P)
    T = vecs[..., :, 1:]  # eigenvalue-1 block spans the tangent space
    H = np.diag(2 / a2)
    S = np.swapaxes(T, -1, -2) @ H @ T / gnorm[..., None, None]
    k = np.linalg.eigvalsh(S)
    return k[..., ::-1]


@dataclass(frozen=True, eq=False)
class ShapeData:
    """Per-node geometry of a hypersurface.

    Arrays are indexed by node first.  ``kappa`` is sorted non-increasing and
    ``frame[:, a]`` is the ambient unit principal direction of ``kappa[:, a]``.
    ``shape_op`` is the shape operator written as an ambient (n+1)x(n+1)
    matrix, which can be differentiated across poles component by component.
    Synthetic instances (no grid) only need kappa, u and X.
    """

    X: np.ndarray
    nu: np.ndarray
    g: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    u: np.ndarray
    grid: SphericalGrid | None = None
    rho: np.ndarray | None = None
    dX: np.ndarray | None = None
    ginv_sqrt: np.ndarray | None = None
    frame: np.ndarray | None = None
    frame_coeffs: np.ndarray | None = None
    shape_op: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.kappa.shape[-1]

    @property
    def size(self) -> int:
        return self.kappa.shape[0]

    @classmethod
    def synthetic(cls, kappa, u=1.0, X=None) -> "ShapeData":
        """Point data with g = I and h = diag(kappa); for algebraic checks."""
        k = np.atleast_2d(np.asarray(kappa, dtype=float))
        k = -np.sort(-k, axis=1)
        size, n = k.shape
        if X is None:
            X = np.zeros((size, n + 1))
            X[:, -1] = u
        X = np.atleast_2d(np.asarray(X, dtype=float))
        nu = np.zeros((size, n + 1))
        nu[:, -1] = 1.0
        g = np.broadcast_to(np.eye(n), (size, n, n)).copy()
        h = np.zeros((size, n, n))
        h[:, np.arange(n), np.arange(n)] = k
        return cls(X, nu, g, h, k, np.full(size, float(u)))


def _sym_inv_sqrt(g):
    w, V = np.linalg.eigh(g)
    return (V / np.sqrt(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def _embedding(grid: SphericalGrid, rho: np.ndarray, dr=None, ddr=None):
    """X, its first and second chart derivatives, g, nu and h for a radial graph.

    ``dr`` and ``ddr`` default to the grid differences of ``rho``; passing
    them explicitly evaluates the geometry as a pointwise function of the jet.
    """
    z, dz, ddz = grid.z, grid.dz, grid.ddz
    dr = grid.gradient(rho) if dr is None else dr
    ddr = grid.hessian(rho) if ddr is None else ddr
    X = rho[:, None] * z
    dX = dr[:, :, None] * z[:, None, :] + rho[:, None, None] * dz
    ddX = (
        ddr[..., None] * z[:, None, None, :]
        + dr[:, :, None, None] * dz[:, None, :, :]
        + dr[:, None, :, None] * dz[:, :, None, :]
        + rho[:, None, None, None] * ddz
    )
    g = np.einsum("pia,pja->pij", dX, dX)
    # round-sphere gradient of rho, pushed to the ambient space
    sphere_metric = np.einsum("pia,pia->pi", dz, dz)
    grad_amb = np.einsum("pi,pia->pa", dr / sphere_metric, dz)
    nu = rho[:, None] * z - grad_amb
    nu /= np.linalg.norm(nu, axis=-1, keepdims=True)
    h = -np.einsum("pija,pa->pij", ddX, nu)
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    return X, dX, ddX, dr, g, nu, h


def curvature_sigmas(grid: SphericalGrid, rho, kmax: int, dr=None, ddr=None):
    """X, nu and sigma_0 .. sigma_kmax of the principal curvatures per node.

    Uses Newton's identities on the power sums tr((g^{-1} h)^j), which avoids
    an eigendecomposition; this is the fast path used inside Newton solves.
    """
    rho = np.asarray(rho, dtype=float)
    X, _, _, _, g, nu, h = _embedding(grid, rho, dr, ddr)
    A = np.linalg.solve(g, h)
    e = np.zeros((grid.size, kmax + 1))
    e[:, 0] = 1.0
    power = np.empty((grid.size, kmax + 1))
    Aj = np.broadcast_to(np.eye(grid.n), A.shape)
    for j in range(1, kmax + 1):
        Aj = Aj @ A
        power[:, j] = np.trace(Aj, axis1=1, axis2=2)
        acc = np.zeros(grid.size)
        for i in range(1, j + 1):
            acc += (-1) ** (i - 1) * e[:, j - i] * power[:, i]
        e[:, j] = acc / j
    return X, nu, e


def shape_data(graph: RadialGraph) -> ShapeData:
    """Metric, normal, second fundamental form, curvatures and support function."""
    grid, rho = graph.grid, graph.rho
    if np.any(rho <= 0):
        raise DomainError("rho must be positive")
    X, dX, ddX, dr, g, nu, h = _embedding(grid, rho)
    G = _sym_inv_sqrt(g)
    B = G @ h @ G
    kappa, W = np.linalg.eigh(0.5 * (B + np.swapaxes(B, -1, -2)))
    kappa, W = kappa[:, ::-1], W[:, :, ::-1]
    coeffs = G @ W  # column a: chart components of the a-th principal direction
    frame = np.einsum("pka,pkc->pac", coeffs, dX)
    u = np.einsum("pa,pa->p", X, nu)
    ginv = np.linalg.inv(g)
    A = ginv @ h @ ginv
    shape_op = np.einsum("pij,pia,pjb->pab", A, dX, dX)
    return ShapeData(
        X=X,
        nu=nu,
        g=g,
        h=h,
        kappa=kappa,
        u=u,
        grid=grid,
        rho=rho,
        dX=dX,
        ginv_sqrt=G,
        frame=frame,
        frame_coeffs=coeffs,
        shape_op=shape_op,
        extras={"ddX": ddX, "drho": dr},
    )


@dataclass(frozen=True)
class IdentityResiduals:
    support: np.ndarray
    codazzi: np.ndarray

    @property
    def support_max(self) -> float:
        return float(self.support.max())

    @property
    def codazzi_max(self) -> float:
        return float(self.codazzi.max())


def support_identity_residual(shape: ShapeData) -> IdentityResiduals:
    """Per-node residuals of u_i = g^{kl} h_ik <X, X_l> and of Codazzi symmetry.

    Both are measured in an orthonormal tangent frame.  Codazzi uses the
    ambient shape operator S: the covariant derivative of h in direction k
    applied to X_j is P (d_k S) X_j with P the tangential projection, and
    the residual is its antisymmetric part in (k, j).
    """
    grid = shape.grid
    G = shape.ginv_sqrt
    du = grid.gradient(shape.u)
    XdotXl = np.einsum("pa,pla->pl", shape.X, shape.dX)
    ginv = G @ G
    predicted = np.einsum("pik,pkl,pl->pi", shape.h, ginv, XdotXl)
    r = du - predicted
    support = np.sqrt(np.einsum("pi,pij,pj->p", r, ginv, r))

    dS = grid.gradient(shape.shape_op)  # (size, n, n+1, n+1)
    d = shape.X.shape[1]
    P = np.eye(d) - shape.nu[:, :, None] * shape.nu[:, None, :]
    T = np.einsum("pab,pkbc,pjc->pkja", P, dS, shape.dX)
    C = T - np.swapaxes(T, 1, 2)
    Cf = np.einsum("pka,pjb,pkjc->pabc", G, G, C)
    codazzi = np.linalg.norm(Cf, axis=-1).max(axis=(1, 2))
    return IdentityResiduals(support, codazzi)


def principal_frame_derivatives(shape: ShapeData) -> np.ndarray:
    """h_{abc} in the principal frame: <(D_{e_c} S) e_a, e_b>, shape (size, n, n, n)."""
    dS = shape.grid.gradient(shape.shape_op)
    dS_frame = np.einsum("pkc,pkxy->pcxy", shape.frame_coeffs, dS)
    return np.einsum("pax,pcxy,pby->pabc", shape.frame, dS_frame, shape.frame)


def area_weights(shape: ShapeData) -> np.ndarray:
    """Hypersurface area element sqrt(det g) times the coordinate cell volume."""
    grid = shape.grid
    cell = np.prod(grid.steps)
    return np.sqrt(np.linalg.det(shape.g)) * cell


# -- serialization -------------------------------------------------------------


def write_graph_csv(path, graph: RadialGraph) -> None:
    """One row per node: angles then rho; first line is a JSON header comment."""
    grid = graph.grid
    buf = io.StringIO()
    buf.write("# " + json.dumps({"n": grid.n, "resolution": grid.resolution}, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"angle_{i + 1}" for i in range(grid.n)] + ["rho"])
    for ang, r in zip(grid.angles, graph.rho):
        w.writerow([repr(float(x)) for x in ang] + [repr(float(r))])
    Path(path).write_text(buf.getvalue())


def read_graph_csv(path) -> RadialGraph:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0][1:].strip())
    grid = build_grid(header["n"], header["resolution"])
    rows = list(csv.reader(lines[2:]))
    rho = np.array([float(r[-1]) for r in rows])
    return RadialGraph(grid, rho)
