"""The test function Q = ln kappa_1 - N ln u + (alpha/2)|X|^2 on a computed surface.

Locates the maximum of Q, evaluates the first-order critical equation there
and classifies the maximum against the threshold K0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concavity import GROUPING_RTOL, ConcavitySetup, detect_multiplicity, full_report, k0_threshold
from .errors import DomainError, ViscosityRegimeError
from .geometry import ShapeData, principal_frame_derivatives

DEFAULT_N = 5.0
DEFAULT_ALPHA_SCALE = 0.1
DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class TestFunctionField:
    """Q per node and the data at its (lowest-index) maximum."""

    __test__ = False

    N: float
    alpha: float
    Q: np.ndarray
    argmax: int
    kappa1_at_max: float
    multiplicity_at_max: int
    gap: float
    degenerate: bool

    @property
    def Q_max(self) -> float:
        return float(self.Q[self.argmax])


def default_alpha(shape: ShapeData) -> float:
    """0.1 / sup|X|^2, which keeps the three terms of Q comparable at unit scale."""
    return DEFAULT_ALPHA_SCALE / float(np.max(np.sum(shape.X**2, axis=1)))


def test_function_field(shape: ShapeData, N: float = DEFAULT_N, alpha: float | None = None) -> TestFunctionField:
    if alpha is None:
        alpha = default_alpha(shape)
    if N < 0 or alpha < 0:
        raise DomainError("N and alpha must be non-negative")
    k1, u = shape.kappa[:, 0], shape.u
    for name, vals in (("u", u), ("kappa_1", k1)):
        bad = np.flatnonzero(~(vals > 0))
        if bad.size:
            raise DomainError(f"{name} <= 0 at node {int(bad[0])}; Q needs u > 0 and kappa_1 > 0")
    Q = np.log(k1) - N * np.log(u) + 0.5 * alpha * np.sum(shape.X**2, axis=1)
    top = float(Q.max())
    # ties up to rounding go to the lowest index
    p = int(np.argmax(Q >= top - DEGENERATE_RTOL * max(1.0, abs(top))))
    kap = shape.kappa[p]
    m = detect_multiplicity(kap)
    gap = float(kap[0] - kap[m]) if m < kap.size else 0.0
    degenerate = bool(np.ptp(Q) <= DEGENERATE_RTOL * max(1.0, abs(float(Q[p]))))
    return TestFunctionField(float(N), float(alpha), Q, p, float(kap[0]), m, gap, degenerate)


test_function_field.__test__ = False


def _frame_at(shape: ShapeData, p: int) -> np.ndarray:
    """Principal frame at node p with each vector's sign fixed lexicographically."""
    frame = shape.frame[p].copy()
    for a in range(frame.shape[0]):
        nz = np.flatnonzero(np.abs(frame[a]) > 1e-12)
        if nz.size and frame[a, nz[0]] < 0:
            frame[a] = -frame[a]
    return frame


def critical_residual(shape: ShapeData, field: TestFunctionField) -> np.ndarray:
    """h_{11i} / kappa_1 - N u_i / u + alpha <X, X_i> at the maximum of Q.

    Components are along the principal frame; all derivatives are grid
    differences.  Refused when kappa_1 is (nearly) multiple at the maximum.
    """
    if shape.grid is None:
        raise DomainError("critical_residual needs a gridded surface")
    if field.multiplicity_at_max > 1 or field.gap <= 10 * GROUPING_RTOL * max(1.0, abs(field.kappa1_at_max)):
        raise ViscosityRegimeError(
            f"kappa_1 is multiple at node {field.argmax} (gap {field.gap:.3e}); pointwise check refused"
        )
    p = field.argmax
    coeffs = shape.frame_coeffs[p].copy()
    frame = _frame_at(shape, p)
    flip = np.sign(np.einsum("ac,ac->a", frame, shape.frame[p]))
    coeffs *= flip[None, :]
    du = shape.grid.gradient(shape.u)[p]
    u_i = coeffs.T @ du
    hd = principal_frame_derivatives(shape)[p]
    # h_{11i} in the sign-fixed frame: e_1 enters twice, e_i once
    h11i = hd[0, 0, :] * flip
    return h11i / field.kappa1_at_max - field.N * u_i / shape.u[p] + field.alpha * (frame @ shape.X[p])


@dataclass(frozen=True)
class CaseSplit:
    case: str
    kappa_n_at_max: float
    K0: float
    multiplicity: int
    lhs: float | None = None
    lhs_nonnegative: bool | None = None
    hypothesis_holds: bool | None = None


def case_split(shape: ShapeData, field: TestFunctionField, f_max: float, xi=None) -> CaseSplit:
    """Case i when kappa_n >= -K0 at the maximum, else Case ii with the concavity lhs.

    In Case ii, xi defaults to h_{ii1} in the principal frame for gridded
    surfaces and to ones for synthetic data; it is zeroed on the leading
    block before evaluation.
    """
    n = shape.n
    K0 = k0_threshold(n, f_max)
    p = field.argmax
    kap = shape.kappa[p]
    kn = float(kap[-1])
    if kn >= -K0:
        return CaseSplit("i", kn, K0, field.multiplicity_at_max)
    if xi is None:
        if shape.grid is not None:
            hd = principal_frame_derivatives(shape)[p]
            xi = np.array([hd[i, i, 0] for i in range(n)])
        else:
            xi = np.ones(n)
    setup = ConcavitySetup.from_values(kap, xi, K0)
    if not setup.hypothesis_holds:
        return CaseSplit("ii", kn, K0, setup.m, None, None, False)
    rep = full_report(setup)
    T = rep.magnitude
    return CaseSplit("ii", kn, K0, setup.m, float(rep.lhs), bool(rep.lhs >= -1e-9 * T), True)


def diagnostics_report(shape: ShapeData, N: float = DEFAULT_N, alpha: float | None = None, f_max: float | None = None) -> dict:
    """The JSON-ready summary: Q maximum, its case and the critical residual or refusal."""
    field = test_function_field(shape, N, alpha)
    out = {
        "N": field.N,
        "alpha": field.alpha,
        "argmax_node": field.argmax,
        "Q_max": field.Q_max,
        "kappa_at_max": [float(x) for x in shape.kappa[field.argmax]],
        "multiplicity_at_max": field.multiplicity_at_max,
        "degenerate_max": field.degenerate,
    }
    if f_max is not None and shape.n >= 3:
        split = case_split(shape, field, f_max)
        out.update({"case": split.case, "K0": split.K0, "lhs": split.lhs})
    else:
        out.update({"case": None, "K0": None, "lhs": None})
    try:
        r = critical_residual(shape, field)
        out["critical_residual_norm"] = float(np.linalg.norm(r))
        out["refusal"] = None
    except ViscosityRegimeError as exc:
        out["critical_residual_norm"] = None
        out["refusal"] = exc.code
    return out
