"""Doubly symmetric binary source with Hamming distortion.

X is uniform on {0, 1}, the first decoder has no side information and the
second sees Y = X xor N with N ~ Bernoulli(p).  Everything here is exact
except the Region I Heegard-Berger minimization, which is a small
deterministic search (see :func:`hb_rate`).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .finite_region import DegradedSource, TestChannel, rate_vector
from .probkit import (
    JointPmf,
    NumericalError,
    binary_convolve,
    binary_entropy,
    critical_distortion,
    g_func,
    markov_check,
)

HAMMING = np.array([[0.0, 1.0], [1.0, 0.0]])
FEAS_TOL = 1e-12


class InfeasibleParams(ValueError):
    """S-function parameters outside the feasible domain."""

    def __init__(self, msg, gamma=None):
        self.gamma = gamma
        super().__init__(msg)


@dataclass(frozen=True)
class DsbsParams:
    p: float
    D1: float
    D2: float

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"need 0 < p < 0.5, got p={self.p}")
        for name in ("D1", "D2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class SParams:
    """Arguments of the S-function and the derived gamma."""

    alpha: float
    beta: float
    theta: float
    theta1: float
    gamma: float

    def as_dict(self):
        return asdict(self)


def _gamma(D1, alpha, beta, theta, theta1):
    if theta == 1.0:
        return 0.5
    return (D1 - (theta - theta1) * (1.0 - alpha) - theta1 * beta) / (1.0 - theta)


def make_sparams(p, D1, alpha, beta, theta, theta1):
    """Validate S-function arguments and attach gamma.

    Raises :class:`InfeasibleParams` when gamma leaves ``[p, 1 - p]``.
    """
    if not (-FEAS_TOL <= alpha <= p + FEAS_TOL and -FEAS_TOL <= beta <= p + FEAS_TOL):
        raise InfeasibleParams(f"alpha, beta must lie in [0, p]; got {alpha}, {beta}")
    if not (-FEAS_TOL <= theta1 <= theta + FEAS_TOL and theta <= 1.0 + FEAS_TOL):
        raise InfeasibleParams(f"need 0 <= theta1 <= theta <= 1; got {theta1}, {theta}")
    alpha, beta = min(max(alpha, 0.0), p), min(max(beta, 0.0), p)
    theta = min(theta, 1.0)
    theta1 = min(max(theta1, 0.0), theta)
    gamma = _gamma(D1, alpha, beta, theta, theta1)
    if not (p - FEAS_TOL <= gamma <= 1.0 - p + FEAS_TOL):
        raise InfeasibleParams(f"gamma={gamma} outside [{p}, {1 - p}]", gamma=gamma)
    return SParams(alpha, beta, theta, theta1, min(max(gamma, p), 1.0 - p))


def s_func(p, D1, sp):
    """S_{D1}(alpha, beta, theta, theta1), the Region I rate expression."""
    if not isinstance(sp, SParams):
        sp = make_sparams(p, D1, *sp)
    else:
        sp = make_sparams(p, D1, sp.alpha, sp.beta, sp.theta, sp.theta1)
    return (
        1.0
        - binary_entropy(binary_convolve(D1, p))
        + (sp.theta - sp.theta1) * g_func(p, sp.alpha)
        + sp.theta1 * g_func(p, sp.beta)
        + (1.0 - sp.theta) * g_func(p, sp.gamma)
    )


def stage2_distortion(p, sp):
    """Second-stage distortion (theta - theta1) alpha + theta1 beta + (1 - theta) p."""
    return (sp.theta - sp.theta1) * sp.alpha + sp.theta1 * sp.beta + (1.0 - sp.theta) * p


@lru_cache(maxsize=256)
def _dc(p):
    return critical_distortion(p)


def classify_region(params: DsbsParams) -> str:
    """Region label: "I", "I-B" (the D2 <= d_c part of I), "II", "III" or "IV".

    Boundary ties go to the degenerate region.
    """
    p, D1, D2 = params.p, params.D1, params.D2
    if D1 < 0.5 and D2 < min(D1, p):
        return "I-B" if D2 <= _dc(p) else "I"
    if D1 >= 0.5 and D2 >= p:
        return "IV"
    if D1 >= 0.5:
        return "II"
    return "III"


def wz_rate_binary(p, D):
    """Wyner-Ziv rate of the DSBS at Hamming distortion D.

    The minimum of theta G(beta) over D = theta beta + (1 - theta) p reduces
    to (p - D) min_{beta <= D} G(beta)/(p - beta); the ratio is minimized at
    d_c, giving G(D) below d_c and the tangent line through (p, 0) above.
    """
    if D < 0:
        raise ValueError("distortion must be non-negative")
    if D >= p:
        return 0.0
    b = min(D, _dc(p))
    return (p - D) * g_func(p, b) / (p - b)


def wz_witness(p, D):
    """(beta, theta) attaining the Wyner-Ziv minimum at distortion D < p."""
    b = min(D, _dc(p))
    return b, (p - D) / (p - b)


def _first_stage_rate(D1):
    return 0.0 if D1 >= 0.5 else 1.0 - binary_entropy(D1)


@dataclass
class HbResult:
    rate: float
    witness: SParams
    d1_effective: float
    region: str
    certified: bool = True


def _batch_objective(p, D1, D2, theta, t):
    """Minimum of the weighted G terms for fixed (theta, theta1/theta).

    With weights a = theta - theta1, b = theta1, c = 1 - theta and
    L = a alpha, both equality constraints are affine in L and the
    objective a G(L/a) + b G(beta(L)) + c G(gamma(L)) is convex in L.  The
    feasible L form an interval, searched by golden section.  Returns the
    value (inf where infeasible) and the minimizing L.
    """
    a = theta * (1.0 - t)
    b = theta * t
    c = 1.0 - theta
    eps = 1e-13
    lo = np.zeros_like(a)
    hi = a * p
    # b beta = D2 - c p - L
    rb = D2 - c * p
    lo = np.maximum(lo, np.where(b > eps, rb - b * p, rb))
    hi = np.minimum(hi, np.where(b > eps, rb, rb))
    # c gamma = D1 - D2 - a + c p + 2L
    rg = D1 - D2 - a + c * p
    lo = np.maximum(lo, np.where(c > eps, (c * p - rg) / 2.0, -rg / 2.0))
    hi = np.minimum(hi, np.where(c > eps, (c * (1.0 - p) - rg) / 2.0, -rg / 2.0))
    feasible = lo <= hi + 1e-12
    hi = np.maximum(hi, lo)

    def value(L):
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(a > eps, L / np.where(a > eps, a, 1.0), 0.0)
            beta = np.where(b > eps, (rb - L) / np.where(b > eps, b, 1.0), 0.0)
            gamma = np.where(c > eps, (rg + 2.0 * L) / np.where(c > eps, c, 1.0), 0.5)
        alpha = np.clip(alpha, 0.0, p)
        beta = np.clip(beta, 0.0, p)
        gamma = np.clip(gamma, p, 1.0 - p)
        return a * _g(p, alpha) + b * _g(p, beta) + c * _g(p, gamma)

    g = (np.sqrt(5.0) - 1.0) / 2.0
    x0, x1 = lo.copy(), hi.copy()
    # value error is quadratic in the L error, so 1e-10 is ample
    while np.any(x1 - x0 > 1e-10):
        u = x1 - g * (x1 - x0)
        v = x0 + g * (x1 - x0)
        fu, fv = value(np.stack([u, v]))
        left = fu <= fv
        x1 = np.where(left, v, x1)
        x0 = np.where(left, x0, u)
    L = 0.5 * (x0 + x1)
    return np.where(feasible, value(L), np.inf), L


def _g(p, u):
    s = p + u - 2.0 * p * u
    return _h(s) - _h(u)


def _h(u):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -u * np.log2(u) - (1.0 - u) * np.log2(1.0 - u)
    return np.where((u <= 0.0) | (u >= 1.0), 0.0, out)


def _sparams_from(p, D1, D2, theta, t, L):
    a, b, c = theta * (1.0 - t), theta * t, 1.0 - theta
    alpha = L / a if a > 1e-13 else 0.0
    beta = (D2 - c * p - L) / b if b > 1e-13 else 0.0
    alpha = min(max(alpha, 0.0), p)
    beta = min(max(beta, 0.0), p)
    if c > 1e-13:
        gamma = (D1 - D2 - a + c * p + 2.0 * L) / c
        gamma = min(max(gamma, p), 1.0 - p)
    else:
        gamma = 0.5
    return SParams(alpha, beta, theta, b, gamma)


def _a_interval(p, D1, D2, theta):
    """Feasible range of a = theta - theta1 for each theta.

    Eliminates L from its three lower and three upper bounds, each affine
    in a; every (lower, upper) pair yields one linear inequality in a.
    Returns (lo, hi) with lo > hi where theta is infeasible.
    """
    c = 1.0 - theta
    lower = [(0.0, 0.0), (p, D2 - c * p - theta * p), (0.5, 0.5 * (D2 - D1))]
    upper = [(p, 0.0), (0.0, D2 - c * p), (0.5, 0.5 * (D2 - D1 + c * (1.0 - 2.0 * p)))]
    lo = np.zeros_like(theta)
    hi = theta.copy()
    for lk, lm in lower:
        for uk, um in upper:
            k = lk - uk
            m = um - lm  # k a <= m
            if k > 0:
                hi = np.minimum(hi, m / k)
            elif k < 0:
                lo = np.maximum(lo, m / k)
            else:
                hi = np.where(m >= -1e-15, hi, -np.inf)
    return lo, hi


def _feasible_coords(p, D1, D2, u, s):
    """Map unit-square coordinates to (theta, theta1/theta) in the feasible set."""
    th_min = max(0.0, 1.0 - D2 / p)
    theta = th_min + u * (1.0 - th_min)
    lo, hi = _a_interval(p, D1, D2, theta)
    ok = lo <= hi + 1e-15
    a = lo + s * np.maximum(hi - lo, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(theta > 0, 1.0 - a / np.where(theta > 0, theta, 1.0), 0.0)
    return theta, np.clip(t, 0.0, 1.0), ok


def _search_objective(p, D1, D2, u, s):
    theta, t, ok = _feasible_coords(p, D1, D2, u, s)
    vals, L = _batch_objective(p, D1, D2, theta, t)
    return np.where(ok, vals, np.inf), L


def _region1_search(p, D1, D2, coarse=0.02, fine=1e-7, n_starts=6):
    """Grid plus lockstep pattern search over the feasible (theta, theta1) set.

    Coordinates (u, s) in the unit square parametrize theta between its
    smallest feasible value 1 - D2/p and 1, and a = theta - theta1 across
    its feasible interval, so thin feasible sets (D2 << p) are resolved.
    """
    n = int(round(1.0 / coarse)) + 1
    uu, ss = np.meshgrid(np.linspace(0.0, 1.0, n), np.linspace(0.0, 1.0, n), indexing="ij")
    uu, ss = uu.ravel(), ss.ravel()
    vals, _ = _search_objective(p, D1, D2, uu, ss)
    order = np.argsort(vals, kind="stable")
    starts = [i for i in order[:n_starts] if np.isfinite(vals[i])]
    if not starts:
        raise NumericalError(f"no feasible grid cell for p={p}, D1={D1}, D2={D2}")

    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]], float)
    # pattern search from every start in lockstep
    x = np.stack([[uu[i], ss[i]] for i in starts])
    fx = vals[starts].copy()
    h = np.full(len(starts), coarse)
    converged = False
    for _ in range(5000):
        live = h >= fine
        if not live.any():
            converged = True
            break
        cand = np.clip(x[:, None, :] + h[:, None, None] * dirs[None], 0.0, 1.0)
        cv, _ = _search_objective(p, D1, D2, cand[..., 0].ravel(), cand[..., 1].ravel())
        cv = cv.reshape(len(starts), len(dirs))
        j = np.argmin(cv, axis=1)
        cbest = cv[np.arange(len(starts)), j]
        improved = live & (cbest < fx - 1e-15)
        x[improved] = cand[improved, j[improved]]
        fx[improved] = cbest[improved]
        h = np.where(live & ~improved, h / 2.0, h)
    k = int(np.argmin(fx))
    u, s = x[k]
    theta, t, _ = _feasible_coords(p, D1, D2, np.array([u]), np.array([s]))
    _, L = _batch_objective(p, D1, D2, theta, t)
    sp = _sparams_from(p, D1, D2, float(theta[0]), float(t[0]), float(L[0]))
    return 1.0 - float(_h(binary_convolve(D1, p))) + fx[k], sp, converged


def hb_rate(params: DsbsParams) -> HbResult:
    """Heegard-Berger sum-rate R_HB(D1, D2) with a layered test-channel witness.

    In Region I the S-function is minimized subject to the second-stage
    distortion constraint by a coarse grid over (theta, theta1/theta)
    followed by pattern-search refinement; for each grid point the
    remaining one-dimensional convex problem is solved exactly.  The
    degenerate regions use their closed forms.
    """
    p, D1, D2 = params.p, params.D1, params.D2
    region = classify_region(params)
    if region in ("I", "I-B"):
        rate, sp, converged = _region1_search(p, D1, D2)
        return HbResult(rate, sp, D1, region, certified=converged)
    if region == "II":
        if D2 >= p:
            return HbResult(0.0, SParams(0.0, 0.0, 0.0, 0.0, 0.5), 0.5, region)
        beta, theta = wz_witness(p, D2)
        sp = make_sparams(p, 0.5, beta, beta, theta, theta / 2.0)
        return HbResult(wz_rate_binary(p, D2), sp, 0.5, region)
    if region == "IV":
        return HbResult(0.0, SParams(0.0, 0.0, 0.0, 0.0, 0.5), 0.5, region)
    # III: stage-1 description alone meets D2
    if D1 <= p:
        sp = SParams(0.0, D1, 1.0, 1.0, 0.5)
    else:
        sp = make_sparams(p, D1, 0.0, 0.0, 0.0, 0.0)
    return HbResult(_first_stage_rate(D1), sp, D1, region)


def hb_lower_bound(params: DsbsParams) -> float:
    """Lower bound 1 - h(D1*p) + R_WZ(D2) on R_HB in Region I."""
    return 1.0 - binary_entropy(binary_convolve(params.D1, params.p)) + wz_rate_binary(
        params.p, params.D2
    )


def region1b_rate(params: DsbsParams) -> float:
    """1 - h(D1*p) + G(D2), exact on the D2 <= min(d_c, D1) part of Region I."""
    p = params.p
    return 1.0 - binary_entropy(binary_convolve(params.D1, p)) + g_func(p, params.D2)


def dsbs_source(p) -> DegradedSource:
    """Two-stage source (X, Y1, Y2): Y1 constant, Y2 = BSC(p) output."""
    table = np.array([[1.0 - p, p], [p, 1.0 - p]]) * 0.5
    return DegradedSource(JointPmf(("X", "Y1", "Y2"), table.reshape(2, 1, 2)))


# decoders: f1(W1, Y1) = W1; f2(W2, Y2) = W2 unless W2 is the erasure 2
_F1 = np.array([[0], [1]])
_F2 = np.array([[0, 0], [1, 1], [0, 1]])


def layered_joint(p, D1, sp: SParams) -> np.ndarray:
    """Joint p(x, w1, w2) of the layered erasure construction, indexed [x, w1, w2]."""
    a, b, c = sp.theta - sp.theta1, sp.theta1, 1.0 - sp.theta
    al, be, ga = sp.alpha, sp.beta, sp.gamma
    t = np.zeros((2, 2, 3))
    # w1 = 0
    t[0, 0, 0], t[1, 0, 0] = b * (1 - be), b * be
    t[0, 0, 1], t[1, 0, 1] = a * al, a * (1 - al)
    t[0, 0, 2], t[1, 0, 2] = c * (1 - ga), c * ga
    # w1 = 1
    t[0, 1, 0], t[1, 1, 0] = a * (1 - al), a * al
    t[0, 1, 1], t[1, 1, 1] = b * be, b * (1 - be)
    t[0, 1, 2], t[1, 1, 2] = c * ga, c * (1 - ga)
    return 0.5 * t


def build_test_channel(p, D1, sp: SParams) -> TestChannel:
    """Layered test channel for the given S-function parameters.

    W1 is a BSC(D1) description of X; W2 takes values in {0, 1, 2} where 2
    is an erasure (weight 1 - theta) after which decoder 2 falls back to Y.
    The rate I(X;W1) + I(X;W2|W1,Y) equals :func:`s_func`.

    At theta = 1 the table only realizes first-stage distortion D1 when
    D1 = (theta - theta1)(1 - alpha) + theta1 beta; other parameter sets
    are rejected.
    """
    sp = make_sparams(p, D1, sp.alpha, sp.beta, sp.theta, sp.theta1)
    if sp.theta >= 1.0:
        d1_table = (sp.theta - sp.theta1) * (1 - sp.alpha) + sp.theta1 * sp.beta
        if abs(d1_table - D1) > 1e-9:
            raise InfeasibleParams(
                f"theta=1 realizes first-stage distortion {d1_table}, not {D1}", gamma=None
            )
    joint = layered_joint(p, D1, sp)
    cond = joint / joint.sum(axis=(1, 2), keepdims=True)
    return TestChannel(cond, [_F1, _F2], context="own")


def cascade_test_channel(p, D1, D2) -> TestChannel:
    """W2 = BSC(D2) of X and W1 = BSC(eta) of W2 with D2 * eta = D1."""
    if not 0.0 <= D2 <= D1 <= 0.5:
        raise ValueError(f"need 0 <= D2 <= D1 <= 0.5, got D1={D1}, D2={D2}")
    eta = cascade_eta(D1, D2)
    w2_x = np.array([[1 - D2, D2], [D2, 1 - D2]])
    w1_w2 = np.array([[1 - eta, eta], [eta, 1 - eta]])
    # cond[x, w1, w2] = P(w2|x) P(w1|w2); W2 alphabet padded to {0, 1, 2}
    cond = np.zeros((2, 2, 3))
    cond[:, :, :2] = np.einsum("xv,vw->xwv", w2_x, w1_w2)
    return TestChannel(cond, [_F1, _F2], context="own")


def cascade_eta(D1, D2):
    if D2 >= 0.5:
        return 0.0
    return (D1 - D2) / (1.0 - 2.0 * D2)


@dataclass
class DsbsSrCheck:
    passed: bool
    rate_residual: float
    markov_violation: float
    distortion_excess: float
    rates: np.ndarray


def check_generalized_sr_dsbs(params: DsbsParams, tol=1e-6, hb: HbResult = None) -> DsbsSrCheck:
    """Verify that the R_HB witness is a progressive (generalized SR) code.

    Builds the layered test channel (or the cascade channel in Region I-B) from
    the minimizer and checks that I(X;W1|Y1) + I(X;W2|W1,Y2) matches R_HB,
    that the stage distortions are met, and that (W1, W2) - X - Y2 - Y1.
    """
    hb = hb or hb_rate(params)
    src = dsbs_source(params.p)
    if hb.region == "I-B":
        ch = cascade_test_channel(params.p, params.D1, params.D2)
    else:
        ch = build_test_channel(params.p, hb.d1_effective, hb.witness)
    rates = rate_vector(src, ch)
    dist = ch.distortions(src, HAMMING)
    excess = float(np.max(dist - np.array([params.D1, params.D2])))
    joint = ch.joint(src)
    _, viol = markov_check(joint, [["W1", "W2"], "X", "Y2", "Y1"])
    resid = abs(rates[-1] - hb.rate)
    passed = resid <= tol and viol <= tol and excess <= tol
    return DsbsSrCheck(passed, resid, viol, excess, rates)
