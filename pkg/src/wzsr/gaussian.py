"""Two-stage quadratic Gaussian source with degraded side informations.

X ~ N(0, var_x), Y2 = X + N2 and Y1 = X + N1 + N2 with independent Gaussian
noises.  All rates are closed-form log-variance ratios, in bits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class GaussParams:
    var_x: float
    var_n1: float
    var_n2: float
    D1: float
    D2: float

    def __post_init__(self):
        for name in ("var_x", "var_n1", "var_n2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("D1", "D2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"distortion {name} must be positive")

    def scaled(self, c):
        return GaussParams(*(c * v for v in (self.var_x, self.var_n1, self.var_n2, self.D1, self.D2)))


@dataclass(frozen=True)
class GaussDerived:
    d1_star: float
    d2_star: float
    gamma: float


def derived(params: GaussParams) -> GaussDerived:
    """MMSE floors given each side information, and var_n2/(var_n1 + var_n2)."""
    sx, s1, s2 = params.var_x, params.var_n1, params.var_n2
    return GaussDerived(
        d1_star=sx * (s1 + s2) / (sx + s1 + s2),
        d2_star=sx * s2 / (sx + s2),
        gamma=s2 / (s1 + s2),
    )


def boundary_curve(params: GaussParams, D2=None):
    """Smallest D1 for which both constraints stay active, as a function of D2.

    Returns inf when the denominator is non-positive.
    """
    g = derived(params).gamma
    s1 = params.var_n1
    D2 = params.D2 if D2 is None else D2
    den = g * s1 - (1.0 - g) ** 2 * D2
    if den <= 0:
        return math.inf
    return g * s1 * D2 / den


def classify_region_gauss(params: GaussParams) -> str:
    """Region label "I".."IV"; boundary ties go to the degenerate region."""
    dv = derived(params)
    D1, D2 = params.D1, params.D2
    curve = boundary_curve(params)
    # a vanishing denominator means the curve constraint is vacuous
    curve_ok = math.isinf(curve) or D1 >= curve
    if D1 <= dv.d1_star and D2 <= dv.d2_star and curve_ok:
        return "I"
    if D1 > dv.d1_star and D2 >= dv.d2_star:
        return "IV"
    if D1 > dv.d1_star:
        return "II"
    return "III"


def _half_log2(ratio):
    return 0.5 * math.log2(ratio)


def wz_rate_gauss_stage1(params: GaussParams) -> float:
    """Wyner-Ziv rate to the first decoder, 0.5 log2(D1*/D1), clamped at 0."""
    d1s = derived(params).d1_star
    return _half_log2(d1s / params.D1) if params.D1 < d1s else 0.0


def wz_rate_gauss_stage2(params: GaussParams) -> float:
    """Wyner-Ziv rate to the second decoder, 0.5 log2(D2*/D2), clamped at 0."""
    d2s = derived(params).d2_star
    return _half_log2(d2s / params.D2) if params.D2 < d2s else 0.0


def _region1_formula(params: GaussParams) -> float:
    sx, s1, s2 = params.var_x, params.var_n1, params.var_n2
    g = derived(params).gamma
    num = sx * s1 * s2
    den = params.D2 * (sx + s1 + s2) * ((1.0 - g) ** 2 * params.D1 + g * s1)
    return _half_log2(num / den)


def hb_rate_gauss(params: GaussParams) -> float:
    """Heegard-Berger sum-rate R_HB(D1, D2)."""
    region = classify_region_gauss(params)
    if region == "I":
        return max(_region1_formula(params), 0.0)
    if region == "II":
        return wz_rate_gauss_stage2(params)
    if region == "III":
        return wz_rate_gauss_stage1(params)
    return 0.0


def solve_test_channel_gauss(params: GaussParams):
    """Noise variances (var_z1, var_z2) of W1 = X + Z1 + Z2, W2 = X + Z2.

    Inverts the information-form MMSE identities

        1/D1 = 1/var_x + 1/(var_n1 + var_n2) + 1/(var_z1 + var_z2)
        1/D2 = 1/var_x + 1/var_n2 + 1/var_z2

    ``inf`` marks an uninformative description (D at its floor).
    """
    if classify_region_gauss(params) != "I":
        raise ValueError(f"test channel is defined in Region I only; got {params}")
    dv = derived(params)
    prec1 = 1.0 / params.D1 - 1.0 / dv.d1_star
    prec2 = 1.0 / params.D2 - 1.0 / dv.d2_star
    total = math.inf if prec1 <= 0 else 1.0 / prec1
    var_z2 = math.inf if prec2 <= 0 else 1.0 / prec2
    if math.isinf(total):
        var_z1 = math.inf
    else:
        var_z1 = total - var_z2
        if var_z1 < 0:
            # only reachable through rounding on the I/III boundary
            if var_z1 < -1e-9 * max(total, 1.0):
                raise ValueError("Region I point has no valid test channel")
            var_z1 = 0.0
    return var_z1, var_z2


def _inv(v):
    return 0.0 if math.isinf(v) else 1.0 / v


@dataclass(frozen=True)
class GaussChannelRates:
    """Distortions and rates achieved by W1 = X + Z1 + Z2, W2 = X + Z2."""

    d1: float
    d2: float
    r1: float
    sumrate: float


def channel_rates(params: GaussParams, var_z1, var_z2) -> GaussChannelRates:
    """Achieved MMSE distortions and cumulative rates of the Gaussian test channel.

    Decoder 1 sees (W1, Y1); decoder 2 sees (W1, W2, Y2), where W1 adds
    nothing beyond W2 because Z1 is independent noise.
    """
    sx, s1, s2 = params.var_x, params.var_n1, params.var_n2
    vz_total = math.inf if math.isinf(var_z1) or math.isinf(var_z2) else var_z1 + var_z2
    base1 = 1.0 / sx + 1.0 / (s1 + s2)
    base2 = 1.0 / sx + 1.0 / s2
    d1 = 1.0 / (base1 + _inv(vz_total))
    d2 = 1.0 / (base2 + _inv(var_z2))
    # I(X;W1|Y1) = 0.5 log(Var(X|Y1) / Var(X|W1,Y1))
    r1 = _half_log2((base1 + _inv(vz_total)) / base1)
    # I(X;W2|W1,Y2) = 0.5 log(Var(X|W1,Y2) / Var(X|W1,W2,Y2))
    r2 = _half_log2((base2 + _inv(var_z2)) / (base2 + _inv(vz_total)))
    return GaussChannelRates(d1, d2, r1, r1 + r2)


def region_test_channel(params: GaussParams):
    """A test channel meeting (D1, D2) in any region, as (var_z1, var_z2).

    Region I uses :func:`solve_test_channel_gauss`.  Otherwise the
    description that is not needed is dropped (infinite variance), or in
    Region III W2 repeats W1.
    """
    region = classify_region_gauss(params)
    dv = derived(params)
    if region == "I":
        return solve_test_channel_gauss(params)
    if region == "II":
        prec2 = 1.0 / params.D2 - 1.0 / dv.d2_star
        return math.inf, (math.inf if prec2 <= 0 else 1.0 / prec2)
    if region == "III":
        prec1 = 1.0 / params.D1 - 1.0 / dv.d1_star
        return 0.0, (math.inf if prec1 <= 0 else 1.0 / prec1)
    return math.inf, math.inf


@dataclass
class GaussSrReport:
    """Outcome of :func:`check_sr_gauss`."""

    params: GaussParams
    region: str
    verdict: str
    r1_min: float
    sumrate: float
    wz2: float
    var_z1: float
    var_z2: float
    rate_residual: float
    distortion_excess: float

    @property
    def generalized(self):
        return self.verdict in ("strict", "generalized-only")

    @property
    def strict(self):
        return self.verdict == "strict"

    def to_dict(self):
        def num(v):
            return None if math.isinf(v) else float(v)

        return {
            "params": asdict(self.params),
            "region": self.region,
            "r1_min_bits": float(self.r1_min),
            "sumrate_bits": float(self.sumrate),
            "var_z1": num(self.var_z1),
            "var_z2": num(self.var_z2),
            "sr_verdict": self.verdict,
        }


def check_sr_gauss(params: GaussParams, tol=1e-9) -> GaussSrReport:
    """Classify the point as strict, generalized-only or neither.

    Generalized refinability holds when one test channel meets both
    distortions while its cumulative rates equal (R_WZ,1(D1), R_HB(D1, D2));
    strictness additionally needs R_HB(D1, D2) = R_WZ,2(D2).
    """
    region = classify_region_gauss(params)
    r1_min = wz_rate_gauss_stage1(params)
    hb = hb_rate_gauss(params)
    wz2 = wz_rate_gauss_stage2(params)
    vz1, vz2 = region_test_channel(params)
    ach = channel_rates(params, vz1, vz2)
    excess = max(ach.d1 - params.D1, ach.d2 - params.D2)
    resid = max(abs(ach.r1 - r1_min), abs(ach.sumrate - hb))
    generalized = resid <= tol and excess <= tol * max(params.D1, params.D2, 1.0)
    if generalized and abs(hb - wz2) <= tol:
        verdict = "strict"
    elif generalized:
        verdict = "generalized-only"
    else:
        verdict = "neither"
    return GaussSrReport(params, region, verdict, r1_min, hb, wz2, vz1, vz2, resid, excess)
