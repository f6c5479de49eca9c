"""Strict and generalized successive refinability checks.

The generic checks take a source, a candidate test channel and externally
supplied per-stage rates (Wyner-Ziv or Heegard-Berger values).  A failed
check on one candidate channel does not refute refinability; only the
necessary condition gives a global negative answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dsbs, gaussian
from .finite_region import rate_vector, w_name, with_optimal_decoders, y_name
from .probkit import cond_mutual_info, markov_check

CLOSED_FORM_TOL = 1e-9


@dataclass
class SrVerdict:
    strict: bool
    generalized: bool
    necessary: Optional[bool] = None
    residuals: dict = field(default_factory=dict)
    failing_condition: Optional[str] = None
    consistent: bool = True

    def to_dict(self):
        return {
            "strict": bool(self.strict),
            "generalized": bool(self.generalized),
            "necessary": None if self.necessary is None else bool(self.necessary),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "consistent": bool(self.consistent),
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def check_strict_conditions(
    source, channel, wz_rates, tol=CLOSED_FORM_TOL, distortion=None, D=None
) -> SrVerdict:
    """Evaluate the four strict-refinability conditions on one channel.

    1. I(X; W_m | Y_m) equals the Wyner-Ziv rate (and the distortion is met
       when ``distortion`` and ``D`` are given);
    2. (W_1..W_N) - X - Y_N - ... - Y_1;
    3. (W_1..W_{m-1}) - (W_m, Y_m) - X for m >= 2;
    4. I(W_i; Y_m | W_1..W_{i-1}, Y_i) = 0 for 1 <= i < m <= N.

    When the channel's decoders see ``(W_1..W_m, Y_m)`` (context "full"),
    condition 3 is dropped and condition 1 uses I(X; W_1..W_m | Y_m).
    """
    n = channel.n_stages
    wz_rates = np.atleast_1d(np.asarray(wz_rates, dtype=float))
    if len(wz_rates) != n or source.n_stages != n:
        raise ValueError(
            f"stage count mismatch: channel {n}, source {source.n_stages}, rates {len(wz_rates)}"
        )
    joint = channel.joint(source)
    full = channel.context == "full"
    res = {}
    failing = None

    def record(label, value, ok):
        nonlocal failing
        res[label] = value
        if not ok and failing is None:
            failing = label

    dists = None
    if distortion is not None and D is not None:
        if channel.decoders is not None:
            dists = channel.distortions(source, distortion)
        else:
            _, dists = with_optimal_decoders(source, channel, distortion)
    for m in range(1, n + 1):
        ws = [w_name(i) for i in range(1, m + 1)] if full else [w_name(m)]
        gap = abs(cond_mutual_info(joint, "X", ws, [y_name(m)]) - wz_rates[m - 1])
        record(f"c1_rate[m={m}]", gap, gap <= tol)
        if dists is not None:
            excess = max(float(dists[m - 1] - D[m - 1]), 0.0)
            record(f"c1_distortion[m={m}]", excess, excess <= tol)

    chain = [[w_name(i) for i in range(1, n + 1)], "X"] + [y_name(m) for m in range(n, 0, -1)]
    _, worst = markov_check(joint, chain, tol)
    record("c2_markov", worst, worst <= tol)

    if not full:
        for m in range(2, n + 1):
            v = cond_mutual_info(
                joint, "X", [w_name(i) for i in range(1, m)], [w_name(m), y_name(m)]
            )
            record(f"c3[m={m}]", v, v <= tol)

    for m in range(2, n + 1):
        for i in range(1, m):
            given = [w_name(k) for k in range(1, i)] + [y_name(i)]
            v = cond_mutual_info(joint, w_name(i), y_name(m), given)
            record(f"c4[i={i},m={m}]", v, v <= tol)

    strict = failing is None
    # a channel meeting the strict conditions is also a generalized witness
    return SrVerdict(strict=strict, generalized=strict, residuals=res, failing_condition=failing)


def check_necessary_condition(hb_values, wz_values, tol=CLOSED_FORM_TOL) -> bool:
    """R_HB(D_1..D_m) == R_WZ,m(D_m) for every m, within ``tol``."""
    hb = np.asarray(hb_values, dtype=float)
    wz = np.asarray(wz_values, dtype=float)
    if hb.shape != wz.shape:
        raise ValueError("hb_values and wz_values must have equal length")
    return bool(np.all(np.abs(hb - wz) <= tol))


def check_generalized(source, channel, hb_values, tol=CLOSED_FORM_TOL):
    """Does the channel's cumulative rate vector equal the R_HB sequence?

    Returns ``(ok, residuals)`` with one absolute residual per stage.
    """
    hb = np.atleast_1d(np.asarray(hb_values, dtype=float))
    cum = rate_vector(source, channel)
    if len(cum) != len(hb):
        raise ValueError("hb_values length must equal the number of stages")
    resid = np.abs(cum - hb)
    return bool(np.all(resid <= tol)), resid


def verdict_combined(strict_ok, generalized_ok, necessary_ok, residuals=None) -> SrVerdict:
    """Combine independently measured verdicts.

    Strict refinability holds exactly when generalized refinability and the
    necessary condition both hold; ``consistent`` is False when the measured
    verdicts disagree with that equivalence.
    """
    expected = bool(generalized_ok and necessary_ok)
    return SrVerdict(
        strict=bool(strict_ok),
        generalized=bool(generalized_ok),
        necessary=bool(necessary_ok),
        residuals=dict(residuals or {}),
        consistent=bool(strict_ok) == expected,
    )


def _achievable_by_witness(cum_target, witness_cum, tol):
    cum_target = np.asarray(cum_target, dtype=float)
    individual = np.diff(cum_target, prepend=0.0)
    return bool(np.all(individual >= -tol) and np.all(cum_target >= witness_cum - tol))


def dsbs_verdict(params: dsbs.DsbsParams, tol=CLOSED_FORM_TOL, hb=None) -> SrVerdict:
    """Refinability verdict for a DSBS point.

    ``strict`` is measured directly: the Wyner-Ziv rate vector must be
    non-negative stage-wise and dominate the cumulative rates of the R_HB
    witness channel.
    """
    hb = hb or dsbs.hb_rate(params)
    src = dsbs.dsbs_source(params.p)
    if hb.region == "I-B":
        ch = dsbs.cascade_test_channel(params.p, params.D1, params.D2)
    else:
        ch = dsbs.build_test_channel(params.p, hb.d1_effective, hb.witness)
    hb_seq = np.array([dsbs._first_stage_rate(params.D1), hb.rate])
    wz_seq = np.array([dsbs._first_stage_rate(params.D1), dsbs.wz_rate_binary(params.p, params.D2)])
    gen_ok, gen_res = check_generalized(src, ch, hb_seq, tol)
    excess = float(np.max(ch.distortions(src, dsbs.HAMMING) - [params.D1, params.D2]))
    gen_ok = gen_ok and excess <= tol
    nec_ok = check_necessary_condition(hb_seq, wz_seq, tol)
    strict_ok = excess <= tol and _achievable_by_witness(wz_seq, rate_vector(src, ch), tol)
    res = {f"generalized[m={m + 1}]": r for m, r in enumerate(gen_res)}
    res["necessary_gap"] = float(np.max(np.abs(hb_seq - wz_seq)))
    res["distortion_excess"] = max(excess, 0.0)
    return verdict_combined(strict_ok, gen_ok, nec_ok, res)


def gauss_verdict(params: gaussian.GaussParams, tol=CLOSED_FORM_TOL) -> SrVerdict:
    """Refinability verdict for a two-stage Gaussian point."""
    vz1, vz2 = gaussian.region_test_channel(params)
    ach = gaussian.channel_rates(params, vz1, vz2)
    witness_cum = np.array([ach.r1, ach.sumrate])
    hb_seq = np.array([gaussian.wz_rate_gauss_stage1(params), gaussian.hb_rate_gauss(params)])
    wz_seq = np.array([gaussian.wz_rate_gauss_stage1(params), gaussian.wz_rate_gauss_stage2(params)])
    scale = max(params.D1, params.D2, 1.0)
    excess = max(ach.d1 - params.D1, ach.d2 - params.D2)
    met = excess <= tol * scale
    gen_res = np.abs(witness_cum - hb_seq)
    gen_ok = met and bool(np.all(gen_res <= tol))
    nec_ok = check_necessary_condition(hb_seq, wz_seq, tol)
    strict_ok = met and _achievable_by_witness(wz_seq, witness_cum, tol)
    res = {f"generalized[m={m + 1}]": r for m, r in enumerate(gen_res)}
    res["necessary_gap"] = float(np.max(np.abs(hb_seq - wz_seq)))
    res["distortion_excess"] = max(excess, 0.0)
    return verdict_combined(strict_ok, gen_ok, nec_ok, res)
