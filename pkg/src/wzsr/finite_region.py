"""Rate regions for finite-alphabet sources with degraded side informations.

A source is a joint pmf over ``(X, Y1, ..., YN)`` with
``X - YN - ... - Y1`` Markov.  A test channel is a conditional law
``P(w1..wN | x)`` plus one deterministic decoder per stage.  The region of
achievable rate vectors is described through cumulative sums

    sum_{i<=m} R_i >= sum_{i<=m} I(X; W_i | W_1..W_{i-1}, Y_i)

so most functions here work with cumulative ("sum-rate") vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .probkit import JointPmf, cond_mutual_info, markov_check

DEFAULT_DEGRADEDNESS_TOL = 1e-10
FEASIBILITY_SLACK = 1e-6


class InfeasibleError(ValueError):
    """No test channel meeting the distortion targets was found."""


def y_name(m):
    return f"Y{m}"


def w_name(m):
    return f"W{m}"


@dataclass(frozen=True)
class DegradedSource:
    """Joint law of (X, Y1..YN) whose side informations are degraded.

    The pmf axes are renamed to ``X, Y1, ..., YN`` in the order given.
    Construction fails when ``X - YN - ... - Y1`` is violated by more than
    ``degradedness_tol`` bits.
    """

    pmf: JointPmf
    degradedness_tol: float = DEFAULT_DEGRADEDNESS_TOL

    def __post_init__(self):
        n = len(self.pmf.names) - 1
        if n < 1:
            raise ValueError("a source needs X and at least one side information")
        names = ("X",) + tuple(y_name(m) for m in range(1, n + 1))
        pmf = JointPmf(names, self.pmf.table)
        object.__setattr__(self, "pmf", pmf)
        ok, worst = self.degradedness()
        if not ok:
            raise DegradednessError(worst)

    @property
    def n_stages(self):
        return len(self.pmf.names) - 1

    @property
    def x_size(self):
        return self.pmf.table.shape[0]

    def degradedness(self):
        chain = ["X"] + [y_name(m) for m in range(self.n_stages, 0, -1)]
        return markov_check(self.pmf, chain, self.degradedness_tol)


class DegradednessError(ValueError):
    def __init__(self, worst):
        self.max_violation = worst
        super().__init__(f"side informations are not degraded: max violation {worst:.3e} bits")


def cardinality_bounds(x_size, cards):
    """Upper bounds on |W_m| for the given |X| and candidate cardinalities."""
    n = len(cards)
    bounds = [x_size + 2 * n - 1]
    for m in range(2, n + 1):
        bounds.append(x_size * math.prod(cards[: m - 1]) + 2 * n - 2 * m - 1)
    return bounds


@dataclass
class TestChannel:
    """Conditional law ``cond[x, w1, ..., wN]`` and per-stage decoders.

    ``context`` selects the decoder argument: ``"own"`` uses
    ``(W_m, Y_m)``, ``"full"`` uses ``(W_1, ..., W_m, Y_m)``.  A decoder
    is an integer array indexed by the context tuple, Y last.
    """

    __test__ = False

    cond: np.ndarray
    decoders: Optional[list] = None
    context: str = "full"

    def __post_init__(self):
        self.cond = np.asarray(self.cond, dtype=float)
        if self.cond.ndim < 2:
            raise ValueError("cond needs an X axis and at least one W axis")
        if self.context not in ("own", "full"):
            raise ValueError(f"unknown decoder context {self.context!r}")
        if np.any(self.cond < -1e-12):
            raise ValueError("negative conditional probability")
        self.cond = np.clip(self.cond, 0.0, None)
        rows = self.cond.reshape(self.cond.shape[0], -1).sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise ValueError(f"conditional slices must sum to 1, got {rows}")

    @property
    def n_stages(self):
        return self.cond.ndim - 1

    @property
    def cards(self):
        return tuple(self.cond.shape[1:])

    def joint(self, source: DegradedSource) -> JointPmf:
        """Joint pmf over ``X, Y1..YN, W1..WN``."""
        if source.n_stages != self.n_stages:
            raise ValueError(
                f"channel has {self.n_stages} stages, source has {source.n_stages}"
            )
        if source.x_size != self.cond.shape[0]:
            raise ValueError("channel input alphabet does not match |X|")
        n = self.n_stages
        src = source.pmf.table
        table = src.reshape(src.shape + (1,) * n) * self.cond.reshape(
            (self.cond.shape[0],) + (1,) * n + self.cards
        )
        names = source.pmf.names + tuple(w_name(m) for m in range(1, n + 1))
        return JointPmf(names, table / table.sum())

    def context_names(self, m):
        ws = [w_name(m)] if self.context == "own" else [w_name(i) for i in range(1, m + 1)]
        return ws + [y_name(m)]

    def distortions(self, source, distortion):
        """Expected distortion of each stage under the stored decoders."""
        if self.decoders is None:
            raise ValueError("channel has no decoders; use optimal_decoder")
        joint = self.joint(source)
        d = np.asarray(distortion, dtype=float)
        out = []
        for m in range(1, self.n_stages + 1):
            p = joint.marginal(["X"] + self.context_names(m))
            dec = np.asarray(self.decoders[m - 1])
            cost = d[:, dec]  # (|X|, ctx...)
            out.append(float((p * cost).sum()))
        return np.array(out)


def optimal_decoder(source, cond, m, distortion, context="full"):
    """Expected-distortion minimizing decoder for stage ``m``.

    Returns the decoder table (indexed by the context, Y last) and the
    achieved distortion.  Ties go to the smallest reconstruction index;
    zero-probability contexts decode to symbol 0.
    """
    channel = cond if isinstance(cond, TestChannel) else TestChannel(cond, context=context)
    if channel.context != context:
        channel = TestChannel(channel.cond, context=context)
    joint = channel.joint(source)
    p = joint.marginal(["X"] + channel.context_names(m))
    d = np.asarray(distortion, dtype=float)
    # expected[xhat, ctx...] = sum_x p[x, ctx] d[x, xhat]
    expected = np.tensordot(d.T, p, axes=([1], [0]))
    dec = np.argmin(expected, axis=0)
    return dec, float(expected.min(axis=0).sum())


def with_optimal_decoders(source, channel: TestChannel, distortion):
    """Copy of ``channel`` carrying optimal decoders, plus the distortions."""
    decs, dists = [], []
    for m in range(1, channel.n_stages + 1):
        dec, dist = optimal_decoder(source, channel, m, distortion, channel.context)
        decs.append(dec)
        dists.append(dist)
    return TestChannel(channel.cond, decs, channel.context), np.array(dists)


def stage_terms(source, channel):
    """Per-stage terms I(X; W_m | W_1..W_{m-1}, Y_m)."""
    joint = channel.joint(source)
    n = channel.n_stages
    return np.array(
        [
            cond_mutual_info(
                joint, "X", w_name(m), [w_name(i) for i in range(1, m)] + [y_name(m)]
            )
            for m in range(1, n + 1)
        ]
    )


def rate_vector(source, channel):
    """Cumulative sum-rate vector of a test channel, in bits."""
    return np.cumsum(stage_terms(source, channel))


@dataclass
class RegionSample:
    """One point on (or above) the boundary of the sum-rate region."""

    distortions: np.ndarray
    cum_rates: np.ndarray
    witness: Optional[TestChannel] = None
    achieved_distortions: Optional[np.ndarray] = None
    certified: bool = False
    restarts_used: int = 0
    seed: int = 0

    def __post_init__(self):
        self.distortions = np.asarray(self.distortions, dtype=float)
        self.cum_rates = np.asarray(self.cum_rates, dtype=float)
        if np.any(self.cum_rates < -1e-12) or np.any(np.diff(self.cum_rates) < -1e-12):
            raise ValueError(f"cumulative rates must be non-negative and non-decreasing: {self.cum_rates}")

    @property
    def rates(self):
        """Individual stage rates R_m."""
        return np.diff(self.cum_rates, prepend=0.0)

    def to_dict(self):
        return {
            "distortions": [float(v) for v in self.distortions],
            "cum_rates_bits": [float(v) for v in self.cum_rates],
            "witness_cond": None if self.witness is None else self.witness.cond.tolist(),
            "certified": bool(self.certified),
            "restarts_used": int(self.restarts_used),
            "seed": int(self.seed),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


# -- batched evaluation used by the optimizer -------------------------------


class _BatchEvaluator:
    """Rates and optimal-decoder distortions for a batch of channels."""

    def __init__(self, source, distortion, context="full"):
        self.n = source.n_stages
        self.src = source.pmf.table
        self.d = np.asarray(distortion, dtype=float)
        self.context = context

    def _h(self, joint, keep):
        # joint axes: batch, X, Y1..YN, W1..WN
        drop = tuple(a for a in range(1, joint.ndim) if a not in keep)
        m = joint.sum(axis=drop) if drop else joint
        m = m.reshape(m.shape[0], -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(m > 0, m * np.log2(np.where(m > 0, m, 1.0)), 0.0)
        return -t.sum(axis=1)

    def __call__(self, cond):
        n = self.n
        b = cond.shape[0]
        xs = cond.shape[1]
        joint = self.src.reshape((1,) + self.src.shape + (1,) * n) * cond.reshape(
            (b, xs) + (1,) * n + cond.shape[2:]
        )
        ax_x = 1
        ax_y = lambda m: 1 + m
        ax_w = lambda m: 1 + n + m
        terms = np.zeros((b, n))
        dists = np.zeros((b, n))
        for m in range(1, n + 1):
            prev = [ax_w(i) for i in range(1, m)]
            c = prev + [ax_y(m)]
            terms[:, m - 1] = (
                self._h(joint, [ax_x] + c)
                + self._h(joint, c + [ax_w(m)])
                - self._h(joint, [ax_x] + c + [ax_w(m)])
                - (self._h(joint, c))
            )
            ctx = [ax_w(m)] if self.context == "own" else prev + [ax_w(m)]
            ctx = ctx + [ax_y(m)]
            keep = [ax_x] + ctx
            drop = tuple(a for a in range(1, joint.ndim) if a not in keep)
            p = joint.sum(axis=drop).reshape(b, xs, -1)
            # expected[b, xhat, ctx] = sum_x p[b, x, ctx] d[x, xhat]
            expected = np.einsum("bxc,xk->bkc", p, self.d)
            dists[:, m - 1] = expected.min(axis=1).sum(axis=1)
        return np.cumsum(np.maximum(terms, 0.0), axis=1), dists


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_lockstep(f, lo, hi, iters):
    """Vectorized golden-section search; each batch row has its own bracket.

    ``f`` maps an array of shape (2, B) of step sizes to objective values
    of the same shape.
    """
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = f(np.stack([c, d]))
        left = fc <= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    return 0.5 * (a + b)


@dataclass
class OptimizerConfig:
    """Knobs for :func:`optimize_region`."""

    restarts: int = 64
    seed: int = 0
    lambda0: float = 10.0
    max_doublings: int = 40
    sweeps_per_stage: int = 6
    golden_iters: int = 24
    slack: float = FEASIBILITY_SLACK
    context: str = "full"
    tol: float = 1e-10


def _random_channels(rng, n, xs, cards):
    k = int(np.prod(cards))
    raw = rng.dirichlet(np.ones(k), size=(n, xs))
    return raw.reshape((n, xs) + tuple(cards))


def _constant_channel(xs, cards):
    cond = np.zeros((xs,) + tuple(cards))
    cond[(slice(None),) + (0,) * len(cards)] = 1.0
    return cond


def optimize_region(source, distortion, D, cards, config=None, init=None):
    """Search for a test channel minimizing the final cumulative rate.

    Multi-start coordinate descent over ``P(w1..wN | x)``.  Each coordinate
    move transfers mass between two cells of one conditional row; its size
    is chosen by golden-section search on

        rate_N + lam * sum_m max(0, d_m - D_m)**2

    with ``lam`` doubled from ``config.lambda0`` while a restart remains
    infeasible.  All restarts run in lockstep as one batch.  The first
    restart is the uninformative channel, then any ``init`` channels, then
    Dirichlet draws from ``config.seed``.

    The result is an upper bound on the region boundary, so
    ``certified`` is always False.

    Raises
    ------
    InfeasibleError
        If no restart meets every distortion within ``config.slack``.
    """
    cfg = config or OptimizerConfig()
    D = np.asarray(D, dtype=float)
    cards = tuple(int(c) for c in cards)
    n, xs = source.n_stages, source.x_size
    if len(cards) != n or len(D) != n:
        raise ValueError(f"need {n} cardinalities and distortions, got {cards}, {D}")
    if np.any(D < 0):
        raise ValueError("distortion targets must be non-negative")
    bounds = cardinality_bounds(xs, cards)
    if any(c < 1 or c > bd for c, bd in zip(cards, bounds)):
        raise ValueError(f"cardinalities {cards} exceed bounds {bounds}")

    evaluator = _BatchEvaluator(source, distortion, cfg.context)
    starts = [_constant_channel(xs, cards)]
    for ch in init or []:
        c = ch.cond if isinstance(ch, TestChannel) else np.asarray(ch, dtype=float)
        if c.shape != (xs,) + cards:
            raise ValueError(f"init channel shape {c.shape} != {(xs,) + cards}")
        starts.append(c)
    rng = np.random.default_rng(cfg.seed)
    n_random = max(cfg.restarts - len(starts), 0)
    batch = np.concatenate(
        [np.stack(starts)] + ([_random_channels(rng, n_random, xs, cards)] if n_random else [])
    )
    B = batch.shape[0]
    k = int(np.prod(cards))
    flat = batch.reshape(B, xs, k).copy()

    lam = np.full(B, cfg.lambda0)

    def objective(fl, lam_):
        cum, dist = evaluator(fl.reshape((fl.shape[0], xs) + cards))
        viol = np.maximum(dist - D, 0.0)
        return cum[:, -1] + lam_ * (viol**2).sum(axis=1), cum, dist

    pairs = [(x, i, j) for x in range(xs) for i in range(k) for j in range(i + 1, k)]
    obj, cum, dist = objective(flat, lam)
    for _ in range(cfg.max_doublings + 1):
        for _sweep in range(cfg.sweeps_per_stage):
            before = obj.copy()
            for x, i, j in pairs:
                lo = -flat[:, x, j]
                hi = flat[:, x, i].copy()
                active = hi - lo > 1e-15
                if not active.any():
                    continue

                def along(t, x=x, i=i, j=j):
                    trial = np.concatenate([flat, flat])
                    ts = t.reshape(-1)
                    trial[:, x, i] -= ts
                    trial[:, x, j] += ts
                    np.clip(trial, 0.0, None, out=trial)
                    return objective(trial, np.concatenate([lam, lam]))[0].reshape(2, -1)

                t = _golden_lockstep(along, lo, hi, cfg.golden_iters)
                t = np.where(active, t, 0.0)
                trial = flat.copy()
                trial[:, x, i] -= t
                trial[:, x, j] += t
                np.clip(trial, 0.0, None, out=trial)
                new_obj, new_cum, new_dist = objective(trial, lam)
                better = new_obj < obj
                flat[better] = trial[better]
                obj = np.where(better, new_obj, obj)
                cum[better] = new_cum[better]
                dist[better] = new_dist[better]
            if np.all(before - obj <= cfg.tol):
                break
        infeasible = np.any(dist > D + cfg.slack, axis=1)
        if not infeasible.any():
            break
        lam = np.where(infeasible, lam * 2.0, lam)
        obj, cum, dist = objective(flat, lam)

    feasible = np.all(dist <= D + cfg.slack, axis=1)
    if not feasible.any():
        worst = float(np.min(np.max(dist - D, axis=1)))
        raise InfeasibleError(
            f"no restart met the distortion targets {D.tolist()}; "
            f"smallest worst-stage excess {worst:.3e}"
        )
    final = np.where(feasible, cum[:, -1], np.inf)
    best = int(np.argmin(final))  # first index wins ties
    cond = flat[best].reshape((xs,) + cards)
    cond = cond / cond.reshape(xs, -1).sum(axis=1).reshape((xs,) + (1,) * n)
    witness, achieved = with_optimal_decoders(
        source, TestChannel(cond, context=cfg.context), distortion
    )
    return RegionSample(
        distortions=D,
        cum_rates=rate_vector(source, witness),
        witness=witness,
        achieved_distortions=achieved,
        certified=False,
        restarts_used=B,
        seed=cfg.seed,
    )


# -- sum-incremental closure -------------------------------------------------


def is_implied(rates, samples, tol=0.0):
    """True if the individual-rate vector ``rates`` is implied by a sample.

    A vector is implied when its cumulative sums dominate some sample's
    cumulative profile at every stage and all its entries are non-negative.
    """
    r = np.asarray(rates, dtype=float)
    if np.any(r < -tol):
        return False
    cum = np.cumsum(r)
    return any(np.all(cum >= s.cum_rates - tol) for s in samples)


@dataclass
class ClosureReport:
    consistent: bool
    checked: int
    violations: list = field(default_factory=list)


def sum_incremental_closure(samples, queries=None, tol=1e-12):
    """Check that sum-incremental moves preserve achievability.

    For every sample the probes are: the sample itself, the vector with all
    rate moved into stage 1, and each single move of rate from stage m+1
    into stage m.  Each probe dominates the sample cumulatively and must be
    reported implied.  ``queries`` adds explicit ``(rates, expected)`` pairs.
    """
    if samples:
        D0 = samples[0].distortions
        if any(not np.allclose(s.distortions, D0) for s in samples):
            raise ValueError("samples must share a distortion vector")
    violations = []
    checked = 0
    for idx, s in enumerate(samples):
        r = s.rates
        probes = [r.copy()]
        front = np.zeros_like(r)
        front[0] = r.sum()
        probes.append(front)
        for m in range(len(r) - 1):
            moved = r.copy()
            moved[m] += moved[m + 1]
            moved[m + 1] = 0.0
            probes.append(moved)
        for probe in probes:
            checked += 1
            if not is_implied(probe, samples, tol):
                violations.append((idx, probe.tolist()))
    for rates, expected in queries or []:
        checked += 1
        if is_implied(rates, samples, tol) != expected:
            violations.append(("query", list(rates)))
    return ClosureReport(not violations, checked, violations)


# -- rate splitting and the individual-rate witness -------------------------


def _split_joint(source, channel, u):
    """Joint over X, Y*, W1, W2, V with V = W2 when J=1 else a constant."""
    base = channel.joint(source)
    t = base.table
    k2 = channel.cards[1]
    # V alphabet: 0..k2-1 copies W2, k2 is the constant symbol
    kernel = np.zeros((k2, k2 + 1))
    kernel[np.arange(k2), np.arange(k2)] = u
    kernel[:, k2] = 1.0 - u
    table = t[..., None] * kernel.reshape((1,) * (t.ndim - 1) + kernel.shape)
    return JointPmf(base.names + ("V",), table)


def _split_info(source, channel, u):
    joint = _split_joint(source, channel, u)
    return cond_mutual_info(joint, "X", "V", ["W1", "Y2"]), joint


@dataclass
class SplitResult:
    u: float
    info_v: float
    info_rest: float
    info_total: float
    joint: JointPmf

    @property
    def additivity_residual(self):
        return abs(self.info_v + self.info_rest - self.info_total)


def rate_split(source, channel, delta_r1, xtol=1e-14):
    """Find the time-sharing probability u with I(X; V | W1, Y2) = delta_r1.

    ``V = (W2(J), J)`` where ``J ~ Bernoulli(u)`` is independent of
    everything and ``W2(J)`` is W2 when J = 1 and a constant otherwise.
    """
    if channel.n_stages != 2:
        raise ValueError("rate_split needs a two-stage channel")
    total = cond_mutual_info(channel.joint(source), "X", "W2", ["W1", "Y2"])
    if delta_r1 < -1e-12 or delta_r1 > total + 1e-12:
        raise ValueError(f"delta_r1={delta_r1} outside [0, {total}]")
    delta_r1 = min(max(delta_r1, 0.0), total)
    if delta_r1 <= 0.0:
        u = 0.0
    elif delta_r1 >= total:
        u = 1.0
    else:
        u = optimize.brentq(
            lambda s: _split_info(source, channel, s)[0] - delta_r1, 0.0, 1.0, xtol=xtol
        )
    info_v, joint = _split_info(source, channel, u)
    rest = cond_mutual_info(joint, "X", "W2", ["W1", "V", "Y2"])
    return SplitResult(u, info_v, rest, total, joint)


@dataclass
class IndividualWitness:
    """Three-variable witness (V11, V12, V22) for individual stage rates."""

    joint: JointPmf
    branch: str
    r1: float
    r2: float
    r1_required: float
    r2_required: float
    u: Optional[float] = None

    @property
    def slack(self):
        return min(self.r1 - self.r1_required, self.r2 - self.r2_required)


def individual_rate_terms(joint):
    """Right-hand sides of the two individual-rate inequalities.

    Returns ``(I(X;V11|Y1) + I(X;V12|V11,Y2), I(X;V22|V11,V12,Y2))``.
    """
    r1 = cond_mutual_info(joint, "X", "V11", ["Y1"]) + cond_mutual_info(
        joint, "X", "V12", ["V11", "Y2"]
    )
    r2 = cond_mutual_info(joint, "X", "V22", ["V11", "V12", "Y2"])
    return r1, r2


def sumrate_to_individual_witness(source, channel, r1, r2, tol=1e-9):
    """Convert a sum-rate witness (W1, W2) into (V11, V12, V22).

    ``(r1, r2)`` must satisfy ``r1 >= I(X;W1|Y1)`` and
    ``r1 + r2 >= I(X;W1|Y1) + I(X;W2|W1,Y2)``.
    """
    if channel.n_stages != 2:
        raise ValueError("needs a two-stage channel")
    c = rate_vector(source, channel)
    if r1 < c[0] - tol or r1 + r2 < c[1] - tol or r2 < -tol:
        raise ValueError(f"(r1, r2)=({r1}, {r2}) is outside the sum-rate region {c.tolist()}")
    second = c[1] - c[0]
    delta = r1 - c[0]
    if delta < second:
        split = rate_split(source, channel, max(delta, 0.0))
        t = split.joint
        # axes: X, Y1, Y2, W1, W2, V -> V11=W1, V12=V, V22=W2
        joint = JointPmf(("X", "Y1", "Y2", "V11", "V22", "V12"), t.table)
        branch, u = "split", split.u
    else:
        base = channel.joint(source).table
        k2 = channel.cards[1]
        copy = base[..., None] * np.eye(k2).reshape((1,) * (base.ndim - 1) + (k2, k2))
        joint = JointPmf(("X", "Y1", "Y2", "V11", "V22", "V12"), copy)
        branch, u = "copy", None
    need1, need2 = individual_rate_terms(joint)
    if r1 < need1 - tol or r2 < need2 - tol:
        raise ArithmeticError(
            f"witness check failed: r1={r1} vs {need1}, r2={r2} vs {need2}"
        )
    return IndividualWitness(joint, branch, r1, r2, need1, need2, u)
