"""Source-channel separation feasibility over independent unconstrained DMCs.

Stage m is decodable when the cumulative channel budget sum_{i<=m} rho_i C_i
covers the cumulative source sum-rate required at that stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dmc:
    """Discrete memoryless channel with ``transition[x, y] = P(y | x)``."""

    transition: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        if t.ndim != 2 or min(t.shape) < 1:
            raise ValueError("transition must be a non-empty 2-D table")
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("each transition row must be a probability vector")
        object.__setattr__(self, "transition", t)

    @classmethod
    def bsc(cls, q):
        return cls(np.array([[1 - q, q], [q, 1 - q]]))

    @classmethod
    def bec(cls, e):
        return cls(np.array([[1 - e, e, 0.0], [0.0, e, 1 - e]]))


def _divergences(W, px):
    # D(W(.|x) || q) in bits for every input x, q the induced output law
    q = px @ W
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0, W / np.where(q > 0, q, 1.0), 1.0)
        return np.sum(np.where(W > 0, W * np.log2(ratio), 0.0), axis=1)


def channel_capacity(dmc: Dmc, tol=1e-9, max_iter=100_000) -> float:
    """Capacity in bits by Blahut-Arimoto alternating maximization.

    Starts from the uniform input law and stops once the standard bounds
    ``I(p) <= C <= max_x D(W(.|x) || pW)`` are within ``tol``.
    """
    W = dmc.transition
    px = np.full(W.shape[0], 1.0 / W.shape[0])
    lower = 0.0
    for _ in range(max_iter):
        d = _divergences(W, px)
        lower = float(px @ d)
        upper = float(d.max())
        if upper - lower <= tol:
            break
        px = px * np.exp2(d)
        px /= px.sum()
    return max(lower, 0.0)


@dataclass(frozen=True)
class ScInstance:
    """Per-channel capacities (bits/use), bandwidth factors and cumulative sum-rates."""

    capacities: np.ndarray
    rhos: np.ndarray
    sumrates: np.ndarray

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(getattr(self, f), dtype=float))
                for f in ("capacities", "rhos", "sumrates")]
        if len({len(a) for a in arrs}) != 1:
            raise ValueError(f"length mismatch: {[len(a) for a in arrs]}")
        for name, a in zip(("capacities", "rhos", "sumrates"), arrs):
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise ValueError(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, a)


@dataclass
class ScVerdict:
    capacities: np.ndarray
    rhos: np.ndarray
    cum_budget: np.ndarray
    cum_required: np.ndarray
    per_stage_ok: np.ndarray

    @property
    def overall_ok(self):
        return bool(np.all(self.per_stage_ok))

    def to_dict(self):
        return {
            "capacities_bits": self.capacities.tolist(),
            "rhos": self.rhos.tolist(),
            "cum_budget_bits": self.cum_budget.tolist(),
            "cum_required_bits": self.cum_required.tolist(),
            "per_stage_ok": [bool(v) for v in self.per_stage_ok],
            "overall_ok": self.overall_ok,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def check_sc_achievable(inst: ScInstance, tol=1e-9) -> ScVerdict:
    """Stage m passes iff sum_{i<=m} rho_i C_i >= sumrates[m] - tol."""
    budget = np.cumsum(inst.rhos * inst.capacities)
    ok = budget >= inst.sumrates - tol
    return ScVerdict(inst.capacities, inst.rhos, budget, inst.sumrates.copy(), ok)
