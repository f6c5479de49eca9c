"""Finite joint distributions, information measures and binary-source helpers.

All information quantities are in bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

BOUNDARY_CLAMP = 1e-14
MASS_TOL = 1e-12


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or bracket its target."""


def _as_prob(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any(u < -BOUNDARY_CLAMP) or np.any(u > 1 + BOUNDARY_CLAMP):
        raise ValueError(f"{name} must lie in [0, 1], got {u}")
    return np.clip(u, 0.0, 1.0)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _xlog2x(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] * np.log2(u[pos])
    return out


def binary_entropy(u):
    """Binary entropy h(u) in bits, with h(0) = h(1) = 0."""
    u = _as_prob(u)
    return _out(-_xlog2x(u) - _xlog2x(1.0 - u))


def binary_convolve(u, v):
    """Crossover probability of two cascaded BSCs: u(1-v) + v(1-u)."""
    u = _as_prob(u, "u")
    v = _as_prob(v, "v")
    return _out(u * (1.0 - v) + v * (1.0 - u))


def _check_p(p):
    p = float(p)
    if not 0.0 <= p < 0.5:
        raise ValueError(f"crossover probability must satisfy 0 <= p < 0.5, got {p}")
    return p


def g_func(p, u):
    """G(u) = h(p*u) - h(u).

    Strictly convex on [0, 1], symmetric about 0.5 where it vanishes.
    """
    p = _check_p(p)
    u = _as_prob(u)
    return _out(binary_entropy(binary_convolve(p, u)) - binary_entropy(u))


def g_deriv(p, u):
    """Analytic derivative dG/du on the open interval (0, 1)."""
    p = _check_p(p)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("g_deriv is defined on the open interval (0, 1)")
    s = p + u - 2.0 * p * u
    # h'(x) = log2((1-x)/x); d(p*u)/du = 1 - 2p
    return _out((1.0 - 2.0 * p) * np.log2((1.0 - s) / s) - np.log2((1.0 - u) / u))


def _tangent_residual(p, d):
    # zero where the line through (p, 0) touches G at d
    return g_func(p, d) - (d - p) * g_deriv(p, d)


def critical_distortion(p, xtol=1e-12):
    """Critical distortion d_c in (0, p).

    Solves G(d)/(d - p) = G'(d), i.e. the point where the tangent to G passes
    through (p, 0), by bisection on ``G(d) - (d - p) G'(d)``.
    """
    p = float(p)
    if not 0.0 < p < 0.5:
        raise ValueError(f"critical_distortion needs 0 < p < 0.5, got {p}")
    lo, hi = 1e-9, p - 1e-9
    r_lo, r_hi = _tangent_residual(p, lo), _tangent_residual(p, hi)
    if not np.sign(r_lo) != np.sign(r_hi):
        raise NumericalError(
            f"d_c not bracketed for p={p}: residual({lo:g})={r_lo:g}, residual({hi:g})={r_hi:g}"
        )
    return optimize.bisect(lambda d: _tangent_residual(p, d), lo, hi, xtol=xtol, maxiter=500)


@dataclass(frozen=True)
class JointPmf:
    """Dense probability table over named finite alphabets.

    ``table`` has one axis per entry of ``names``, in the same order.
    """

    names: tuple
    table: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        table = np.asarray(self.table, dtype=float)
        if len(set(names)) != len(names):
            raise ValueError(f"axis names must be unique, got {names}")
        if table.ndim != len(names):
            raise ValueError(f"table has {table.ndim} axes but {len(names)} names")
        if any(s < 1 for s in table.shape):
            raise ValueError("alphabet sizes must be >= 1")
        if np.any(table < 0):
            if table.min() < -MASS_TOL:
                raise ValueError(f"negative probability {table.min()}")
            table = np.clip(table, 0.0, None)
        total = table.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total!r} differs from 1 by more than {MASS_TOL}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_axes(cls, axes: Sequence[tuple], table) -> "JointPmf":
        """Build from ``[(name, size), ...]`` and a flat row-major table."""
        names = [a[0] for a in axes]
        shape = tuple(int(a[1]) for a in axes)
        return cls(tuple(names), np.asarray(table, dtype=float).reshape(shape))

    @property
    def axes(self):
        return [(n, s) for n, s in zip(self.names, self.table.shape)]

    def size(self, name):
        return self.table.shape[self._index(name)]

    def _index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; axes are {self.names}") from None

    def marginal(self, names: Iterable[str]) -> np.ndarray:
        """Marginal table over ``names``, axes in the order given."""
        names = list(names)
        idx = [self._index(n) for n in names]
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated variable in {names}")
        drop = tuple(i for i in range(len(self.names)) if i not in idx)
        m = self.table.sum(axis=drop) if drop else self.table
        kept = sorted(idx)
        return np.transpose(m, [kept.index(i) for i in idx]) if idx else np.asarray(m)

    def to_json(self) -> str:
        return json.dumps(
            {
                "axes": [{"name": n, "size": int(s)} for n, s in self.axes],
                "table": [float(x) for x in self.table.ravel()],
            }
        )

    @classmethod
    def from_json(cls, text) -> "JointPmf":
        obj = json.loads(text) if isinstance(text, str) else text
        return cls.from_axes([(a["name"], a["size"]) for a in obj["axes"]], obj["table"])


def _entropy_of(table):
    return float(-_xlog2x(np.asarray(table).ravel()).sum())


def _as_list(v):
    if v is None:
        return []
    if isinstance(v, str):
        return [v]
    return list(v)


def entropy(pmf: JointPmf, vars) -> float:
    """Shannon entropy (bits) of the marginal on ``vars``."""
    return _entropy_of(pmf.marginal(_as_list(vars)))


def cond_mutual_info(pmf: JointPmf, a, b, given=()) -> float:
    """I(A; B | C) in bits, from marginal entropies.

    Tiny negative values from cancellation are clipped to zero.
    """
    a, b, c = _as_list(a), _as_list(b), _as_list(given)
    sa, sb, sc = set(a), set(b), set(c)
    if len(sa) != len(a) or len(sb) != len(b) or len(sc) != len(c):
        raise ValueError("repeated variable within an argument")
    if sa & sb or sa & sc or sb & sc:
        raise ValueError(f"variable sets must be disjoint: {a}, {b}, {c}")
    if not a or not b:
        return 0.0
    val = (
        entropy(pmf, a + c)
        + entropy(pmf, b + c)
        - entropy(pmf, a + b + c)
        - (entropy(pmf, c) if c else 0.0)
    )
    return max(val, 0.0)


def markov_check(pmf: JointPmf, chain, tol=1e-10):
    """Check that ``chain`` forms a Markov chain A1 - A2 - ... - Ak.

    Each chain element is a variable name or a group of names.  For every
    interior position i the check measures I(A1..A_{i-1}; A_{i+1} | A_i).

    Returns
    -------
    ok : bool
    worst : float
        Largest measured violation in bits.
    """
    groups = [_as_list(g) for g in chain]
    flat = [n for g in groups for n in g]
    if len(set(flat)) != len(flat):
        raise ValueError(f"chain variables must be distinct: {flat}")
    for n in flat:
        pmf._index(n)
    worst = 0.0
    for i in range(1, len(groups) - 1):
        past = [n for g in groups[:i] for n in g]
        worst = max(worst, cond_mutual_info(pmf, past, groups[i + 1], groups[i]))
    return worst <= tol, worst
