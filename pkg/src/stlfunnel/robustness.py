"""Quantitative (robust) semantics for the temporal-logic fragment.

Robustness is a signed satisfaction margin: positive means the formula holds,
and the magnitude measures how far the signal is from the satisfaction
boundary. Atoms evaluate their predicate expression directly; Boolean
connectives map to min/max; temporal operators take min/max over the discrete
steps of their (inclusive) interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .stl.formula import (
    FG, And, Atom, F, Formula, G, Not, Or, TrueFormula, formula_horizon, is_nontemporal,
)

__all__ = ["RhoBounds", "rho_pointwise", "rho_trace", "estimate_rho_bounds", "TemporalInPointwiseError"]

StateVector = Mapping[str, float]


class TemporalInPointwiseError(ValueError):
    """A temporal operator reached the pointwise evaluator."""


@dataclass(frozen=True)
class RhoBounds:
    """Extrema of a non-temporal sub-formula's robustness over a state region."""

    rho_min: float
    rho_max: float

    def __post_init__(self):
        if self.rho_min > self.rho_max:
            raise ValueError(f"rho_min {self.rho_min} exceeds rho_max {self.rho_max}")


def rho_pointwise(psi: Formula, s: StateVector) -> float:
    """Robustness of a non-temporal formula at a single state.

    Accepts numpy arrays as state components and broadcasts elementwise.
    """
    if isinstance(psi, TrueFormula):
        return math.inf
    if isinstance(psi, Atom):
        return psi.h.eval(s)
    if isinstance(psi, Not):
        return -rho_pointwise(psi.arg, s)
    if isinstance(psi, And):
        return np.minimum(rho_pointwise(psi.left, s), rho_pointwise(psi.right, s))
    if isinstance(psi, Or):
        return np.maximum(rho_pointwise(psi.left, s), rho_pointwise(psi.right, s))
    raise TemporalInPointwiseError(
        f"temporal operator {type(psi).__name__} in pointwise evaluation")


def rho_trace(phi: Formula, trace: Sequence[StateVector], t: int = 0) -> float:
    """Robustness of an arbitrary fragment formula over a discrete trace.

    The trace must extend to t + formula_horizon(phi); both interval endpoints
    are inclusive.
    """
    need = t + formula_horizon(phi)
    if need > len(trace) - 1:
        raise ValueError(
            f"trace of length {len(trace)} too short: formula requires step {need} "
            f"when evaluated at t={t}")
    return _rho_rec(phi, trace, t)


def _rho_rec(phi: Formula, trace: Sequence[StateVector], t: int) -> float:
    if isinstance(phi, TrueFormula):
        return math.inf
    if isinstance(phi, Atom):
        return float(phi.h.eval(trace[t]))
    if isinstance(phi, Not):
        return -_rho_rec(phi.arg, trace, t)
    if isinstance(phi, And):
        return min(_rho_rec(phi.left, trace, t), _rho_rec(phi.right, trace, t))
    if isinstance(phi, Or):
        return max(_rho_rec(phi.left, trace, t), _rho_rec(phi.right, trace, t))
    if isinstance(phi, F):
        return max(_rho_rec(phi.body, trace, u)
                   for u in range(t + phi.interval.lo, t + phi.interval.hi + 1))
    if isinstance(phi, G):
        return min(_rho_rec(phi.body, trace, u)
                   for u in range(t + phi.interval.lo, t + phi.interval.hi + 1))
    if isinstance(phi, FG):
        return max(
            min(_rho_rec(phi.body, trace, v) for v in range(u + phi.c2, u + phi.b + 1))
            for u in range(t + phi.a, t + phi.c1 + 1))
    raise TypeError(f"unknown formula node {type(phi).__name__}")


def estimate_rho_bounds(psi: Formula, box: Mapping[str, tuple[float, float]],
                        grid_n: int) -> RhoBounds:
    """Min/max robustness of a non-temporal formula over a uniform grid.

    box maps every free variable of psi to a finite [lo, hi] range; the grid
    has grid_n points per dimension. Callers with analytic extrema should
    bypass this and supply bounds directly.
    """
    if not is_nontemporal(psi):
        raise TemporalInPointwiseError("bounds estimation requires a non-temporal formula")
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")

    names = sorted(_free_variables(psi))
    for name in names:
        if name not in box:
            raise ValueError(f"box is missing variable {name!r}")
    for name, (lo, hi) in box.items():
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ValueError(f"invalid box for {name!r}: [{lo}, {hi}]")

    if not names:
        value = float(rho_pointwise(psi, {}))
        return RhoBounds(value, value)

    axes = [np.linspace(box[n][0], box[n][1], grid_n) for n in names]
    grids = np.meshgrid(*axes, indexing="ij")
    env = {n: g for n, g in zip(names, grids)}
    values = np.asarray(rho_pointwise(psi, env), dtype=float)
    return RhoBounds(float(values.min()), float(values.max()))


def _free_variables(psi: Formula) -> frozenset[str]:
    if isinstance(psi, TrueFormula):
        return frozenset()
    if isinstance(psi, Atom):
        return psi.h.variables()
    if isinstance(psi, Not):
        return _free_variables(psi.arg)
    if isinstance(psi, (And, Or)):
        return _free_variables(psi.left) | _free_variables(psi.right)
    if isinstance(psi, (F, G)):
        return _free_variables(psi.body)
    if isinstance(psi, FG):
        return _free_variables(psi.body)
    raise TypeError(f"unknown formula node {type(psi).__name__}")
