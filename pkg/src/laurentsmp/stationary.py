"""Stationary distribution expansions ``pi_i = e_i / E_ii``."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .expansion import (
    LaurentExpansion,
    add,
    div,
    embed_constant,
    format_rational,
    rebase_delta,
    scale,
    sum_many,
)
from .model import ModelError, SemiMarkovModel
from .reduction import HittingResult, _delta_star, hitting_time

__all__ = [
    "ConsistencyReport",
    "StationaryResult",
    "sojourn_expectation",
    "stationary",
    "stationary_all",
]


def sojourn_expectation(m: SemiMarkovModel, i: int) -> LaurentExpansion:
    """Expected sojourn time in ``i``: the sum of ``e_ij`` over ``Y_i``."""
    if i not in m.states:
        raise ModelError(f"unknown state {i}")
    return sum_many([m.e(i, j) for j in m.transition_set(i)])


def stationary(m: SemiMarkovModel, i: int, order: Sequence[int] | None = None) -> LaurentExpansion:
    return div(sojourn_expectation(m, i), hitting_time(m, i, order).expansion)


@dataclass(frozen=True)
class ConsistencyReport:
    """Coefficient identities that the stationary expansions must satisfy.

    ``sums[l]`` is the sum over states of the coefficient of ``eps**l`` for
    ``l`` in ``0..top``; it should be 1 at ``l = 0`` and 0 elsewhere.  The
    complement check compares ``pi_s`` with ``1 - sum_{j != s} pi_j``.
    """

    top: int
    sums: Mapping[int, Fraction]
    complement_state: int
    complement: LaurentExpansion
    complement_mismatches: tuple[int, ...]

    @property
    def zero_order_sum(self) -> Fraction:
        return self.sums[0]

    @property
    def zero_order_ok(self) -> bool:
        return self.sums[0] == 1

    @property
    def higher_order_ok(self) -> bool:
        return all(v == 0 for l, v in self.sums.items() if l > 0)

    @property
    def complement_ok(self) -> bool:
        return not self.complement_mismatches

    @property
    def ok(self) -> bool:
        return self.zero_order_ok and self.higher_order_ok and self.complement_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "commonTop": self.top,
            "zeroOrderSum": format_rational(self.sums[0]),
            "higherOrderSums": {str(l): format_rational(v) for l, v in self.sums.items() if l > 0},
            "zeroOrderOk": self.zero_order_ok,
            "higherOrderOk": self.higher_order_ok,
            "complementState": self.complement_state,
            "complement": self.complement.to_dict(),
            "complementOk": self.complement_ok,
            "complementMismatches": list(self.complement_mismatches),
        }


@dataclass(frozen=True)
class StationaryResult:
    per_state: Mapping[int, LaurentExpansion]
    rebased: Mapping[int, LaurentExpansion | None]
    hitting: Mapping[int, HittingResult]
    sojourn: Mapping[int, LaurentExpansion]
    delta_star: Fraction | None
    consistency: ConsistencyReport

    @property
    def orders(self) -> dict[int, tuple[int, ...]]:
        return {i: h.order for i, h in self.hitting.items()}

    def to_dict(self) -> dict:
        return {
            "perState": {str(i): pi.to_dict() for i, pi in self.per_state.items()},
            "rebased": {
                str(i): None if r is None else r.to_dict() for i, r in self.rebased.items()
            },
            "returnTimes": {str(i): h.expansion.to_dict() for i, h in self.hitting.items()},
            "exclusionOrders": {str(i): list(o) for i, o in self.orders.items()},
            "deltaStar": None if self.delta_star is None else format_rational(self.delta_star),
            "consistency": self.consistency.to_dict(),
        }


def _consistency(per_state: Mapping[int, LaurentExpansion], eps0: float) -> ConsistencyReport:
    states = sorted(per_state)
    top = min(pi.k for pi in per_state.values())
    sums = {
        l: sum((pi.coeff(l) for pi in per_state.values()), Fraction(0)) for l in range(0, top + 1)
    }
    s = states[0]
    others = [per_state[j] for j in states if j != s]
    if others:
        rest = sum_many(others)
        complement = add(embed_constant(1, 0, max(rest.k, 0), eps0), scale(-1, rest))
    else:
        complement = embed_constant(1, 0, max(per_state[s].k, 0), eps0)
    target = per_state[s]
    lo = min(complement.h, target.h)
    hi = min(complement.k, target.k)
    mismatches = tuple(l for l in range(lo, hi + 1) if complement.coeff(l) != target.coeff(l))
    return ConsistencyReport(top, sums, s, complement, mismatches)


def stationary_all(
    m: SemiMarkovModel, orders: Mapping[int, Sequence[int]] | None = None
) -> StationaryResult:
    """Stationary expansions for every state plus the consistency diagnostics.

    Inconsistencies are reported in the result, never raised.
    """
    orders = orders or {}
    delta_star = _delta_star(m)
    per_state, rebased, hitting, sojourn = {}, {}, {}, {}
    for i in m.states:
        h = hitting_time(m, i, orders.get(i))
        e_i = sojourn_expectation(m, i)
        pi = div(e_i, h.expansion)
        hitting[i] = h
        sojourn[i] = e_i
        per_state[i] = pi
        rebased[i] = (
            rebase_delta(pi, delta_star) if delta_star is not None and pi.bound is not None else None
        )
    return StationaryResult(
        per_state=per_state,
        rebased=rebased,
        hitting=hitting,
        sojourn=sojourn,
        delta_star=delta_star,
        consistency=_consistency(per_state, m.eps0),
    )
