"""Phase-space reduction: excluding states one at a time.

Excluding state ``r`` yields a semi-Markov process on the remaining states
whose hitting times among those states coincide with the original ones.  The
transition probabilities and sojourn expectations of the reduced process are
built from the original expansions with the operational rules of
:mod:`laurentsmp.expansion`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .expansion import (
    LaurentExpansion,
    NonPivotalError,
    add,
    combine_representations,
    div,
    embed_constant,
    mul,
    prod_many,
    rebase_delta,
    scale,
    sum_many,
)
from .model import ModelError, SemiMarkovModel, TransitionEntry, delta_floors

__all__ = [
    "ReductionStep",
    "HittingResult",
    "non_absorption",
    "reduce_state",
    "reduce_sequence",
    "hitting_time",
    "pairwise_hitting",
    "trace_to_dict",
]


@dataclass(frozen=True)
class ReductionStep:
    excluded: int
    bar_p: LaurentExpansion
    model: SemiMarkovModel

    def to_dict(self) -> dict:
        return {
            "excluded": self.excluded,
            "barP": self.bar_p.to_dict(),
            "model": self.model.to_dict(),
        }


@dataclass(frozen=True)
class HittingResult:
    """Expected return time ``E_ii`` obtained by excluding every other state."""

    target: int
    order: tuple[int, ...]
    expansion: LaurentExpansion
    rebased: LaurentExpansion | None
    steps: tuple[ReductionStep, ...] = ()

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "order": list(self.order),
            "expansion": self.expansion.to_dict(),
            "rebased": None if self.rebased is None else self.rebased.to_dict(),
        }


def non_absorption(m: SemiMarkovModel, r: int) -> LaurentExpansion:
    """Expansion of ``1 - p_rr``, the probability of leaving ``r`` at a jump.

    Both ``1 - p_rr`` and the sum of the exit probabilities are expanded and
    the more informative representation is kept.
    """
    if r not in m.states:
        raise ModelError(f"unknown state {r}")
    ys = m.transition_set(r)
    if r not in ys:
        return embed_constant(1, 0, 0, m.eps0)
    exits = [j for j in ys if j != r]
    if not exits:
        raise ModelError(f"state {r} is absorbing: its only transition is to itself")
    p_rr = m.p(r, r)
    via_exits = sum_many([m.p(r, j) for j in exits])
    via_complement = add(embed_constant(1, 0, max(p_rr.k, 0), m.eps0), scale(-1, p_rr))
    bar = combine_representations(via_exits, via_complement)
    if not bar.is_pivotal:
        raise NonPivotalError(f"non-absorption expansion of state {r} has zero leading coefficient")
    return bar


def reduce_state(m: SemiMarkovModel, r: int) -> ReductionStep:
    """Exclude state ``r`` and return the reduced model.

    Divisions by the non-absorption expansion are taken first, then the
    products, then the sums; absent pairs contribute no term at all.
    """
    if m.N < 2:
        raise ModelError("cannot exclude a state from a one-state model")
    if r not in m.states:
        raise ModelError(f"unknown state {r}")

    bar = non_absorption(m, r)
    self_loop = m.has(r, r)
    exits_r = [j for j in m.transition_set(r) if j != r]
    into_r = [i for i in m.states if i != r and m.has(i, r)]

    # p_ir / bar and p_rj / bar; when r has no self-loop bar is identically 1.
    q_in = {i: div(m.p(i, r), bar) if self_loop else m.p(i, r) for i in into_r}
    q_out = {j: div(m.p(r, j), bar) if self_loop else m.p(r, j) for j in exits_r}

    survivors = tuple(s for s in m.states if s != r)
    entries: dict[tuple[int, int], TransitionEntry] = {}
    for i in survivors:
        through_r = i in q_in
        targets = set(j for j in m.transition_set(i) if j != r)
        if through_r:
            targets.update(exits_r)
        for j in sorted(targets):
            direct = m.has(i, j)
            via = through_r and j in q_out

            if direct and via:
                p = add(m.p(i, j), mul(m.p(i, r), q_out[j]))
            elif via:
                p = mul(m.p(i, r), q_out[j])
            else:
                p = m.p(i, j)

            e_terms = []
            if direct:
                e_terms.append(m.e(i, j))
            if via:
                e_terms.append(mul(m.e(i, r), q_out[j]))
                if self_loop:
                    e_terms.append(prod_many([m.e(r, r), q_in[i], q_out[j]]))
                e_terms.append(mul(m.e(r, j), q_in[i]))
            entries[(i, j)] = TransitionEntry(p, sum_many(e_terms))

    return ReductionStep(r, bar, SemiMarkovModel(survivors, entries, m.eps0))


def reduce_sequence(m: SemiMarkovModel, order: Sequence[int]) -> list[ReductionStep]:
    steps = []
    current = m
    for r in order:
        step = reduce_state(current, r)
        steps.append(step)
        current = step.model
    return steps


def _check_order(m: SemiMarkovModel, keep: Sequence[int], order: Sequence[int] | None) -> tuple[int, ...]:
    rest = [s for s in m.states if s not in keep]
    if order is None:
        return tuple(rest)
    order = tuple(order)
    if sorted(order) != rest:
        raise ModelError(f"exclusion order {list(order)} is not a permutation of {rest}")
    return order


def _delta_star(m: SemiMarkovModel) -> Fraction | None:
    """``delta*`` when every entry carries a bound, else None."""
    if any(x.p.bound is None or x.e.bound is None for x in m.entries.values()):
        return None
    floors = delta_floors(m)
    return None if floors is None else floors.delta_star


def hitting_time(m: SemiMarkovModel, i: int, order: Sequence[int] | None = None) -> HittingResult:
    """Expansion of the expected return time to ``i``.

    The other states are excluded in ``order`` (ascending by default) and the
    surviving sojourn expectation ``e_ii`` is the return time.
    """
    if i not in m.states:
        raise ModelError(f"unknown state {i}")
    order = _check_order(m, (i,), order)
    steps = reduce_sequence(m, order)
    final = steps[-1].model if steps else m
    if not final.has(i, i):
        raise ModelError(f"state {i} has no return transition after reduction")
    expansion = final.e(i, i)
    if not expansion.is_pivotal:
        raise NonPivotalError(f"return-time expansion of state {i} has zero leading coefficient")
    delta_star = _delta_star(m)
    rebased = None
    if delta_star is not None and expansion.bound is not None:
        rebased = rebase_delta(expansion, delta_star)
    return HittingResult(i, order, expansion, rebased, tuple(steps))


def pairwise_hitting(
    m: SemiMarkovModel, i: int, j: int, order: Sequence[int] | None = None
) -> Mapping[tuple[int, int], LaurentExpansion]:
    """Expected hitting and return times between two states.

    All other states are excluded first, then the two-state formulas give
    ``E_ij``, ``E_ji``, ``E_ii`` and ``E_jj``.
    """
    if i == j:
        raise ModelError("pairwise hitting needs two distinct states")
    for s in (i, j):
        if s not in m.states:
            raise ModelError(f"unknown state {s}")
    order = _check_order(m, (i, j), order)
    steps = reduce_sequence(m, order)
    two = steps[-1].model if steps else m

    def sojourn(s: int) -> LaurentExpansion:
        return sum_many([two.e(s, t) for t in two.transition_set(s)])

    out: dict[tuple[int, int], LaurentExpansion] = {}
    for src, dst in ((i, j), (j, i)):
        if not two.has(dst, src):
            raise ModelError(f"state {src} is unreachable from {dst} in the two-state model")
        e_src = sojourn(src)
        if two.has(src, src):
            bar = non_absorption(two, src)
            out[(src, dst)] = div(e_src, bar)
            q = div(two.p(dst, src), bar)
        else:
            out[(src, dst)] = e_src
            q = two.p(dst, src)
        out[(dst, dst)] = add(sojourn(dst), mul(e_src, q))
    return out


def trace_to_dict(steps: Sequence[ReductionStep]) -> list[dict]:
    return [step.to_dict() for step in steps]
