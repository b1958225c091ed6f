"""Perturbed semi-Markov models: schema, validation and bound completion.

A model stores, for every pair ``(i, j)`` with ``j`` in the transition set
``Y_i``, an expansion of the transition probability ``p_ij(eps)`` and of the
sojourn expectation ``e_ij(eps)``.  Pairs without an entry are identically
zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

from .expansion import (
    ExpansionError,
    LaurentExpansion,
    RemainderBound,
    as_rational,
    format_rational,
)

Pair = tuple[int, int]

__all__ = [
    "ModelError",
    "TransitionEntry",
    "SemiMarkovModel",
    "DeltaFloors",
    "ValidationReport",
    "PositivityThresholds",
    "parse_model",
    "load_model",
    "validate_conditions",
    "designated_state",
    "complete_remainders",
    "positivity_thresholds",
]


class ModelError(ValueError):
    """Malformed or inconsistent model document."""


@dataclass(frozen=True)
class TransitionEntry:
    p: LaurentExpansion
    e: LaurentExpansion


@dataclass(frozen=True)
class SemiMarkovModel:
    """Immutable model over a set of integer state labels.

    ``states`` is usually ``1..N``; reduced models keep the original labels
    of the surviving states.
    """

    states: tuple[int, ...]
    entries: Mapping[Pair, TransitionEntry] = field(hash=False)
    eps0: float = 1.0

    @property
    def N(self) -> int:
        return len(self.states)

    def transition_set(self, i: int) -> tuple[int, ...]:
        return tuple(j for j in self.states if (i, j) in self.entries)

    def has(self, i: int, j: int) -> bool:
        return (i, j) in self.entries

    def p(self, i: int, j: int) -> LaurentExpansion:
        return self.entries[(i, j)].p

    def e(self, i: int, j: int) -> LaurentExpansion:
        return self.entries[(i, j)].e

    def with_entries(self, entries: Mapping[Pair, TransitionEntry]) -> "SemiMarkovModel":
        return SemiMarkovModel(self.states, dict(entries), self.eps0)

    def to_dict(self) -> dict:
        doc: dict = {"N": self.N, "eps0": self.eps0}
        if self.states != tuple(range(1, self.N + 1)):
            doc["states"] = list(self.states)
        doc["entries"] = [
            {"from": i, "to": j, "p": self.p(i, j).to_dict(), "e": self.e(i, j).to_dict()}
            for i in self.states
            for j in self.transition_set(i)
        ]
        return doc

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


# ---------------------------------------------------------------------------
# parsing


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise ModelError(message)


def parse_model(document: Union[str, bytes, dict]) -> SemiMarkovModel:
    """Parse and check a model from JSON text, bytes or an already-decoded dict."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model is not valid JSON: {exc}") from exc
    _expect(isinstance(document, dict), "model document must be a JSON object")

    n = document.get("N")
    _expect(isinstance(n, int) and not isinstance(n, bool) and n >= 1, "N must be a positive integer")
    states = document.get("states", list(range(1, n + 1)))
    _expect(
        isinstance(states, list)
        and len(states) == n
        and all(isinstance(s, int) and not isinstance(s, bool) for s in states)
        and len(set(states)) == n,
        "states must list N distinct integer labels",
    )
    states = tuple(sorted(states))

    eps0 = document.get("eps0", 1.0)
    _expect(
        isinstance(eps0, (int, float)) and not isinstance(eps0, bool) and 0 < eps0 <= 1,
        "eps0 must be a number in (0, 1]",
    )
    eps0 = float(eps0)

    raw_entries = document.get("entries")
    _expect(isinstance(raw_entries, list), "entries must be a list")
    entries: dict[Pair, TransitionEntry] = {}
    for position, raw in enumerate(raw_entries):
        where = f"entry #{position}"
        _expect(isinstance(raw, dict), f"{where} must be an object")
        i, j = raw.get("from"), raw.get("to")
        _expect(i in states and j in states, f"{where}: from/to must be state labels, got {i!r}->{j!r}")
        where = f"entry ({i},{j})"
        _expect((i, j) not in entries, f"duplicate {where}")
        try:
            p = LaurentExpansion.from_dict(raw["p"])
            e = LaurentExpansion.from_dict(raw["e"])
        except KeyError as exc:
            raise ModelError(f"{where} is missing {exc.args[0]!r}") from exc
        except (ExpansionError, TypeError) as exc:
            raise ModelError(f"{where}: {exc}") from exc
        _expect(p.h >= 0, f"{where}: probability expansion has negative lowest power {p.h}")
        _expect(p.leading > 0, f"{where}: probability leading coefficient {p.leading} is not positive")
        _expect(e.leading > 0, f"{where}: expectation leading coefficient {e.leading} is not positive")
        for name, x in (("p", p), ("e", e)):
            if x.bound is not None:
                _expect(
                    x.bound.eps_bar <= eps0,
                    f"{where}: {name} epsBar {x.bound.eps_bar} exceeds eps0 {eps0}",
                )
        entries[(i, j)] = TransitionEntry(p, e)

    model = SemiMarkovModel(states, entries, eps0)
    for i in states:
        _expect(model.transition_set(i), f"transition set of state {i} is empty")
    return model


def load_model(path) -> SemiMarkovModel:
    with open(path, "rb") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class DeltaFloors:
    """Smallest remainder exponents over probability and over all bounds."""

    delta_circ: Fraction
    delta_star: Fraction

    def to_dict(self) -> dict:
        return {"deltaCirc": format_rational(self.delta_circ), "deltaStar": format_rational(self.delta_star)}


def delta_floors(m: SemiMarkovModel) -> DeltaFloors | None:
    p_deltas = [x.p.bound.delta for x in m.entries.values() if x.p.bound is not None]
    e_deltas = [x.e.bound.delta for x in m.entries.values() if x.e.bound is not None]
    if not p_deltas:
        return None
    circ = min(p_deltas)
    return DeltaFloors(circ, min([circ] + e_deltas))


@dataclass(frozen=True)
class ValidationReport:
    strongly_connected: bool
    unreachable: tuple[Pair, ...]
    chains: Mapping[Pair, tuple[int, ...]]
    stochasticity_failures: tuple[tuple[int, int, Fraction], ...]
    lowest_power_failures: tuple[tuple[int, int], ...]
    nonpivotal: tuple[tuple[int, int, str], ...]
    missing_exits: tuple[int, ...]
    floors: DeltaFloors | None

    @property
    def ok(self) -> bool:
        return (
            self.strongly_connected
            and not self.stochasticity_failures
            and not self.lowest_power_failures
            and not self.nonpivotal
            and not self.missing_exits
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "stronglyConnected": self.strongly_connected,
            "unreachable": [list(p) for p in self.unreachable],
            "chains": {f"{i},{j}": list(c) for (i, j), c in self.chains.items()},
            "stochasticityFailures": [
                {"state": i, "power": l, "sum": format_rational(s)}
                for i, l, s in self.stochasticity_failures
            ],
            "lowestPowerFailures": [{"state": i, "lowestPower": l} for i, l in self.lowest_power_failures],
            "nonpivotal": [{"from": i, "to": j, "kind": kind} for i, j, kind in self.nonpivotal],
            "missingExits": list(self.missing_exits),
            "deltaFloors": None if self.floors is None else self.floors.to_dict(),
        }


def _shortest_paths(m: SemiMarkovModel, source: int) -> dict[int, tuple[int, ...]]:
    paths = {source: (source,)}
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in m.transition_set(u):
                if v not in paths:
                    paths[v] = paths[u] + (v,)
                    nxt.append(v)
        frontier = nxt
    return paths


def row_order(m: SemiMarkovModel, i: int) -> int:
    """``min_j k(p_ij)``: the highest power at which row ``i`` is fully known."""
    return min(m.p(i, j).k for j in m.transition_set(i))


def validate_conditions(m: SemiMarkovModel) -> ValidationReport:
    """Check connectivity, coefficient stochasticity and leading-term conditions.

    Nothing is raised here; every verdict is recorded in the report.
    """
    chains: dict[Pair, tuple[int, ...]] = {}
    unreachable: list[Pair] = []
    for i in m.states:
        paths = _shortest_paths(m, i)
        for j in m.states:
            if i == j:
                continue
            if j in paths:
                chains[(i, j)] = paths[j]
            else:
                unreachable.append((i, j))

    stoch: list[tuple[int, int, Fraction]] = []
    lowest: list[tuple[int, int]] = []
    nonpivotal: list[tuple[int, int, str]] = []
    missing_exits: list[int] = []
    for i in m.states:
        ys = m.transition_set(i)
        top = row_order(m, i)
        for l in range(0, top + 1):
            total = sum((m.p(i, j).coeff(l) for j in ys), Fraction(0))
            if total != (1 if l == 0 else 0):
                stoch.append((i, l, total))
        low = min(m.p(i, j).h for j in ys)
        if low != 0:
            lowest.append((i, low))
        for j in ys:
            if not m.p(i, j).is_pivotal:
                nonpivotal.append((i, j, "p"))
            if not m.e(i, j).is_pivotal:
                nonpivotal.append((i, j, "e"))
        if m.N > 1 and not any(j != i for j in ys):
            missing_exits.append(i)

    return ValidationReport(
        strongly_connected=not unreachable,
        unreachable=tuple(unreachable),
        chains=chains,
        stochasticity_failures=tuple(stoch),
        lowest_power_failures=tuple(lowest),
        nonpivotal=tuple(nonpivotal),
        missing_exits=tuple(missing_exits),
        floors=delta_floors(m),
    )


# ---------------------------------------------------------------------------
# remainder completion


def designated_state(m: SemiMarkovModel, i: int) -> int:
    """Smallest ``j`` in ``Y_i`` whose probability expansion stops at the row order."""
    top = row_order(m, i)
    return min(j for j in m.transition_set(i) if m.p(i, j).k == top)


def completed_bound(m: SemiMarkovModel, i: int) -> RemainderBound:
    """Remainder bound for the designated entry implied by row stochasticity.

    The designated remainder equals minus the sum of the other entries'
    coefficients above the row order plus their remainders, so it inherits
    a bound from theirs.
    """
    designated = designated_state(m, i)
    top = row_order(m, i)
    others = [j for j in m.transition_set(i) if j != designated]
    missing = [j for j in others if m.p(i, j).bound is None]
    if missing:
        raise ModelError(
            f"row {i}: entries {missing} lack remainder bounds, cannot complete ({i},{designated})"
        )
    bounds = [m.p(i, j).bound for j in others]
    delta = min((b.delta for b in bounds), default=Fraction(1))
    eps = min((b.eps_bar for b in bounds), default=m.eps0)
    eps0 = m.eps0
    terms = []
    for j, b in zip(others, bounds):
        p = m.p(i, j)
        terms.extend(
            float(abs(c)) * eps0 ** float(l - top - delta) for l, c in p.terms() if l > top
        )
        terms.append(b.G * eps0 ** float(p.k - top + b.delta - delta))
    return RemainderBound(delta, math.fsum(terms), eps)


def complete_remainders(m: SemiMarkovModel) -> SemiMarkovModel:
    """Fill in missing probability bounds on designated entries.

    Entries that already carry a bound are left untouched.  A missing bound
    on a non-designated entry is an error.
    """
    entries = dict(m.entries)
    for i in m.states:
        designated = designated_state(m, i)
        for j in m.transition_set(i):
            if j != designated and m.p(i, j).bound is None:
                raise ModelError(f"entry ({i},{j}) lacks a probability remainder bound")
        entry = m.entries[(i, designated)]
        if entry.p.bound is None:
            entries[(i, designated)] = TransitionEntry(
                entry.p.with_bound(completed_bound(m, i)), entry.e
            )
    return m.with_entries(entries)


def needs_completion(m: SemiMarkovModel) -> bool:
    return any(x.p.bound is None for x in m.entries.values())


# ---------------------------------------------------------------------------
# positivity thresholds


@dataclass(frozen=True)
class PositivityThresholds:
    eps_prime0: float
    eps_double_prime0: float
    eps_tilde0: float
    p_alpha: Mapping[Pair, float]
    p_prime: Mapping[Pair, float]
    e_alpha: Mapping[Pair, float]
    e_prime: Mapping[Pair, float]

    def to_dict(self) -> dict:
        def table(values: Mapping[Pair, float]) -> dict:
            return {f"{i},{j}": v for (i, j), v in sorted(values.items())}

        return {
            "epsPrime0": self.eps_prime0,
            "epsDoublePrime0": self.eps_double_prime0,
            "epsTilde0": self.eps_tilde0,
            "pAlpha": table(self.p_alpha),
            "pPrime": table(self.p_prime),
            "eAlpha": table(self.e_alpha),
            "ePrime": table(self.e_prime),
        }


def _entry_thresholds(x: LaurentExpansion, alpha: Fraction, eps0: float) -> tuple[float, float]:
    b = x.bound
    lead = abs(x.leading)
    if b.G == 0:
        eps_alpha = b.eps_bar
    else:
        eps_alpha = min(b.eps_bar, (float(alpha * lead) / b.G) ** (1.0 / float(b.delta)))
    tail = math.fsum(float(abs(c)) * eps0 ** (l - x.h - 1) for l, c in x.terms() if l > x.h)
    if tail == 0:
        return eps_alpha, eps_alpha
    return eps_alpha, min(eps_alpha, float(alpha * lead) / tail)


def positivity_thresholds(
    m: SemiMarkovModel, alpha: Union[Fraction, int, str, Mapping[Pair, Fraction]]
) -> PositivityThresholds:
    """Radii below which every probability and expectation stays positive.

    For ``eps`` up to the returned per-entry value, both the higher-order
    terms and the remainder are at most ``alpha`` times the leading term, so
    the function is at least ``(1 - 2 alpha)`` times its leading term.
    """
    if isinstance(alpha, Mapping):
        alphas = {pair: as_rational(a) for pair, a in alpha.items()}
    else:
        uniform = as_rational(alpha)
        alphas = {pair: uniform for pair in m.entries}
    for pair in m.entries:
        if pair not in alphas:
            raise ModelError(f"no alpha given for entry {pair}")
        if not 0 < alphas[pair] < Fraction(1, 2):
            raise ModelError(f"alpha for {pair} must lie in (0, 1/2), got {alphas[pair]}")

    p_alpha, p_prime, e_alpha, e_prime = {}, {}, {}, {}
    for pair, entry in m.entries.items():
        for name, x in (("p", entry.p), ("e", entry.e)):
            if x.bound is None:
                raise ModelError(f"entry {pair}: {name} has no remainder bound")
        p_alpha[pair], p_prime[pair] = _entry_thresholds(entry.p, alphas[pair], m.eps0)
        e_alpha[pair], e_prime[pair] = _entry_thresholds(entry.e, alphas[pair], m.eps0)
    prime0 = min(p_prime.values())
    double0 = min(e_prime.values())
    return PositivityThresholds(
        eps_prime0=prime0,
        eps_double_prime0=double0,
        eps_tilde0=min(prime0, double0),
        p_alpha=p_alpha,
        p_prime=p_prime,
        e_alpha=e_alpha,
        e_prime=e_prime,
    )
