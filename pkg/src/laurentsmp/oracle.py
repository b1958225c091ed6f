"""Exact pointwise ground truth for models at a fixed ``eps``.

Everything here works on rational matrices and is independent of the
expansion calculus: stationary probabilities come from the embedded chain
weighted by sojourn expectations, hitting times from first-step equations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

from .expansion import LaurentExpansion, as_rational, evaluate, format_rational
from .model import SemiMarkovModel, designated_state

__all__ = [
    "OracleError",
    "NumericModel",
    "instantiate",
    "solve_rational",
    "numeric_stationary",
    "numeric_hitting",
    "numeric_reduce",
    "CertificationReport",
    "certify",
]

Matrix = tuple[tuple[Fraction, ...], ...]
Truth = Union[Fraction, int, mpmath.mpf]

# Precision for ratios involving irrational powers of eps.
_DPS = 50
SLACK = 1e-9


class OracleError(ValueError):
    """Inconsistent model instance or singular linear system."""


@dataclass(frozen=True)
class NumericModel:
    """Rational matrices ``P`` and ``E`` indexed in the order of ``states``.

    ``approximate`` is set when some entry has a nonzero remainder that the
    instance ignores, so the matrices are only the polynomial parts.
    """

    eps: Fraction
    states: tuple[int, ...]
    P: Matrix
    E: Matrix
    approximate: bool = False

    def index(self, state: int) -> int:
        return self.states.index(state)

    def sojourn(self, state: int) -> Fraction:
        return sum(self.E[self.index(state)], Fraction(0))

    def to_dict(self) -> dict:
        def table(mat: Matrix) -> list[list[str]]:
            return [[format_rational(x) for x in row] for row in mat]

        return {
            "epsilon": format_rational(self.eps),
            "states": list(self.states),
            "P": table(self.P),
            "E": table(self.E),
            "approximate": self.approximate,
        }


def _exact(x: LaurentExpansion) -> bool:
    return x.bound is not None and x.bound.exact


def instantiate(m: SemiMarkovModel, eps, check_range: bool = True) -> NumericModel:
    """Evaluate every entry of ``m`` at ``eps``.

    Rows whose only inexact probability is the designated one are rebalanced
    so that the row sums to one exactly; this is the polynomial model whose
    designated remainder is minus the sum of the others' tails.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise OracleError(f"eps must be positive, got {eps}")
    if check_range and eps > Fraction(m.eps0):
        raise OracleError(f"eps={eps} exceeds eps0={m.eps0}")

    n = m.N
    P = [[Fraction(0)] * n for _ in range(n)]
    E = [[Fraction(0)] * n for _ in range(n)]
    approximate = False
    for a, i in enumerate(m.states):
        ys = m.transition_set(i)
        designated = designated_state(m, i)
        others_exact = all(_exact(m.p(i, j)) for j in ys if j != designated)
        for j in ys:
            b = m.states.index(j)
            P[a][b] = evaluate(m.p(i, j), eps)
            E[a][b] = evaluate(m.e(i, j), eps)
            if not _exact(m.e(i, j)):
                approximate = True
        if others_exact and not _exact(m.p(i, designated)):
            d = m.states.index(designated)
            P[a][d] = 1 - sum((P[a][m.states.index(j)] for j in ys if j != designated), Fraction(0))
        elif not others_exact:
            approximate = True
        elif sum(P[a], Fraction(0)) != 1:
            raise OracleError(f"row {i} of an exact model sums to {sum(P[a], Fraction(0))} at eps={eps}")
        for b, x in enumerate(P[a]):
            if not 0 <= x <= 1:
                raise OracleError(f"p_{i},{m.states[b]}({eps}) = {x} is not a probability")
        for b, x in enumerate(E[a]):
            if x < 0:
                raise OracleError(f"e_{i},{m.states[b]}({eps}) = {x} is negative")
    return NumericModel(
        eps,
        m.states,
        tuple(tuple(r) for r in P),
        tuple(tuple(r) for r in E),
        approximate,
    )


def solve_rational(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``A x = b`` exactly by Gaussian elimination with partial pivoting."""
    n = len(A)
    rows = [list(map(Fraction, A[r])) + [Fraction(b[r])] for r in range(n)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(rows[r][col]))
        if rows[pivot][col] == 0:
            raise OracleError("singular linear system")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        head = rows[col]
        for r in range(col + 1, n):
            factor = rows[r][col] / head[col]
            if factor:
                row = rows[r]
                for c in range(col, n + 1):
                    row[c] -= factor * head[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = rows[r][n] - sum((rows[r][c] * x[c] for c in range(r + 1, n)), Fraction(0))
        x[r] = acc / rows[r][r]
    return x


def embedded_stationary(nm: NumericModel) -> list[Fraction]:
    """Stationary vector ``rho`` of the embedded chain: ``rho P = rho``, ``sum = 1``."""
    n = len(nm.states)
    # Transposed balance equations, with the last one replaced by normalisation.
    A = [[nm.P[c][r] - (1 if r == c else 0) for c in range(n)] for r in range(n)]
    A[-1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return solve_rational(A, b)


def numeric_stationary(nm: NumericModel) -> list[Fraction]:
    """Stationary probabilities ``pi_i`` proportional to ``rho_i * e_i``."""
    rho = embedded_stationary(nm)
    weights = [rho[a] * sum(nm.E[a], Fraction(0)) for a in range(len(rho))]
    total = sum(weights, Fraction(0))
    if total <= 0:
        raise OracleError("stationary weights do not sum to a positive value")
    return [w / total for w in weights]


def numeric_hitting(nm: NumericModel, i: int, target: int | None = None) -> Fraction:
    """Expected time to reach ``target`` (default ``i``) starting from ``i``.

    Solves ``E_kj = e_k + sum_{l != j} p_kl E_lj`` for all ``k``.
    """
    j = i if target is None else target
    n = len(nm.states)
    col = nm.index(j)
    A = [
        [(1 if r == c else 0) - (nm.P[r][c] if c != col else 0) for c in range(n)]
        for r in range(n)
    ]
    b = [sum(nm.E[r], Fraction(0)) for r in range(n)]
    return solve_rational(A, b)[nm.index(i)]


def numeric_reduce(nm: NumericModel, r: int) -> NumericModel:
    """Exclude state ``r`` from a numeric instance using the same formulas as the expansions."""
    if len(nm.states) < 2:
        raise OracleError("cannot exclude a state from a one-state model")
    x = nm.index(r)
    stay = nm.P[x][x]
    leave = 1 - stay
    if leave == 0:
        raise OracleError(f"state {r} is absorbing at eps={nm.eps}")
    keep = [a for a in range(len(nm.states)) if a != x]
    P, E = [], []
    for a in keep:
        prow, erow = [], []
        for b in keep:
            q_in = nm.P[a][x] / leave
            q_out = nm.P[x][b] / leave
            prow.append(nm.P[a][b] + nm.P[a][x] * q_out)
            erow.append(
                nm.E[a][b] + nm.E[a][x] * q_out + nm.E[x][x] * q_in * q_out + nm.E[x][b] * q_in
            )
        P.append(tuple(prow))
        E.append(tuple(erow))
    states = tuple(nm.states[a] for a in keep)
    return NumericModel(nm.eps, states, tuple(P), tuple(E), nm.approximate)


@dataclass(frozen=True)
class CertificationReport:
    G: float
    exponent: Fraction
    samples: tuple[tuple[Fraction, float], ...]
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.G * (1 + SLACK)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "G": self.G,
            "exponent": format_rational(self.exponent),
            "maxRatio": self.max_ratio,
            "samples": [
                {"epsilon": format_rational(eps), "ratio": ratio} for eps, ratio in self.samples
            ],
        }


def remainder_ratio(expansion: LaurentExpansion, eps: Fraction, truth: Truth) -> float:
    """``|truth - evaluate(expansion, eps)| / eps**(k + delta)``."""
    with mpmath.workdps(_DPS):
        value = evaluate(expansion, eps)
        if isinstance(truth, mpmath.mpf):
            diff = truth - mpmath.mpf(value.numerator) / value.denominator
        else:
            exact = as_rational(truth) - value
            diff = mpmath.mpf(exact.numerator) / exact.denominator
        exponent = expansion.k + expansion.bound.delta
        scale = mpmath.power(
            mpmath.mpf(eps.numerator) / eps.denominator,
            mpmath.mpf(exponent.numerator) / exponent.denominator,
        )
        return float(abs(diff) / scale)


def certify(expansion: LaurentExpansion, samples: Iterable[tuple[object, Truth]]) -> CertificationReport:
    """Check a remainder bound against ground-truth values at sample points."""
    if expansion.bound is None:
        raise OracleError("cannot certify an expansion without a remainder bound")
    results = []
    for eps, truth in samples:
        eps = as_rational(eps)
        if not 0 < eps <= Fraction(expansion.bound.eps_bar):
            raise OracleError(f"sample eps={eps} lies outside (0, {expansion.bound.eps_bar}]")
        results.append((eps, remainder_ratio(expansion, eps, truth)))
    max_ratio = max((r for _, r in results), default=0.0)
    return CertificationReport(
        expansion.bound.G,
        expansion.k + expansion.bound.delta,
        tuple(results),
        max_ratio,
    )
