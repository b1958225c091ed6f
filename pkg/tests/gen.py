"""Random inputs shared by the test modules.

Everything takes an explicit ``random.Random`` so that failures replay.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
from hypothesis import strategies as st

from laurentsmp.expansion import LaurentExpansion, RemainderBound, evaluate
from laurentsmp.model import SemiMarkovModel, TransitionEntry

FIXTURE = Path(__file__).resolve().parent.parent / "models" / "three-state.json"

DELTAS = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
EPS_BARS = [1.0, 0.5, 0.25, 0.125]

mpmath.mp.dps = 40


def rational(rng: random.Random, lo: int = -4, hi: int = 4, dens=(1, 2, 3, 4)) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(dens))


def nonzero_rational(rng: random.Random) -> Fraction:
    while True:
        x = rational(rng)
        if x:
            return x


def expansion(
    rng: random.Random,
    h_range=(-2, 1),
    max_len: int = 4,
    pivotal: bool = False,
    bounded: bool = True,
    exact: bool = False,
) -> LaurentExpansion:
    h = rng.randint(*h_range)
    n = rng.randint(1, max_len)
    coeffs = [rational(rng) for _ in range(n)]
    if pivotal:
        coeffs[0] = nonzero_rational(rng)
    bound = None
    if bounded:
        G = 0.0 if exact or rng.random() < 0.15 else rng.choice([0.5, 1.0, 2.0, rng.uniform(0, 3)])
        bound = RemainderBound(rng.choice(DELTAS), G, rng.choice(EPS_BARS))
    return LaurentExpansion(h, h + n - 1, tuple(coeffs), bound)


@dataclass(frozen=True)
class Synthetic:
    """A known function: an expansion's polynomial part plus ``c * eps**(k + delta)``.

    ``|c| <= G`` so the expansion's declared bound holds for this function.
    """

    expansion: LaurentExpansion
    c: Fraction

    def __call__(self, eps: Fraction) -> Fraction | mpmath.mpf:
        # Stays an exact Fraction whenever the tail is rational.
        a = self.expansion
        value = evaluate(a, eps)
        exp = a.k + a.bound.delta
        if self.c == 0:
            return value
        if exp.denominator == 1:
            return value + self.c * eps ** exp.numerator
        tail = mpmath.mpf(self.c.numerator) / self.c.denominator * mpmath.power(
            mpmath.mpf(eps.numerator) / eps.denominator,
            mpmath.mpf(exp.numerator) / exp.denominator,
        )
        return mpmath.mpf(value.numerator) / value.denominator + tail


def synthetic(rng: random.Random, a: LaurentExpansion) -> Synthetic:
    G = Fraction(a.bound.G)
    choice = rng.random()
    if choice < 0.4:
        c = G
    elif choice < 0.8:
        c = -G
    else:
        c = G * Fraction(rng.randint(-100, 100), 100)
    return Synthetic(a, c)


def sample_eps(rng: random.Random, eps_bar: float, n: int = 20) -> list[Fraction]:
    """Rational sample points in ``(0, eps_bar]`` including the endpoint region."""
    top = Fraction(eps_bar)
    points = {top, top / 2, top / 1000}
    while len(points) < n:
        points.add(top * Fraction(rng.randint(1, 1000), 1000))
    return sorted(points)


# ---------------------------------------------------------------------------
# models


def _poly(terms: dict[int, Fraction], h: int, k: int) -> LaurentExpansion:
    return LaurentExpansion.from_terms(terms, h, k, None)


def random_exact_model(rng: random.Random, n: int, eps0: float = 0.0625) -> SemiMarkovModel:
    """Strongly connected model whose entries are exact polynomials.

    Each row is a set of small positive-leading probability polynomials plus
    one designated entry equal to one minus the others, so rows sum to one
    identically.  All entries stay positive on ``(0, eps0]`` for the default
    ``eps0 = 1/16``.
    """
    states = list(range(1, n + 1))
    bound = RemainderBound(1, 0.0, eps0)
    entries: dict[tuple[int, int], TransitionEntry] = {}
    for i in states:
        ys = {i % n + 1}  # a cycle keeps the graph strongly connected
        for j in states:
            if rng.random() < 0.4:
                ys.add(j)
        ys = sorted(ys)
        designated = rng.choice(ys)
        others = [j for j in ys if j != designated]
        budget = Fraction(1, 2)
        probs: dict[int, LaurentExpansion] = {}
        for j in others:
            h = rng.randint(0, 2)
            if h == 0:
                lead = rng.choice([Fraction(1, 8), Fraction(1, 4)])
                if lead > budget:
                    h = 1
                    lead = rng.choice([Fraction(1, 4), Fraction(1, 2), Fraction(1)])
                else:
                    budget -= lead
            else:
                lead = rng.choice([Fraction(1, 4), Fraction(1, 2), Fraction(1)])
            k = h + rng.randint(0, 2)
            terms = {h: lead}
            for l in range(h + 1, k + 1):
                terms[l] = Fraction(rng.randint(-2, 2), 2)
            probs[j] = _poly(terms, h, k)
        top = max([p.k for p in probs.values()] + [rng.randint(0, 2)])
        rest = {
            l: -sum((p.coeff(l) for p in probs.values() if l <= p.k), Fraction(0))
            for l in range(0, top + 1)
        }
        rest[0] += 1
        probs[designated] = _poly(rest, 0, top)
        for j in ys:
            m_lo = rng.randint(-1, 1)
            m_hi = m_lo + rng.randint(0, 2)
            terms = {m_lo: rng.choice([Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)])}
            for l in range(m_lo + 1, m_hi + 1):
                terms[l] = Fraction(rng.randint(-2, 2), 2)
            e = LaurentExpansion.from_terms(terms, m_lo, m_hi, bound)
            entries[(i, j)] = TransitionEntry(probs[j].with_bound(bound), e)
    return SemiMarkovModel(tuple(states), entries, eps0)


def as_mp(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def lifted(fn, *values):
    """Apply ``fn`` exactly when every value is a Fraction, else in mpmath."""
    if all(isinstance(v, (Fraction, int)) for v in values):
        return fn(*values)
    return fn(*(as_mp(v) for v in values))


def truth_of(op: str, fs: list, eps: Fraction):
    """Ground truth of an operation applied to synthetic operand functions."""
    vals = [f(eps) for f in fs]
    if op == "add":
        return lifted(lambda a, b: a + b, *vals)
    if op == "mul":
        return lifted(lambda a, b: a * b, *vals)
    if op in ("div", "direct"):
        return lifted(lambda a, b: a / b, *vals)
    if op == "reciprocal":
        return lifted(lambda a: 1 / a, *vals)
    if op == "sum_many":
        return lifted(lambda *xs: sum(xs[1:], xs[0]), *vals)
    if op == "prod_many":
        def product(*xs):
            out = xs[0]
            for x in xs[1:]:
                out = out * x
            return out
        return lifted(product, *vals)
    raise ValueError(op)


# ---------------------------------------------------------------------------
# hypothesis strategies

small_rationals = st.fractions(min_value=-4, max_value=4, max_denominator=6)
nonzero_rationals = small_rationals.filter(lambda x: x != 0)


@st.composite
def expansions(draw, pivotal: bool = False, bounded: bool = True, exact: bool = False, h_min: int = -2):
    h = draw(st.integers(h_min, 1))
    n = draw(st.integers(1, 4))
    head = draw(nonzero_rationals if pivotal else small_rationals)
    coeffs = [head] + draw(st.lists(small_rationals, min_size=n - 1, max_size=n - 1))
    bound = None
    if bounded:
        G = 0.0 if exact else draw(st.one_of(st.just(0.0), st.floats(0, 5, allow_nan=False)))
        bound = RemainderBound(draw(st.sampled_from(DELTAS)), G, draw(st.sampled_from(EPS_BARS)))
    return LaurentExpansion(h, h + n - 1, tuple(coeffs), bound)
