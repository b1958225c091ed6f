"""Laurent asymptotic expansions with explicit power-type remainder bounds.

An expansion represents a function on ``(0, eps0]`` as

    A(eps) = a_h eps^h + ... + a_k eps^k + o(eps^k),
    |o(eps^k)| <= G eps^(k + delta)   for 0 < eps <= eps_bar.

Coefficients are exact :class:`~fractions.Fraction` values.  The bound
parameters ``G`` and ``eps_bar`` are binary floats because they involve
fractional powers; ``delta`` stays rational so that branch selection in the
operational rules is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

RationalLike = Union[Fraction, int, str]

__all__ = [
    "ExpansionError",
    "NonPivotalError",
    "InconsistentRepresentationsError",
    "InvalidRebaseError",
    "NegativeExponentError",
    "RemainderBound",
    "LaurentExpansion",
    "as_rational",
    "format_rational",
    "embed_constant",
    "from_wide_bound",
    "combine_representations",
    "scale",
    "add",
    "mul",
    "reciprocal",
    "div",
    "sum_many",
    "prod_many",
    "rebase_delta",
    "evaluate",
    "trim",
]


class ExpansionError(ValueError):
    """Base class for invalid expansion arguments."""


class NonPivotalError(ExpansionError):
    """Division by an expansion whose leading coefficient is zero."""


class InconsistentRepresentationsError(ExpansionError):
    """Two representations of one function disagree on a coefficient."""


class InvalidRebaseError(ExpansionError):
    """Rebasing to an exponent larger than the current one."""


class NegativeExponentError(RuntimeError):
    """A negative power of ``eps_bar`` appeared inside a G-parameter formula.

    This is an internal error: the operational rules guarantee nonnegative
    exponents, so hitting it means a formula was wired up incorrectly.
    """


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected; they almost always signal a lossy input.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ExpansionError(f"malformed rational {value!r}") from exc
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RemainderBound:
    """``|remainder| <= G * eps**(k + delta)`` for ``0 < eps <= eps_bar``.

    ``G == 0`` marks an identically vanishing remainder.
    """

    delta: Fraction
    G: float
    eps_bar: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", as_rational(self.delta))
        object.__setattr__(self, "G", float(self.G))
        object.__setattr__(self, "eps_bar", float(self.eps_bar))
        if not 0 < self.delta <= 1:
            raise ExpansionError(f"delta must lie in (0, 1], got {self.delta}")
        if not (math.isfinite(self.G) and self.G >= 0):
            raise ExpansionError(f"G must be finite and nonnegative, got {self.G}")
        if not 0 < self.eps_bar <= 1:
            raise ExpansionError(f"eps_bar must lie in (0, 1], got {self.eps_bar}")

    @property
    def exact(self) -> bool:
        return self.G == 0.0

    def to_dict(self) -> dict:
        return {"delta": format_rational(self.delta), "G": self.G, "epsBar": self.eps_bar}

    @classmethod
    def from_dict(cls, data: dict) -> "RemainderBound":
        try:
            return cls(as_rational(data["delta"]), data["G"], data["epsBar"])
        except KeyError as exc:
            raise ExpansionError(f"bound is missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class LaurentExpansion:
    """Truncated Laurent polynomial on powers ``h..k`` plus an optional bound.

    ``coeffs[l]`` is the coefficient of ``eps**(h + l)``.  Leading zeros are
    kept as given; use :func:`trim` to drop them explicitly.
    """

    h: int
    k: int
    coeffs: tuple[Fraction, ...]
    bound: RemainderBound | None = None

    def __post_init__(self) -> None:
        if self.h > self.k:
            raise ExpansionError(f"need h <= k, got h={self.h}, k={self.k}")
        coeffs = tuple(as_rational(c) for c in self.coeffs)
        if len(coeffs) != self.k - self.h + 1:
            raise ExpansionError(
                f"expected {self.k - self.h + 1} coefficients for powers "
                f"{self.h}..{self.k}, got {len(coeffs)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(
        cls,
        terms: dict[int, RationalLike],
        h: int,
        k: int,
        bound: RemainderBound | None = None,
    ) -> "LaurentExpansion":
        """Build from a sparse ``{power: coefficient}`` mapping."""
        for power in terms:
            if not h <= power <= k:
                raise ExpansionError(f"power {power} outside {h}..{k}")
        coeffs = [as_rational(terms.get(p, 0)) for p in range(h, k + 1)]
        return cls(h, k, tuple(coeffs), bound)

    def coeff(self, power: int) -> Fraction:
        """Coefficient of ``eps**power``; zero below ``h``.

        Powers above ``k`` are not known and raise.
        """
        if power > self.k:
            raise ExpansionError(f"power {power} is beyond the retained order {self.k}")
        if power < self.h:
            return Fraction(0)
        return self.coeffs[power - self.h]

    def terms(self) -> Iterator[tuple[int, Fraction]]:
        for offset, c in enumerate(self.coeffs):
            yield self.h + offset, c

    @property
    def leading(self) -> Fraction:
        return self.coeffs[0]

    @property
    def is_pivotal(self) -> bool:
        return self.coeffs[0] != 0

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs) and self.bound is not None and self.bound.exact

    def without_bound(self) -> "LaurentExpansion":
        return replace(self, bound=None)

    def with_bound(self, bound: RemainderBound | None) -> "LaurentExpansion":
        return replace(self, bound=bound)

    def evaluate(self, eps: RationalLike) -> Fraction:
        return evaluate(self, eps)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "k": self.k,
            "coeffs": [format_rational(c) for c in self.coeffs],
            "bound": None if self.bound is None else self.bound.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LaurentExpansion":
        try:
            h, k, coeffs = data["h"], data["k"], data["coeffs"]
        except KeyError as exc:
            raise ExpansionError(f"expansion is missing field {exc.args[0]!r}") from exc
        if not isinstance(h, int) or not isinstance(k, int) or isinstance(h, bool):
            raise ExpansionError("h and k must be integers")
        if not isinstance(coeffs, list):
            raise ExpansionError("coeffs must be a list of rationals")
        raw_bound = data.get("bound")
        bound = None if raw_bound is None else RemainderBound.from_dict(raw_bound)
        return cls(h, k, tuple(as_rational(c) for c in coeffs), bound)

    def __str__(self) -> str:
        parts = []
        for power, c in self.terms():
            if power == 0:
                parts.append(f"{c}")
            elif power == 1:
                parts.append(f"{c}*eps")
            else:
                parts.append(f"{c}*eps^{power}")
        body = " + ".join(parts).replace("+ -", "- ")
        return f"{body} + o(eps^{self.k})"

    # Operator sugar over the functional API.
    def __neg__(self) -> "LaurentExpansion":
        return scale(-1, self)

    def __add__(self, other: "LaurentExpansion") -> "LaurentExpansion":
        if not isinstance(other, LaurentExpansion):
            return NotImplemented
        return add(self, other)

    def __sub__(self, other: "LaurentExpansion") -> "LaurentExpansion":
        if not isinstance(other, LaurentExpansion):
            return NotImplemented
        return add(self, scale(-1, other))

    def __mul__(self, other: "LaurentExpansion | RationalLike") -> "LaurentExpansion":
        if isinstance(other, LaurentExpansion):
            return mul(self, other)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return scale(other, self)
        return NotImplemented

    def __rmul__(self, other: RationalLike) -> "LaurentExpansion":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return scale(other, self)
        return NotImplemented

    def __truediv__(self, other: "LaurentExpansion") -> "LaurentExpansion":
        if not isinstance(other, LaurentExpansion):
            return NotImplemented
        return div(self, other)


# ---------------------------------------------------------------------------
# float helpers for the G-parameter formulas


def _pow(base: float, exponent: Fraction) -> float:
    if exponent < 0:
        raise NegativeExponentError(f"negative exponent {exponent} applied to eps_bar={base}")
    if exponent == 0:
        return 1.0
    if exponent.denominator == 1:
        return base ** exponent.numerator
    return base ** float(exponent)


def _product(values: Iterable[float]) -> float:
    # Sorted so that the result does not depend on argument order.
    result = 1.0
    for v in sorted(values):
        result *= v
    return result


def _term(weight: Fraction | float, base: float, exponent: Fraction) -> float:
    return float(weight) * _pow(base, exponent)


def _bounds(*items: LaurentExpansion) -> list[RemainderBound] | None:
    bounds = [a.bound for a in items]
    if any(b is None for b in bounds):
        return None
    return bounds  # type: ignore[return-value]


def _abs_convolution(factors: Sequence[LaurentExpansion]) -> dict[int, Fraction]:
    """Full product of the absolute-value coefficient polynomials."""
    acc: dict[int, Fraction] = {0: Fraction(1)}
    for f in factors:
        nxt: dict[int, Fraction] = {}
        for p, c in acc.items():
            for q, d in f.terms():
                if d:
                    nxt[p + q] = nxt.get(p + q, Fraction(0)) + c * abs(d)
        acc = nxt
    return acc


def _convolution(factors: Sequence[LaurentExpansion]) -> dict[int, Fraction]:
    acc: dict[int, Fraction] = {0: Fraction(1)}
    for f in factors:
        nxt: dict[int, Fraction] = {}
        for p, c in acc.items():
            for q, d in f.terms():
                if d:
                    nxt[p + q] = nxt.get(p + q, Fraction(0)) + c * d
        acc = nxt
    return acc


# ---------------------------------------------------------------------------
# constructors


def embed_constant(c: RationalLike, h: int, k: int, eps0: float = 1.0) -> LaurentExpansion:
    """The constant function ``c`` as an exact expansion on powers ``h..k``."""
    c = as_rational(c)
    if h > k:
        raise ExpansionError(f"need h <= k, got h={h}, k={k}")
    if c != 0 and not h <= 0 <= k:
        raise ExpansionError(f"nonzero constant needs power 0 inside {h}..{k}")
    coeffs = [Fraction(0)] * (k - h + 1)
    if c != 0:
        coeffs[-h] = c
    return LaurentExpansion(h, k, tuple(coeffs), RemainderBound(Fraction(1), 0.0, eps0))


def from_wide_bound(
    h: int,
    k: int,
    coeffs: Sequence[RationalLike],
    delta: RationalLike,
    G: float,
    eps_bar: float,
) -> LaurentExpansion:
    """Build an expansion whose remainder exponent ``delta`` may exceed 1.

    The bound is re-indexed to an equivalent form with ``delta`` in ``(0, 1]``
    by padding zero coefficients up to ``k' = k + ceil(delta) - 1``.
    """
    delta = as_rational(delta)
    if delta <= 0:
        raise ExpansionError(f"delta must be positive, got {delta}")
    whole = math.floor(delta)
    is_integer = delta == whole
    shift = whole - (1 if is_integer else 0)
    new_delta = delta - whole + (1 if is_integer else 0)
    padded = [as_rational(c) for c in coeffs] + [Fraction(0)] * shift
    return LaurentExpansion(h, k + shift, tuple(padded), RemainderBound(new_delta, G, eps_bar))


# ---------------------------------------------------------------------------
# operational rules


def combine_representations(a1: LaurentExpansion, a2: LaurentExpansion) -> LaurentExpansion:
    """Merge two expansions of the same function into the more informative one.

    Larger ``k`` wins; on a tie the larger ``delta`` wins; on a full tie the
    smaller ``G`` and the smaller ``eps_bar`` are taken.  The lowest power is
    the larger of the two ``h`` values.
    """
    lo = min(a1.h, a2.h)
    hi = min(a1.k, a2.k)
    for power in range(lo, hi + 1):
        if a1.coeff(power) != a2.coeff(power):
            raise InconsistentRepresentationsError(
                f"coefficients of eps^{power} disagree: {a1.coeff(power)} vs {a2.coeff(power)}"
            )

    if a1.k != a2.k:
        source = a1 if a1.k > a2.k else a2
        bound = source.bound
    else:
        source = a1
        b1, b2 = a1.bound, a2.bound
        if b1 is None or b2 is None:
            bound = b1 if b2 is None else b2
        elif b1.delta != b2.delta:
            bound = b1 if b1.delta > b2.delta else b2
        else:
            bound = RemainderBound(b1.delta, min(b1.G, b2.G), min(b1.eps_bar, b2.eps_bar))

    h = max(a1.h, a2.h)
    coeffs = tuple(source.coeff(p) for p in range(h, source.k + 1))
    return LaurentExpansion(h, source.k, coeffs, bound)


def scale(c: RationalLike, a: LaurentExpansion) -> LaurentExpansion:
    c = as_rational(c)
    bound = None
    if a.bound is not None:
        bound = RemainderBound(a.bound.delta, float(abs(c)) * a.bound.G, a.bound.eps_bar)
    return LaurentExpansion(a.h, a.k, tuple(c * x for x in a.coeffs), bound)


def add(a: LaurentExpansion, b: LaurentExpansion) -> LaurentExpansion:
    h = min(a.h, b.h)
    k = min(a.k, b.k)
    coeffs = tuple(a.coeff(p) + b.coeff(p) for p in range(h, k + 1))

    bounds = _bounds(a, b)
    if bounds is None:
        return LaurentExpansion(h, k, coeffs)
    ba, bb = bounds
    if a.k < b.k:
        delta = ba.delta
    elif a.k > b.k:
        delta = bb.delta
    else:
        delta = min(ba.delta, bb.delta)
    eps = min(ba.eps_bar, bb.eps_bar)

    terms = []
    for x, bx in ((a, ba), (b, bb)):
        terms.append(_term(bx.G, eps, x.k + bx.delta - k - delta))
        terms.extend(_term(abs(c), eps, p - k - delta) for p, c in x.terms() if p > k)
    return LaurentExpansion(h, k, coeffs, RemainderBound(delta, math.fsum(terms), eps))


def mul(a: LaurentExpansion, b: LaurentExpansion) -> LaurentExpansion:
    h = a.h + b.h
    k = min(a.k + b.h, b.k + a.h)
    full = _convolution([a, b])
    coeffs = tuple(full.get(p, Fraction(0)) for p in range(h, k + 1))

    bounds = _bounds(a, b)
    if bounds is None:
        return LaurentExpansion(h, k, coeffs)
    ba, bb = bounds
    left, right = a.k + b.h, b.k + a.h
    if left < right:
        delta = ba.delta
    elif left > right:
        delta = bb.delta
    else:
        delta = min(ba.delta, bb.delta)
    eps = min(ba.eps_bar, bb.eps_bar)

    terms = [
        _term(weight, eps, p - k - delta)
        for p, weight in _abs_convolution([a, b]).items()
        if p > k
    ]
    for x, bx, y in ((a, ba, b), (b, bb, a)):
        terms.extend(
            _term(bx.G * float(abs(c)), eps, p + x.k + bx.delta - k - delta)
            for p, c in y.terms()
        )
    terms.append(_product([ba.G, bb.G]) * _pow(eps, a.k + b.k + ba.delta + bb.delta - k - delta))
    return LaurentExpansion(h, k, coeffs, RemainderBound(delta, math.fsum(terms), eps))


def _require_pivotal(b: LaurentExpansion) -> None:
    if not b.is_pivotal:
        raise NonPivotalError(f"divisor has zero leading coefficient at eps^{b.h}")


def _eps_tilde(b: LaurentExpansion, bb: RemainderBound) -> float:
    """Radius on which ``|B(eps) / eps**h_B|`` stays above ``|b_h| / 2``."""
    lead = abs(b.leading)
    terms = [_term(abs(c), bb.eps_bar, p - b.h - bb.delta) for p, c in b.terms() if p > b.h]
    terms.append(_term(bb.G, bb.eps_bar, Fraction(b.k - b.h)))
    denom = 2.0 * math.fsum(terms)
    if denom == 0.0:
        return math.inf
    try:
        return (float(lead) / denom) ** (1.0 / float(bb.delta))
    except OverflowError:
        return math.inf


def reciprocal(b: LaurentExpansion) -> LaurentExpansion:
    """Expansion of ``1 / B`` for a pivotal ``B``."""
    _require_pivotal(b)
    h = -b.h
    k = b.k - 2 * b.h
    inv_lead = 1 / b.leading
    c: list[Fraction] = [inv_lead]
    for n in range(1, k - h + 1):
        acc = sum((b.coeffs[m] * c[n - m] for m in range(1, n + 1)), Fraction(0))
        c.append(-inv_lead * acc)
    out = LaurentExpansion(h, k, tuple(c))

    if b.bound is None:
        return out
    bb = b.bound
    eps = min(bb.eps_bar, _eps_tilde(b, bb))
    threshold = b.k - b.h
    terms = [
        _term(weight, eps, p - b.k + b.h - bb.delta)
        for p, weight in _abs_convolution([b, out]).items()
        if p > threshold
    ]
    terms.extend(_term(bb.G * float(abs(cj)), eps, Fraction(p + b.h)) for p, cj in out.terms())
    G = float(2 / abs(b.leading)) * math.fsum(terms)
    return out.with_bound(RemainderBound(bb.delta, G, eps))


def _div_direct(a: LaurentExpansion, b: LaurentExpansion) -> LaurentExpansion:
    h = a.h - b.h
    k = min(a.k - b.h, b.k - 2 * b.h + a.h)
    lead = b.leading
    d: list[Fraction] = []
    for n in range(k - h + 1):
        acc = a.coeff(h + n + b.h)
        for m in range(1, min(n, b.k - b.h) + 1):
            acc -= b.coeffs[m] * d[n - m]
        d.append(acc / lead)
    out = LaurentExpansion(h, k, tuple(d))

    bounds = _bounds(a, b)
    if bounds is None:
        return out
    ba, bb = bounds
    left, right = a.k - b.h, b.k - 2 * b.h + a.h
    if left < right:
        delta = ba.delta
    elif left > right:
        delta = bb.delta
    else:
        delta = min(ba.delta, bb.delta)
    eps = min(ba.eps_bar, bb.eps_bar, _eps_tilde(b, bb))
    top = k + b.h  # highest power of A matched by D * B
    terms = [
        _term(weight, eps, p - top - delta)
        for p, weight in _abs_convolution([b, out]).items()
        if p > top
    ]
    terms.extend(_term(abs(c), eps, p - top - delta) for p, c in a.terms() if p > top)
    terms.append(_term(ba.G, eps, a.k + ba.delta - top - delta))
    terms.extend(
        _term(bb.G * float(abs(dj)), eps, p + b.k + bb.delta - b.h - k - delta)
        for p, dj in out.terms()
    )
    G = float(2 / abs(lead)) * math.fsum(terms)
    return out.with_bound(RemainderBound(delta, G, eps))


def div(a: LaurentExpansion, b: LaurentExpansion, mode: str = "via-reciprocal") -> LaurentExpansion:
    """Expansion of ``A / B`` for a pivotal ``B``.

    ``mode="via-reciprocal"`` multiplies ``A`` by the reciprocal expansion of
    ``B``; ``mode="direct"`` solves ``A = D * B`` for the coefficients and uses
    the one-step remainder bound.  Coefficients agree between the modes; the
    bound parameters generally do not.
    """
    _require_pivotal(b)
    if mode == "via-reciprocal":
        return mul(a, reciprocal(b))
    if mode == "direct":
        return _div_direct(a, b)
    raise ExpansionError(f"unknown division mode {mode!r}")


def sum_many(terms: Sequence[LaurentExpansion]) -> LaurentExpansion:
    """Sum of several expansions with an order-independent bound."""
    terms = list(terms)
    if not terms:
        raise ExpansionError("sum_many needs at least one term")
    h = min(t.h for t in terms)
    k = min(t.k for t in terms)
    coeffs = tuple(sum((t.coeff(p) for t in terms), Fraction(0)) for p in range(h, k + 1))

    bounds = _bounds(*terms)
    if bounds is None:
        return LaurentExpansion(h, k, coeffs)
    delta = min(bt.delta for t, bt in zip(terms, bounds) if t.k == k)
    eps = min(bt.eps_bar for bt in bounds)
    parts = []
    for t, bt in zip(terms, bounds):
        parts.append(_term(bt.G, eps, t.k + bt.delta - k - delta))
        parts.extend(_term(abs(c), eps, p - k - delta) for p, c in t.terms() if p > k)
    return LaurentExpansion(h, k, coeffs, RemainderBound(delta, math.fsum(parts), eps))


def prod_many(factors: Sequence[LaurentExpansion]) -> LaurentExpansion:
    """Product of several expansions with an order-independent bound."""
    factors = list(factors)
    if not factors:
        raise ExpansionError("prod_many needs at least one factor")
    total_h = sum(f.h for f in factors)
    reach = [f.k - f.h + total_h for f in factors]
    k = min(reach)
    full = _convolution(factors)
    coeffs = tuple(full.get(p, Fraction(0)) for p in range(total_h, k + 1))

    bounds = _bounds(*factors)
    if bounds is None:
        return LaurentExpansion(total_h, k, coeffs)
    delta = min(bf.delta for r, bf in zip(reach, bounds) if r == k)
    eps = min(bf.eps_bar for bf in bounds)

    parts = [
        _term(weight, eps, p - k - delta)
        for p, weight in _abs_convolution(factors).items()
        if p > k
    ]
    # Each factor's magnitude, normalised by eps^h so all exponents stay >= 0.
    magnitude = []
    for f, bf in zip(factors, bounds):
        pieces = [_term(abs(c), eps, Fraction(p - f.h)) for p, c in f.terms()]
        pieces.append(_term(bf.G, eps, f.k + bf.delta - f.h))
        magnitude.append(math.fsum(pieces))
    for j, (f, bf) in enumerate(zip(factors, bounds)):
        others = [m for i, m in enumerate(magnitude) if i != j]
        exponent = f.k + bf.delta + (total_h - f.h) - k - delta
        parts.append(_product(others + [bf.G]) * _pow(eps, exponent))
    return LaurentExpansion(total_h, k, coeffs, RemainderBound(delta, math.fsum(parts), eps))


def rebase_delta(a: LaurentExpansion, delta_star: RationalLike) -> LaurentExpansion:
    """Rewrite the bound at a smaller exponent, ``G* = G * eps_bar**(delta - delta*)``."""
    delta_star = as_rational(delta_star)
    if a.bound is None:
        raise InvalidRebaseError("cannot rebase an expansion without a bound")
    if not 0 < delta_star <= 1:
        raise InvalidRebaseError(f"delta* must lie in (0, 1], got {delta_star}")
    if delta_star > a.bound.delta:
        raise InvalidRebaseError(f"delta*={delta_star} exceeds delta={a.bound.delta}")
    b = a.bound
    G = b.G * _pow(b.eps_bar, b.delta - delta_star)
    return a.with_bound(RemainderBound(delta_star, G, b.eps_bar))


def evaluate(a: LaurentExpansion, eps: RationalLike) -> Fraction:
    """Exact value of the retained polynomial part at ``eps``."""
    eps = as_rational(eps)
    if eps <= 0:
        raise ExpansionError(f"eps must be positive, got {eps}")
    return sum((c * eps**p for p, c in a.terms()), Fraction(0))


def trim(a: LaurentExpansion) -> LaurentExpansion:
    """Drop leading zero coefficients (never applied implicitly)."""
    offset = 0
    while offset < len(a.coeffs) - 1 and a.coeffs[offset] == 0:
        offset += 1
    return LaurentExpansion(a.h + offset, a.k, a.coeffs[offset:], a.bound)
