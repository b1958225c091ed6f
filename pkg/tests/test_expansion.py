import json
import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import expansions, small_rationals
from laurentsmp.expansion import (
    ExpansionError,
    InconsistentRepresentationsError,
    InvalidRebaseError,
    LaurentExpansion,
    NonPivotalError,
    RemainderBound,
    NegativeExponentError,
    _pow,
    add,
    combine_representations,
    div,
    embed_constant,
    evaluate,
    from_wide_bound,
    mul,
    prod_many,
    rebase_delta,
    reciprocal,
    scale,
    sum_many,
    trim,
)


def X(h, coeffs, delta=1, G=0.0, eps_bar=1.0, bounded=True):
    bound = RemainderBound(F(delta), G, eps_bar) if bounded else None
    return LaurentExpansion(h, h + len(coeffs) - 1, tuple(F(c) for c in coeffs), bound)


def parts(x):
    return x.h, x.k, x.coeffs


# --- construction ---------------------------------------------------------


def test_embed_constant_one():
    one = embed_constant(1, 0, 2)
    assert parts(one) == (0, 2, (1, 0, 0))
    assert one.bound == RemainderBound(1, 0.0, 1.0)


def test_embed_constant_zero_with_negative_powers():
    zero = embed_constant(0, -1, 1)
    assert parts(zero) == (-1, 1, (0, 0, 0))
    assert zero.bound.exact


def test_embed_constant_identity():
    assert parts(embed_constant(F(3, 2), 0, 0)) == (0, 0, (F(3, 2),))


def test_embed_constant_rejects_missing_power_zero():
    with pytest.raises(ExpansionError):
        embed_constant(1, 1, 3)


def test_shape_checks():
    with pytest.raises(ExpansionError):
        LaurentExpansion(2, 1, (F(1),))
    with pytest.raises(ExpansionError):
        LaurentExpansion(0, 2, (F(1), F(2)))
    with pytest.raises(ExpansionError):
        RemainderBound(F(0), 1.0, 0.5)
    with pytest.raises(ExpansionError):
        RemainderBound(F(3, 2), 1.0, 0.5)
    with pytest.raises(ExpansionError):
        RemainderBound(F(1), -1.0, 0.5)
    with pytest.raises(ExpansionError):
        RemainderBound(F(1), 1.0, 1.5)


def test_floats_are_not_coefficients():
    with pytest.raises(TypeError):
        LaurentExpansion(0, 0, (0.5,))


def test_pivotality():
    assert X(0, [1, 0]).is_pivotal
    assert not X(0, [0, 1]).is_pivotal


def test_wide_delta_is_reindexed():
    # delta = 5/2 at k = 1 is the same statement as delta = 1/2 at k = 3.
    x = from_wide_bound(0, 1, [1, 1], F(5, 2), 2.0, 0.5)
    assert parts(x) == (0, 3, (1, 1, 0, 0))
    assert x.bound.delta == F(1, 2)
    # An integer delta = 2 becomes delta = 1 one power higher.
    y = from_wide_bound(0, 1, [1, 1], 2, 2.0, 0.5)
    assert parts(y) == (0, 2, (1, 1, 0))
    assert y.bound.delta == 1


def test_trim_is_explicit():
    x = X(0, [0, 0, 3, 1])
    assert x.h == 0
    assert parts(trim(x)) == (2, 3, (3, 1))


# --- combine_representations ---------------------------------------------


def test_combine_larger_k_wins():
    a1 = X(1, [1, 1], delta=F(1, 2))
    a2 = X(1, [1, 1, 1], delta=1)
    out = combine_representations(a1, a2)
    assert parts(out) == (1, 3, (1, 1, 1))
    assert out.bound.delta == 1


def test_combine_equal_k_and_delta_takes_minima():
    a1 = X(1, [1, 1], G=2.0, eps_bar=0.5)
    a2 = X(1, [1, 1], G=1.0, eps_bar=0.8)
    assert combine_representations(a1, a2).bound == RemainderBound(1, 1.0, 0.5)


def test_combine_equal_k_prefers_larger_delta():
    a1 = X(0, [1, 1], delta=F(1, 3), G=0.1)
    a2 = X(0, [1, 1], delta=F(2, 3), G=9.0)
    assert combine_representations(a1, a2).bound.delta == F(2, 3)


def test_combine_non_absorption_forms():
    # 1 - p22 versus p21 + p23 for the three-state example.
    one_minus = add(embed_constant(1, 0, 2), scale(-1, X(0, [1, -1, -1])))
    exits = add(X(1, [F(1, 2), F(1, 2), -1]), X(1, [F(1, 2), F(1, 2), 2]))
    out = combine_representations(one_minus, exits)
    assert parts(out) == (1, 3, (1, 1, 1))


def test_combine_rejects_disagreement():
    with pytest.raises(InconsistentRepresentationsError):
        combine_representations(X(0, [1, 2]), X(0, [1, 3, 0]))


def test_combine_checks_zeros_below_h():
    with pytest.raises(InconsistentRepresentationsError):
        combine_representations(X(0, [1, 1]), X(1, [1, 1]))


def test_combine_prefers_bounded_on_tie():
    bounded = X(0, [1, 1], G=1.0)
    out = combine_representations(bounded.without_bound(), bounded)
    assert out.bound == bounded.bound


# --- scale, add, mul ------------------------------------------------------


def test_scale_by_minus_one():
    out = scale(-1, X(0, [1, 1], G=2.0, eps_bar=0.5))
    assert parts(out) == (0, 1, (-1, -1))
    assert out.bound == RemainderBound(1, 2.0, 0.5)


def test_scale_identity_and_linearity():
    a = X(-1, [3, 0, 6], G=1.5)
    assert scale(1, a) == a
    assert parts(scale(F(2, 3), a)) == (-1, 1, (2, 0, 4))
    assert scale(0, a).bound.G == 0


def test_add_cancels_constants():
    assert parts(add(X(0, [1, 1]), X(0, [-1, 1]))) == (0, 1, (0, 2))


def test_add_row_three_sums_to_one():
    out = add(X(0, [F(1, 2), 0, 1, -1]), X(0, [F(1, 2), 0, -1, 1]))
    assert parts(out) == (0, 3, (1, 0, 0, 0))
    assert out.bound.G == 0


def _add_G_direct(a, b):
    # Independent transcription of the four-term rule for k_A < k_B.
    k, d, e = a.k, a.bound.delta, min(a.bound.eps_bar, b.bound.eps_bar)
    g = a.bound.G * e ** float(a.k + a.bound.delta - k - d)
    g += sum(float(abs(c)) * e ** float(p - k - d) for p, c in b.terms() if p > k)
    g += b.bound.G * e ** float(b.k + b.bound.delta - k - d)
    return g


def test_add_bound_against_direct_formula():
    rng = random.Random(7)
    for _ in range(50):
        a = X(0, [F(rng.randint(-5, 5), 3) for _ in range(3)], delta=F(1, 2), G=rng.uniform(0, 2), eps_bar=0.5)
        b = X(0, [F(rng.randint(-5, 5), 3) for _ in range(4)], delta=F(3, 4), G=rng.uniform(0, 2), eps_bar=0.25)
        out = add(a, b)
        assert out.k == 2 and out.bound.delta == F(1, 2)
        assert out.bound.eps_bar == 0.25
        assert math.isclose(out.bound.G, _add_G_direct(a, b), rel_tol=1e-12)


def test_add_without_bound_yields_unbounded():
    assert add(X(0, [1]), X(0, [1], bounded=False)).bound is None


def test_mul_monomials():
    assert parts(mul(X(-1, [1]), X(1, [1]))) == (0, 0, (1,))


def test_mul_truncates_to_common_order():
    out = mul(X(0, [1, 1]), X(0, [1, -1]))
    assert parts(out) == (0, 1, (1, 0))


def test_mul_laurent_against_convolution():
    rng = random.Random(3)
    for _ in range(30):
        a = X(-1, [F(rng.randint(-4, 4), 2) for _ in range(3)])
        b = X(0, [F(rng.randint(-4, 4), 2) for _ in range(3)])
        out = mul(a, b)
        assert (out.h, out.k) == (-1, 1)
        for power in range(-1, 2):
            brute = sum(a.coeff(i) * b.coeff(power - i) for i in range(-1, 2) if 0 <= power - i <= 2)
            assert out.coeff(power) == brute


def test_mul_bound_by_hand():
    x = X(0, [1, 1], G=2.0, eps_bar=0.5)
    # eps^2 tail 1, cross terms 2 * 2 * (1 + 1/2), G*G*eps^2 = 1.
    assert mul(x, x).bound == RemainderBound(1, 8.0, 0.5)


# --- reciprocal and div ---------------------------------------------------


def test_reciprocal_geometric():
    assert parts(reciprocal(X(0, [1, -1]))) == (0, 1, (1, 1))


def test_reciprocal_laurent():
    out = reciprocal(X(1, [1, 1]))
    assert parts(out) == (-1, 0, (1, -1))


def test_reciprocal_of_one():
    out = reciprocal(embed_constant(1, 0, 3))
    assert parts(out) == (0, 3, (1, 0, 0, 0))
    assert out.bound.G == 0


def test_reciprocal_rejects_nonpivotal():
    with pytest.raises(NonPivotalError):
        reciprocal(X(0, [0, 1]))
    with pytest.raises(NonPivotalError):
        div(X(0, [1]), X(0, [0, 1]))


def test_reciprocal_radius_shrinks_for_large_tail():
    out = reciprocal(X(0, [1, 8], G=0.0, eps_bar=1.0))
    # |1 + 8 eps| >= 1/2 is only guaranteed for eps <= 1/16.
    assert out.bound.eps_bar == pytest.approx(1 / 16)


@pytest.mark.parametrize("mode", ["via-reciprocal", "direct"])
def test_div_stationary_three(mode):
    out = div(X(-1, [3, 1]), X(-1, [F(21, 2), -3]), mode=mode)
    assert parts(out) == (0, 1, (F(2, 7), F(26, 147)))


@pytest.mark.parametrize("mode", ["via-reciprocal", "direct"])
def test_div_self_is_one(mode):
    a = X(1, [2])
    assert parts(div(a, a, mode=mode)) == (0, 0, (1,))


def test_div_modes_agree_on_coefficients():
    rng = random.Random(11)
    for _ in range(100):
        a = X(rng.randint(-1, 1), [F(rng.randint(-4, 4), 3) for _ in range(3)], G=rng.uniform(0, 2))
        b = X(rng.randint(-1, 1), [F(rng.choice([-3, -1, 1, 2]), 2)] + [F(rng.randint(-4, 4), 3) for _ in range(2)], G=rng.uniform(0, 2))
        one = div(a, b)
        two = div(a, b, mode="direct")
        assert parts(one) == parts(two)


def test_div_unknown_mode():
    with pytest.raises(ExpansionError):
        div(X(0, [1]), X(0, [1]), mode="sideways")


# --- sum_many and prod_many ----------------------------------------------


def test_sum_many_sojourn_three():
    out = sum_many([X(-1, [1, 1]), X(-1, [2, 0, 1])])
    assert parts(out) == (-1, 0, (3, 1))


def test_sum_many_single_term():
    a = X(0, [1, 2], G=1.0, delta=F(1, 2), eps_bar=0.5)
    assert sum_many([a]) == a


def test_sum_many_rejects_empty():
    with pytest.raises(ExpansionError):
        sum_many([])
    with pytest.raises(ExpansionError):
        prod_many([])


def test_prod_many_monomial_cancellation():
    assert parts(prod_many([X(1, [1]), X(-1, [1]), X(0, [1, 1])])) == (0, 0, (1,))
    # Retained order is min_m (k_m + sum of the other h): here 0.
    assert parts(prod_many([X(1, [1, 0]), X(-1, [1, 0]), X(0, [1, 1])])) == (0, 1, (1, 1))


def test_prod_many_single_factor_is_identity():
    a = X(-1, [2, 1], G=0.5, delta=F(1, 2), eps_bar=0.25)
    assert prod_many([a]) == a


def test_prod_many_matches_nested_mul_coefficients():
    rng = random.Random(5)
    for _ in range(30):
        xs = [X(rng.randint(-1, 1), [F(rng.randint(-3, 3), 2) for _ in range(3)], G=0.5) for _ in range(3)]
        assert parts(prod_many(xs)) == parts(mul(mul(xs[0], xs[1]), xs[2]))


# --- rebase and evaluate --------------------------------------------------


def test_rebase_same_delta_keeps_G():
    a = X(0, [1], G=4.0, eps_bar=0.5)
    assert rebase_delta(a, 1).bound.G == 4.0


def test_rebase_half():
    a = X(0, [1], G=4.0, eps_bar=0.5)
    assert rebase_delta(a, F(1, 2)).bound.G == pytest.approx(2.8284271247461903, rel=1e-15)


def test_rebase_exact_stays_exact():
    assert rebase_delta(X(0, [1, 2]), F(1, 3)).bound.G == 0


def test_rebase_rejects_larger_delta():
    with pytest.raises(InvalidRebaseError):
        rebase_delta(X(0, [1], delta=F(1, 2)), F(3, 4))
    with pytest.raises(InvalidRebaseError):
        rebase_delta(X(0, [1], bounded=False), F(1, 2))


def test_evaluate():
    assert evaluate(X(0, [1, 1]), F(1, 2)) == F(3, 2)
    assert evaluate(X(-1, [3, 1]), F(1, 100)) == 301
    assert evaluate(X(0, [F(2, 7), F(26, 147)]), F(1, 10)) == F(2, 7) + F(26, 1470)


def test_evaluate_rejects_nonpositive():
    with pytest.raises(ExpansionError):
        evaluate(X(0, [1]), 0)


def test_negative_exponent_is_internal_error():
    with pytest.raises(NegativeExponentError):
        _pow(0.5, F(-1, 2))


def test_operator_sugar():
    a, b = X(0, [1, 1]), X(0, [2, -1])
    assert a + b == add(a, b)
    assert a * b == mul(a, b)
    assert a / b == div(a, b)
    assert parts(a - a) == (0, 1, (0, 0))
    assert 2 * a == scale(2, a)


# --- serialisation --------------------------------------------------------


def test_json_shape():
    doc = X(-1, [F(21, 2), -3], delta=F(1, 2), G=0.1, eps_bar=0.25).to_dict()
    assert doc == {
        "h": -1,
        "k": 0,
        "coeffs": ["21/2", "-3/1"],
        "bound": {"delta": "1/2", "G": 0.1, "epsBar": 0.25},
    }


@given(expansions(bounded=False) | expansions())
def test_json_round_trip(a):
    assert LaurentExpansion.from_dict(json.loads(json.dumps(a.to_dict()))) == a


# --- algebraic properties -------------------------------------------------


@given(expansions(), expansions())
def test_add_and_mul_commute_exactly(a, b):
    assert add(a, b) == add(b, a)
    assert mul(a, b) == mul(b, a)


@given(expansions(), expansions(), expansions())
def test_coefficient_associativity_and_distributivity(a, b, c):
    assert parts(add(add(a, b), c)) == parts(add(a, add(b, c)))
    assert parts(mul(mul(a, b), c)) == parts(mul(a, mul(b, c)))
    assert parts(mul(add(a, b), c)) == parts(add(mul(a, c), mul(b, c)))


@given(expansions(pivotal=True))
def test_convolution_identity(b):
    out = mul(b, reciprocal(b))
    assert out.coeff(0) == 1
    assert all(c == 0 for p, c in out.terms() if p != 0)


@given(st.lists(expansions(), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_many_ops_are_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert sum_many(xs) == sum_many(ys)
    assert prod_many(xs) == prod_many(ys)


@given(expansions(), expansions(), expansions(pivotal=True))
def test_delta_never_drops_below_inputs(a, b, c):
    floor = min(a.bound.delta, b.bound.delta, c.bound.delta)
    for out in (add(a, b), mul(a, b), div(a, c), div(a, c, mode="direct"), sum_many([a, b, c]), prod_many([a, b, c])):
        assert out.bound.delta >= floor


@given(
    st.lists(small_rationals, min_size=1, max_size=4),
    st.lists(small_rationals, min_size=1, max_size=4),
    st.integers(-1, 1),
    st.integers(-1, 1),
)
@settings(max_examples=60)
def test_exact_polynomials_match_brute_force(ca, cb, ha, hb):
    a = X(ha, ca)
    b = X(hb, cb)
    k_add = min(a.k, b.k)
    out = add(a, b)
    for p in range(out.h, k_add + 1):
        assert out.coeff(p) == a.coeff(p) + b.coeff(p)
    out = mul(a, b)
    for p in range(out.h, out.k + 1):
        brute = sum(a.coeff(i) * b.coeff(p - i) for i in range(a.h, a.k + 1) if b.h <= p - i <= b.k)
        assert out.coeff(p) == brute
