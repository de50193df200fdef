"""Exact scalar field: arithmetic axioms, the gamma**2 rewrite, text
round-trips, and evaluation with pole/branch detection."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from artifact.scalars import (
    BranchError,
    C,
    GAMMA,
    K,
    LAM,
    OMEGA,
    PSI,
    PoleError,
    Scalar,
    ScalarError,
)

VARS = [C, LAM, OMEGA, PSI, K]


def small_scalars():
    base = st.sampled_from(VARS + [Scalar.one(), Scalar.from_int(2), GAMMA])
    rationals = st.builds(
        Fraction, st.integers(-6, 6), st.integers(1, 4)
    ).map(Scalar.from_fraction)
    atoms = st.one_of(base, rationals)

    def combine(children):
        return st.one_of(
            st.tuples(children, children).map(lambda t: t[0] + t[1]),
            st.tuples(children, children).map(lambda t: t[0] * t[1]),
            children.map(lambda s: -s),
        )

    return st.recursive(atoms, combine, max_leaves=6)


@settings(max_examples=60, deadline=None)
@given(small_scalars(), small_scalars(), small_scalars())
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * (b * c) == (a * b) * c
    assert a + b == b + a
    assert a * b == b * a
    assert a - a == Scalar.zero()


@settings(max_examples=60, deadline=None)
@given(small_scalars(), small_scalars())
def test_conjugation_is_automorphism(a, b):
    assert (a + b).conjugate() == a.conjugate() + b.conjugate()
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert a.conjugate().conjugate() == a


@settings(max_examples=60, deadline=None)
@given(small_scalars())
def test_text_round_trip(a):
    assert Scalar.parse(a.to_text()) == a


def test_gamma_square_rewrite():
    assert GAMMA * GAMMA == LAM**2 + 32 * OMEGA / (C - 1)
    assert GAMMA**2 == GAMMA * GAMMA
    assert GAMMA.conjugate() == -GAMMA
    assert (C + GAMMA).conjugate() == C - GAMMA


def test_inverse_and_division():
    x = (C + 1) / (C - 1) * LAM + GAMMA * OMEGA
    assert x * x.inverse() == Scalar.one()
    assert (x / x) == Scalar.one()
    with pytest.raises(ScalarError):
        Scalar.zero().inverse()


def test_pow():
    assert (C + 1) ** 3 == (C + 1) * (C + 1) * (C + 1)
    assert (C + 1) ** 0 == Scalar.one()
    assert (C + 1) ** -2 == ((C + 1) ** 2).inverse()


def test_rational_constants():
    q = Scalar.from_fraction(Fraction(-7, 3))
    assert q.is_rational_constant()
    assert q.as_fraction() == Fraction(-7, 3)
    assert not C.is_rational_constant()
    assert not GAMMA.is_rational_constant()
    assert Scalar.zero().as_fraction() == 0


def test_evaluate():
    pt = {
        "c": Fraction(5),
        "lam": Fraction(2),
        "omega": Fraction(1),
        "psi": Fraction(1),
        "k": Fraction(1),
    }
    x = (C + 1) / (C - 1) * LAM
    assert x.evaluate(pt) == Fraction(3)
    with pytest.raises(PoleError) as exc:
        (C - 5).inverse().evaluate(pt)
    assert "c - 5" in str(exc.value)
    # gamma**2 = 4 + 32/4 = 12 is not a rational square
    with pytest.raises(BranchError):
        GAMMA.evaluate(pt)
    pt2 = dict(pt, lam=Fraction(1), omega=Fraction(0))
    assert GAMMA.evaluate(pt2) == 1
    assert GAMMA.evaluate(pt2, branch=-1) == -1
    # gamma at c = 1 is a pole of the radicand
    with pytest.raises(PoleError):
        GAMMA.evaluate(dict(pt, c=Fraction(1)))


def test_substitution():
    x = C * LAM + GAMMA
    out = x.subs({"lam": C + 1, "gamma": Scalar.from_int(3)})
    assert out == C * (C + 1) + 3
    # gamma left alone stays gamma
    assert GAMMA.subs({"c": C + 1}) == GAMMA


def test_denominator_factors():
    x = LAM / ((C - 1) * (C + 3))
    facs = set(x.denominator_factors())
    assert any("c - 1" in f for f in facs)
    assert any("c + 3" in f for f in facs)


def test_mixed_number_coercion():
    assert C + 1 == 1 + C
    assert C * Fraction(1, 2) == Fraction(1, 2) * C
    assert (C + Fraction(1, 2)) * 2 == 2 * C + 1
    assert bool(Scalar.zero()) is False
    assert bool(C) is True
