"""OPE engine identities, exercised over the N=2 algebra: Jacobi residues,
skew-symmetry, translation covariance, normal-ordering laws, basis counts,
serialization."""

import json
from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from artifact.engine import (
    EngineError,
    MissingEntryError,
    deserialize,
    sadd,
    sneg,
    sscale,
    ssub,
    serialize,
)
from artifact.n2 import GM, GP, H, L, build_n2
from artifact.scalars import Scalar

ALG = build_n2()

GEN_IDX = st.sampled_from([H, GP, GM, L])


def words_of_weight_at_most(wt):
    out = []
    w = Fraction(0)
    while w <= wt:
        out.extend(ALG.weight_basis(w))
        w += Fraction(1, 2)
    return [x for x in out if x]


WORDS3 = words_of_weight_at_most(3)


def test_vacuum_laws():
    for g in (H, GP, GM, L):
        s = ALG.gen_state(g)
        assert ALG.prod({(): ALG.unit}, -1, s) == s
        assert ALG.prod(s, -1, {(): ALG.unit}) == s
        assert not ALG.prod({(): ALG.unit}, 0, s)
        assert not ALG.prod(s, 0, {(): ALG.unit})


def test_all_generator_jacobi_to_weight_nine():
    # every J_{r,s}(a,b,c) over the four generators with r,s down to the
    # grading bound; all must vanish identically in c
    for a in range(4):
        for b in range(4):
            for c in range(4):
                sa, sb, sc = ALG.gen_state(a), ALG.gen_state(b), ALG.gen_state(c)
                for r in range(6):
                    for s in range(6 - r):
                        assert not ALG.jacobi_residue(sa, r, s, sb, sc), (a, b, c, r, s)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(WORDS3),
    st.sampled_from(WORDS3),
    st.sampled_from(WORDS3),
    st.integers(0, 2),
    st.integers(0, 2),
)
def test_jacobi_on_random_words(wa, wb, wc, r, s):
    sa = {wa: ALG.unit}
    sb = {wb: ALG.unit}
    sc = {wc: ALG.unit}
    assert not ALG.jacobi_residue(sa, r, s, sb, sc)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(WORDS3), st.sampled_from(WORDS3), st.integers(-1, 4))
def test_skew_symmetry(wa, wb, r):
    # a_(r)b = (-1)^{pa pb} sum_j (-1)^{r+j+1}/j! d^j (b_(r+j) a)
    sa = {wa: ALG.unit}
    sb = {wb: ALG.unit}
    lhs = ALG.prod(sa, r, sb)
    pa, pb = ALG.word_parity(wa), ALG.word_parity(wb)
    sgn = -1 if (pa and pb) else 1
    rhs = {}
    bound = ALG.word_weight(wa) + ALG.word_weight(wb)
    j = 0
    while r + j <= bound + 1:
        inner = ALG.prod(sb, r + j, sa)
        if inner:
            coef = Fraction(sgn * (-1) ** (r + j + 1), factorial(j))
            rhs = sadd(rhs, sscale(ALG.derive(inner, j), coef))
        j += 1
    assert not ssub(lhs, rhs), (wa, wb, r)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(WORDS3), st.sampled_from(WORDS3), st.integers(-2, 3))
def test_translation_covariance(wa, wb, r):
    sa = {wa: ALG.unit}
    sb = {wb: ALG.unit}
    # (da)_(r) b = -r a_(r-1) b
    lhs = ALG.prod(ALG.derive(sa), r, sb)
    rhs = sscale(ALG.prod(sa, r - 1, sb), -r) if r != 0 else {}
    assert not ssub(lhs, rhs)
    # d(a_(r)b) = (da)_(r) b + a_(r) db
    lhs2 = ALG.derive(ALG.prod(sa, r, sb))
    rhs2 = sadd(ALG.prod(ALG.derive(sa), r, sb), ALG.prod(sa, r, ALG.derive(sb)))
    assert not ssub(lhs2, rhs2)


def test_virasoro_action_on_basis_words():
    # L_(0) = d and L_(1) = weight on every basis word up to weight 3
    ls = ALG.gen_state(L)
    for w in WORDS3:
        s = {w: ALG.unit}
        assert not ssub(ALG.prod(ls, 0, s), ALG.derive(s)), ALG.word_name(w)
        expect = sscale(s, ALG.word_weight(w))
        assert not ssub(ALG.prod(ls, 1, s), expect), ALG.word_name(w)


def test_charge_grading_on_basis_words():
    hs = ALG.gen_state(H)
    for w in WORDS3:
        s = {w: ALG.unit}
        expect = sscale(s, ALG.word_charge(w))
        assert not ssub(ALG.prod(hs, 0, s), expect), ALG.word_name(w)


def test_odd_square_vanishes():
    gp = ALG.gen_state(GP)
    assert not ALG.nprod(gp, gp)
    # but :Gp dGp: need not vanish; its derivative law still holds
    dgp = ALG.derive(gp)
    w = ALG.nprod(gp, dgp)
    lhs = ALG.derive(w)
    rhs = sadd(ALG.nprod(dgp, dgp), ALG.nprod(gp, ALG.derive(dgp)))
    assert not ssub(lhs, rhs)


def test_quasi_commutativity():
    # a_(-1)b - (-1)^{pa pb} b_(-1)a = sum_{i>=0} (-1)^i/(i+1)! d^{i+1}(a_(i)b)
    for ga in (H, GP, GM, L):
        for gb in (H, GP, GM, L):
            sa, sb = ALG.gen_state(ga), ALG.gen_state(gb)
            pa = ALG.gens[ga].parity
            pb = ALG.gens[gb].parity
            sgn = -1 if (pa and pb) else 1
            lhs = ssub(ALG.nprod(sa, sb), sscale(ALG.nprod(sb, sa), sgn))
            rhs = {}
            bound = int(ALG.gens[ga].weight + ALG.gens[gb].weight)
            for i in range(bound + 1):
                x = ALG.prod(sa, i, sb)
                if x:
                    coef = Fraction((-1) ** i, factorial(i + 1))
                    rhs = sadd(rhs, sscale(ALG.derive(x, i + 1), coef))
            assert not ssub(lhs, rhs), (ga, gb)


def test_canonical_word_enforcement():
    alg = build_n2()
    with pytest.raises(EngineError):
        alg.set_entry(H, L, 0, {((L, 0), (H, 0)): alg.unit})
    with pytest.raises(EngineError):
        # weight mismatch
        alg.set_entry(H, L, 0, {((H, 0),): alg.unit})


def test_missing_entry():
    alg = build_n2()
    from artifact.engine import Generator

    p = alg.add_generator(Generator("P", 0, 3, 0))
    alg.declare_pair(H, p)
    alg.set_entry(H, p, 0, {((p, 0),): alg.unit * 0})  # declared, all zero
    assert not alg.prod(alg.gen_state(H), 1, alg.gen_state(p))
    with pytest.raises(MissingEntryError):
        alg.prod(alg.gen_state(L), 0, alg.gen_state(p))
    # grading bound still answers without a table
    assert not alg.prod(alg.gen_state(L), 10, alg.gen_state(p))


def test_serialization_round_trip():
    data = serialize(ALG)
    text = json.dumps(data)
    back = deserialize(json.loads(text), Scalar.one(), Scalar.parse)
    assert serialize(back) == data
    # and it still computes: Gp_(0)Gm = L + dH/2
    got = back.prod(back.gen_state(GP), 0, back.gen_state(GM))
    want = sadd(back.gen_state(L), sscale(back.derive(back.gen_state(H)), Fraction(1, 2)))
    assert not ssub(got, want)


def test_graded_dimensions():
    for wt, dim in [(0, 1), (Fraction(1, 2), 0), (1, 1), (Fraction(3, 2), 2), (2, 3), (Fraction(5, 2), 4)]:
        assert ALG.graded_dimension(wt) == dim


def test_numeric_coefficient_map():
    pt = {
        "c": Fraction(7),
        "lam": Fraction(0),
        "omega": Fraction(0),
        "psi": Fraction(0),
        "k": Fraction(0),
    }
    num = ALG.map_coefficients(lambda s: s.evaluate(pt), Fraction(1))
    got = num.prod(num.gen_state(L), 3, num.gen_state(L))
    assert got == {(): Fraction(7, 2)}
    for a in range(4):
        for b in range(4):
            for c in range(4):
                sa, sb, sc = num.gen_state(a), num.gen_state(b), num.gen_state(c)
                for r in range(4):
                    for s in range(4 - r):
                        assert not num.jacobi_residue(sa, r, s, sb, sc)
