"""N=2 algebra structure: closure timing, diamonds, primarity, sigma."""

import time
from fractions import Fraction

from artifact.engine import sadd, sscale, ssub
from artifact.n2 import (
    GM,
    GP,
    H,
    L,
    build_n2,
    conformal_checks,
    diamond,
    is_primary,
    primarity_violations,
)


def test_closure_all_jacobi_r_plus_s_le_4_under_one_second():
    alg = build_n2()
    t0 = time.time()
    count = 0
    for a in range(4):
        for b in range(4):
            for c in range(4):
                sa, sb, sc = alg.gen_state(a), alg.gen_state(b), alg.gen_state(c)
                for r in range(5):
                    for s in range(5 - r):
                        assert not alg.jacobi_residue(sa, r, s, sb, sc)
                        count += 1
    elapsed = time.time() - t0
    assert count == 960
    assert elapsed < 1.0, f"{elapsed:.2f}s"


def test_diamond_of_H_is_the_four_generators():
    alg = build_n2()
    v, vp, vm, vt = diamond(alg, alg.gen_state(H))
    assert vp == alg.gen_state(GP)
    assert vm == alg.gen_state(GM)
    assert vt == alg.gen_state(L)


def test_zero_mode_anticommutator_is_translation():
    # Gp_(0)Gm_(0) + Gm_(0)Gp_(0) = d on low-weight states
    alg = build_n2()
    gp, gm = alg.gen_state(GP), alg.gen_state(GM)
    for w in alg.weight_basis(2) + alg.weight_basis(Fraction(3, 2)):
        s = {w: alg.unit}
        lhs = sadd(
            alg.prod(gp, 0, alg.prod(gm, 0, s)),
            alg.prod(gm, 0, alg.prod(gp, 0, s)),
        )
        assert not ssub(lhs, alg.derive(s)), alg.word_name(w)


def test_primarity():
    alg = build_n2()
    viols = primarity_violations(alg, alg.gen_state(H))
    assert [(nm, r) for nm, r, _ in viols] == [("H", 1)]
    assert not is_primary(alg, alg.gen_state(L))
    assert not conformal_checks(alg, alg.gen_state(GP), Fraction(3, 2), 1)
    assert not conformal_checks(alg, alg.gen_state(H), 1, 0)
    assert not conformal_checks(alg, alg.gen_state(L), 2, 0)


def test_sigma_is_an_involutive_automorphism():
    alg = build_n2()
    for (a, b), entries in alg.table.items():
        for r, state in entries.items():
            lhs = alg.prod(
                alg.apply_sigma(alg.gen_state(a)), r, alg.apply_sigma(alg.gen_state(b))
            )
            assert not ssub(lhs, alg.apply_sigma(state)), (a, b, r)
    for g in range(4):
        s = alg.gen_state(g)
        assert alg.apply_sigma(alg.apply_sigma(s)) == s
