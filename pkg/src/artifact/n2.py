"""The N=2 superconformal vertex algebra.

Generators: an even weight-1 current H, odd weight-3/2 supercurrents Gp/Gm of
charge +1/-1, and the even weight-2 Virasoro field L. Also provides the
parity-flip automorphism sigma (H -> -H, Gp <-> Gm, L -> L), superprimary
diamonds, and primarity checks."""

from __future__ import annotations

from fractions import Fraction

from .engine import Algebra, Generator, sadd, sscale, ssub
from .scalars import Scalar

H, GP, GM, L = 0, 1, 2, 3

HALF = Fraction(1, 2)


def n2_generators():
    return [
        Generator("H", 0, 1, 0, sigma_image=H, sigma_sign=-1),
        Generator("Gp", 1, Fraction(3, 2), 1, sigma_image=GM, sigma_sign=1),
        Generator("Gm", 1, Fraction(3, 2), -1, sigma_image=GP, sigma_sign=1),
        Generator("L", 0, 2, 0, sigma_image=L, sigma_sign=1),
    ]


def build_n2(central=None, unit=None):
    """The universal N=2 algebra; central charge defaults to the symbol c."""
    if unit is None:
        unit = Scalar.one()
    if central is None:
        central = Scalar.var("c") if isinstance(unit, Scalar) else unit * 0
    alg = Algebra(n2_generators(), unit)
    one = unit

    def st(*pairs):
        return {w: cf * one for w, cf in pairs}

    third = Fraction(1, 3)
    # H with everything
    alg.declare_pair(H, H)
    alg.set_entry(H, H, 1, {(): central * third})
    alg.declare_pair(H, GP)
    alg.set_entry(H, GP, 0, st((((GP, 0),), 1)))
    alg.declare_pair(H, GM)
    alg.set_entry(H, GM, 0, st((((GM, 0),), -1)))
    alg.declare_pair(H, L)
    alg.set_entry(H, L, 1, st((((H, 0),), 1)))
    # supercurrents
    alg.declare_pair(GP, GP)
    alg.declare_pair(GM, GM)
    alg.declare_pair(GP, GM)
    alg.set_entry(GP, GM, 0, st((((L, 0),), 1), (((H, 1),), HALF)))
    alg.set_entry(GP, GM, 1, st((((H, 0),), 1)))
    alg.set_entry(GP, GM, 2, {(): central * third})
    alg.declare_pair(GP, L)
    alg.set_entry(GP, L, 0, st((((GP, 1),), HALF)))
    alg.set_entry(GP, L, 1, st((((GP, 0),), Fraction(3, 2))))
    alg.declare_pair(GM, L)
    alg.set_entry(GM, L, 0, st((((GM, 1),), HALF)))
    alg.set_entry(GM, L, 1, st((((GM, 0),), Fraction(3, 2))))
    # Virasoro
    alg.declare_pair(L, L)
    alg.set_entry(L, L, 0, st((((L, 1),), 1)))
    alg.set_entry(L, L, 1, st((((L, 0),), 2)))
    alg.set_entry(L, L, 3, {(): central * HALF})
    return alg


def diamond(alg, v):
    """Superprimary diamond over an even bottom state v:
    (v, v+, v-, vtop) with v+/- = -/+ Gpm_(0) v and
    vtop = Gp_(0) Gm_(0) v - (1/2) dv."""
    gp = alg.gen_state(GP)
    gm = alg.gen_state(GM)
    vplus = sscale(alg.prod(gp, 0, v), -1)
    vminus = alg.prod(gm, 0, v)
    vtop = ssub(alg.prod(gp, 0, alg.prod(gm, 0, v)), sscale(alg.derive(v), HALF))
    return v, vplus, vminus, vtop


def primarity_violations(alg, state, max_extra=4):
    """Nonzero obstructions to (L, H, Gpm)-primarity of a state: L_(r) x for
    r >= 2, H_(r) x and Gpm_(r) x for r >= 1, up to the grading bound."""
    wt = alg.state_weight(state)
    if wt is None:
        return []
    out = []
    checks = [(L, 2), (H, 1), (GP, 1), (GM, 1)]
    for g, r0 in checks:
        gs = alg.gen_state(g)
        r = r0
        while alg.gens[g].weight + wt - r - 1 >= 0 and r <= r0 + max_extra:
            res = alg.prod(gs, r, state)
            if res:
                out.append((alg.gens[g].name, r, res))
            r += 1
    return out


def is_primary(alg, state):
    return not primarity_violations(alg, state)


def conformal_checks(alg, state, weight, charge):
    """Residuals of L_(1) x = weight*x, L_(0) x = dx, H_(0) x = charge*x."""
    ls = alg.gen_state(L)
    hs = alg.gen_state(H)
    out = {}
    out["L1"] = ssub(alg.prod(ls, 1, state), sscale(state, Fraction(weight)))
    out["L0"] = ssub(alg.prod(ls, 0, state), alg.derive(state))
    out["H0"] = ssub(alg.prod(hs, 0, state), sscale(state, Fraction(charge)))
    return {k: v for k, v in out.items() if v}
