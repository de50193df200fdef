"""Exact scalar arithmetic: rational functions in (c, lam, omega, psi, k, alpha)
with an optional gamma part, where gamma**2 = lam**2 + 32*omega/(c - 1)."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

import sympy
from sympy.polys.domains import ZZ
from sympy.polys.fields import field

VAR_NAMES = ("c", "lam", "omega", "psi", "k", "alpha")

_F, _c, _lam, _omega, _psi, _k, _alpha = field(",".join(VAR_NAMES), ZZ, order="grlex")
_GENS = {
    "c": _c,
    "lam": _lam,
    "omega": _omega,
    "psi": _psi,
    "k": _k,
    "alpha": _alpha,
}
# gamma**2 rewrites to this rational function
_GAMMA_SQ = (_lam**2 * (_c - 1) + 32 * _omega) / (_c - 1)

_PARSE_SYMS = {name: sympy.Symbol(name) for name in VAR_NAMES + ("gamma",)}
_GAMMA_SQ_EXPR = (
    _PARSE_SYMS["lam"] ** 2 + 32 * _PARSE_SYMS["omega"] / (_PARSE_SYMS["c"] - 1)
)


class ScalarError(ArithmeticError):
    pass


class PoleError(ScalarError):
    """Denominator vanishes at the evaluation point."""

    def __init__(self, factor):
        self.factor = factor
        super().__init__(f"denominator factor vanishes at point: {factor}")


class BranchError(ScalarError):
    """gamma**2 does not evaluate to the square of a rational."""


def _fe_from_fraction(q):
    q = Fraction(q)
    return (_F.one * q.numerator) / q.denominator


def _fe_text(fe):
    # str(FracElement) is canonical and re-parseable
    return str(fe)


class Scalar:
    """Element re + gamma*gm of the quadratic extension of the rational
    function field QQ(c, lam, omega, psi, k, alpha)."""

    __slots__ = ("re", "gm")

    def __init__(self, re=None, gm=None):
        self.re = _F.zero if re is None else re
        self.gm = _F.zero if gm is None else gm

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero():
        return _ZERO

    @staticmethod
    def one():
        return _ONE

    @staticmethod
    def var(name):
        if name == "gamma":
            return Scalar(_F.zero, _F.one)
        return Scalar(_GENS[name])

    @staticmethod
    def from_fraction(q):
        return Scalar(_fe_from_fraction(q))

    @staticmethod
    def from_int(n):
        return Scalar(_F.one * n)

    @staticmethod
    def _coerce(x):
        if isinstance(x, Scalar):
            return x
        if isinstance(x, int):
            return Scalar(_F.one * x)
        if isinstance(x, Fraction):
            return Scalar(_fe_from_fraction(x))
        return NotImplemented

    # -- ring / field ops ---------------------------------------------
    def __add__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Scalar(self.re + o.re, self.gm + o.gm)

    __radd__ = __add__

    def __sub__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Scalar(self.re - o.re, self.gm - o.gm)

    def __rsub__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Scalar(o.re - self.re, o.gm - self.gm)

    def __neg__(self):
        return Scalar(-self.re, -self.gm)

    def __mul__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if not self.gm and not o.gm:
            return Scalar(self.re * o.re)
        return Scalar(
            self.re * o.re + self.gm * o.gm * _GAMMA_SQ,
            self.re * o.gm + self.gm * o.re,
        )

    __rmul__ = __mul__

    def inverse(self):
        if not self.gm:
            if not self.re:
                raise ScalarError("division by zero scalar")
            return Scalar(1 / self.re)
        norm = self.re * self.re - self.gm * self.gm * _GAMMA_SQ
        if not norm:
            raise ScalarError("division by zero scalar (gamma norm vanishes)")
        return Scalar(self.re / norm, -self.gm / norm)

    def __truediv__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = _ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        """gamma -> -gamma; a ring automorphism."""
        return Scalar(self.re, -self.gm)

    # -- predicates ----------------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.gm)

    def __eq__(self, other):
        o = Scalar._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.gm == o.gm

    def __hash__(self):
        return hash((self.re, self.gm))

    def is_rational_constant(self):
        if self.gm:
            return False
        num, den = self.re.numer, self.re.denom
        return num.is_ground and den.is_ground

    def as_fraction(self):
        if not self.is_rational_constant():
            raise ScalarError("not a rational constant")
        num, den = self.re.numer, self.re.denom
        n = int(num.coeff(1)) if num else 0
        d = int(den.coeff(1))
        return Fraction(n, d)

    def constant_value(self):
        # mirror of the solver wrapper's method, so table coefficients can be
        # read uniformly whether or not they passed through a solve
        return self

    def complexity(self):
        # crude size measure used by solver pivot heuristics
        return (
            len(self.re.numer.terms())
            + len(self.re.denom.terms())
            + len(self.gm.numer.terms())
            + len(self.gm.denom.terms())
        )

    # -- substitution / evaluation --------------------------------------
    def subs(self, assignment):
        """assignment: name -> Scalar (partial maps allowed)."""
        vals = {}
        for i, name in enumerate(VAR_NAMES):
            vals[i] = assignment.get(name, Scalar.var(name))
        if "gamma" in assignment:
            gval = assignment["gamma"]
        else:
            gval = Scalar.var("gamma")

        def poly_val(p):
            out = _ZERO
            for monom, coeff in p.terms():
                term = Scalar.from_int(int(coeff))
                for i, e in enumerate(monom):
                    if e:
                        term = term * vals[i] ** e
                out = out + term
            return out

        def frac_val(fe):
            return poly_val(fe.numer) / poly_val(fe.denom)

        out = frac_val(self.re)
        if self.gm:
            out = out + gval * frac_val(self.gm)
        return out

    def evaluate(self, point, branch=1):
        """Evaluate at rational point {name: Fraction}; returns Fraction.

        Raises PoleError when a denominator vanishes (naming a vanishing
        factor) and BranchError when the gamma radicand is not the square
        of a rational. branch selects the sign of gamma; variables missing
        from the point evaluate to zero."""
        vals = [Fraction(point.get(name, 0)) for name in VAR_NAMES]

        def poly_val(p):
            out = Fraction(0)
            for monom, coeff in p.terms():
                term = Fraction(int(coeff))
                for i, e in enumerate(monom):
                    if e:
                        term *= vals[i] ** e
                out += term
            return out

        def frac_val(fe):
            dv = poly_val(fe.denom)
            if dv == 0:
                raise PoleError(_vanishing_factor(fe.denom, point))
            return poly_val(fe.numer) / dv

        out = frac_val(self.re)
        if self.gm:
            gv = frac_val(self.gm)
            if gv != 0:
                if vals[0] == 1:
                    raise PoleError("c - 1")
                rad = vals[1] ** 2 + Fraction(32) * vals[2] / (vals[0] - 1)
                root = _fraction_sqrt(rad)
                if root is None:
                    raise BranchError(
                        f"gamma radicand {rad} is not a rational square"
                    )
                out += gv * root * (1 if branch >= 0 else -1)
        return out

    # -- text ------------------------------------------------------------
    def to_text(self):
        if not self:
            return "0"
        parts = []
        if self.re:
            parts.append(_fe_text(self.re))
        if self.gm:
            if self.gm == _F.one:
                parts.append("gamma")
            else:
                parts.append(f"gamma*({_fe_text(self.gm)})")
        return " + ".join(parts)

    def __repr__(self):
        return self.to_text()

    @staticmethod
    def parse(text):
        expr = sympy.parse_expr(text, local_dict=dict(_PARSE_SYMS))
        g = _PARSE_SYMS["gamma"]
        num, den = sympy.fraction(sympy.together(expr))

        def split(p):
            poly = sympy.Poly(p, g)
            p0 = sympy.Integer(0)
            p1 = sympy.Integer(0)
            for (j,), coeff in poly.terms():
                q, r = divmod(j, 2)
                contrib = coeff * _GAMMA_SQ_EXPR**q
                if r == 0:
                    p0 += contrib
                else:
                    p1 += contrib
            return p0, p1

        n0, n1 = split(num)
        d0, d1 = split(den)
        nsc = Scalar(_F.from_expr(sympy.cancel(n0)), _F.from_expr(sympy.cancel(n1)))
        dsc = Scalar(_F.from_expr(sympy.cancel(d0)), _F.from_expr(sympy.cancel(d1)))
        return nsc / dsc

    def denominator_factors(self):
        """Irreducible factors appearing in denominators, as canonical text."""
        out = []
        for fe in (self.re, self.gm):
            if not fe:
                continue
            _, factors = sympy.factor_list(fe.denom.as_expr())
            for fac, _mult in factors:
                s = str(fac)
                if s not in out:
                    out.append(s)
        return out

    def __repr__(self):
        return f"Scalar({self.to_text()})"


def _vanishing_factor(poly, point):
    vals = {
        sympy.Symbol(name): sympy.Rational(point.get(name, 0)) for name in VAR_NAMES
    }
    _, factors = sympy.factor_list(poly.as_expr())
    for fac, _mult in factors:
        if fac.subs(vals) == 0:
            return str(fac)
    return str(poly)


def _fraction_sqrt(q):
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(rn, rd)


_ZERO = Scalar(_F.zero)
_ONE = Scalar(_F.one)

C = Scalar.var("c")
LAM = Scalar.var("lam")
OMEGA = Scalar.var("omega")
PSI = Scalar.var("psi")
K = Scalar.var("k")
ALPHA = Scalar.var("alpha")
GAMMA = Scalar.var("gamma")
