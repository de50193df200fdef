"""Polynomial expressions in named unknowns over the exact scalar field,
plus an incremental solver. Linear equations are eliminated immediately;
higher-degree ones are deferred and retried as substitutions shrink them.
Nested normal-ordering corrections can multiply several undetermined table
entries inside one product, so monomial degree is unbounded; in practice the
deferred equations collapse to linear ones as the linear pass assigns."""

from __future__ import annotations

from fractions import Fraction

from .scalars import Scalar


class SolverError(Exception):
    pass


def _as_scalar(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar._coerce(x)
    return None


def _merge_mono(a, b):
    return tuple(sorted(a + b))


class PolyScalar:
    """sum_m terms[m] * m over monomials m in the unknowns."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: v for m, v in (terms or {}).items() if v}

    @staticmethod
    def unknown(name):
        return PolyScalar({(name,): Scalar.one()})

    @staticmethod
    def of(x):
        if isinstance(x, PolyScalar):
            return x
        s = _as_scalar(x)
        if s is None:
            raise TypeError(f"cannot coerce {x!r}")
        return PolyScalar({(): s})

    @staticmethod
    def zero():
        return PolyScalar()

    @staticmethod
    def one():
        return PolyScalar({(): Scalar.one()})

    def degree(self):
        return max((len(m) for m in self.terms), default=0)

    def is_constant(self):
        return all(not m for m in self.terms)

    def constant_value(self):
        if not self.is_constant():
            raise SolverError(f"not constant: {self}")
        return self.terms.get((), Scalar.zero())

    def constant_part(self):
        return self.terms.get((), Scalar.zero())

    def linear_coeffs(self):
        return {m[0]: v for m, v in self.terms.items() if len(m) == 1}

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        try:
            other = PolyScalar.of(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __add__(self, other):
        other = PolyScalar.of(other)
        out = dict(self.terms)
        for m, v in other.terms.items():
            w = out.get(m)
            w = v if w is None else w + v
            if w:
                out[m] = w
            else:
                out.pop(m, None)
        return PolyScalar(out)

    __radd__ = __add__

    def __neg__(self):
        return PolyScalar({m: -v for m, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-PolyScalar.of(other))

    def __rsub__(self, other):
        return PolyScalar.of(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, PolyScalar):
            out = {}
            for ma, va in self.terms.items():
                for mb, vb in other.terms.items():
                    m = _merge_mono(ma, mb)
                    v = va * vb
                    w = out.get(m)
                    w = v if w is None else w + v
                    if w:
                        out[m] = w
                    else:
                        out.pop(m, None)
            return PolyScalar(out)
        s = _as_scalar(other)
        if s is None:
            return NotImplemented
        if not s:
            return PolyScalar()
        return PolyScalar({m: v * s for m, v in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        s = _as_scalar(other)
        if s is None:
            raise TypeError(f"cannot divide by {other!r}")
        return self * s.inverse()

    def substitute(self, assignment):
        out = PolyScalar()
        for m, v in self.terms.items():
            prod = PolyScalar({(): v})
            for u in m:
                rep = assignment.get(u)
                if rep is None:
                    prod = prod * PolyScalar.unknown(u)
                else:
                    prod = prod * PolyScalar.of(rep)
            out = out + prod
        return out

    def unknowns(self):
        out = set()
        for m in self.terms:
            out.update(m)
        return out

    def to_text(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms):
            v = self.terms[m]
            if not m:
                parts.append(v.to_text())
            else:
                parts.append(f"({v.to_text()})*" + "*".join(m))
        return " + ".join(parts)

    def __repr__(self):
        return self.to_text()


class LinearSolver:
    """Incremental elimination over PolyScalar equations (== 0). Linear
    equations are pivoted at once; quadratic ones wait in a pending pool and
    are retried whenever substitution might have lowered their degree."""

    def __init__(self):
        self.solved = {}  # name -> PolyScalar in free unknowns (degree <= 2)
        self.pending = []  # still-quadratic equations
        self.inconsistencies = []
        self._refs = {}  # free unknown -> set of solved names using it

    def reduce(self, eq):
        if not isinstance(eq, PolyScalar):
            eq = PolyScalar.of(eq)
        hits = {n: self.solved[n] for n in eq.unknowns() if n in self.solved}
        return eq.substitute(hits) if hits else eq

    def add(self, eq):
        eq = self.reduce(eq)
        if not eq:
            return
        if eq.is_constant():
            self.inconsistencies.append(eq.constant_value())
            return
        if eq.degree() > 1:
            self.pending.append(eq)
            return
        lin = eq.linear_coeffs()
        pivot = min(
            lin,
            key=lambda n: (
                not lin[n].is_rational_constant(),
                lin[n].complexity(),
                n,
            ),
        )
        inv = lin[pivot].inverse()
        expr = -(eq - PolyScalar({(pivot,): lin[pivot]})) * inv
        for name in list(self._refs.pop(pivot, ())):
            val = self.solved[name].substitute({pivot: expr})
            self.solved[name] = val
            used = val.unknowns()
            for n in used:
                self._refs.setdefault(n, set()).add(name)
            for n, refs in self._refs.items():
                if name in refs and n not in used:
                    refs.discard(name)
        self.solved[pivot] = expr
        for n in expr.unknowns():
            self._refs.setdefault(n, set()).add(pivot)

    def add_state(self, state):
        for cf in state.values():
            self.add(cf)

    def flush_pending(self):
        """Retry deferred quadratics until no further progress. Stopping when
        a full pass solves nothing is sound: reductions depend only on
        self.solved, which such a pass leaves untouched."""
        while True:
            pend = self.pending
            self.pending = []
            progressed = False
            for eq in pend:
                red = self.reduce(eq)
                if not red:
                    progressed = True
                elif red.is_constant():
                    self.inconsistencies.append(red.constant_value())
                    progressed = True
                elif red.degree() > 1:
                    self.pending.append(red)
                else:
                    self.add(red)
                    progressed = True
            if not progressed:
                return

    def free_unknowns(self):
        out = set()
        for v in self.solved.values():
            out |= v.unknowns()
        return out

    def assignment(self, free_values=None):
        free_values = free_values or {}
        out = {}
        for n, v in self.solved.items():
            r = v.substitute(free_values)
            if not r.is_constant():
                raise SolverError(f"free unknowns remain: {sorted(r.unknowns())}")
            out[n] = r.constant_value()
        for n, s in free_values.items():
            out.setdefault(n, s if isinstance(s, Scalar) else Scalar._coerce(s))
        return out

    def check_consistent(self):
        if self.inconsistencies:
            bad = self.inconsistencies[0]
            raise SolverError(
                f"{len(self.inconsistencies)} inconsistent equations; "
                f"first: {bad.to_text()} = 0"
            )
        if self.pending:
            raise SolverError(
                f"{len(self.pending)} quadratic constraints unresolved; "
                f"first: {self.pending[0].to_text()} = 0"
            )
