"""Unknown-coefficient ring and incremental elimination."""

import pytest

from artifact.scalars import C, LAM, OMEGA, Scalar
from artifact.solver import LinearSolver, PolyScalar, SolverError


def u(name):
    return PolyScalar.unknown(name)


def test_ring_ops():
    x, y = u("x"), u("y")
    assert (x + y) * 2 - x == x + 2 * y
    assert not (x - x)
    assert (x * 3) / 3 == x


def test_unbounded_degree():
    x, y, z = u("x"), u("y"), u("z")
    q = x * y
    assert q.degree() == 2
    assert (q * z).degree() == 3
    assert not (q * z - z * x * y)


def test_linear_solve():
    s = LinearSolver()
    x, y = u("x"), u("y")
    s.add(x + y - 3)
    s.add(x - y - 1)
    s.check_consistent()
    a = s.assignment()
    assert a["x"] == Scalar.from_int(2)
    assert a["y"] == Scalar.from_int(1)


def test_field_coefficients():
    s = LinearSolver()
    x = u("x")
    s.add(x * C - LAM)
    assert s.assignment()["x"] == LAM / C


def test_parametric_assignment():
    s = LinearSolver()
    x, y = u("x"), u("y")
    s.add(x - 2 * y)
    assert s.free_unknowns() == {"y"}
    assert s.assignment({"y": OMEGA})["x"] == 2 * OMEGA


def test_inconsistency_detected():
    s = LinearSolver()
    x = u("x")
    s.add(x - 1)
    s.add(x - 2)
    with pytest.raises(SolverError):
        s.check_consistent()


def test_quadratic_vanishes_after_substitution():
    s = LinearSolver()
    x, y = u("x"), u("y")
    s.add(x * y - y - 2 * x + 2)  # (x - 1)(y - 2)
    assert s.pending
    s.add(x - 1)
    s.flush_pending()
    s.check_consistent()
    assert "y" not in s.solved  # the factored constraint cannot pin y


def test_quadratic_becomes_linear():
    s = LinearSolver()
    x, y = u("x"), u("y")
    s.add(x * y - 6)
    s.add(x - 2)
    s.flush_pending()
    assert s.assignment()["y"] == Scalar.from_int(3)


def test_unresolved_quadratic_reported():
    s = LinearSolver()
    x, y = u("x"), u("y")
    s.add(x * y - 1)
    s.flush_pending()
    with pytest.raises(SolverError):
        s.check_consistent()


def test_state_interop():
    from artifact.engine import Algebra
    from artifact.n2 import n2_generators

    alg = Algebra(n2_generators(), PolyScalar.one())
    h = alg.gen_state(0)
    st = alg.nprod(h, h)
    got = {w: cf * u("x") for w, cf in st.items()}
    s = LinearSolver()
    s.add_state({w: cf - cf.substitute({}) * 1 for w, cf in got.items()})
    s.check_consistent()  # trivially zero equations are dropped
