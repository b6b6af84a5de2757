from __future__ import annotations

import pytest

from wedgepc import fo
from wedgepc.fo import (
    ONE,
    ZERO,
    All,
    Eq,
    Ex,
    ExLenLt,
    ExLt,
    Implies,
    Ind,
    Len,
    Not,
    Rel,
    Var,
    check_sorts,
    validate_pi1,
)
from wedgepc.sexpr import SExprError

x, y = Var("x", "N"), Var("y", "N")
a = Var("a", "M")
p = Var("p", "Mtup")


def test_exists_over_m_under_forall_n_is_pi1():
    f = All(x, Ex(a, Rel("Flag", (a,))))
    assert validate_pi1(f)


def test_unbounded_tuple_existential_is_not_pi1():
    r = validate_pi1(Ex(p, Eq(Len(p), ZERO)))
    assert not r and "Mtup" in r.reason


def test_bounded_then_universal_is_pi1():
    f = ExLt(x, fo.numeral(3), All(p, Implies(Ind(p, x, a), Eq(a, a))))
    f = All(a, f)
    assert validate_pi1(f)


def test_negated_universal_counts_as_existential():
    assert not validate_pi1(Not(All(x, Eq(x, x))))
    assert validate_pi1(Not(Ex(x, Eq(x, ZERO))))
    assert not validate_pi1(Implies(All(p, Eq(Len(p), ZERO)), Eq(ZERO, ZERO)))


def test_failure_inside_connective_is_reported():
    bad = fo.conj(Eq(ZERO, ZERO), Ex(p, Eq(Len(p), ZERO)))
    r = validate_pi1(bad)
    assert not r and r.path.startswith("/1")
    r = validate_pi1(Implies(Eq(ZERO, ZERO), Ex(y, Eq(y, ONE))))
    assert not r and "/then" in r.path


def test_numerals():
    for n in range(20):
        assert fo.numeral_value(fo.numeral(n)) == n


def test_dumps_loads_roundtrip():
    f = All(x, ExLenLt(p, fo.numeral(2), fo.conj(Eq(Len(p), x), Not(Ind(p, ZERO, a)))))
    f = All(a, f)
    assert fo.loads(fo.dumps(f)) == f
    assert fo.loads(fo.dumps(f, pretty=True)) == f


def test_loads_rejects_unbound_variable():
    with pytest.raises(SExprError):
        fo.loads("(= x 0)")


def test_sort_errors():
    assert check_sorts(All(x, Eq(x, ZERO))) == []
    assert check_sorts(All(x, Eq(Len(x), ZERO)))
    assert check_sorts(All(a, Rel("R", (a, a))), None) == []
    from wedgepc.structures import Vocabulary
    assert check_sorts(All(a, Rel("R", (a,))), Vocabulary([("R", 2)]))
    assert check_sorts(All(x, All(x, Eq(x, x))))
