from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_eval_fo
from wedgepc import arith, fo
from wedgepc.builtins import builtin
from wedgepc.corpus import GRAPH, all_structures, cut, harness_corpus, leaf
from wedgepc.evaluator import Refusal, SkolemTable, evaluate, skolem_domain
from wedgepc.fo import ZERO, Add, All, Eq, ExLenLt, Len, Var
from wedgepc.formulas import Exists, Forall, instantiate, lit
from wedgepc.structures import FinStructure, Vocabulary
from wedgepc.trunc import (
    Bounds,
    CapExceeded,
    SkolemTerm,
    build_trunc,
    check_axioms,
    check_pi1_monotone,
    constant_g,
    derive_bounds,
    eval_fo,
    eval_fo_report,
    nested_pair,
    tuple_count,
    verify_biconditional,
)

U1 = Vocabulary([("R", 1)])
R2 = Vocabulary([("R", 2)])
CORPUS = harness_corpus()
STRUCTS = [m for n in (1, 2) for m in all_structures(GRAPH, n)]


def test_bounds_for_unary_universal():
    b = derive_bounds(Forall(0, leaf(lit("R", 0))), FinStructure(U1, 2))
    assert (b.t_max, b.depth, b.L) == (1, 1, 2)
    assert b.B >= max(b.L, b.s, arith.tuple_code((0,)))


def test_bounds_invariants_over_corpus():
    for _, code in CORPUS:
        b = derive_bounds(code, FinStructure(GRAPH, 2))
        assert b.L >= b.t_max * (b.depth + 1)
        assert b.B >= b.L and b.B >= b.s


def test_tuple_sort_size():
    assert tuple_count(2, 2) == 7
    tm = build_trunc(FinStructure(U1, 2), (3, 2))
    assert tm.tuple_count == 7 == len(list(tm.tuples()))
    assert sum(1 for t in tm.tuples() if not t) == 1


def test_cap_refuses():
    with pytest.raises(CapExceeded):
        build_trunc(FinStructure(U1, 3), (3, 12))
    with pytest.raises(Refusal):
        verify_biconditional(cut(builtin("infinite"), 4), FinStructure(GRAPH, 3), max_tuples=1000)


def test_tuple_axioms_in_built_models():
    for m in (FinStructure(U1, 1), FinStructure(U1, 2, {"R": [(1,)]})):
        for B, L in ((3, 1), (4, 2)):
            result = {name: (ok, flag) for name, ok, flag in check_axioms(build_trunc(m, (B, L)))}
            for name in ("2a", "2b", "2c", "2d", "2e"):
                assert result[name] == (True, None)
            assert result["2f"] == (False, "boundary")


def test_concatenation_fails_only_at_max_length():
    p, r = Var("p", "Mtup"), Var("r", "Mtup")
    a = Var("a", "M")
    m = FinStructure(U1, 2)
    tm = build_trunc(m, (4, 2))
    step = fo.Ex(r, fo.conj(Eq(Len(r), Add(Len(p), fo.ONE)), fo.Ind(r, Len(p), a)))
    for t in tm.tuples():
        holds = eval_fo(tm, All(a, step), {"p": t})
        assert holds == (len(t) < tm.L)


def test_empty_tuple_below_one():
    p = Var("p", "Mtup")
    tm = build_trunc(FinStructure(U1, 2), (3, 2))
    assert eval_fo(tm, ExLenLt(p, fo.ONE, Eq(Len(p), ZERO)))


def test_saturating_addition_commutes():
    x, y = Var("x", "N"), Var("y", "N")
    tm = build_trunc(FinStructure(U1, 1), (6, 1))
    r = eval_fo_report(tm, All(x, All(y, Eq(Add(x, y), Add(y, x)))))
    assert r.value and r.saturated


def test_constant_g_satisfies_chi():
    for _, code in CORPUS[:6]:
        m = FinStructure(GRAPH, 2, {"E": [(0, 1)]})
        tm = build_trunc(m, derive_bounds(code, m), constant_g(1), max_tuples=None)
        assert eval_fo(tm, arith.emit_chi(code))


def test_extracted_g_satisfies_chi():
    code = Forall(0, Exists(1, leaf(lit("R", 0, 1))))
    m = FinStructure(R2, 2, {"R": [(0, 1), (1, 1)]})
    rep = verify_biconditional(code, m)
    assert rep.truth and rep.passed and rep.stable


def test_direction_one_total_relation():
    code = Forall(0, Exists(1, leaf(lit("R", 0, 1))))
    m = FinStructure(R2, 2, {"R": [(a, b) for a in range(2) for b in range(2)]})
    rep = verify_biconditional(code, m)
    assert rep.direction == 1 and rep.passed


def test_direction_two_singleton_empty_relation():
    code = Forall(0, Exists(1, leaf(lit("R", 0, 1))))
    rep = verify_biconditional(code, FinStructure(R2, 1))
    assert rep.direction == 2 and rep.passed
    assert rep.g_mode == "exhaustive 1" and len(rep.cells) == 1


def test_direction_two_infinite_at_bound_three():
    code = cut(builtin("infinite"), 2)  # conjuncts for 1, 2 and 3 distinct elements
    rep = verify_biconditional(code, FinStructure(GRAPH, 2), max_tuples=None)
    assert not rep.truth and rep.passed
    assert rep.g_mode.startswith("exhaustive")


def test_full_theta_is_false_under_each_g():
    code = Forall(0, Exists(1, leaf(lit("R", 0, 1))))
    m = FinStructure(R2, 2, {"R": [(0, 1)]})
    rep = verify_biconditional(code, m, full_theta=True)
    assert not rep.truth and rep.passed and rep.g_mode == "exhaustive 4"


def test_family_instantiation_is_recorded():
    rep = verify_biconditional(builtin("infinite"), FinStructure(GRAPH, 1))
    assert rep.instantiated and rep.instantiated[0][0] == "infinite"


def test_harness_refuses_non_sentences_and_vees():
    with pytest.raises(Refusal):
        verify_biconditional(leaf(lit("E", 0, 1)), FinStructure(GRAPH, 2))


def test_report_is_an_sexpr():
    from wedgepc import sexpr
    rep = verify_biconditional(Forall(0, leaf(lit("E", 0, 0))), FinStructure(GRAPH, 2))
    text = sexpr.dumps(rep.to_sexpr())
    assert text.startswith("(verify (truth false) (direction 2)")
    assert text.endswith("(result pass))")


def test_chi_monotone_on_nested_truncations():
    code = Forall(0, Exists(1, leaf(lit("E", 0, 1))))
    m = FinStructure(GRAPH, 2, {"E": [(0, 1), (1, 0)]})
    g = SkolemTerm(arith.encode(code, GRAPH), lambda path, key: 1 - dict(key)[0])
    small = build_trunc(m, (6, 2), g, max_tuples=None)
    large = build_trunc(m, (10, 3), g, max_tuples=None)
    chi = arith.emit_chi(code)
    assert check_pi1_monotone(chi, small, large)
    assert check_pi1_monotone(Eq(ZERO, ZERO), small, large)


def test_non_pi1_sentence_breaks_preservation():
    p = Var("p", "Mtup")
    m = FinStructure(U1, 2)
    small, large = build_trunc(m, (6, 2)), build_trunc(m, (10, 3))
    phi = fo.Ex(p, Eq(Len(p), fo.numeral(3)))
    assert not fo.validate_pi1(phi)
    assert not check_pi1_monotone(phi, small, large)


def test_monotone_rejects_unnested():
    m = FinStructure(U1, 2)
    with pytest.raises(ValueError):
        check_pi1_monotone(Eq(ZERO, ZERO), build_trunc(m, (6, 3)), build_trunc(m, (10, 2)))


def test_nested_pair_doubles():
    b = Bounds(4, 2, 1, 1, 1, 1)
    small, large = nested_pair(FinStructure(U1, 1), b, constant_g())
    assert (small.B, small.L, large.B, large.L) == (4, 2, 8, 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, len(CORPUS) - 1), st.integers(0, len(STRUCTS) - 1), st.integers(0, 10 ** 6))
def test_lazy_matches_enumeration(ci, mi, seed):
    code, m = CORPUS[ci][1], STRUCTS[mi]
    finite = instantiate(code, m)
    enc = arith.encode(finite, GRAPH)
    rng = random.Random(seed)
    table = SkolemTable({k: rng.randrange(m.size) for k in skolem_domain(finite, m)})
    tm = build_trunc(m, (4, 3), SkolemTerm(enc, table), max_tuples=None)
    s = enc.relation_span()
    for phi in (arith.emit_chi(finite, enc), arith.emit_theta(finite, enc, s)):
        assert eval_fo(tm, phi) == naive_eval_fo(tm, phi)
    node = enc.nodes[rng.randrange(len(enc.nodes))]
    inst = arith.theta_instance(enc, node.path, s)
    rho = tuple(rng.randrange(m.size) for _ in range(rng.randrange(4)))
    env = {"t": rng.randrange(1, 4), "rho": rho}
    assert eval_fo(tm, inst, env) == naive_eval_fo(tm, inst, env)


def test_verdict_matches_evaluator_over_small_corpus():
    for _, code in CORPUS[:8]:
        for m in STRUCTS[::3]:
            rep = verify_biconditional(code, m)
            assert rep.truth == evaluate(code, m)
            assert rep.passed


def test_cached_program_follows_the_model():
    code = Forall(0, Exists(1, leaf(lit("E", 0, 1))))
    enc = arith.encode(code, GRAPH)
    chi, theta = arith.emit_chi(code, enc), arith.emit_theta(code, enc, 1)
    for m in all_structures(GRAPH, 2):
        table = SkolemTable({k: 1 for k in skolem_domain(code, m)})
        tm = build_trunc(m, (4, 3), SkolemTerm(enc, table), max_tuples=None)
        for phi in (chi, theta):
            assert eval_fo(tm, phi) == naive_eval_fo(tm, phi)


def test_fold_decides_ground_atoms_only_below_saturation():
    from wedgepc.trunc import _fold
    tm = build_trunc(FinStructure(U1, 1), (5, 1))
    x = Var("x", "N")
    assert _fold(fo.Implies(Eq(fo.numeral(2), fo.numeral(3)), Eq(x, x)), tm) == fo.TRUE
    assert _fold(fo.conj(Eq(fo.numeral(2), fo.numeral(2)), Eq(x, ZERO)), tm) == Eq(x, ZERO)
    high = Eq(fo.numeral(6), fo.numeral(7))  # both saturate to 5, so the compiler must flag it
    assert _fold(high, tm) == high
    assert eval_fo_report(tm, high).saturated
