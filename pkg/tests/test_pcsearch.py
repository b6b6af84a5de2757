from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bipartite, connected, cycle_edges
from wedgepc import corpus
from wedgepc.batch import batch_evaluate, evaluate_space
from wedgepc.builtins import builtin
from wedgepc.evaluator import evaluate
from wedgepc.formulas import Exists, Forall, lit, nlit, validate
from wedgepc.pcsearch import (
    PCDefinition,
    PCError,
    as_pc_prime,
    closed_under_substructures,
    enumerate_expansions,
    parse_pc,
    pc_member,
    pc_member_bruteforce,
    pc_prime_member,
    serialize_pc,
)
from wedgepc.structures import FinStructure, StructureBatch, StructureSpace, Vocabulary

E = corpus.GRAPH


def test_expansion_counts():
    m2 = FinStructure(E, 2)
    assert len(list(enumerate_expansions(m2, E.union(Vocabulary([("U", 1)]))))) == 4
    m1 = FinStructure(E, 1)
    assert len(list(enumerate_expansions(m1, E.union(Vocabulary([("C", 2)]))))) == 2
    exps = list(enumerate_expansions(m2, E.union(Vocabulary([("C", 2)]))))
    assert len(exps) == 16 and exps[0].table("C") == frozenset()


def test_disconnected_axioms():
    defn = corpus.disconnected_pc("R")
    v = pc_member(corpus.graph(4, [(0, 1), (2, 3)], "R"), defn)
    assert v.member
    assert all(evaluate(ax, v.witness) for ax in defn.axioms)
    assert pc_member(corpus.graph(3, [(0, 1), (1, 2)], "R"), defn).kind == "non_member"


def test_single_vertex_discrepancy():
    # the axioms accept C empty on one vertex while the sentence says connected
    m = FinStructure(Vocabulary([("R", 2)]), 1)
    assert pc_member(m, corpus.disconnected_pc("R")).member
    assert not evaluate(builtin("disconnected", "R"), m)


def test_literal_no_least_element_axiom_is_vacuous():
    defn = corpus.non_well_founded_pc()
    for n in range(1, 5):
        v = pc_member(corpus.linear_order(n), defn)
        assert v.member and v.witness.table("U") == frozenset()


def test_nonempty_variant_rejects_finite_orders():
    defn = corpus.non_well_founded_pc(require_nonempty=True)
    for n in range(1, 5):
        assert not pc_member(corpus.linear_order(n), defn).member


def test_vocabulary_mismatch():
    with pytest.raises(PCError):
        pc_member(FinStructure(Vocabulary([("S", 1)]), 2), corpus.bicoloring_pc())
    with pytest.raises(PCError):
        pc_member(corpus.cycle(4), corpus.bicoloring_pc_prime())


def test_definition_checks():
    base = Vocabulary([("E", 2)])
    with pytest.raises(PCError):
        PCDefinition(base, base, (Forall(0, corpus.leaf(lit("E", 0, 1))),))
    with pytest.raises(PCError):
        PCDefinition(base, base.union(Vocabulary([("P", 2)])), (), "P")
    with pytest.raises(PCError):
        PCDefinition(base, base, (builtin("infinite"),))


def test_pc_file_roundtrip():
    defn = corpus.bicoloring_pc_prime()
    back = parse_pc(serialize_pc(defn))
    assert back.base == defn.base and back.extended == defn.extended
    assert back.axioms == defn.axioms and back.sort_predicate == "P"


def test_total_sort_agrees_with_pc():
    defn = corpus.disconnected_pc("E")
    prime = as_pc_prime(defn)
    for n in (2, 3):
        for m in corpus.all_graphs(n):
            assert pc_prime_member(m, prime, 0).member == pc_member(m, defn).member


def test_bicoloring_prime_on_cycles():
    defn = corpus.bicoloring_pc_prime()
    assert pc_prime_member(corpus.cycle(4), defn, 0).member
    assert pc_prime_member(corpus.cycle(5), defn, 0).kind == "unknown"
    # with the sort forced total, exhausting expansions certifies non-membership
    total = as_pc_prime(corpus.bicoloring_pc())
    assert pc_prime_member(corpus.cycle(5), total, 0).kind == "non_member"


def test_extension_witness_size():
    defn = corpus.extra_element_pc_prime()
    m = corpus.graph(2, [(0, 1)])
    assert pc_prime_member(m, defn, 0).kind == "unknown"
    v = pc_prime_member(m, defn, 2)
    assert v.member and v.witness.size == 3
    assert v.witness.table("P") == {(0,), (1,)}
    assert v.witness.restrict([0, 1]).reduct(m.vocab) == m


def test_budget_monotone():
    defn = corpus.extra_element_pc_prime()
    m = corpus.graph(2, [])
    first = [pc_prime_member(m, defn, k).member for k in range(4)]
    assert first == sorted(first)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_search_matches_bruteforce(seed):
    rng = random.Random(seed)
    axioms = []
    for c in corpus.random_codes(2, seed=seed, rels=("E", "C"), nvars=2, depth=2):
        for v in sorted(c.freevars):
            c = Forall(v, c)
        if validate(c).valid:  # a variable free in one branch may be bound in another
            axioms.append(c)
    defn = PCDefinition(E, Vocabulary([("E", 2), ("C", 2)]), axioms)
    n = rng.randint(1, 2)
    m = corpus.graph(n, [(a, b) for a in range(n) for b in range(n) if rng.random() < 0.4])
    fast, slow = pc_member(m, defn), pc_member_bruteforce(m, defn)
    assert fast.kind == slow.kind
    assert fast.witness == slow.witness


def test_jobs_do_not_change_witness():
    defn = corpus.disconnected_pc("E")
    for m in list(corpus.all_graphs(4))[::5]:
        a, b = pc_member(m, defn, 1), pc_member(m, defn, 3)
        assert a.kind == b.kind and a.witness == b.witness


def test_bicoloring_parity():
    defn = corpus.bicoloring_pc()
    for n in range(3, 9):
        m = corpus.graph(n, cycle_edges(n))
        assert pc_member(m, defn).member == bipartite(n, cycle_edges(n))


def test_universal_sentence_closed():
    code = Forall(0, Forall(1, corpus.leaf(nlit("E", 0, 1), nlit("E", 1, 0))))
    family = [m for n in (1, 2, 3) for m in corpus.all_structures(E, n)]
    assert closed_under_substructures(code, family).closed


def test_existential_sentence_counterexample():
    code = Exists(0, corpus.leaf(lit("E", 0, 0)))
    m = FinStructure(E, 2, {"E": [(1, 1)]})
    report = closed_under_substructures(code, [m])
    assert [s for _, s, _ in report.counterexamples] == [(0,)]


def test_disconnected_not_closed():
    m = corpus.graph(3, [(0, 1)], "R")
    report = closed_under_substructures(builtin("disconnected", "R"), [m])
    assert any(s == (0, 1) for _, s, _ in report.counterexamples)
    assert not connected(3, m.table("R"))


def test_closure_vectorized_matches_scalar():
    for code in [corpus.existential_control(), builtin("disconnected", "E")]:
        fast = {(m, s) for m, s in corpus.closure_counterexamples(code, E, 3)}
        family = [m for n in (2, 3) for m in corpus.all_structures(E, n)]
        slow = {(m, s) for m, s, _ in closed_under_substructures(code, family).counterexamples}
        assert fast == slow


def test_batch_matches_scalar():
    space = StructureSpace(E, 3)
    for _, code in corpus.wedge_corpus() + [("dis", builtin("disconnected", "E"))]:
        vec = np.broadcast_to(evaluate_space(code, space).arr, (space.count,))
        for i in range(0, space.count, 37):
            assert bool(vec[i]) == evaluate(code, space.structure(i))


def test_batch_with_free_variables():
    code = Exists(1, corpus.leaf(lit("E", 0, 1)))
    ms = [corpus.graph(3, [(0, 1)]), corpus.graph(3, [(1, 2)])]
    batch = StructureBatch.from_structures(ms)
    assert list(batch_evaluate(code, batch, {0: 0})) == [True, False]
