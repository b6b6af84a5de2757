from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wedgepc.sexpr import SExprError
from wedgepc.structures import (
    FinStructure,
    StructureError,
    StructureSpace,
    Vocabulary,
    extend_valuation,
    parse_structure,
    parse_vocab,
    serialize_structure,
    serialize_vocab,
    substructures,
)

R2 = Vocabulary([("R", 2)])


@st.composite
def structures(draw, max_size=4):
    n = draw(st.integers(1, max_size))
    rows = list(itertools.product(range(n), repeat=2))
    table = draw(st.lists(st.sampled_from(rows), max_size=len(rows)))
    unary = draw(st.lists(st.integers(0, n - 1), max_size=n))
    vocab = Vocabulary([("R", 2), ("U", 1)])
    return FinStructure(vocab, n, {"R": table, "U": [(u,) for u in unary]})


def test_parse_small_structure():
    m = parse_structure("(structure (size 2) (rel R 2 (0 1)))")
    assert m.size == 2
    assert m.table("R") == {(0, 1)}


def test_parse_empty_table():
    m = parse_structure("(structure (size 1) (rel R 2))")
    assert m.size == 1 and m.table("R") == frozenset()


def test_parse_rejects_out_of_range_entry():
    with pytest.raises(SExprError, match="out of range"):
        parse_structure("(structure (size 2) (rel R 2 (0 5)))")


def test_parse_reports_position_and_arity():
    with pytest.raises(SExprError) as e:
        parse_structure("(structure (size 2)\n  (rel R 2 (0 1 1)))")
    assert e.value.line == 2


def test_parse_comments_and_whitespace():
    m = parse_structure("; a graph\n(structure  (size 3) ; three\n (rel E 2 (0 1) (1 0)))")
    assert m.table("E") == {(0, 1), (1, 0)}


def test_empty_structure_rejected():
    with pytest.raises(StructureError):
        FinStructure(R2, 0)
    with pytest.raises(SExprError):
        parse_structure("(structure (size 0))")


def test_equality_cannot_be_declared():
    with pytest.raises(StructureError):
        Vocabulary([("=", 2)])


def test_vocab_roundtrip():
    v = parse_vocab("(vocab (rel R 2) (rel U 1))")
    assert v.names == ("R", "U") and v.arity("U") == 1
    assert parse_vocab(serialize_vocab(v)) == v


def test_substructures_of_singleton():
    m = FinStructure(R2, 1, {"R": [(0, 0)]})
    assert list(substructures(m)) == [m]


def test_substructures_of_edge():
    m = FinStructure(R2, 2, {"R": [(0, 1)]})
    subs = list(substructures(m))
    empty1 = FinStructure(R2, 1)
    assert subs == [empty1, empty1, m]


def test_substructure_count_n3():
    m = FinStructure(R2, 3, {"R": [(0, 1), (1, 2)]})
    assert len(list(substructures(m))) == 7


def test_restrict_reindexes_in_order():
    m = FinStructure(R2, 3, {"R": [(0, 2), (2, 1)]})
    assert m.restrict([2, 0]).table("R") == {(0, 1)}
    assert m.restrict([1, 2]).table("R") == {(1, 0)}


def test_extend_valuation():
    assert extend_valuation({}, 0, 1) == {0: 1}
    assert extend_valuation({0: 1}, 0, 0) == {0: 0}
    assert extend_valuation({1: 2}, 0, 0) == {0: 0, 1: 2}
    env = {1: 2}
    extend_valuation(env, 0, 0)
    assert env == {1: 2}


@given(structures())
def test_serialize_parse_roundtrip(m):
    assert parse_structure(serialize_structure(m)) == m


@given(structures())
def test_substructure_family(m):
    subs = list(substructures(m))
    assert len(subs) == 2 ** m.size - 1
    assert subs[-1] == m


@settings(max_examples=30)
@given(structures(max_size=3))
def test_reduct_expand_inverse(m):
    small = Vocabulary([("R", 2)])
    r = m.reduct(small)
    assert r.expand(m.vocab, {"U": m.table("U")}) == m


def test_space_indexing_roundtrip():
    space = StructureSpace(R2, 2)
    assert space.count == 16
    for i in range(space.count):
        assert space.index_of(space.structure(i)) == i


def test_space_induced_indices_match_restrict():
    space, sub = StructureSpace(R2, 3), StructureSpace(R2, 2)
    idx = space.induced_indices((0, 2), sub)
    for i in (0, 5, 77, 300, 511):
        assert sub.structure(int(idx[i])) == space.structure(i).restrict((0, 2))


def test_space_columns_are_bits():
    space = StructureSpace(R2, 2)
    col = space.holds("R", (0, 1))
    assert col.dtype == bool and col.sum() == 8
    assert np.array_equal(space.holds("=", (1, 1)), True)
