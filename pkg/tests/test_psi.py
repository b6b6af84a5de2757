from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sorted_disjuncts
from wedgepc.formulas import Literal, lit
from wedgepc.psi import PsiEnumeration, psi_decode, psi_encode, psi_indices
from wedgepc.structures import Vocabulary

VOCAB = Vocabulary([("R", 2), ("U", 1)])
PSI = PsiEnumeration(VOCAB)


def test_first_disjunct_is_least_positive_literal():
    assert psi_decode(VOCAB, 0) == (lit("R", 0, 0),)


def test_order_matches_brute_force_listing():
    listed = sorted_disjuncts(PSI.relations, 5)
    for n, d in enumerate(listed):
        assert PSI.decode(n) == d
        assert PSI.encode(d) == n


def test_literal_count_function():
    for n in range(1000):
        assert PSI.k(n) == len(PSI.decode(n))


def test_index_functions():
    n = psi_encode(VOCAB, (lit("U", 1), Literal(True, "R", (0, 2))))
    k, ell, idx = psi_indices(VOCAB, n)
    assert k == 2
    assert ell == {1: PSI.h_of(lit("U", 1)), 2: PSI.h_of(Literal(True, "R", (0, 2)))}
    assert idx == {(1, 1): 1, (2, 1): 0, (2, 2): 2}


def test_signed_relations():
    # h = 2r for the positive relation r, 2r+1 for its negation; equality is last
    assert PSI.signed_count == 6
    assert PSI.signed_relation(0) == ("R", False)
    assert PSI.signed_relation(3) == ("U", True)
    assert PSI.signed_relation(4) == ("=", False)
    assert PSI.r(2) == 1


literals = st.builds(
    lambda neg, rel, a, b, c: Literal(neg, rel, (a, b) if rel != "U" else (c,)),
    st.booleans(), st.sampled_from(["R", "U", "="]),
    st.integers(0, 4), st.integers(0, 4), st.integers(0, 4))


@settings(max_examples=500)
@given(st.lists(literals, min_size=1, max_size=4))
def test_encode_decode_roundtrip(lits):
    assert PSI.decode(PSI.encode(lits)) == tuple(lits)
