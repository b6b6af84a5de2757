"""A canonical enumeration of literal disjuncts with its index functions.

Over a finite vocabulary (equality appended as the last relation), a signed
relation is ``h = 2r`` for relation ``r`` positive and ``h = 2r + 1`` negated.
A literal has weight ``1 + sum(args)`` and a disjunct weighs the sum of its
literals.  Disjuncts are ordered by total weight, then literal count, then
lexicographically by their ``(h, args)`` keys.  There are finitely many
disjuncts of each weight, so every disjunct gets a finite rank.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Sequence

from .formulas import Leaf, Literal
from .structures import EQUALITY, Vocabulary


class PsiEnumeration:
    def __init__(self, vocab: Vocabulary, with_equality: bool = True):
        self.vocab = vocab
        rels = list(vocab.symbols)
        if with_equality:
            rels.append((EQUALITY, 2))
        self.relations: tuple[tuple[str, int], ...] = tuple(rels)
        self._index = {name: i for i, (name, _) in enumerate(self.relations)}
        if not self.relations:
            raise ValueError("empty vocabulary has no literals")
        self._count_w = lru_cache(maxsize=None)(self._count_literals_weight)
        self._seq = lru_cache(maxsize=None)(self._count_sequences)

    # -- signed relations --------------------------------------------------
    @property
    def signed_count(self) -> int:
        return 2 * len(self.relations)

    def h_of(self, l: Literal) -> int:
        return 2 * self._index[l.symbol] + (1 if l.negated else 0)

    def r(self, h: int) -> int:
        """Arity of signed relation ``h``."""
        return self.relations[h // 2][1]

    def signed_relation(self, h: int) -> tuple[str, bool]:
        return self.relations[h // 2][0], bool(h % 2)

    def relation_index(self, name: str) -> int:
        return self._index[name]

    # -- counting ----------------------------------------------------------
    @staticmethod
    def literal_weight(l: Literal) -> int:
        return 1 + sum(l.args)

    def weight(self, literals: Sequence[Literal]) -> int:
        return sum(self.literal_weight(l) for l in literals)

    def _count_literals_weight(self, w: int) -> int:
        total = 0
        for h in range(self.signed_count):
            total += _compositions(w - 1, self.r(h))
        return total

    def _count_sequences(self, w: int, k: int) -> int:
        """Number of k-literal sequences of total weight exactly w."""
        if k == 0:
            return 1 if w == 0 else 0
        if w < k:
            return 0
        return sum(self._count_w(a) * self._seq(w - a, k - 1) for a in range(1, w - k + 2))

    def count_weight(self, w: int) -> int:
        return sum(self._seq(w, k) for k in range(1, w + 1))

    def _literals_upto(self, budget: int):
        """All literals of weight <= budget, in key order, with their weights."""
        for h in range(self.signed_count):
            name, neg = self.signed_relation(h)
            ar = self.r(h)
            for args in itertools.product(range(budget), repeat=ar):
                w = 1 + sum(args)
                if w <= budget:
                    yield Literal(neg, name, args), w

    # -- rank / unrank ------------------------------------------------------
    def encode(self, literals: Sequence[Literal]) -> int:
        literals = tuple(literals)
        if not literals:
            raise ValueError("the empty disjunct is not enumerated")
        for l in literals:
            if l.symbol not in self._index or self.relations[self._index[l.symbol]][1] != len(l.args):
                raise ValueError(f"literal {l} is outside the vocabulary")
        w, k = self.weight(literals), len(literals)
        n = sum(self.count_weight(v) for v in range(1, w))
        n += sum(self._seq(w, j) for j in range(1, k))
        rem_w, rem_k = w, k
        for l in literals:
            key = (self.h_of(l), l.args)
            lw = self.literal_weight(l)
            for cand, cw in self._literals_upto(rem_w - rem_k + 1):
                if (self.h_of(cand), cand.args) >= key:
                    break
                n += self._seq(rem_w - cw, rem_k - 1)
            rem_w -= lw
            rem_k -= 1
        return n

    def decode(self, n: int) -> tuple[Literal, ...]:
        if n < 0:
            raise ValueError("negative index")
        w = 1
        while n >= self.count_weight(w):
            n -= self.count_weight(w)
            w += 1
        k = 1
        while n >= self._seq(w, k):
            n -= self._seq(w, k)
            k += 1
        out = []
        rem_w, rem_k = w, k
        while rem_k:
            for cand, cw in self._literals_upto(rem_w - rem_k + 1):
                c = self._seq(rem_w - cw, rem_k - 1)
                if n < c:
                    out.append(cand)
                    rem_w -= cw
                    rem_k -= 1
                    break
                n -= c
            else:  # pragma: no cover - counts are exact
                raise AssertionError("rank out of range")
        return tuple(out)

    def decode_leaf(self, n: int) -> Leaf:
        return Leaf(self.decode(n))

    # -- index functions (1-based m, as in the displayed disjunct) ----------
    def k(self, n: int) -> int:
        return len(self.decode(n))

    def ell(self, n: int, m: int) -> int:
        return self.h_of(self.decode(n)[m - 1])

    def i(self, n: int, m: int, q: int) -> int:
        return self.decode(n)[m - 1].args[q - 1]

    def indices(self, n: int):
        """``(k, ell_table, i_table)`` for disjunct n; tables are 1-based dicts."""
        d = self.decode(n)
        ell = {m + 1: self.h_of(l) for m, l in enumerate(d)}
        idx = {(m + 1, q + 1): a for m, l in enumerate(d) for q, a in enumerate(l.args)}
        return len(d), ell, idx


def _compositions(total: int, parts: int) -> int:
    """Number of tuples of ``parts`` non-negative integers summing to ``total``."""
    if total < 0:
        return 0
    if parts == 0:
        return 1 if total == 0 else 0
    return comb(total + parts - 1, parts - 1)


def psi_decode(vocab: Vocabulary, n: int) -> tuple[Literal, ...]:
    return PsiEnumeration(vocab).decode(n)


def psi_encode(vocab: Vocabulary, literals: Sequence[Literal]) -> int:
    return PsiEnumeration(vocab).encode(literals)


def psi_indices(vocab: Vocabulary, n: int):
    return PsiEnumeration(vocab).indices(n)
