"""Relational vocabularies, finite structures and valuations.

Universes are always ``range(size)``.  Equality is not a vocabulary symbol; the
literal symbol ``=`` is interpreted as identity in every structure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import sexpr
from .sexpr import fail

EQUALITY = "="


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...]

    def __init__(self, symbols: Iterable[tuple[str, int]] = ()):
        syms = tuple((str(name), int(arity)) for name, arity in symbols)
        names = [s for s, _ in syms]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation symbol in {names}")
        for name, arity in syms:
            if arity < 0:
                raise StructureError(f"negative arity for {name}")
            if name == EQUALITY:
                raise StructureError("'=' is built in and cannot be declared")
        object.__setattr__(self, "symbols", syms)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.symbols)

    def arity(self, name: str) -> int:
        if name == EQUALITY:
            return 2
        for s, a in self.symbols:
            if s == name:
                return a
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return name == EQUALITY or any(s == name for s, _ in self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        out = list(self.symbols)
        for name, arity in other:
            if name in self.names:
                if self.arity(name) != arity:
                    raise StructureError(f"arity clash for {name}")
            else:
                out.append((name, arity))
        return Vocabulary(out)

    def issubset(self, other: "Vocabulary") -> bool:
        return all(name in other.names and other.arity(name) == a for name, a in self)

    def to_sexpr(self):
        return ["vocab"] + [["rel", name, arity] for name, arity in self.symbols]


class FinStructure:
    """A finite relational structure over ``range(size)``.  Immutable."""

    __slots__ = ("vocab", "size", "_tables", "_hash")

    def __init__(self, vocab: Vocabulary, size: int, tables: Mapping[str, Iterable[Sequence[int]]] | None = None):
        if size < 1:
            raise StructureError("structures must be nonempty")
        tables = dict(tables or {})
        unknown = set(tables) - set(vocab.names)
        if unknown:
            raise StructureError(f"tables for undeclared symbols {sorted(unknown)}")
        frozen = {}
        for name, arity in vocab:
            rows = set()
            for row in tables.get(name, ()):
                row = tuple(int(e) for e in row)
                if len(row) != arity:
                    raise StructureError(f"{name} has arity {arity}, got tuple {row}")
                if any(e < 0 or e >= size for e in row):
                    raise StructureError(f"{name}{row}: entry out of range for size {size}")
                rows.add(row)
            frozen[name] = frozenset(rows)
        self.vocab = vocab
        self.size = size
        self._tables = frozen
        self._hash = None

    def table(self, name: str) -> frozenset:
        return self._tables[name]

    @property
    def tables(self) -> dict[str, frozenset]:
        return dict(self._tables)

    def holds(self, name: str, args: Sequence[int]) -> bool:
        if name == EQUALITY:
            return args[0] == args[1]
        return tuple(args) in self._tables[name]

    def __eq__(self, other):
        return (isinstance(other, FinStructure) and self.size == other.size
                and self.vocab == other.vocab and self._tables == other._tables)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vocab, self.size, tuple(sorted(self._tables.items()))))
        return self._hash

    def __repr__(self):
        return f"FinStructure({serialize_structure(self)})"

    def expand(self, vocab: Vocabulary, tables: Mapping[str, Iterable[Sequence[int]]]) -> "FinStructure":
        """Structure over ``vocab`` (a superset) adding the given tables."""
        merged = dict(self._tables)
        merged.update(tables)
        return FinStructure(vocab, self.size, merged)

    def reduct(self, vocab: Vocabulary) -> "FinStructure":
        return FinStructure(vocab, self.size, {n: self._tables[n] for n in vocab.names})

    def restrict(self, subset: Sequence[int]) -> "FinStructure":
        """Induced substructure on ``subset``, re-indexed in increasing order."""
        subset = sorted(set(subset))
        if not subset:
            raise StructureError("substructures must be nonempty")
        pos = {e: i for i, e in enumerate(subset)}
        new = {}
        for name, rows in self._tables.items():
            new[name] = [tuple(pos[e] for e in row) for row in rows if all(e in pos for e in row)]
        return FinStructure(self.vocab, len(subset), new)


def extend_valuation(env: Mapping[int, int], var: int, elem: int) -> dict[int, int]:
    """The valuation that maps ``var`` to ``elem`` and agrees with ``env`` elsewhere."""
    out = dict(env)
    out[var] = elem
    return out


def substructures(m: FinStructure) -> Iterator[FinStructure]:
    """All induced substructures, one per nonempty subset (2**n - 1 of them)."""
    for _, sub in subsets_with_substructures(m):
        yield sub


def subsets_with_substructures(m: FinStructure) -> Iterator[tuple[tuple[int, ...], FinStructure]]:
    for mask in range(1, 1 << m.size):
        subset = tuple(e for e in range(m.size) if mask >> e & 1)
        yield subset, m.restrict(subset)


# -- file formats -------------------------------------------------------------

def parse_vocab_form(form) -> Vocabulary:
    sexpr.expect_head(form, "vocab")
    syms = []
    for item in form[1:]:
        if not (isinstance(item, list) and len(item) == 3 and item[0] == "rel"
                and isinstance(item[1], str) and isinstance(item[2], int)):
            raise fail("expected (rel NAME ARITY)", item)
        syms.append((str(item[1]), item[2]))
    try:
        return Vocabulary(syms)
    except StructureError as e:
        raise fail(str(e), form) from None


def parse_vocab(text: str) -> Vocabulary:
    return parse_vocab_form(sexpr.loads(text))


def serialize_vocab(vocab: Vocabulary) -> str:
    return sexpr.dumps(vocab.to_sexpr())


def parse_structure_form(form) -> FinStructure:
    sexpr.expect_head(form, "structure")
    if len(form) < 2 or not (isinstance(form[1], list) and len(form[1]) == 2
                             and form[1][0] == "size" and isinstance(form[1][1], int)):
        raise fail("expected (size N) as the first clause", form)
    size = form[1][1]
    if size < 1:
        raise fail("size must be at least 1", form[1])
    syms, tables = [], {}
    for item in form[2:]:
        if not (isinstance(item, list) and len(item) >= 3 and item[0] == "rel"
                and isinstance(item[1], str) and isinstance(item[2], int)):
            raise fail("expected (rel NAME ARITY TUPLE*)", item)
        name, arity = str(item[1]), item[2]
        if name in tables:
            raise fail(f"duplicate relation {name}", item)
        rows = []
        for row in item[3:]:
            if not isinstance(row, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in row):
                raise fail("tuple entries must be integers", row)
            if len(row) != arity:
                raise fail(f"arity mismatch: {name} has arity {arity}, tuple has {len(row)} entries", row)
            for e in row:
                if e < 0 or e >= size:
                    raise fail(f"entry {e} out of range for size {size}", row)
            rows.append(tuple(row))
        syms.append((name, arity))
        tables[name] = rows
    try:
        return FinStructure(Vocabulary(syms), size, tables)
    except StructureError as e:
        raise fail(str(e), form) from None


def parse_structure(text: str) -> FinStructure:
    return parse_structure_form(sexpr.loads(text))


def structure_to_sexpr(m: FinStructure):
    out = ["structure", ["size", m.size]]
    for name, arity in m.vocab:
        out.append(["rel", name, arity] + [list(row) for row in sorted(m.table(name))])
    return out


def serialize_structure(m: FinStructure) -> str:
    return sexpr.dumps(structure_to_sexpr(m))


# -- batches ------------------------------------------------------------------

class StructureBatch:
    """Structures of one size and vocabulary, stored as per-tuple bit columns.

    Column ``(name, row)`` is a boolean array saying, for every structure in the
    batch, whether ``row`` is in the table of ``name``.
    """

    def __init__(self, vocab: Vocabulary, size: int, columns: dict, count: int):
        self.vocab = vocab
        self.size = size
        self.count = count
        self._columns = columns

    @classmethod
    def from_structures(cls, structures: Sequence[FinStructure]) -> "StructureBatch":
        if not structures:
            raise StructureError("empty batch")
        vocab, size = structures[0].vocab, structures[0].size
        if any(s.vocab != vocab or s.size != size for s in structures):
            raise StructureError("batch members must share vocabulary and size")
        cols = {}
        for name, arity in vocab:
            for i, row in enumerate(itertools.product(range(size), repeat=arity)):
                cols[name, row] = np.fromiter((row in s.table(name) for s in structures),
                                              dtype=bool, count=len(structures))
        return cls(vocab, size, cols, len(structures))

    def slice(self, start: int, stop: int) -> "StructureBatch":
        cols = {k: v[start:stop] for k, v in self._columns.items()}
        return StructureBatch(self.vocab, self.size, cols, stop - start)

    def column(self, name: str, row: tuple[int, ...]) -> np.ndarray:
        return self._columns[name, row]

    def holds(self, name: str, row: tuple[int, ...]):
        """Column for an atom; equality is a constant."""
        if name == EQUALITY:
            return bool(row[0] == row[1])
        return self._columns[name, row]


class StructureSpace(StructureBatch):
    """Every structure of a given size over ``vocab``, indexed by bitmask.

    Bit ``k`` of the index is slot ``k`` of :attr:`slots`: symbols in vocabulary
    order, tuples in lexicographic order.
    """

    MAX_SLOTS = 24

    def __init__(self, vocab: Vocabulary, size: int):
        slots = [(name, row) for name, arity in vocab
                 for row in itertools.product(range(size), repeat=arity)]
        if len(slots) > self.MAX_SLOTS:
            raise StructureError(f"{len(slots)} table slots is too many to enumerate")
        self.slots = slots
        self._slot_index = {s: k for k, s in enumerate(slots)}
        count = 1 << len(slots)
        idx = np.arange(count, dtype=np.int64)
        cols = {s: ((idx >> k) & 1).astype(bool) for k, s in enumerate(slots)}
        super().__init__(vocab, size, cols, count)

    def structure(self, index: int) -> FinStructure:
        tables: dict[str, list] = {name: [] for name in self.vocab.names}
        for k, (name, row) in enumerate(self.slots):
            if index >> k & 1:
                tables[name].append(row)
        return FinStructure(self.vocab, self.size, tables)

    def index_of(self, m: FinStructure) -> int:
        idx = 0
        for name in self.vocab.names:
            for row in m.table(name):
                idx |= 1 << self._slot_index[name, row]
        return idx

    def __iter__(self) -> Iterator[FinStructure]:
        for i in range(self.count):
            yield self.structure(i)

    def induced_indices(self, subset: Sequence[int], sub: "StructureSpace") -> np.ndarray:
        """For every structure here, the index in ``sub`` of its restriction to ``subset``."""
        subset = sorted(subset)
        if sub.size != len(subset) or sub.vocab != self.vocab:
            raise StructureError("subspace does not match subset")
        idx = np.arange(self.count, dtype=np.int64)
        out = np.zeros(self.count, dtype=np.int64)
        for k, (name, row) in enumerate(sub.slots):
            parent = self._slot_index[name, tuple(subset[e] for e in row)]
            out |= ((idx >> parent) & 1) << k
        return out
