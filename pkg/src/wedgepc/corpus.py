"""Named codes, PC definitions and structure families used by the demos and tests."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Optional

import numpy as np

from .batch import evaluate_space
from .builtins import builtin
from .formulas import Exists, Forall, Leaf, Literal, Node, Vee, Wedge, children, lit, nlit
from .pcsearch import PCDefinition
from .structures import EQUALITY, FinStructure, StructureSpace, Vocabulary

GRAPH = Vocabulary([("E", 2)])
TWO_BINARY = Vocabulary([("E", 2), ("F", 2)])
ORDER = Vocabulary([("Less", 2)])


def leaf(*literals: Literal) -> Leaf:
    return Leaf(tuple(literals))


def forall(vars_, body: Node) -> Node:
    for v in reversed(vars_):
        body = Forall(v, body)
    return body


def exists(vars_, body: Node) -> Node:
    for v in reversed(vars_):
        body = Exists(v, body)
    return body


def cut(code: Node, k: int) -> Node:
    """Replace every generated family by its explicit children ``0..k``."""
    if isinstance(code, Leaf):
        return code
    if isinstance(code, (Exists, Forall)):
        return type(code)(code.var, cut(code.child, k))
    if code.family is not None:
        kids = tuple(code.family.child(i) for i in range(k + 1))
    else:
        kids = code.children
    return type(code)(tuple(cut(c, k) for c in kids))


# -- graphs -------------------------------------------------------------------------

def graph(n: int, edges, rel: str = "E") -> FinStructure:
    """Undirected graph: both orientations of every edge."""
    rows = set()
    for a, b in edges:
        rows.add((a, b))
        rows.add((b, a))
    return FinStructure(Vocabulary([(rel, 2)]), n, {rel: rows})


def all_graphs(n: int, rel: str = "E") -> Iterator[FinStructure]:
    """Every labeled loopless undirected graph on n vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield graph(n, [p for k, p in enumerate(pairs) if mask >> k & 1], rel)


def cycle(n: int, rel: str = "E") -> FinStructure:
    return graph(n, [(i, (i + 1) % n) for i in range(n)], rel)


def linear_order(n: int) -> FinStructure:
    return FinStructure(ORDER, n, {"Less": [(a, b) for a in range(n) for b in range(n) if a < b]})


def all_structures(vocab: Vocabulary, n: int) -> Iterator[FinStructure]:
    yield from StructureSpace(vocab, n)


# -- PC definitions -------------------------------------------------------------------

def disconnected_pc(rel: str = "R") -> PCDefinition:
    """C is transitive, contains the edges, and is not total."""
    base = Vocabulary([(rel, 2)])
    ext = Vocabulary([(rel, 2), ("C", 2)])
    axioms = (
        forall([0, 1], leaf(nlit(rel, 0, 1), lit("C", 0, 1))),
        forall([0, 1, 2], leaf(nlit("C", 0, 1), nlit("C", 1, 2), lit("C", 0, 2))),
        exists([0, 1], leaf(nlit("C", 0, 1))),
    )
    return PCDefinition(base, ext, axioms, name="disconnected")


def bicoloring_pc(rel: str = "E") -> PCDefinition:
    """U splits every edge."""
    base = Vocabulary([(rel, 2)])
    ext = Vocabulary([(rel, 2), ("U", 1)])
    axioms = (
        forall([0, 1], leaf(nlit(rel, 0, 1), lit("U", 0), lit("U", 1))),
        forall([0, 1], leaf(nlit(rel, 0, 1), nlit("U", 0), nlit("U", 1))),
    )
    return PCDefinition(base, ext, axioms, name="bicoloring")


def bicoloring_pc_prime(rel: str = "E", predicate: str = "P") -> PCDefinition:
    """The bicoloring axioms relativized to the sort P."""
    base = Vocabulary([(rel, 2)])
    ext = Vocabulary([(rel, 2), ("U", 1), (predicate, 1)])
    p = predicate
    axioms = (
        forall([0, 1], leaf(nlit(p, 0), nlit(p, 1), nlit(rel, 0, 1), lit("U", 0), lit("U", 1))),
        forall([0, 1], leaf(nlit(p, 0), nlit(p, 1), nlit(rel, 0, 1), nlit("U", 0), nlit("U", 1))),
    )
    return PCDefinition(base, ext, axioms, p, name="bicoloring-prime")


def _no_least(u: str = "U") -> Node:
    # every element of U has a smaller element of U
    return Forall(0, Vee((leaf(nlit(u, 0)), Exists(1, Wedge((leaf(lit(u, 1)), leaf(lit("Less", 1, 0))))))))


def non_well_founded_pc(require_nonempty: bool = False) -> PCDefinition:
    """A set U with no least element.

    Read literally the axiom holds with U empty, so every order is a member;
    ``require_nonempty`` adds the missing condition that U has an element.
    """
    ext = Vocabulary([("Less", 2), ("U", 1)])
    axioms = [_no_least()]
    if require_nonempty:
        axioms.append(Exists(0, leaf(lit("U", 0))))
    name = "non-well-founded" + ("-nonempty" if require_nonempty else "")
    return PCDefinition(ORDER, ext, tuple(axioms), name=name)


def infinite_pc(base: Optional[Vocabulary] = None) -> PCDefinition:
    """A strict linear order with no largest element."""
    base = base or Vocabulary()
    ext = base.union(Vocabulary([("Ord", 2)]))
    axioms = (
        Forall(0, leaf(nlit("Ord", 0, 0))),
        forall([0, 1, 2], leaf(nlit("Ord", 0, 1), nlit("Ord", 1, 2), lit("Ord", 0, 2))),
        forall([0, 1], leaf(lit("Ord", 0, 1), lit("Ord", 1, 0), lit(EQUALITY, 0, 1))),
        Forall(0, Exists(1, leaf(lit("Ord", 0, 1)))),
    )
    return PCDefinition(base, ext, axioms, name="infinite")


def extra_element_pc_prime(predicate: str = "P") -> PCDefinition:
    """Some element lies outside the sort, so every witness needs one extra."""
    base = Vocabulary([("E", 2)])
    ext = Vocabulary([("E", 2), (predicate, 1)])
    return PCDefinition(base, ext, (Exists(0, leaf(nlit(predicate, 0))),), predicate, name="extra-element")


# -- code corpora ---------------------------------------------------------------------

def wedge_corpus() -> list[tuple[str, Node]]:
    """Twenty finite wedge sentences over one binary relation E."""
    E, nE, eq, ne = (lambda a, b: lit("E", a, b)), (lambda a, b: nlit("E", a, b)), \
        (lambda a, b: lit(EQUALITY, a, b)), (lambda a, b: nlit(EQUALITY, a, b))
    return [
        ("reflexive", Forall(0, leaf(E(0, 0)))),
        ("some-loop", Exists(0, leaf(E(0, 0)))),
        ("irreflexive", Forall(0, leaf(nE(0, 0)))),
        ("total-out", Forall(0, Exists(1, leaf(E(0, 1))))),
        ("sink-free-in", Forall(1, Exists(0, leaf(E(0, 1))))),
        ("universal-source", Exists(0, Forall(1, leaf(E(0, 1))))),
        ("symmetric", forall([0, 1], leaf(nE(0, 1), E(1, 0)))),
        ("antisymmetric", forall([0, 1], leaf(nE(0, 1), nE(1, 0), eq(0, 1)))),
        ("transitive", forall([0, 1, 2], leaf(nE(0, 1), nE(1, 2), E(0, 2)))),
        ("two-elements", exists([0, 1], leaf(ne(0, 1)))),
        ("edge-between-distinct", exists([0, 1], Wedge((leaf(E(0, 1)), leaf(ne(0, 1)))))),
        ("loop-and-no-out", Forall(0, Wedge((leaf(E(0, 0)), Exists(1, leaf(nE(0, 1))))))),
        ("loop-somewhere-and-nontotal", Wedge((Exists(0, leaf(E(0, 0))), Forall(0, Exists(1, leaf(nE(0, 1))))))),
        ("mutual-neighbour", Forall(0, Exists(1, Wedge((leaf(E(0, 1)), leaf(E(1, 0))))))),
        ("empty", forall([0, 1], leaf(nE(0, 1)))),
        ("complete", forall([0, 1], leaf(E(0, 1), eq(0, 1)))),
        ("loop-or-isolated", Forall(0, leaf(E(0, 0), nE(0, 0)))),
        ("empty-wedge", Wedge(())),
        ("edge-and-nonedge", Wedge((exists([0, 1], leaf(E(0, 1))), exists([0, 1], leaf(nE(0, 1)))))),
        ("path-of-two", exists([0, 1, 2], Wedge((leaf(E(0, 1)), leaf(E(1, 2)), leaf(ne(0, 2)))))),
    ]


def harness_corpus() -> list[tuple[str, Node]]:
    """Wedge sentences small enough for the truncation harness at three elements.

    The infinitary builtins enter through explicit cuts: the cut of a wedge
    family is itself a finite wedge sentence.
    """
    keep = {"reflexive", "some-loop", "total-out", "universal-source", "symmetric", "antisymmetric",
            "two-elements", "edge-between-distinct", "loop-and-no-out", "loop-somewhere-and-nontotal",
            "mutual-neighbour"}
    out = [(name, code) for name, code in wedge_corpus() if name in keep]
    out += [
        ("infinite-cut-0", cut(builtin("infinite"), 0)),
        ("infinite-cut-1", cut(builtin("infinite"), 1)),
        ("disconnected-cut-0", cut(builtin("disconnected", "E"), 0)),
    ]
    return out


def universal_corpus() -> list[tuple[str, Node]]:
    """Universal sentences over E; each defines a substructure-closed class."""
    E, nE, eq = (lambda a, b: lit("E", a, b)), (lambda a, b: nlit("E", a, b)), (lambda a, b: lit(EQUALITY, a, b))
    return [
        ("asymmetric", forall([0, 1], leaf(nE(0, 1), nE(1, 0)))),
        ("irreflexive", Forall(0, leaf(nE(0, 0)))),
        ("reflexive", Forall(0, leaf(E(0, 0)))),
        ("symmetric", forall([0, 1], leaf(nE(0, 1), E(1, 0)))),
        ("transitive", forall([0, 1, 2], leaf(nE(0, 1), nE(1, 2), E(0, 2)))),
        ("complete", forall([0, 1], leaf(E(0, 1), eq(0, 1)))),
        ("functional", forall([0, 1, 2], leaf(nE(0, 1), nE(0, 2), eq(1, 2)))),
        ("reflexive-and-symmetric", Wedge((Forall(0, leaf(E(0, 0))), forall([0, 1], leaf(nE(0, 1), E(1, 0)))))),
    ]


def existential_control() -> Node:
    return Exists(0, leaf(lit("E", 0, 0)))


# -- random codes -----------------------------------------------------------------------

def random_code(rng: random.Random, depth: int = 3, rels=("E", "F"), nvars: int = 3,
                wedge_only: bool = False, bound: frozenset = frozenset()) -> Node:
    """A random finite code of depth at most ``depth`` over binary relations.

    Quantifiers never rebind a variable already bound above them.
    """
    free = [v for v in range(nvars) if v not in bound]
    if depth == 0 or rng.random() < 0.25:
        lits = []
        for _ in range(rng.randint(1, 3)):
            sym = rng.choice(tuple(rels) + (EQUALITY,))
            lits.append(Literal(rng.random() < 0.5, sym, (rng.randrange(nvars), rng.randrange(nvars))))
        return Leaf(tuple(lits))
    kinds = ["wedge"] + ([] if wedge_only else ["vee"]) + (["exists", "forall"] if free else [])
    kind = rng.choice(kinds)
    if kind in ("exists", "forall"):
        node = Exists if kind == "exists" else Forall
        v = rng.choice(free)
        return node(v, random_code(rng, depth - 1, rels, nvars, wedge_only, bound | {v}))
    kids = tuple(random_code(rng, depth - 1, rels, nvars, wedge_only, bound) for _ in range(rng.randint(0, 3)))
    return (Wedge if kind == "wedge" else Vee)(kids)


def random_codes(count: int, seed: int = 0, **kw) -> list[Node]:
    rng = random.Random(seed)
    return [random_code(rng, **kw) for _ in range(count)]


# -- substructure closure over whole spaces ---------------------------------------------

def closure_counterexamples(code: Node, vocab: Vocabulary, max_size: int, limit: Optional[int] = None) -> list:
    """``(structure, subset)`` pairs with a member structure and a non-member induced substructure.

    Membership is evaluated once per structure of each size, then each subset
    of the universe maps every parent to the index of its restriction.
    """
    spaces = {n: StructureSpace(vocab, n) for n in range(1, max_size + 1)}
    truth = {}
    for n, space in spaces.items():
        t = evaluate_space(code, space)
        truth[n] = np.broadcast_to(t.arr, (space.count,))
    out = []
    for n in range(2, max_size + 1):
        space = spaces[n]
        members = truth[n]
        for k in range(1, n):
            for subset in itertools.combinations(range(n), k):
                sub_index = space.induced_indices(subset, spaces[k])
                bad = np.nonzero(members & ~truth[k][sub_index])[0]
                for i in bad:
                    out.append((space.structure(int(i)), subset))
                    if limit is not None and len(out) >= limit:
                        return out
    return out
