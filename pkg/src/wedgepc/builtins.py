"""Builtin infinitary codes with their generated families.

Each family states a sufficiency bound with a short argument for why it is
enough over a finite structure.  Tests check the bounds against oracles.
"""

from __future__ import annotations

from .formulas import (
    Exists,
    Forall,
    FormulaError,
    GeneratedFamily,
    Leaf,
    Literal,
    Vee,
    Wedge,
    register_family,
)
from .structures import EQUALITY, FinStructure

BUILTINS = ("disconnected", "infinite", "torsion", "finite")


def _exists_chain(vars_, body):
    for v in reversed(vars_):
        body = Exists(v, body)
    return body


def _forall_chain(vars_, body):
    for v in reversed(vars_):
        body = Forall(v, body)
    return body


def _size_plus_one(m: FinStructure) -> int:
    return m.size + 1


def _size(m: FinStructure) -> int:
    return m.size


# at least n+1 distinct elements.  Child |M| is already false in M, so cutting at
# |M|+1 can only add more false children.
def _infinite_child(n: int):
    vars_ = list(range(n + 1))
    body = Wedge(tuple(Leaf((Literal(True, EQUALITY, (i, j)),))
                       for i in range(n + 1) for j in range(i + 1, n + 1)))
    return _exists_chain(vars_, body)


def infinite_family() -> GeneratedFamily:
    return GeneratedFamily("infinite", (), _infinite_child, _size_plus_one, frozenset(),
                           dual_bound=_size_plus_one, symbols=())


# child 0: x0 and x1 differ.  child n+1: no walk x0 = u0, u1, ..., un = x1 along R.
# A walk that exists at all has a repetition-free version with at most |M|
# vertices, which is child index |M| or below.
def _disconnected_child(rel: str):
    def gen(n: int):
        if n == 0:
            return Leaf((Literal(True, EQUALITY, (0, 1)),))
        k = n - 1
        us = list(range(2, 3 + k))
        lits = [Literal(True, EQUALITY, (0, us[0]))]
        for a, b in zip(us, us[1:]):
            lits.append(Literal(True, rel, (a, b)))
        lits.append(Literal(True, EQUALITY, (us[-1], 1)))
        return _forall_chain(us, Leaf(tuple(lits)))
    return gen


def disconnected_family(rel: str = "R") -> GeneratedFamily:
    return GeneratedFamily("disconnected", (rel,), _disconnected_child(rel), _size, frozenset({0, 1}),
                           dual_bound=_size, symbols=((rel, 2),))


# child n is the statement (n+1)*x0 = 0, written with Add(a, b, c) for a+b=c and
# Zero(z).  A shortest chain x0, x0+x0, ... reaching Zero repeats no element, so
# it has at most |M| entries.
def _torsion_child(add: str, zero: str):
    def gen(n: int):
        if n == 0:
            return Leaf((Literal(False, zero, (0,)),))
        ys = list(range(1, n + 1))
        parts = [Leaf((Literal(False, add, (0, 0, ys[0])),))]
        for a, b in zip(ys, ys[1:]):
            parts.append(Leaf((Literal(False, add, (a, 0, b)),)))
        parts.append(Leaf((Literal(False, zero, (ys[-1],)),)))
        return _exists_chain(ys, Wedge(tuple(parts)))
    return gen


def torsion_family(add: str = "Add", zero: str = "Zero") -> GeneratedFamily:
    return GeneratedFamily("torsion", (add, zero), _torsion_child(add, zero), _size, frozenset({0}),
                           dual_bound=_size, symbols=((add, 3), (zero, 1)), wedge_only=False, kind="vee")


# child n: among any n+1 elements two coincide, i.e. at most n elements.
# Child |M|-1 is true in M.
def _finite_child(n: int):
    vars_ = list(range(n + 1))
    pairs = [Literal(False, EQUALITY, (i, j)) for i in range(n + 1) for j in range(i + 1, n + 1)]
    body = Leaf(tuple(pairs)) if pairs else Vee(())
    return _forall_chain(vars_, body)


def finite_family() -> GeneratedFamily:
    return GeneratedFamily("finite", (), _finite_child, _size, frozenset(), dual_bound=_size,
                           symbols=(), wedge_only=False, kind="vee")


register_family("infinite", infinite_family)
register_family("disconnected", disconnected_family)
register_family("torsion", torsion_family)
register_family("finite", finite_family)


def builtin(name: str, *params):
    """The builtin code called ``name``.

    ``disconnected [R]``: the binary relation R (read as an undirected graph) is
    disconnected.  ``infinite``: the universe is infinite (false in every finite
    structure).  ``torsion [Add Zero]``: every element has finite order, for a
    group written relationally.  ``finite``: the universe is finite.
    """
    if name == "disconnected":
        return Exists(0, Exists(1, Wedge(family=disconnected_family(*params))))
    if name == "infinite":
        return Wedge(family=infinite_family(*params))
    if name == "torsion":
        return Forall(0, Vee(family=torsion_family(*params)))
    if name == "finite":
        return Vee(family=finite_family(*params))
    raise FormulaError(f"unknown builtin {name!r}; expected one of {', '.join(BUILTINS)}")
