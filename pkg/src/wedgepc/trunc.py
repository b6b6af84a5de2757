"""Finite truncations of the tuple model and the two-direction harness.

A truncation keeps the base structure M, cuts the arithmetic sort to
``{0..B}`` (with + and * saturating at B) and the tuple sort to all tuples of
length at most L.  The tuple sort is never materialized: a tuple quantifier
starts from one symbolic cell (any length, any entries) and splits it only
when the body asks a question the cell cannot answer, such as "is entry 3
equal to element 1?".  Each cell that evaluates without a split decides the
body for every tuple it contains, so the loop over cells is exact.
"""

from __future__ import annotations

import itertools
from collections import OrderedDict
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional

from . import arith, fo
from .evaluator import (
    Refusal,
    SkolemTable,
    evaluate,
    extract_skolem,
    least_witness_skolem,
    refutation_path,
    skolem_domain,
)
from .formulas import depth, has_family, instantiate, is_sentence, is_wedge, max_var
from .structures import FinStructure

DEFAULT_MAX_TUPLES = 100_000
G_EXHAUSTIVE_BITS = 24
G_SAMPLES = 100


class CapExceeded(Refusal):
    pass


# -- bounds -------------------------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    B: int
    L: int
    s: int
    t_max: int
    depth: int
    t: int  # block width used by witnesses: max(t_max, s, 1)

    def scaled(self, factor: int) -> "Bounds":
        return Bounds(self.B * factor, self.L * factor, self.s, self.t_max, self.depth, self.t)

    def to_sexpr(self):
        return ["bounds", ["B", self.B], ["L", self.L], ["s", self.s], ["t-max", self.t_max],
                ["depth", self.depth], ["t", self.t]]


def derive_bounds(code, m: Optional[FinStructure] = None, enc=None) -> Bounds:
    enc = enc or arith.encode(code, m.vocab if m is not None else None)
    t_max = max_var(code) + 1
    d = depth(code)
    s = enc.relation_span()
    t = max(t_max, s, 1)
    L = t * (d + 1)
    longest = max((enc.psi.k(n.psi_index) for n in enc.leaves()), default=0)
    B = max(L + 1, 2 * s, len(enc.nodes) - 1, longest + 1)
    return Bounds(B, L, s, t_max, d, t)


def tuple_count(n: int, L: int) -> int:
    return sum(n ** k for k in range(L + 1))


# -- models -------------------------------------------------------------------

def constant_g(value: int = 0) -> Callable:
    def g(node, view):
        return value

    return g


class SkolemTerm:
    """Lift a witness table to ``g(node code, tuple)`` by reading only the node's free variables.

    Short tuples and non-existential nodes get the default element, so the
    lifted function depends on exactly the entries chi allows.
    """

    def __init__(self, enc, table: Callable, default: int = 0):
        self.enc = enc
        self.table = table
        self.default = default

    def __call__(self, node, view):
        nodes = self.enc.nodes
        if not 0 <= node < len(nodes) or nodes[node].kind != "exists":
            return self.default
        info = nodes[node]
        key = []
        for j in info.freevars:
            if not view.has(j):
                return self.default
            key.append((j, view[j]))
        return self.table(info.path, tuple(key))


@dataclass
class TruncModel:
    base: FinStructure
    B: int
    L: int
    g: Callable = field(default_factory=constant_g)
    R: frozenset = frozenset()

    @property
    def n(self) -> int:
        return self.base.size

    @property
    def tuple_count(self) -> int:
        return tuple_count(self.n, self.L)

    def tuples(self):
        for k in range(self.L + 1):
            yield from itertools.product(range(self.n), repeat=k)


def build_trunc(m: FinStructure, bounds, g: Optional[Callable] = None, R=(),
                max_tuples: Optional[int] = DEFAULT_MAX_TUPLES) -> TruncModel:
    B, L = (bounds.B, bounds.L) if isinstance(bounds, Bounds) else bounds
    if B < 0 or L < 0:
        raise ValueError("bounds must be non-negative")
    R = frozenset(R)
    if any(not 0 <= r <= B for r in R):
        raise ValueError("R must be a subset of {0..B}")
    if max_tuples is not None and tuple_count(m.size, L) > max_tuples:
        raise CapExceeded(f"tuple sort has {tuple_count(m.size, L)} elements, cap is {max_tuples}")
    return TruncModel(m, B, L, g or constant_g(), R)


# -- lazy tuples ------------------------------------------------------------------
#
# A symbolic cell stands for every tuple whose length lies in ``lengths`` and
# whose entries meet the per-position specs:
#
#   missing        any element
#   ("v", V)       an element of V
#   ("=", j)       same element as position j of this tuple
#   ("@", T, j)    same element as position j of the enclosing tuple T
#   ("!", T, j, V) an element of V (|V| >= 2) different from position j of T
#
# Aliases point only outward (to tuples bound further out), so a cell stays
# meaningful while the enclosing tuple is fixed, and an inner loop restarts
# whenever an enclosing cell is split.  Every cell built here is non-empty.

class Choice(Exception):
    """Raised when a symbolic tuple cell has to be split to answer a question."""

    def __init__(self, owner, branches):
        super().__init__()
        self.owner = owner
        self.branches = branches


def _prefer(c: Choice, pending: Optional[Choice]) -> Choice:
    """Of two pending splits keep the narrower one, the outer tuple on ties."""
    if pending is None:
        return c
    if (len(c.branches), c.branches[0].depth) < (len(pending.branches), pending.branches[0].depth):
        return c
    return pending


class SymTuple:
    __slots__ = ("owner", "depth", "lengths", "spec", "full", "lo", "hi")

    def __init__(self, owner, depth: int, lengths: frozenset, spec: dict, full: frozenset, span=None):
        self.owner = owner
        self.depth = depth
        self.lengths = lengths
        self.spec = spec
        self.full = full
        self.lo, self.hi = span if span is not None else ((min(lengths), max(lengths)) if lengths else (0, -1))

    def with_lengths(self, ls) -> "SymTuple":
        return SymTuple(self.owner, self.depth, frozenset(ls), self.spec, self.full)

    def with_spec(self, *updates) -> "SymTuple":
        spec = dict(self.spec)
        for pos, s in updates:
            spec[pos] = s
        return SymTuple(self.owner, self.depth, self.lengths, spec, self.full, (self.lo, self.hi))

    def split_lengths(self, pred):
        yes = frozenset(x for x in self.lengths if pred(x))
        raise Choice(self.owner, [self.with_lengths(yes), self.with_lengths(self.lengths - yes)])


def _depth(t) -> int:
    return -1 if isinstance(t, tuple) else t.depth


def _find(t, i):
    """``(tuple, position, spec)`` of the class root holding entry i."""
    while True:
        if isinstance(t, tuple):
            return t, i, None
        s = t.spec.get(i)
        if s is None:
            return t, i, ("v", t.full)
        if s[0] == "=":
            i = s[1]
        elif s[0] == "@":
            t, i = s[1], s[2]
        else:
            return t, i, s


def _values(t, i):
    """``(root tuple, root position, spec, values, exact)``; inexact values over-approximate."""
    rt, ri, s = _find(t, i)
    if s is None:
        return rt, ri, s, frozenset((rt[ri],)), True
    if s[0] == "v":
        return rt, ri, s, s[1], True
    ov = _values(s[1], s[2])
    if ov[4] and len(ov[3]) == 1:
        return rt, ri, s, s[3] - ov[3], True
    return rt, ri, s, s[3], False


def _settle(rt, ri, s):
    """Make a ``!`` class exact: pin the outer entry it avoids."""
    ot, oi, _, ov, exact = _values(s[1], s[2])
    if exact and len(ov) == 1:
        raise Choice(rt.owner, [rt.with_spec((ri, ("v", s[3] - ov)))])
    if not exact:
        _settle(ot, oi, _find(ot, oi)[2])
    _split(ot, oi, ov)


def _split(rt, ri, vals, a=None):
    if a is None:
        branches = [rt.with_spec((ri, ("v", frozenset((v,))))) for v in sorted(vals)]
    else:
        branches = [rt.with_spec((ri, ("v", frozenset((a,))))), rt.with_spec((ri, ("v", vals - {a})))]
    raise Choice(rt.owner, branches)


def _has(p, i: int) -> bool:
    if isinstance(p, tuple):
        return i < len(p)
    if i < p.lo:
        return True
    if i >= p.hi:
        return False
    p.split_lengths(lambda x: x > i)


def _length(p) -> int:
    if isinstance(p, tuple):
        return len(p)
    if len(p.lengths) == 1:
        return next(iter(p.lengths))
    raise Choice(p.owner, [p.with_lengths((x,)) for x in sorted(p.lengths)])


_OPS = {
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}
_FLIP = {"=": "=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _length_cmp(p, op: str, v: int) -> bool:
    f = _OPS[op]
    if isinstance(p, tuple):
        return f(len(p), v)
    if p.lo == p.hi:
        return f(p.lo, v)
    yes = sum(1 for x in p.lengths if f(x, v))
    if yes == len(p.lengths):
        return True
    if not yes:
        return False
    p.split_lengths(lambda x: f(x, v))


def _entry(p, i: int) -> int:
    """The element at position i (which must exist)."""
    rt, ri, s, vals, exact = _values(p, i)
    if not exact:
        _settle(rt, ri, s)
    if len(vals) == 1:
        return next(iter(vals))
    _split(rt, ri, vals)


def _ind(p, i: int, a: int) -> bool:
    if isinstance(p, tuple):
        return i < len(p) and p[i] == a
    if not _has(p, i):
        return False
    rt, ri, s, vals, exact = _values(p, i)
    if a not in vals:
        return False
    if not exact:
        _settle(rt, ri, s)
    if len(vals) == 1:
        return True
    _split(rt, ri, vals, a)


def _same(p, i: int, q, j: int):
    """Whether entry i of p exists and equals entry j of q; None asks for the generic route."""
    if not _has(p, i) or not _has(q, j):
        return False
    a, b = _values(p, i), _values(q, j)
    if a[0] is b[0] and a[1] == b[1]:
        return True
    va, vb = a[3], b[3]
    if not va & vb:
        return False
    if a[4] and b[4] and len(va) == 1 and len(vb) == 1:
        return True
    if _depth(a[0]) < _depth(b[0]):
        a, b = b, a
    xt, xi, xs, xv, xexact = a
    yt, yi, ys, yv, yexact = b
    if isinstance(xt, tuple) or xs[0] != "v":
        return None
    if xt is yt:
        if ys[0] != "v":
            return None
        both = xv & yv
        branches = [xt.with_spec((yi, ("v", both)), (xi, ("=", yi)))]
        for v in sorted(xv):
            rest = yv - {v}
            if rest:
                branches.append(xt.with_spec((xi, ("v", frozenset((v,)))), (yi, ("v", rest))))
        raise Choice(xt.owner, branches)
    if xv != xt.full or len(xv) < 2:
        return None
    raise Choice(xt.owner, [xt.with_spec((xi, ("@", yt, yi))), xt.with_spec((xi, ("!", yt, yi, xv)))])


def _tuple_eq(p, q) -> bool:
    if isinstance(p, tuple) and isinstance(q, tuple):
        return p == q
    lp = frozenset((len(p),)) if isinstance(p, tuple) else p.lengths
    lq = frozenset((len(q),)) if isinstance(q, tuple) else q.lengths
    if not lp & lq:
        return False
    n, m = _length(p), _length(q)
    if n != m:
        return False
    for i in range(n):
        r = _same(p, i, q, i)
        if r is None:
            if _entry(p, i) != _entry(q, i):
                return False
        elif not r:
            return False
    return True


class _View:
    """What ``g`` sees of a tuple argument."""

    __slots__ = ("p",)

    def __init__(self, p):
        self.p = p

    def __len__(self):
        return _length(self.p)

    def has(self, j: int) -> bool:
        return _has(self.p, j)

    def __getitem__(self, j: int) -> int:
        if not _has(self.p, j):
            raise IndexError(j)
        return _entry(self.p, j)


# -- evaluation ---------------------------------------------------------------------

@dataclass
class FOResult:
    value: bool
    saturated: bool = False
    cells: int = 0

    def __bool__(self):
        return self.value


class _Compiler:
    def __init__(self, tm: TruncModel):
        self.tm = tm
        # holders for what differs between models sharing (B, L, n), see rebind
        self._model = [tm]
        self._tables = {}
        self._R = [tm.R]
        self.saturated = False
        self.cells = 0
        self.elements = range(tm.n)
        self.full = frozenset(range(tm.n))
        self.depth = 0  # tuple quantifiers enclosing the node being compiled

    def rebind(self, tm: TruncModel):
        self.tm = self._model[0] = tm
        for name, cell in self._tables.items():
            cell[0] = tm.base.table(name)
        self._R[0] = tm.R

    # terms
    def term(self, t):
        B = self.tm.B
        closed = fo.numeral_value(t)
        if closed is not None:
            if closed > B:
                def sat(env):
                    self.saturated = True
                    return B
                return sat
            return lambda env: closed
        if isinstance(t, fo.Var):
            name = t.name
            return lambda env: env[name]
        if isinstance(t, (fo.Add, fo.Mul)):
            fa, fb = self.term(t.a), self.term(t.b)
            add = isinstance(t, fo.Add)

            def arith_(env):
                v = fa(env) + fb(env) if add else fa(env) * fb(env)
                if v > B:
                    self.saturated = True
                    return B
                return v
            return arith_
        if isinstance(t, fo.Len):
            fp = self.term(t.p)
            return lambda env: _length(fp(env))
        if isinstance(t, fo.App):
            fn, fp = self.term(t.node), self.term(t.p)
            model = self._model  # g is read per call so a compiled program survives swapping it
            return lambda env: model[0].g(fn(env), _View(fp(env)))
        raise TypeError(f"not a term: {t!r}")

    # formulas
    def compile(self, f):
        method = getattr(self, "_" + type(f).__name__)
        return method(f)

    def _Rel(self, f):
        cell = self._tables.setdefault(f.name, [self.tm.base.table(f.name)])
        fs = [self.term(a) for a in f.args]
        return lambda env: tuple(x(env) for x in fs) in cell[0]

    def _compare(self, a, b, op: str, sort=None):
        if isinstance(a, fo.Len) and not isinstance(b, fo.Len):
            fp, fb = self.term(a.p), self.term(b)
            return lambda env: _length_cmp(fp(env), op, fb(env))
        if isinstance(b, fo.Len) and not isinstance(a, fo.Len):
            fp, fa = self.term(b.p), self.term(a)
            flipped = _FLIP[op]
            return lambda env: _length_cmp(fp(env), flipped, fa(env))
        fa, fb = self.term(a), self.term(b)
        if sort == "Mtup":
            return lambda env: _tuple_eq(fa(env), fb(env))
        cmp = _OPS[op]
        return lambda env: cmp(fa(env), fb(env))

    def _Eq(self, f):
        sort = fo.term_sort(f.a, [])
        return self._compare(f.a, f.b, "=", sort)

    def _Lt(self, f):
        return self._compare(f.a, f.b, "<")

    def _Le(self, f):
        return self._compare(f.a, f.b, "<=")

    def _Ind(self, f):
        fp, fi, fm = self.term(f.p), self.term(f.i), self.term(f.m)
        return lambda env: _ind(fp(env), fi(env), fm(env))

    def _InR(self, f):
        ft, R = self.term(f.t), self._R
        return lambda env: ft(env) in R[0]

    def _Top(self, f):
        return lambda env: True

    def _Bot(self, f):
        return lambda env: False

    def _Not(self, f):
        fa = self.compile(f.a)
        return lambda env: not fa(env)

    def _junction(self, parts, stop: bool):
        fs = [self.compile(p) for p in parts]

        def run(env):
            # a deciding part elsewhere makes a pending split unnecessary;
            # otherwise split where the fewest cells result
            pending = None
            for x in fs:
                try:
                    if x(env) == stop:
                        return stop
                except Choice as c:
                    pending = _prefer(c, pending)
            if pending is not None:
                raise pending
            return not stop
        return run

    def _And(self, f):
        return self._junction(f.parts, False)

    def _Or(self, f):
        return self._junction(f.parts, True)

    def _Implies(self, f):
        if isinstance(f.b, fo.Top):
            return lambda env: True
        fa, fb = self.compile(f.a), self.compile(f.b)

        def run(env):
            try:
                if not fa(env):
                    return True
            except Choice as c:
                try:
                    if fb(env):
                        return True
                except Choice:
                    pass
                raise c
            return fb(env)
        return run

    def _loop(self, name, values, body, stop: bool):
        """Shared loop for quantifiers with concrete ranges; ``stop`` is the deciding value."""

        def run(env):
            pending = None
            for v in values(env):
                env[name] = v
                try:
                    if body(env) == stop:
                        del env[name]
                        return stop
                except Choice as c:
                    if pending is None:
                        pending = c
            env.pop(name, None)
            if pending is not None:
                raise pending
            return not stop
        return run

    def _guards(self, var, hyp):
        """Bounds on ``var`` implied by a hypothesis: (lower terms, upper-exclusive terms)."""
        lows, highs = [], []
        parts = hyp.parts if isinstance(hyp, fo.And) else (hyp,)
        for p in parts:
            if isinstance(p, (fo.Lt, fo.Le)):
                if p.a == var and not fo.mentions(p.b, lambda x: x == var):
                    highs.append((self.term(p.b), isinstance(p, fo.Le)))
                elif p.b == var and not fo.mentions(p.a, lambda x: x == var):
                    lows.append((self.term(p.a), isinstance(p, fo.Lt)))
        return lows, highs

    def _nat_range(self, var, hyp):
        B = self.tm.B
        lows, highs = self._guards(var, hyp) if hyp is not None else ([], [])

        def values(env):
            lo, hi = 0, B + 1
            try:
                for ft, strict in lows:
                    lo = max(lo, ft(env) + (1 if strict else 0))
                for ft, inclusive in highs:
                    hi = min(hi, ft(env) + (1 if inclusive else 0))
            except Choice:
                lo, hi = 0, B + 1
            return range(lo, hi)
        return values

    def _tuple_loop(self, name, body, stop: bool, max_len, depth: int, start=None):
        full = self.full

        def whole(env, owner):
            top = max_len(env)
            return SymTuple(owner, depth, frozenset(range(top + 1)), {}, full) if top >= 0 else None

        start = start or whole

        def run(env):
            owner = object()
            first = start(env, owner)
            if first is None:
                return not stop
            if isinstance(first, tuple):
                env[name] = first
                try:
                    return body(env)
                finally:
                    del env[name]
            stack = [first]
            pending = None
            while stack:
                cell = stack.pop()
                env[name] = cell
                self.cells += 1
                try:
                    if body(env) == stop:
                        del env[name]
                        return stop
                except Choice as c:
                    if c.owner is owner:
                        stack.extend(reversed(c.branches))
                    elif pending is None:
                        pending = c
            env.pop(name, None)
            if pending is not None:
                raise pending
            return not stop
        return run

    def _tuple_body(self, f):
        depth = self.depth
        self.depth += 1
        try:
            return self.compile(f.body), depth
        finally:
            self.depth -= 1

    def _same_pattern(self, f):
        """``exists a (ind(p, i, a) and ind(q, j, a))`` as one entry comparison."""
        body = f.body
        if not (isinstance(body, fo.And) and len(body.parts) == 2
                and all(isinstance(x, fo.Ind) and x.m == f.var for x in body.parts)):
            return None
        x, y = body.parts
        if any(fo.mentions(t, lambda z: z == f.var) for t in (x.p, x.i, y.p, y.i)):
            return None
        fp, fi, fq, fj = self.term(x.p), self.term(x.i), self.term(y.p), self.term(y.i)
        generic = self._loop(f.var.name, lambda env: self.elements, self.compile(body), True)

        def run(env):
            r = _same(fp(env), fi(env), fq(env), fj(env))
            return generic(env) if r is None else r
        return run

    def _one_point(self, var, hyp):
        """A term T with ``var = T`` among the conjuncts of ``hyp``, if any."""
        parts = hyp.parts if isinstance(hyp, fo.And) else (hyp,)
        for p in parts:
            if isinstance(p, fo.Eq):
                for lhs, rhs in ((p.a, p.b), (p.b, p.a)):
                    if lhs == var and not fo.mentions(rhs, lambda z: z == var):
                        return self.term(rhs)
        return None

    def _quant(self, f, universal: bool):
        v = f.var
        stop = not universal
        if v.sort == "Mtup":
            body, depth = self._tuple_body(f)
            L = self.tm.L
            start = self._fixed_length(f, depth) if universal else None
            return self._tuple_loop(v.name, body, stop, lambda env: L, depth, start)
        if v.sort == "M" and not universal:
            fast = self._same_pattern(f)
            if fast is not None:
                return fast
        hyp = None
        if universal and isinstance(f.body, fo.Implies):
            hyp = f.body.a
        elif not universal and isinstance(f.body, fo.And):
            hyp = f.body
        body = self.compile(f.body)
        if v.sort == "M":
            elems = self.elements
            point = self._one_point(v, hyp) if hyp is not None else None
            if point is not None:
                return self._loop(v.name, lambda env: (point(env),), body, stop)
            return self._loop(v.name, lambda env: elems, body, stop)
        return self._loop(v.name, self._nat_range(v, hyp), body, stop)

    def _All(self, f):
        return self._quant(f, True)

    def _Ex(self, f):
        return self._quant(f, False)

    def _ExLt(self, f):
        fb = self.term(f.bound)
        body = self.compile(f.body)
        B = self.tm.B
        return self._loop(f.var.name, lambda env: range(min(fb(env), B + 1)), body, True)

    def _ExLenLt(self, f):
        fb = self.term(f.bound)
        body, depth = self._tuple_body(f)
        L = self.tm.L
        start = self._copied_tuple(f, depth)
        return self._tuple_loop(f.var.name, body, True, lambda env: min(fb(env) - 1, L), depth, start)

    def _fixed_length(self, f, depth: int):
        """``(forall p)(|p| = n and ... -> ...)`` only needs the tuples of length n."""
        p = f.var
        if not isinstance(f.body, fo.Implies):
            return None
        hyp = f.body.a
        for part in hyp.parts if isinstance(hyp, fo.And) else (hyp,):
            if isinstance(part, fo.Eq) and part.a == fo.Len(p) and not fo.mentions(part.b, lambda z: z == p):
                fn, L, full = self.term(part.b), self.tm.L, self.full

                def start(env, owner):
                    n = fn(env)
                    return SymTuple(owner, depth, frozenset((n,)), {}, full) if n <= L else None
                return start
        return None

    def _copied_tuple(self, f, depth: int):
        """One-point rule for ``|p| = n and (forall k < n) p(k) = q(o(k))`` with q an outer tuple.

        Such a p is unique, so the loop starts from it (entries aliased to q)
        instead of rediscovering it cell by cell.  None when the body has no
        such conjuncts.
        """
        p = f.var
        parts = f.body.parts if isinstance(f.body, fo.And) else (f.body,)
        length = copy = None
        for part in parts:
            if isinstance(part, fo.Eq) and part.a == fo.Len(p) and not fo.mentions(part.b, lambda z: z == p):
                length = part.b
            m = _pointwise_copy(part, p)
            if m is not None:
                copy = m
        if length is None or copy is None or copy[1] != length:
            return None
        k, _, q, offset = copy
        fn, fb, fq, fo_ = self.term(length), self.term(f.bound), self.term(q), self.term(offset)
        L, full = self.tm.L, self.full

        def start(env, owner):
            n = fn(env)
            if n >= fb(env) or n > L:
                return None
            src = fq(env)
            positions = []
            for i in range(n):
                env[k.name] = i
                j = fo_(env)
                del env[k.name]
                if not _has(src, j):
                    return None
                positions.append(j)
            if isinstance(src, tuple):
                return tuple(src[j] for j in positions)
            spec = {i: ("@", src, j) for i, j in enumerate(positions)}
            return SymTuple(owner, depth, frozenset((n,)), spec, full)
        return start


def _pointwise_copy(part, p):
    """``(k, n, q, o)`` when ``part`` reads ``not (exists k < n) not exists a (ind(p, k, a) and ind(q, o, a))``."""
    if not (isinstance(part, fo.Not) and isinstance(part.a, fo.ExLt) and isinstance(part.a.body, fo.Not)):
        return None
    k, n, inner = part.a.var, part.a.bound, part.a.body.a
    if not (isinstance(inner, fo.Ex) and isinstance(inner.body, fo.And) and len(inner.body.parts) == 2):
        return None
    a = inner.var
    x, y = inner.body.parts
    if not (isinstance(x, fo.Ind) and isinstance(y, fo.Ind) and x.m == a and y.m == a):
        return None
    if not (x.p == p and x.i == k and isinstance(y.p, fo.Var) and y.p != p):
        return None
    if any(fo.mentions(t, lambda z: z in (p, a)) for t in (y.i, n)):
        return None
    return k, n, y.p, y.i


def _closed(t, B: int) -> Optional[int]:
    """Value of a variable-free numeric term, or None when it is open or would saturate."""
    if isinstance(t, fo.Num):
        return t.value if t.value <= B else None
    if isinstance(t, (fo.Add, fo.Mul)):
        a, b = _closed(t.a, B), _closed(t.b, B)
        if a is None or b is None:
            return None
        v = a + b if isinstance(t, fo.Add) else a * b
        return v if v <= B else None
    return None


def _fold(f, tm: TruncModel):
    """Decide ground numeric atoms and simplify connectives around the resulting constants."""
    T, F = fo.TRUE, fo.FALSE
    if isinstance(f, (fo.Eq, fo.Lt, fo.Le)):
        a, b = _closed(f.a, tm.B), _closed(f.b, tm.B)
        if a is None or b is None:
            return f
        op = {fo.Eq: "=", fo.Lt: "<", fo.Le: "<="}[type(f)]
        return T if _OPS[op](a, b) else F
    if isinstance(f, fo.Not):
        a = _fold(f.a, tm)
        return F if a == T else T if a == F else fo.Not(a)
    if isinstance(f, (fo.And, fo.Or)):
        unit, zero = (T, F) if isinstance(f, fo.And) else (F, T)
        parts = []
        for p in f.parts:
            p = _fold(p, tm)
            if p == zero:
                return zero
            if p != unit:
                parts.append(p)
        if not parts:
            return unit
        return parts[0] if len(parts) == 1 else type(f)(tuple(parts))
    if isinstance(f, fo.Implies):
        a = _fold(f.a, tm)
        if a == F:
            return T
        b = _fold(f.b, tm)
        if a == T or b == T:
            return b
        return fo.Not(a) if b == F else fo.Implies(a, b)
    if isinstance(f, (fo.All, fo.Ex, fo.ExLt, fo.ExLenLt)):
        body = _fold(f.body, tm)
        nonempty = f.var.sort != "M" or tm.n > 0
        if isinstance(f, fo.All) and (body == T or (body == F and nonempty)):
            return body
        if isinstance(f, fo.Ex) and (body == F or (body == T and nonempty)):
            return body
        if isinstance(f, (fo.ExLt, fo.ExLenLt)):
            if body == F:
                return F
            return type(f)(f.var, f.bound, body)
        return type(f)(f.var, body)
    return f


class Program:
    """A formula compiled against one truncation; ``tm.g`` may change between runs."""

    def __init__(self, tm: TruncModel, phi):
        self._c = _Compiler(tm)
        self._run = self._c.compile(_fold(phi, tm))

    def rebind(self, tm: TruncModel):
        self._c.rebind(tm)

    def __call__(self, env: Optional[Mapping] = None) -> FOResult:
        c = self._c
        c.saturated, c.cells = False, 0
        value = self._run(dict(env or {}))
        return FOResult(bool(value), c.saturated, c.cells)


_PROGRAMS: OrderedDict = OrderedDict()


def compiled(tm: TruncModel, phi) -> Program:
    """A cached Program for phi bound to tm; valid until the next call with the same (B, L, n)."""
    # compiled code depends on the model only through (B, L, n); the rest is rebound
    key = (id(phi), tm.B, tm.L, tm.n, tm.base.vocab)
    hit = _PROGRAMS.get(key)
    if hit is None or hit[0] is not phi:
        hit = (phi, Program(tm, phi))
        _PROGRAMS[key] = hit
        if len(_PROGRAMS) > 64:
            _PROGRAMS.popitem(last=False)
    else:
        _PROGRAMS.move_to_end(key)
        hit[1].rebind(tm)
    return hit[1]


def clear_caches():
    """Drop compiled programs and emitted harness sentences."""
    _PROGRAMS.clear()
    _sentences.cache_clear()
    _instance.cache_clear()


def eval_fo_report(tm: TruncModel, phi, env: Optional[Mapping] = None) -> FOResult:
    return compiled(tm, phi)(env)


def eval_fo(tm: TruncModel, phi, env: Optional[Mapping] = None) -> bool:
    """Truth of a sentence (or of a formula under ``env``) in the truncation."""
    return eval_fo_report(tm, phi, env).value


def check_axioms(tm: TruncModel) -> list:
    """``[(name, holds, flag)]`` for the tuple-theory axioms; flag marks boundary/saturation effects."""
    out = []
    for name, ax in arith.emit_Ttup_axioms():
        r = eval_fo_report(tm, ax)
        flag = None
        if not r.value:
            flag = "boundary" if name in arith.BOUNDARY_AXIOMS else ("saturation" if r.saturated else "violated")
        out.append((name, r.value, flag))
    return out


def check_pi1_monotone(phi, tm_small: TruncModel, tm_large: TruncModel) -> bool:
    """Truth in the larger truncation implies truth in the smaller one."""
    if tm_small.base != tm_large.base or tm_small.B > tm_large.B or tm_small.L > tm_large.L:
        raise ValueError("truncations are not nested")
    if tm_small.R != frozenset(r for r in tm_large.R if r <= tm_small.B):
        raise ValueError("oracle sets are not nested")
    return (not eval_fo(tm_large, phi)) or eval_fo(tm_small, phi)


# -- the harness ----------------------------------------------------------------------

@dataclass
class Cell:
    label: str
    passed: bool
    saturated: bool = False
    witness: object = None

    def to_sexpr(self):
        out = ["cell", self.label, "pass" if self.passed else "fail"]
        if self.saturated:
            out.append(["flag", "saturation"])
        if self.witness is not None:
            out.append(self.witness)
        return out


@dataclass
class BiconditionalReport:
    truth: bool
    bounds: Bounds
    instantiated: list
    cells: list
    stable: Optional[bool]
    g_mode: str = ""

    @property
    def direction(self) -> int:
        return 1 if self.truth else 2

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells) and self.stable is not False

    def to_sexpr(self):
        out = ["verify", ["truth", self.truth], ["direction", self.direction], self.bounds.to_sexpr()]
        if self.instantiated:
            out.append(["instantiated"] + [[name, list(params), bound] for name, params, bound in self.instantiated])
        if self.g_mode:
            out.append(["g-sample", self.g_mode])
        out.append(["cells"] + [c.to_sexpr() for c in self.cells])
        out.append(["stability", "skipped" if self.stable is None else ("pass" if self.stable else "fail")])
        out.append(["result", "pass" if self.passed else "fail"])
        return out


@lru_cache(maxsize=128)
def _sentences(finite, vocab, s: int):
    enc = arith.encode(finite, vocab)
    return arith.emit_chi(finite, enc), arith.emit_theta(finite, enc, s)


@lru_cache(maxsize=512)
def _instance(finite, vocab, sigma, s: int):
    return arith.theta_instance(arith.encode(finite, vocab), sigma, s)


def _prepare(code, m: FinStructure):
    record: list = []
    finite = instantiate(code, m, record) if has_family(code) else code
    if not is_sentence(finite):
        raise Refusal("the harness needs a sentence")
    if not is_wedge(finite):
        raise Refusal("the harness needs a wedge code")
    enc = arith.encode(finite, m.vocab)
    return finite, enc, record


def g_sample(code, m: FinStructure, seed: int = 0, bits: int = G_EXHAUSTIVE_BITS, samples: int = G_SAMPLES):
    """``(mode, iterator of SkolemTables)``: every table when small enough, else a seeded sample."""
    domain = skolem_domain(code, m)
    n = m.size
    choice_bits = len(domain) * math.log2(n) if n > 1 else 0.0
    if choice_bits <= bits:
        def every():
            for values in itertools.product(range(n), repeat=len(domain)):
                yield SkolemTable(dict(zip(domain, values)))
        return f"exhaustive {n ** len(domain)}", every()

    def sampled():
        yield least_witness_skolem(code, m)
        rng = random.Random(seed)
        for _ in range(samples):
            yield SkolemTable({k: rng.randrange(n) for k in domain})
    return f"sampled {samples + 1}", sampled()


def witness_tuple(witness, t: int) -> tuple:
    """``rho``: the valuations along the refutation path as width-t blocks (unset entries 0)."""
    out = []
    for env in witness.valuations:
        out.extend(env.get(x, 0) for x in range(t))
    return tuple(out)


def verify_biconditional(code, m: FinStructure, seed: int = 0, max_tuples: Optional[int] = DEFAULT_MAX_TUPLES,
                         stability: bool = True, bits: int = G_EXHAUSTIVE_BITS, samples: int = G_SAMPLES,
                         full_theta: bool = False) -> BiconditionalReport:
    """Check the truth of a wedge sentence against chi and theta in the derived truncation.

    True sentences: the extracted Skolem function must satisfy both sentences.
    False sentences: for every sampled g the refutation path must give a
    concrete ``(node, t, rho)`` at which theta's body fails.
    """
    finite, enc, record = _prepare(code, m)
    bounds = derive_bounds(finite, m, enc)
    if max_tuples is not None and tuple_count(m.size, bounds.L) > max_tuples:
        raise CapExceeded(f"tuple sort would have {tuple_count(m.size, bounds.L)} elements, cap is {max_tuples}")
    chi, theta = _sentences(finite, m.vocab, bounds.s)
    big = bounds.scaled(2)
    cells = []
    stable: Optional[bool] = None
    truth = evaluate(finite, m)
    mode = ""
    if truth:
        g = SkolemTerm(enc, extract_skolem(finite, m)[1])
        tm = build_trunc(m, bounds, g, max_tuples=None)
        verdicts = []
        for label, phi in (("chi", chi), ("theta", theta)):
            r = eval_fo_report(tm, phi)
            cells.append(Cell(label, r.value, r.saturated))
            verdicts.append(r.value)
        if stability:
            tm2 = build_trunc(m, big, g, max_tuples=None)
            stable = [eval_fo(tm2, chi), eval_fo(tm2, theta)] == verdicts
    else:
        mode, tables = g_sample(finite, m, seed, bits, samples)
        stable = True if stability else None
        tm = build_trunc(m, bounds, None, max_tuples=None)
        tm2 = build_trunc(m, big, None, max_tuples=None)
        programs: dict = {}
        full = compiled(tm, theta) if full_theta else None
        for k, table in enumerate(tables):
            g = SkolemTerm(enc, table)
            tm.g = tm2.g = g
            w = refutation_path(finite, m, table, enc.psi)
            rho = witness_tuple(w, bounds.t)
            sigma = w.path[-1]
            if sigma not in programs:
                inst = _instance(finite, m.vocab, sigma, bounds.s)
                programs[sigma] = (compiled(tm, inst), compiled(tm2, inst) if stability else None)
            small, large = programs[sigma]
            env = {"t": bounds.t, "rho": rho}
            r = small(env)
            ok = r.value
            if full is not None:
                ok = ok and not full().value
            dump = ["at", ["node", arith.tuple_code(sigma)], ["path"] + list(sigma), ["t", bounds.t],
                    ["rho"] + list(rho)]
            cells.append(Cell(f"g{k}", ok, r.saturated, dump))
            if large is not None:
                stable = stable and large(env).value
    return BiconditionalReport(truth, bounds, record, cells, stable, mode)


def nested_pair(m: FinStructure, bounds: Bounds, g: Callable, grow: int = 2):
    """A truncation and an enlargement of it with the same g."""
    small = build_trunc(m, bounds, g, max_tuples=None)
    large = build_trunc(m, bounds.scaled(grow), g, max_tuples=None)
    return small, large

