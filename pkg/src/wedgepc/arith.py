"""Emit the tuple-theory axioms and the sentences chi / theta_s for a finite code.

The emitted sentences talk about a structure M, an arithmetic sort N and the
finite tuples from M, plus a Skolem function ``g : N x Mtup -> M``.  For a
finite formula code every computable ingredient (membership in the tree, the
labels, free-variable sets and the literal index functions) is a finite table,
so it is written out as a case split over node codes instead of being
arithmetized.

Conventions fixed here:

* nodes are numbered by a preorder walk, root = 0 (``NodeInfo.code``); the
  pairing-based ``tuple_code`` of each path is recorded alongside;
* a valuation block of width t lists x_0..x_{t-1}; unassigned variables hold
  element 0;
* signed relation ``h = 2r`` is relation r, ``h = 2r + 1`` its negation, over
  the vocabulary order with equality last (see :mod:`wedgepc.psi`);
* the variable-bound conjunct uses ``t >= 1 + max v(node)`` along the whole
  path, the leaf included, so block entries for every live variable exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import fo
from .fo import (
    FALSE,
    TRUE,
    Add,
    All,
    App,
    Eq,
    Ex,
    ExLenLt,
    ExLt,
    Implies,
    Ind,
    InR,
    Le,
    Len,
    Lt,
    Mul,
    Not,
    Or,
    Rel,
    Var,
    conj,
    iff,
    numeral,
)
from .formulas import Exists, Forall, FormulaError, Leaf, Vee, Wedge, code_vocab, has_family
from .psi import PsiEnumeration
from .structures import EQUALITY, Vocabulary


class NotACode(ValueError):
    pass


# -- tuple coding -------------------------------------------------------------

def pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def unpair(c: int) -> tuple[int, int]:
    # largest w with w(w+1)/2 <= c
    w = (int((8 * c + 1) ** 0.5) - 1) // 2
    while (w + 1) * (w + 2) // 2 <= c:
        w += 1
    while w * (w + 1) // 2 > c:
        w -= 1
    b = c - w * (w + 1) // 2
    return w - b, b


def tuple_code(seq: Sequence[int]) -> int:
    """Length paired with the left fold of the entries; the empty tuple is 0."""
    acc = 0
    for a in seq:
        if a < 0:
            raise ValueError("entries must be non-negative")
        acc = pair(acc, a)
    return pair(len(seq), acc)


def tuple_decode(c: int) -> tuple[int, ...]:
    if c < 0:
        raise NotACode(c)
    n, acc = unpair(c)
    out = []
    for _ in range(n):
        acc, a = unpair(acc)
        out.append(a)
    if acc != 0:
        raise NotACode(c)
    return tuple(reversed(out))


# -- vocabularies ---------------------------------------------------------------

@dataclass(frozen=True)
class MSVocabulary:
    """Base symbols on M, arithmetic on N, length and ind on tuples; optionally R and g."""

    base: Vocabulary
    starred: bool = False

    @property
    def symbols(self) -> dict:
        out = {name: ("M",) * ar for name, ar in self.base.symbols}
        out.update({"0": ("N",), "1": ("N",), "+": ("N", "N", "N"), "*": ("N", "N", "N"), "<": ("N", "N")})
        out.update({"len": ("Mtup", "N"), "ind": ("Mtup", "N", "M")})
        if self.starred:
            out.update({"R": ("N",), "g": ("N", "Mtup", "M")})
        return out


def tau_tup(vocab: Vocabulary) -> MSVocabulary:
    return MSVocabulary(vocab, False)


def tau_star_tup(vocab: Vocabulary) -> MSVocabulary:
    return MSVocabulary(vocab, True)


# -- axioms -------------------------------------------------------------------

_x, _y, _z = Var("x", "N"), Var("y", "N"), Var("z", "N")
_0, _1 = fo.ZERO, fo.ONE


def _all(vs, body):
    for v in reversed(vs):
        body = All(v, body)
    return body


def emit_pa_minus() -> list:
    """The 17 ordered-semiring axioms, with the subtraction axiom's witness bounded."""
    x, y, z = _x, _y, _z
    return [
        _all([x, y, z], Eq(Add(Add(x, y), z), Add(x, Add(y, z)))),
        _all([x, y], Eq(Add(x, y), Add(y, x))),
        _all([x, y, z], Eq(Mul(Mul(x, y), z), Mul(x, Mul(y, z)))),
        _all([x, y], Eq(Mul(x, y), Mul(y, x))),
        _all([x, y, z], Eq(Mul(x, Add(y, z)), Add(Mul(x, y), Mul(x, z)))),
        _all([x], Eq(Add(x, _0), x)),
        _all([x], Eq(Mul(x, _0), _0)),
        _all([x], Eq(Mul(x, _1), x)),
        _all([x, y, z], Implies(conj(Lt(x, y), Lt(y, z)), Lt(x, z))),
        _all([x], Not(Lt(x, x))),
        _all([x, y], Or((Lt(x, y), Eq(x, y), Lt(y, x)))),
        _all([x, y, z], Implies(Lt(x, y), Lt(Add(x, z), Add(y, z)))),
        _all([x, y, z], Implies(conj(Lt(_0, z), Lt(x, y)), Lt(Mul(x, z), Mul(y, z)))),
        _all([x, y], Implies(Lt(x, y), Or((Eq(x, _0), ExLt(z, y, Eq(Add(x, z), y)))))),
        Lt(_0, _1),
        _all([x], Implies(Lt(_0, x), Le(_1, x))),
        _all([x], Or((Eq(_0, x), Lt(_0, x)))),
    ]


PA_MINUS_COUNT = 17


def emit_Ttup_axioms() -> list:
    """``[(name, sentence)]`` for item 1 (the arithmetic list) and items 2a-2g."""
    p, r = Var("p", "Mtup"), Var("r", "Mtup")
    i = Var("i", "N")
    m, m2 = Var("m", "M"), Var("m2", "M")
    same_entry = Ex(m, conj(Ind(p, i, m), Ind(r, i, m)))
    return [
        ("1", conj(*emit_pa_minus())),
        ("2a", _all([p, i, m], Implies(Ind(p, i, m), Lt(i, Len(p))))),
        ("2b", _all([p, i, m, m2], Implies(conj(Ind(p, i, m), Ind(p, i, m2)), Eq(m, m2)))),
        ("2c", _all([p, i], Implies(Lt(i, Len(p)), Ex(m, Ind(p, i, m))))),
        ("2d", _all([p, r], Implies(
            conj(Eq(Len(p), Len(r)), All(i, Implies(Lt(i, Len(p)), same_entry))), Eq(p, r)))),
        ("2e", Ex(p, Eq(Len(p), _0))),
        ("2f", _all([p, m], Ex(r, conj(
            Eq(Len(r), Add(Len(p), _1)),
            Ind(r, Len(p), m),
            _all([i, m2], Implies(Lt(i, Len(p)), iff(Ind(p, i, m2), Ind(r, i, m2)))))))),
        ("2g", All(p, Implies(Le(_1, Len(p)), Ex(r, conj(
            Eq(Add(Len(r), _1), Len(p)),
            _all([i, m], Implies(Lt(i, Len(r)), iff(Ind(p, i, m), Ind(r, i, m))))))))),
    ]


BOUNDARY_AXIOMS = ("2f", "2g")


# -- node tables ----------------------------------------------------------------

_KIND = {Wedge: 0, Vee: 1, Exists: 2, Forall: 3, Leaf: 4}


@dataclass(frozen=True)
class NodeInfo:
    code: int
    path: tuple
    path_code: int
    kind: str
    label_code: int
    var: Optional[int]
    freevars: tuple
    bound: int  # 1 + max free variable, 0 for none
    children: tuple
    psi_index: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass
class ArithEncoding:
    code: object
    vocab: Vocabulary
    psi: PsiEnumeration
    nodes: list
    by_path: dict
    oracle: frozenset = field(default_factory=frozenset)

    @property
    def node_table(self) -> list:
        return self.nodes

    def node(self, path) -> NodeInfo:
        return self.by_path[tuple(path)]

    def leaves(self):
        return [n for n in self.nodes if n.is_leaf]

    def relation_span(self) -> int:
        """1 + the largest relation index used by a leaf (the least usable s)."""
        out = 0
        for n in self.leaves():
            for l in self.psi.decode(n.psi_index):
                out = max(out, self.psi.relation_index(l.symbol) + 1)
        return max(out, 1)


def encode(code, vocab: Optional[Vocabulary] = None, oracle=()) -> ArithEncoding:
    if has_family(code):
        raise FormulaError("instantiate generated families before compiling")
    vocab = vocab if vocab is not None else code_vocab(code)
    psi = PsiEnumeration(vocab)
    nodes: list = []
    by_path: dict = {}
    stack = [((), code)]
    order = []
    while stack:
        path, node = stack.pop()
        order.append((path, node))
        if isinstance(node, (Wedge, Vee)):
            kids = node.children
        elif isinstance(node, (Exists, Forall)):
            kids = (node.child,)
        else:
            kids = ()
        for i in reversed(range(len(kids))):
            stack.append((path + (i,), kids[i]))
    index = {path: k for k, (path, _) in enumerate(order)}
    for k, (path, node) in enumerate(order):
        kind = type(node)
        fv = tuple(sorted(node.freevars))
        var = node.var if isinstance(node, (Exists, Forall)) else None
        psi_index = None
        if isinstance(node, Leaf):
            if not node.literals:
                raise FormulaError("empty leaf cannot be compiled")
            psi_index = psi.encode(node.literals)
            payload = psi_index
        else:
            payload = var if var is not None else 0
        nkids = len(node.children) if isinstance(node, (Wedge, Vee)) else (1 if var is not None else 0)
        info = NodeInfo(
            code=k,
            path=path,
            path_code=tuple_code(path),
            kind=kind.__name__.lower(),
            label_code=pair(_KIND[kind], payload),
            var=var,
            freevars=fv,
            bound=1 + max(fv) if fv else 0,
            children=tuple(index[path + (i,)] for i in range(nkids)),
            psi_index=psi_index,
        )
        nodes.append(info)
        by_path[path] = info
    return ArithEncoding(code, vocab, psi, nodes, by_path, frozenset(oracle))


# -- chi and theta --------------------------------------------------------------

T = Var("t", "N")
RHO = Var("rho", "Mtup")
K = Var("k", "N")
Q = Var("q", "N")
A = Var("a", "M")
PI = Var("pi", "Mtup")
U = Var("u", "Mtup")
V = Var("v", "Mtup")


def _same(p, i, r, j) -> fo.Formula:
    """Entry i of p exists and equals entry j of r."""
    return Ex(A, conj(Ind(p, i, A), Ind(r, j, A)))


def emit_chi(code, enc: Optional[ArithEncoding] = None):
    """g at a node depends only on the entries of that node's free variables."""
    enc = enc or encode(code)
    parts = []
    for n in enc.nodes:
        b = numeral(n.bound)
        agree = [_same(U, numeral(j), V, numeral(j)) for j in n.freevars]
        hyp = conj(Le(b, Len(U)), Le(b, Len(V)), *agree)
        parts.append(All(U, All(V, Implies(hyp, Eq(App(numeral(n.code), U), App(numeral(n.code), V))))))
    return conj(*parts)


def _block(i: int, offset) -> fo.Term:
    """``i*t + offset``"""
    base = Mul(numeral(i), T) if i else None
    if base is None:
        return offset
    return Add(base, offset)


def _every_k(body) -> fo.Formula:
    """``(forall k < t) body`` written as a bounded existential, since xi sits in an antecedent."""
    return Not(ExLt(K, T, Not(body)))


def xi(enc: ArithEncoding, n: NodeInfo) -> fo.Formula:
    d = len(n.path)
    # leaf-path flag: no children in the tree (empty conjunctions included)
    parts = [Eq(Len(RHO), Add(Mul(T, numeral(d)), T)), FALSE if n.children else TRUE]
    prefix = [enc.by_path[n.path[:i]] for i in range(d + 1)]
    parts += [Le(numeral(p.bound), T) for p in prefix]
    for i, p in enumerate(prefix[:-1]):
        nxt = lambda off: _block(i, Add(T, off))
        cur = lambda off: _block(i, off)
        if p.kind in ("wedge", "vee"):
            parts.append(_every_k(_same(RHO, nxt(K), RHO, cur(K))))
            continue
        j = numeral(p.var)
        parts.append(_every_k(Implies(Not(Eq(K, j)), _same(RHO, nxt(K), RHO, cur(K)))))
        if p.kind == "exists":
            block = conj(
                Eq(Len(PI), T),
                Not(ExLt(K, T, Not(_same(PI, K, RHO, cur(K))))),
                Ex(A, conj(Ind(RHO, nxt(j), A), Eq(App(numeral(p.code), PI), A))),
            )
            parts.append(Implies(Lt(j, T), ExLenLt(PI, Add(T, fo.ONE), block)))
    return conj(*parts)


def _signed_atom(enc: ArithEncoding, h: int, args: list) -> fo.Formula:
    name, neg = enc.psi.signed_relation(h)
    if name == EQUALITY:
        atom = Eq(args[0], args[1])
    else:
        atom = Rel(name, tuple(args))
    return Not(atom) if neg else atom


def zeta(enc: ArithEncoding, n: NodeInfo, s: int) -> fo.Formula:
    if not n.is_leaf:
        return TRUE
    d = len(n.path)
    k, ell, idx = enc.psi.indices(n.psi_index)
    hs = range(min(2 * s, enc.psi.signed_count))
    cases = []
    for m in range(1, k + 1):
        branch = []
        for h in hs:
            r = enc.psi.r(h)
            elems = [Var(f"a{q}", "M") for q in range(1, r + 1)]
            pos = [idx.get((m, q), 0) for q in range(1, r + 1)]
            body = conj(*[Ind(RHO, Add(Mul(T, numeral(d)), numeral(e)), x) for e, x in zip(pos, elems)],
                        _signed_atom(enc, h, elems))
            for x in reversed(elems):
                body = Ex(x, body)
            branch.append(Implies(Eq(numeral(h), numeral(ell[m])), body))
        cases.append(Implies(Eq(Q, numeral(m)), conj(*branch)))
    return ExLt(Q, numeral(k + 1), conj(Le(fo.ONE, Q), *cases))


def emit_theta(code, enc: Optional[ArithEncoding] = None, s: int = 1):
    if s < 1:
        raise ValueError("s must be at least 1")
    enc = enc or encode(code)
    parts = []
    for n in enc.nodes:
        body = All(RHO, Implies(xi(enc, n), zeta(enc, n, s)))
        parts.append(All(T, Implies(Le(numeral(s), T), body)))
    return conj(*parts)


def emit_theta_single(code, enc: Optional[ArithEncoding] = None):
    """chi together with theta_s for the least s covering the leaves' relations."""
    enc = enc or encode(code)
    return conj(emit_chi(code, enc), emit_theta(code, enc, enc.relation_span()))


def emit_oracle_axioms(enc: ArithEncoding, bound: int) -> list:
    return [InR(numeral(i)) if i in enc.oracle else Not(InR(numeral(i))) for i in range(bound + 1)]


def theta_instance(enc: ArithEncoding, path, s: int):
    """``xi and not zeta`` for one node, with t and rho left free."""
    n = enc.node(path)
    return conj(Le(numeral(s), T), xi(enc, n), Not(zeta(enc, n, s)))

