"""Formula codes: well-founded labeled trees over a relational vocabulary.

A code is a tree of immutable nodes.  Every node carries its free-variable set
(the ``v`` function of the tree).  Constructors compute it from the children,
but an explicit ``fv`` may be recorded instead so that :func:`validate` has
something to catch.  Paths into a tree are tuples of child indices.

Infinite conjunctions and disjunctions are ``Wedge``/``Vee`` nodes that carry a
:class:`GeneratedFamily` instead of an explicit child tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

from . import sexpr
from .sexpr import fail
from .structures import EQUALITY, FinStructure, Vocabulary


class FormulaError(ValueError):
    pass


class UnsupportedNegation(FormulaError):
    pass


@dataclass(frozen=True)
class Literal:
    negated: bool
    symbol: str
    args: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))

    def flip(self) -> "Literal":
        return Literal(not self.negated, self.symbol, self.args)

    def __str__(self):
        atom = f"{self.symbol}({','.join(f'x{a}' for a in self.args)})"
        if self.symbol == EQUALITY and len(self.args) == 2:
            atom = f"x{self.args[0]}=x{self.args[1]}"
        return ("¬" if self.negated else "") + atom


def lit(symbol: str, *args: int, neg: bool = False) -> Literal:
    return Literal(neg, symbol, args)


def nlit(symbol: str, *args: int) -> Literal:
    return Literal(True, symbol, args)


def _fv(x) -> frozenset:
    return frozenset(x)


@dataclass(frozen=True)
class Leaf:
    literals: tuple[Literal, ...]
    fv: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))
        if self.fv is None:
            object.__setattr__(self, "fv", frozenset(a for l in self.literals for a in l.args))
        else:
            object.__setattr__(self, "fv", _fv(self.fv))

    @property
    def freevars(self) -> frozenset:
        return self.fv


@dataclass(frozen=True)
class Exists:
    var: int
    child: "Node"
    fv: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "fv", self.child.freevars - {self.var} if self.fv is None else _fv(self.fv))

    @property
    def freevars(self) -> frozenset:
        return self.fv


@dataclass(frozen=True)
class Forall:
    var: int
    child: "Node"
    fv: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "fv", self.child.freevars - {self.var} if self.fv is None else _fv(self.fv))

    @property
    def freevars(self) -> frozenset:
        return self.fv


class _Junction:
    children: tuple
    family: Optional["GeneratedFamily"]
    fv: frozenset

    def _init(self):
        object.__setattr__(self, "children", tuple(self.children))
        if self.family is not None and self.children:
            raise FormulaError("a generated node has no explicit children")
        if self.fv is None:
            if self.family is not None:
                fv = self.family.freevars
            else:
                fv = frozenset().union(*(c.freevars for c in self.children))
            object.__setattr__(self, "fv", fv)
        else:
            object.__setattr__(self, "fv", _fv(self.fv))

    @property
    def freevars(self) -> frozenset:
        return self.fv

    def child(self, i: int) -> "Node":
        if self.family is not None:
            return self.family.child(i)
        return self.children[i]

    @property
    def is_generated(self) -> bool:
        return self.family is not None


@dataclass(frozen=True)
class Wedge(_Junction):
    children: tuple = ()
    family: Optional["GeneratedFamily"] = None
    fv: Optional[frozenset] = None

    def __post_init__(self):
        self._init()


@dataclass(frozen=True)
class Vee(_Junction):
    children: tuple = ()
    family: Optional["GeneratedFamily"] = None
    fv: Optional[frozenset] = None

    def __post_init__(self):
        self._init()


Node = Union[Leaf, Exists, Forall, Wedge, Vee]
Path = tuple


@dataclass(frozen=True, eq=False)
class GeneratedFamily:
    """The children of an infinite ``Wedge`` or ``Vee``, produced on demand.

    ``bound(M)`` is the sufficiency bound: evaluating children ``0..bound(M)``
    decides the whole junction in ``M``.  ``dual_bound`` is the bound to use
    for the negated family; ``None`` means the family cannot be negated.
    """

    name: str
    params: tuple
    generator: Callable[[int], Node]
    bound: Optional[Callable[[FinStructure], int]]
    freevars: frozenset
    dual_bound: Optional[Callable[[FinStructure], int]] = None
    symbols: tuple = ()
    wedge_only: bool = True
    kind: str = "wedge"
    _cache: dict = field(default_factory=dict, repr=False)

    def child(self, i: int) -> Node:
        if i < 0:
            raise IndexError(i)
        node = self._cache.get(i)
        if node is None:
            node = self.generator(i)
            self._cache[i] = node
        return node

    def __eq__(self, other):
        return isinstance(other, GeneratedFamily) and (self.name, self.params) == (other.name, other.params)

    def __hash__(self):
        return hash((self.name, self.params))

    def __repr__(self):
        return f"GeneratedFamily({self.name!r}, {self.params!r})"


# Families are looked up by name when reading formula files.  Keys of the
# registry are base names; a "neg:" prefix denotes the formal negation.
_FAMILIES: dict[str, Callable[..., GeneratedFamily]] = {}
NEG_PREFIX = "neg:"


def register_family(name: str, factory: Callable[..., GeneratedFamily]) -> None:
    _FAMILIES[name] = factory


def make_family(name: str, params: Sequence = ()) -> GeneratedFamily:
    from . import builtins  # noqa: F401  registers the builtin families

    params = tuple(params)
    if name.startswith(NEG_PREFIX):
        return negate_family(make_family(name[len(NEG_PREFIX):], params))
    if name not in _FAMILIES:
        raise FormulaError(f"unknown family {name!r}")
    return _FAMILIES[name](*params)


def negate_family(fam: GeneratedFamily) -> GeneratedFamily:
    if fam.dual_bound is None:
        raise UnsupportedNegation(f"family {fam.name} has no dual bound")
    if fam.name.startswith(NEG_PREFIX):
        return make_family(fam.name[len(NEG_PREFIX):], fam.params)
    neg = GeneratedFamily(
        name=NEG_PREFIX + fam.name,
        params=fam.params,
        generator=lambda i, fam=fam: fneg(fam.child(i)),
        bound=fam.dual_bound,
        freevars=fam.freevars,
        dual_bound=fam.bound,
        symbols=fam.symbols,
        kind="vee" if fam.kind == "wedge" else "wedge",
    )
    # template families are uniform, so a few children decide the shape
    object.__setattr__(neg, "wedge_only", all(is_wedge(neg.child(i)) for i in range(FAMILY_SAMPLE)))
    return neg


# -- tree access ----------------------------------------------------------------

def is_junction(node) -> bool:
    return isinstance(node, (Wedge, Vee))


def children(node: Node, m: Optional[FinStructure] = None) -> tuple:
    """Explicit children; generated families are cut at ``bound(m)``."""
    if isinstance(node, Leaf):
        return ()
    if isinstance(node, (Exists, Forall)):
        return (node.child,)
    if node.family is None:
        return node.children
    if m is None or node.family.bound is None:
        raise FormulaError(f"family {node.family.name} needs a structure and a bound to be cut")
    return tuple(node.family.child(i) for i in range(node.family.bound(m) + 1))


def subtree(code: Node, path: Sequence[int]) -> Node:
    node = code
    for i in path:
        if isinstance(node, Leaf):
            raise FormulaError(f"path {tuple(path)} runs past a leaf")
        if isinstance(node, (Exists, Forall)):
            if i != 0:
                raise FormulaError(f"quantifier nodes only have child 0, path {tuple(path)}")
            node = node.child
        else:
            node = node.child(i)
    return node


def has_family(code: Node) -> bool:
    stack = [code]
    while stack:
        node = stack.pop()
        if is_junction(node):
            if node.family is not None:
                return True
            stack.extend(node.children)
        elif isinstance(node, (Exists, Forall)):
            stack.append(node.child)
    return False


def iter_nodes(code: Node) -> Iterator[tuple[Path, Node]]:
    """Preorder walk of a finite code (children in index order)."""
    stack: list[tuple[Path, Node]] = [((), code)]
    while stack:
        path, node = stack.pop()
        yield path, node
        if is_junction(node) and node.family is not None:
            raise FormulaError("cannot walk a generated family; instantiate it first")
        kids = children(node)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))


def node_count(code: Node) -> int:
    return sum(1 for _ in iter_nodes(code))


def depth(code: Node) -> int:
    """Length of the longest path (a lone leaf has depth 0)."""
    if isinstance(code, Leaf):
        return 0
    kids = children(code)
    if not kids:
        return 0
    return 1 + max(depth(c) for c in kids)


def variables(code: Node) -> frozenset:
    """Every variable index that occurs, bound or free."""
    out = set()
    for _, node in iter_nodes(code):
        if isinstance(node, Leaf):
            for l in node.literals:
                out.update(l.args)
        elif isinstance(node, (Exists, Forall)):
            out.add(node.var)
    return frozenset(out)


def max_var(code: Node) -> int:
    vs = variables(code)
    return max(vs) if vs else -1


def leaves(code: Node) -> list[tuple[Path, Leaf]]:
    return [(p, n) for p, n in iter_nodes(code) if isinstance(n, Leaf)]


def code_symbols(code: Node) -> dict[str, int]:
    """Relation symbols used in a code (with arities), equality excluded."""
    out: dict[str, int] = {}

    def note(name, arity):
        if name == EQUALITY:
            return
        if out.setdefault(name, arity) != arity:
            raise FormulaError(f"symbol {name} used with arities {out[name]} and {arity}")

    stack = [code]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            for l in node.literals:
                note(l.symbol, len(l.args))
        elif isinstance(node, (Exists, Forall)):
            stack.append(node.child)
        elif node.family is not None:
            for name, arity in node.family.symbols:
                note(name, arity)
        else:
            stack.extend(node.children)
    return out


def code_vocab(code: Node) -> Vocabulary:
    return Vocabulary(sorted(code_symbols(code).items()))


def instantiate(code: Node, m: FinStructure, record: Optional[list] = None) -> Node:
    """Replace every generated family by its children ``0..bound(m)``.

    ``record`` collects ``(family name, params, bound)`` per instantiated node.
    """
    if isinstance(code, Leaf):
        return code
    if isinstance(code, Exists):
        return Exists(code.var, instantiate(code.child, m, record))
    if isinstance(code, Forall):
        return Forall(code.var, instantiate(code.child, m, record))
    kids = children(code, m)
    if code.family is not None and record is not None:
        record.append((code.family.name, code.family.params, len(kids) - 1))
    new = tuple(instantiate(c, m, record) for c in kids)
    return type(code)(new)


# -- validation -----------------------------------------------------------------

@dataclass
class Violation:
    path: Path
    clause: str
    message: str


@dataclass
class ValidationReport:
    violations: list
    is_sentence: bool
    root_freevars: frozenset

    @property
    def valid(self) -> bool:
        return not self.violations


FAMILY_SAMPLE = 4


def validate(code: Node, vocab: Optional[Vocabulary] = None) -> ValidationReport:
    """Check the labeled-tree clauses at every node.

    Clause tags: ``a`` leaf, ``b`` existential, ``c`` universal, ``d`` wedge,
    ``e`` vee, ``rebind`` for a variable bound twice along one path, ``node``
    for malformed nodes.  Generated families are checked on their first few
    children only.
    """
    out: list[Violation] = []

    def visit(node, path, bound_above):
        if isinstance(node, Leaf):
            if not node.literals:
                out.append(Violation(path, "a", "empty literal disjunct"))
            want = set()
            for l in node.literals:
                if not isinstance(l, Literal):
                    out.append(Violation(path, "a", f"not a literal: {l!r}"))
                    continue
                want.update(l.args)
                if any(a < 0 for a in l.args):
                    out.append(Violation(path, "a", f"negative variable index in {l}"))
                if vocab is not None:
                    if l.symbol not in vocab:
                        out.append(Violation(path, "a", f"unknown symbol {l.symbol}"))
                    elif vocab.arity(l.symbol) != len(l.args):
                        out.append(Violation(path, "a", f"{l.symbol} has arity {vocab.arity(l.symbol)}, used with {len(l.args)}"))
                elif l.symbol == EQUALITY and len(l.args) != 2:
                    out.append(Violation(path, "a", "equality takes two arguments"))
            if set(node.freevars) != want:
                out.append(Violation(path, "a", f"recorded freevars {sorted(node.freevars)} but disjunct has {sorted(want)}"))
        elif isinstance(node, (Exists, Forall)):
            tag = "b" if isinstance(node, Exists) else "c"
            if not isinstance(node.var, int) or node.var < 0:
                out.append(Violation(path, tag, f"bad variable {node.var!r}"))
            if node.var in bound_above:
                out.append(Violation(path, "rebind", f"x{node.var} is already bound on this path"))
            if not _is_node(node.child):
                out.append(Violation(path, "node", "quantifier child is not a node"))
                return
            expect = node.child.freevars - {node.var}
            if node.freevars != expect:
                out.append(Violation(path, tag, f"recorded freevars {sorted(node.freevars)}, expected {sorted(expect)}"))
            visit(node.child, path + (0,), bound_above | {node.var})
        elif is_junction(node):
            tag = "d" if isinstance(node, Wedge) else "e"
            if node.family is not None:
                union = set()
                for i in range(FAMILY_SAMPLE):
                    c = node.family.child(i)
                    union |= c.freevars
                    visit(c, path + (i,), bound_above)
                if not union <= node.freevars:
                    out.append(Violation(path, tag, f"family children use {sorted(union)} beyond recorded {sorted(node.freevars)}"))
                if node.family.bound is None:
                    out.append(Violation(path, tag, f"family {node.family.name} has no bound"))
            else:
                for c in node.children:
                    if not _is_node(c):
                        out.append(Violation(path, "node", f"child is not a node: {c!r}"))
                        return
                expect = frozenset().union(*(c.freevars for c in node.children))
                if node.freevars != expect:
                    out.append(Violation(path, tag, f"recorded freevars {sorted(node.freevars)}, expected {sorted(expect)}"))
                for i, c in enumerate(node.children):
                    visit(c, path + (i,), bound_above)
        else:
            out.append(Violation(path, "node", f"unknown node {node!r}"))

    visit(code, (), frozenset())
    fv = code.freevars if _is_node(code) else frozenset()
    return ValidationReport(out, not fv, fv)


def _is_node(x) -> bool:
    return isinstance(x, (Leaf, Exists, Forall, Wedge, Vee))


def is_sentence(code: Node) -> bool:
    return not code.freevars


# -- transformations --------------------------------------------------------------

def fneg(code: Node) -> Node:
    """Formal negation, staying inside the labeled-tree grammar."""
    if isinstance(code, Leaf):
        if len(code.literals) == 1:
            return Leaf((code.literals[0].flip(),))
        return Wedge(tuple(Leaf((l.flip(),)) for l in code.literals))
    if isinstance(code, Exists):
        return Forall(code.var, fneg(code.child))
    if isinstance(code, Forall):
        return Exists(code.var, fneg(code.child))
    dual = Vee if isinstance(code, Wedge) else Wedge
    if code.family is not None:
        return dual(family=negate_family(code.family))
    return dual(tuple(fneg(c) for c in code.children))


def is_wedge(code: Node) -> bool:
    """True iff no node is a disjunction node."""
    stack = [code]
    while stack:
        node = stack.pop()
        if isinstance(node, Vee):
            return False
        if isinstance(node, Wedge):
            if node.family is not None:
                if not node.family.wedge_only:
                    return False
            else:
                stack.extend(node.children)
        elif isinstance(node, (Exists, Forall)):
            stack.append(node.child)
    return True


def rename(code: Node, old: int, new: int) -> Node:
    """Substitute variable ``new`` for every occurrence of ``old`` (finite codes)."""
    if isinstance(code, Leaf):
        return Leaf(tuple(Literal(l.negated, l.symbol, tuple(new if a == old else a for a in l.args))
                          for l in code.literals))
    if isinstance(code, (Exists, Forall)):
        return type(code)(new if code.var == old else code.var, rename(code.child, old, new))
    if code.family is not None:
        raise FormulaError("cannot rename inside a generated family")
    return type(code)(tuple(rename(c, old, new) for c in code.children))


def or_compose(c1: Node, c2: Node) -> Node:
    """A wedge code equivalent to the disjunction of two wedge codes.

    Reduces the first argument to a leaf, then the second: quantifiers move out
    under a fresh variable, conjunctions distribute, and two leaves merge.
    """
    for c in (c1, c2):
        if has_family(c):
            raise FormulaError("or_compose needs finite codes; instantiate families first")
        if not is_wedge(c):
            raise FormulaError("or_compose needs wedge codes (no disjunction nodes)")
    return _or(c1, c2, 0)


def _fresh(a: Node, b: Node, floor: int) -> int:
    # floor keeps indices already moved outward from being reused when a
    # quantifier binds a variable its body never mentions
    return max(floor, 1 + max(max_var(a), max_var(b)))


def _or(a: Node, b: Node, floor: int) -> Node:
    if isinstance(a, (Exists, Forall)):
        v = _fresh(a, b, floor)
        return type(a)(v, _or(rename(a.child, a.var, v), b, v + 1))
    if isinstance(a, Wedge):
        return Wedge(tuple(_or(c, b, floor) for c in a.children))
    # a is a leaf
    if isinstance(b, (Exists, Forall)):
        v = _fresh(a, b, floor)
        return type(b)(v, _or(a, rename(b.child, b.var, v), v + 1))
    if isinstance(b, Wedge):
        return Wedge(tuple(_or(a, c, floor) for c in b.children))
    return Leaf(a.literals + b.literals)


# -- formula files ----------------------------------------------------------------

def _parse_var(tok) -> int:
    if isinstance(tok, str) and len(tok) > 1 and tok[0] == "x" and tok[1:].isdigit():
        return int(tok[1:])
    raise fail(f"expected a variable xK, got {sexpr.dumps(tok) if tok is not None else 'nothing'}", tok)


def _param(tok):
    if isinstance(tok, list):
        raise fail("family parameters must be atoms", tok)
    return tok if isinstance(tok, int) else str(tok)


def parse_formula_form(form) -> Node:
    if not isinstance(form, list) or not form or not isinstance(form[0], str):
        raise fail("expected a formula form", form)
    head = form[0]
    if head == "leaf":
        if len(form) < 2:
            raise fail("a leaf needs at least one literal", form)
        lits = []
        for item in form[1:]:
            if not (isinstance(item, list) and item and item[0] == "lit"):
                raise fail("expected (lit [not] NAME VAR*)", item)
            rest = item[1:]
            negated = bool(rest) and rest[0] == "not" and len(rest) >= 2
            if negated:
                rest = rest[1:]
            if not rest or not isinstance(rest[0], str):
                raise fail("literal needs a relation name", item)
            lits.append(Literal(negated, str(rest[0]), tuple(_parse_var(v) for v in rest[1:])))
        return Leaf(tuple(lits))
    if head in ("exists", "forall"):
        if len(form) != 3:
            raise fail(f"expected ({head} VAR BODY)", form)
        cls = Exists if head == "exists" else Forall
        return cls(_parse_var(form[1]), parse_formula_form(form[2]))
    if head in ("wedge", "vee"):
        cls = Wedge if head == "wedge" else Vee
        return cls(tuple(parse_formula_form(c) for c in form[1:]))
    if head == "wedge-family":
        from .builtins import builtin

        if len(form) < 2 or not isinstance(form[1], str):
            raise fail("expected (wedge-family NAME PARAMS)", form)
        try:
            return builtin(str(form[1]), *[_param(p) for p in form[2:]])
        except (FormulaError, TypeError) as e:
            raise fail(str(e), form) from None
    if head == "family":
        if len(form) < 2 or not isinstance(form[1], str):
            raise fail("expected (family NAME PARAMS)", form)
        try:
            fam = make_family(str(form[1]), [_param(p) for p in form[2:]])
        except (FormulaError, TypeError) as e:
            raise fail(str(e), form) from None
        return (Wedge if fam.kind == "wedge" else Vee)(family=fam)
    raise fail(f"unknown formula head {head!r}", form)


def parse_formula(text: str) -> Node:
    return parse_formula_form(sexpr.loads(text))


def formula_to_sexpr(code: Node):
    if isinstance(code, Leaf):
        out = ["leaf"]
        for l in code.literals:
            out.append(["lit"] + (["not"] if l.negated else []) + [l.symbol] + [f"x{a}" for a in l.args])
        return out
    if isinstance(code, Exists):
        return ["exists", f"x{code.var}", formula_to_sexpr(code.child)]
    if isinstance(code, Forall):
        return ["forall", f"x{code.var}", formula_to_sexpr(code.child)]
    if code.family is not None:
        return ["family", code.family.name] + list(code.family.params)
    head = "wedge" if isinstance(code, Wedge) else "vee"
    return [head] + [formula_to_sexpr(c) for c in code.children]


def serialize_formula(code: Node, pretty: bool = True) -> str:
    form = formula_to_sexpr(code)
    return sexpr.dumps_pretty(form) if pretty else sexpr.dumps(form)


def show(code: Node) -> str:
    """Compact human-readable rendering."""
    if isinstance(code, Leaf):
        return " ∨ ".join(str(l) for l in code.literals) if code.literals else "⊥"
    if isinstance(code, Exists):
        return f"∃x{code.var} {show(code.child)}"
    if isinstance(code, Forall):
        return f"∀x{code.var} {show(code.child)}"
    sym = "⩕" if isinstance(code, Wedge) else "⩔"
    if code.family is not None:
        return f"{sym}<{code.family.name}{list(code.family.params) if code.family.params else ''}>"
    return sym + "[" + ", ".join(show(c) for c in code.children) + "]"

