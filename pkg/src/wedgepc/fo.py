"""Multi-sorted finitary first-order sentences over the tuple/arithmetic language.

Sorts are ``M`` (the base structure), ``N`` (arithmetic) and ``Mtup`` (finite
tuples from M).  Terms: variables, the numerals ``0`` and ``1``, ``+`` and
``*`` on N, ``len`` from Mtup to N and the Skolem function ``app`` from
N x Mtup to M.  Atoms: base relations on M, equality at any sort, ``<`` and
``<=`` on N, ``ind(p, i, m)`` ("entry i of p is m") and ``in-R`` on N.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import sexpr

SORTS = ("M", "N", "Mtup")


# -- terms ------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class Num:
    value: int  # 0 or 1


@dataclass(frozen=True)
class Add:
    a: "Term"
    b: "Term"


@dataclass(frozen=True)
class Mul:
    a: "Term"
    b: "Term"


@dataclass(frozen=True)
class Len:
    p: "Term"


@dataclass(frozen=True)
class App:
    node: "Term"
    p: "Term"


Term = Union[Var, Num, Add, Mul, Len, App]

ZERO = Num(0)
ONE = Num(1)
TWO = Add(ONE, ONE)


def numeral(n: int) -> Term:
    """Binary numeral built from 0, 1, + and *."""
    if n < 0:
        raise ValueError("numerals are non-negative")
    if n <= 1:
        return Num(n)
    if n == 2:
        return TWO
    half = numeral(n // 2)
    t = Mul(TWO, half)
    return Add(t, ONE) if n % 2 else t


def numeral_value(t: Term) -> Optional[int]:
    """Exact value of a closed N term (no saturation), or None if not closed."""
    if isinstance(t, Num):
        return t.value
    if isinstance(t, (Add, Mul)):
        a, b = numeral_value(t.a), numeral_value(t.b)
        if a is None or b is None:
            return None
        return a + b if isinstance(t, Add) else a * b
    return None


# -- formulas ---------------------------------------------------------------------

@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Eq:
    a: Term
    b: Term


@dataclass(frozen=True)
class Lt:
    a: Term
    b: Term


@dataclass(frozen=True)
class Le:
    a: Term
    b: Term


@dataclass(frozen=True)
class Ind:
    p: Term
    i: Term
    m: Term


@dataclass(frozen=True)
class InR:
    t: Term


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Not:
    a: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Implies:
    a: "Formula"
    b: "Formula"


@dataclass(frozen=True)
class All:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Ex:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class ExLt:
    """``(exists x in N, x < bound) body``"""

    var: Var
    bound: Term
    body: "Formula"


@dataclass(frozen=True)
class ExLenLt:
    """``(exists p in Mtup, |p| < bound) body``"""

    var: Var
    bound: Term
    body: "Formula"


Formula = Union[Rel, Eq, Lt, Le, Ind, InR, Top, Bot, Not, And, Or, Implies, All, Ex, ExLt, ExLenLt]

TRUE = Top()
FALSE = Bot()


def conj(*parts) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else And(parts)


def disj(*parts) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else Or(parts)


def iff(a: Formula, b: Formula) -> Formula:
    return And((Implies(a, b), Implies(b, a)))


# -- printing ---------------------------------------------------------------------

def term_to_sexpr(t: Term):
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Add):
        return ["+", term_to_sexpr(t.a), term_to_sexpr(t.b)]
    if isinstance(t, Mul):
        return ["*", term_to_sexpr(t.a), term_to_sexpr(t.b)]
    if isinstance(t, Len):
        return ["len", term_to_sexpr(t.p)]
    if isinstance(t, App):
        return ["app", "g", term_to_sexpr(t.node), term_to_sexpr(t.p)]
    raise TypeError(f"not a term: {t!r}")


def to_sexpr(f: Formula):
    if isinstance(f, Rel):
        return ["rel", f.name] + [term_to_sexpr(a) for a in f.args]
    if isinstance(f, Eq):
        return ["=", term_to_sexpr(f.a), term_to_sexpr(f.b)]
    if isinstance(f, Lt):
        return ["<", term_to_sexpr(f.a), term_to_sexpr(f.b)]
    if isinstance(f, Le):
        return ["<=", term_to_sexpr(f.a), term_to_sexpr(f.b)]
    if isinstance(f, Ind):
        return ["ind", term_to_sexpr(f.p), term_to_sexpr(f.i), term_to_sexpr(f.m)]
    if isinstance(f, InR):
        return ["in-R", term_to_sexpr(f.t)]
    if isinstance(f, Top):
        return ["true"]
    if isinstance(f, Bot):
        return ["false"]
    if isinstance(f, Not):
        return ["not", to_sexpr(f.a)]
    if isinstance(f, And):
        return ["and"] + [to_sexpr(p) for p in f.parts]
    if isinstance(f, Or):
        return ["or"] + [to_sexpr(p) for p in f.parts]
    if isinstance(f, Implies):
        return ["implies", to_sexpr(f.a), to_sexpr(f.b)]
    if isinstance(f, All):
        return ["forall", [f.var.name, f.var.sort], to_sexpr(f.body)]
    if isinstance(f, Ex):
        return ["exists", [f.var.name, f.var.sort], to_sexpr(f.body)]
    if isinstance(f, ExLt):
        return ["exists-lt", [f.var.name, f.var.sort], term_to_sexpr(f.bound), to_sexpr(f.body)]
    if isinstance(f, ExLenLt):
        return ["exists-len-lt", [f.var.name, f.var.sort], term_to_sexpr(f.bound), to_sexpr(f.body)]
    raise TypeError(f"not a formula: {f!r}")


def dumps(f: Formula, pretty: bool = False) -> str:
    form = to_sexpr(f)
    return sexpr.dumps_pretty(form) if pretty else sexpr.dumps(form)


def _parse_term(x, scope):
    if isinstance(x, int):
        if x not in (0, 1):
            raise sexpr.fail("only the numerals 0 and 1 are atomic", x)
        return Num(x)
    if isinstance(x, str):
        if x not in scope:
            raise sexpr.fail(f"unbound variable {x}", x)
        return scope[x]
    if not x:
        raise sexpr.fail("empty term", x)
    head = x[0]
    if head in ("+", "*") and len(x) == 3:
        cls = Add if head == "+" else Mul
        return cls(_parse_term(x[1], scope), _parse_term(x[2], scope))
    if head == "len" and len(x) == 2:
        return Len(_parse_term(x[1], scope))
    if head == "app" and len(x) == 4 and x[1] == "g":
        return App(_parse_term(x[2], scope), _parse_term(x[3], scope))
    raise sexpr.fail(f"unknown term {sexpr.dumps(x)}", x)


def _binder(x):
    if not (isinstance(x, list) and len(x) == 2 and isinstance(x[0], str) and x[1] in SORTS):
        raise sexpr.fail("expected (NAME SORT)", x)
    return Var(str(x[0]), str(x[1]))


def _parse(x, scope) -> Formula:
    if not isinstance(x, list) or not x:
        raise sexpr.fail("expected a formula", x)
    head = x[0]
    if head == "rel":
        return Rel(str(x[1]), tuple(_parse_term(a, scope) for a in x[2:]))
    if head in ("=", "<", "<=") and len(x) == 3:
        cls = {"=": Eq, "<": Lt, "<=": Le}[head]
        return cls(_parse_term(x[1], scope), _parse_term(x[2], scope))
    if head == "ind" and len(x) == 4:
        return Ind(*(_parse_term(a, scope) for a in x[1:]))
    if head == "in-R" and len(x) == 2:
        return InR(_parse_term(x[1], scope))
    if head == "true":
        return TRUE
    if head == "false":
        return FALSE
    if head == "not" and len(x) == 2:
        return Not(_parse(x[1], scope))
    if head in ("and", "or"):
        cls = And if head == "and" else Or
        return cls(tuple(_parse(p, scope) for p in x[1:]))
    if head == "implies" and len(x) == 3:
        return Implies(_parse(x[1], scope), _parse(x[2], scope))
    if head in ("forall", "exists") and len(x) == 3:
        v = _binder(x[1])
        inner = dict(scope)
        inner[v.name] = v
        return (All if head == "forall" else Ex)(v, _parse(x[2], inner))
    if head in ("exists-lt", "exists-len-lt") and len(x) == 4:
        v = _binder(x[1])
        bound = _parse_term(x[2], scope)
        inner = dict(scope)
        inner[v.name] = v
        return (ExLt if head == "exists-lt" else ExLenLt)(v, bound, _parse(x[3], inner))
    raise sexpr.fail(f"unknown formula {sexpr.dumps(x)[:60]}", x)


def loads(text: str) -> Formula:
    return _parse(sexpr.loads(text), {})


# -- sorts ------------------------------------------------------------------------

def term_sort(t: Term, errors: list, where: str = "") -> Optional[str]:
    if isinstance(t, Var):
        if t.sort not in SORTS:
            errors.append(f"{where}: variable {t.name} has unknown sort {t.sort}")
        return t.sort
    if isinstance(t, Num):
        return "N"
    if isinstance(t, (Add, Mul)):
        for s in (term_sort(t.a, errors, where), term_sort(t.b, errors, where)):
            if s != "N":
                errors.append(f"{where}: arithmetic on sort {s}")
        return "N"
    if isinstance(t, Len):
        if term_sort(t.p, errors, where) != "Mtup":
            errors.append(f"{where}: len needs a tuple")
        return "N"
    if isinstance(t, App):
        if term_sort(t.node, errors, where) != "N" or term_sort(t.p, errors, where) != "Mtup":
            errors.append(f"{where}: app needs (N, Mtup)")
        return "M"
    errors.append(f"{where}: not a term {t!r}")
    return None


def check_sorts(f: Formula, vocab=None) -> list:
    """Sort errors (empty when well sorted); also checks free variables and rebinding."""
    errors: list = []

    def term(t, scope, where):
        for v in _term_vars(t):
            if scope.get(v.name) != v:
                errors.append(f"{where}: variable {v.name} is free or has a clashing sort")
        return term_sort(t, errors, where)

    def rec(f, scope, where):
        if isinstance(f, Rel):
            for a in f.args:
                if term(a, scope, where) != "M":
                    errors.append(f"{where}: relation {f.name} takes M arguments")
            if vocab is not None:
                if f.name not in vocab.names:
                    errors.append(f"{where}: unknown relation {f.name}")
                elif vocab.arity(f.name) != len(f.args):
                    errors.append(f"{where}: arity mismatch for {f.name}")
        elif isinstance(f, Eq):
            if term(f.a, scope, where) != term(f.b, scope, where):
                errors.append(f"{where}: equality between different sorts")
        elif isinstance(f, (Lt, Le)):
            if term(f.a, scope, where) != "N" or term(f.b, scope, where) != "N":
                errors.append(f"{where}: order on non-N terms")
        elif isinstance(f, Ind):
            if (term(f.p, scope, where), term(f.i, scope, where), term(f.m, scope, where)) != ("Mtup", "N", "M"):
                errors.append(f"{where}: ind needs (Mtup, N, M)")
        elif isinstance(f, InR):
            if term(f.t, scope, where) != "N":
                errors.append(f"{where}: in-R needs an N term")
        elif isinstance(f, (Top, Bot)):
            pass
        elif isinstance(f, Not):
            rec(f.a, scope, where + "/not")
        elif isinstance(f, (And, Or)):
            for i, p in enumerate(f.parts):
                rec(p, scope, f"{where}/{i}")
        elif isinstance(f, Implies):
            rec(f.a, scope, where + "/if")
            rec(f.b, scope, where + "/then")
        elif isinstance(f, (All, Ex, ExLt, ExLenLt)):
            v = f.var
            if v.name in scope:
                errors.append(f"{where}: {v.name} bound twice on one path")
            if isinstance(f, ExLt) and v.sort != "N":
                errors.append(f"{where}: exists-lt binds an N variable")
            if isinstance(f, ExLenLt) and v.sort != "Mtup":
                errors.append(f"{where}: exists-len-lt binds a tuple variable")
            if isinstance(f, (ExLt, ExLenLt)) and term(f.bound, scope, where) != "N":
                errors.append(f"{where}: bound must be an N term")
            inner = dict(scope)
            inner[v.name] = v
            rec(f.body, inner, where + "/" + v.name)
        else:
            errors.append(f"{where}: not a formula {f!r}")

    rec(f, {}, "")
    return errors


def _term_vars(t: Term):
    if isinstance(t, Var):
        yield t
    elif isinstance(t, (Add, Mul)):
        yield from _term_vars(t.a)
        yield from _term_vars(t.b)
    elif isinstance(t, Len):
        yield from _term_vars(t.p)
    elif isinstance(t, App):
        yield from _term_vars(t.node)
        yield from _term_vars(t.p)


def mentions(f: Formula, pred) -> bool:
    """Whether any atom or term inside ``f`` satisfies ``pred``."""
    stack = [f]
    while stack:
        x = stack.pop()
        if pred(x):
            return True
        if isinstance(x, (Not,)):
            stack.append(x.a)
        elif isinstance(x, (And, Or)):
            stack.extend(x.parts)
        elif isinstance(x, Implies):
            stack.extend([x.a, x.b])
        elif isinstance(x, (All, Ex)):
            stack.append(x.body)
        elif isinstance(x, (ExLt, ExLenLt)):
            stack.extend([x.bound, x.body])
        elif isinstance(x, Rel):
            stack.extend(x.args)
        elif isinstance(x, (Eq, Lt, Le)):
            stack.extend([x.a, x.b])
        elif isinstance(x, Ind):
            stack.extend([x.p, x.i, x.m])
        elif isinstance(x, InR):
            stack.append(x.t)
        elif isinstance(x, (Add, Mul)):
            stack.extend([x.a, x.b])
        elif isinstance(x, Len):
            stack.append(x.p)
        elif isinstance(x, App):
            stack.extend([x.node, x.p])
    return False


def size(f: Formula) -> int:
    return len(dumps(f))


# -- the Pi_1 grammar ---------------------------------------------------------------

@dataclass
class Pi1Result:
    ok: bool
    path: str = ""
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_pi1(f: Formula) -> Pi1Result:
    """Check the Pi_1 shape, up to the usual prenex manipulations.

    Quantifiers over M are unrestricted and bounded quantifiers are allowed in
    either polarity.  An unbounded quantifier over N or Mtup must be
    effectively universal: a ``forall`` under an even number of negations
    (counting implication antecedents) or an ``exists`` under an odd number.
    Conjunctions and disjunctions of Pi_1 formulas are Pi_1 after renaming and
    pulling quantifiers out, so connectives are walked through.
    """

    def rec(f, positive: bool, path: str) -> Optional[Pi1Result]:
        if isinstance(f, (Rel, Eq, Lt, Le, Ind, InR, Top, Bot)):
            return None
        if isinstance(f, Not):
            return rec(f.a, not positive, path + "/not")
        if isinstance(f, (And, Or)):
            for i, p in enumerate(f.parts):
                r = rec(p, positive, f"{path}/{i}")
                if r is not None:
                    return r
            return None
        if isinstance(f, Implies):
            r = rec(f.a, not positive, path + "/if")
            return r if r is not None else rec(f.b, positive, path + "/then")
        if isinstance(f, (All, Ex)):
            here = f"{path}/{'forall' if isinstance(f, All) else 'exists'}:{f.var.name}"
            if f.var.sort != "M":
                universal = isinstance(f, All) == positive
                if not universal:
                    return Pi1Result(False, here, f"unbounded existential over {f.var.sort}")
            return rec(f.body, positive, here)
        if isinstance(f, (ExLt, ExLenLt)):
            return rec(f.body, positive, f"{path}/bounded:{f.var.name}")
        return Pi1Result(False, path, f"not a formula {f!r}")

    r = rec(f, True, "")
    return r if r is not None else Pi1Result(True)
