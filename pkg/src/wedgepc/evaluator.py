"""Truth definitions over finite structures.

Valuations are dicts from variable index to element.  Internally a valuation
restricted to a node's free variables is a sorted tuple of ``(var, elem)``
pairs; that tuple plus the node path is the memo key, the truth-table key and
the Skolem-table key.

``g`` arguments are Skolem functions: any callable ``g(path, key) -> elem`` or a
:class:`SkolemTable`.  Evaluation "with respect to g" uses ``g``'s choice at
existential nodes instead of searching for a witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Union

from . import sexpr
from .formulas import (
    Exists,
    Forall,
    FormulaError,
    Leaf,
    Node,
    Vee,
    Wedge,
    children,
    is_junction,
    is_wedge,
)
from .structures import FinStructure

EnvKey = tuple  # sorted ((var, elem), ...)


class EvaluationError(FormulaError):
    pass


class Refusal(EvaluationError):
    """The operation's precondition on truth value does not hold."""


def env_key(env: Mapping[int, int], fv) -> EnvKey:
    return tuple((v, env[v]) for v in sorted(fv))


def env_key_default(env: Mapping[int, int], fv) -> Optional[EnvKey]:
    """Like :func:`env_key`, but ``None`` when ``env`` misses a variable."""
    out = []
    for v in sorted(fv):
        if v not in env:
            return None
        out.append((v, env[v]))
    return tuple(out)


@dataclass
class SkolemTable:
    """Witness choices at existential nodes.  Missing entries choose element 0."""

    entries: dict = field(default_factory=dict)
    default: int = 0

    def __call__(self, path, key) -> int:
        if key is None:
            return self.default
        return self.entries.get((tuple(path), tuple(key)), self.default)

    def to_sexpr(self):
        return ["g"] + [_entry_form(p, k, e) for (p, k), e in sorted(self.entries.items())]


@dataclass
class TruthTable:
    entries: dict = field(default_factory=dict)

    def __getitem__(self, item):
        return self.entries[item]

    def get(self, path, key, default=None):
        return self.entries.get((tuple(path), tuple(key)), default)

    def to_sexpr(self):
        return ["f"] + [_entry_form(p, k, b) for (p, k), b in sorted(self.entries.items())]


def _entry_form(path, key, value):
    return ["entry", ["path"] + list(path), ["env"] + [[v, e] for v, e in key], int(value)]


def serialize_table(table: Union[TruthTable, SkolemTable]) -> str:
    return sexpr.dumps(table.to_sexpr())


def parse_table(text: str) -> Union[TruthTable, SkolemTable]:
    form = sexpr.loads(text)
    if not isinstance(form, list) or not form or form[0] not in ("f", "g"):
        raise sexpr.fail("expected (f ...) or (g ...)", form)
    entries = {}
    for item in form[1:]:
        if not (isinstance(item, list) and len(item) == 4 and item[0] == "entry"
                and isinstance(item[1], list) and item[1][:1] == ["path"]
                and isinstance(item[2], list) and item[2][:1] == ["env"] and isinstance(item[3], int)):
            raise sexpr.fail("expected (entry (path ...) (env (K E)*) VALUE)", item)
        path = tuple(item[1][1:])
        key = tuple((p[0], p[1]) for p in item[2][1:])
        entries[path, key] = item[3]
    return TruthTable(entries) if form[0] == "f" else SkolemTable(entries)


def _literal_true(m: FinStructure, lit, env) -> bool:
    return m.holds(lit.symbol, [env[a] for a in lit.args]) != lit.negated


def leaf_true(m: FinStructure, leaf: Leaf, env: Mapping[int, int]) -> bool:
    return any(_literal_true(m, l, env) for l in leaf.literals)


def _quantifier_chain(node):
    """Maximal run of same-kind quantifiers starting at ``node``: (kind, vars, body, depth)."""
    kind = type(node)
    vars_ = []
    while type(node) is kind:
        vars_.append(node.var)
        node = node.child
    return kind, vars_, node


class Evaluator:
    """Memoizing evaluator for one structure (and optionally one Skolem function)."""

    def __init__(self, m: FinStructure, g: Optional[Callable] = None, fast: bool = True):
        self.m = m
        self.g = g
        self.fast = fast
        self.memo: dict = {}
        self.diagnostics: dict = {}
        self._sorted_fv: dict = {}

    def _key(self, path, node, env):
        fv = self._sorted_fv.get(path)
        if fv is None:
            fv = tuple(sorted(node.freevars))
            self._sorted_fv[path] = fv
        try:
            return tuple((v, env[v]) for v in fv)
        except KeyError as e:
            raise EvaluationError(f"valuation misses free variable x{e.args[0]} at node {path}") from None

    def value(self, node: Node, path: tuple = (), env: Optional[Mapping[int, int]] = None) -> bool:
        env = dict(env or {})
        key = (path, self._key(path, node, env))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._compute(node, path, env)
        self.memo[key] = out
        return out

    def _compute(self, node, path, env) -> bool:
        m = self.m
        if isinstance(node, Leaf):
            return leaf_true(m, node, env)
        if isinstance(node, Exists):
            if self.g is not None:
                a = self.g(path, self._key(path, node, env))
                env2 = dict(env)
                env2[node.var] = a
                return self.value(node.child, path + (0,), env2)
            if self.fast and isinstance(node.child, (Exists, Leaf)):
                return self._exists_chain(node, path, env)
            for a in range(m.size):
                env2 = dict(env)
                env2[node.var] = a
                if self.value(node.child, path + (0,), env2):
                    return True
            return False
        if isinstance(node, Forall):
            if self.fast and isinstance(node.child, (Forall, Leaf)):
                _, vars_, body = _quantifier_chain(node)
                if isinstance(body, Leaf):
                    return self._forall_leaf(vars_, body, env)
            for a in range(m.size):
                env2 = dict(env)
                env2[node.var] = a
                if not self.value(node.child, path + (0,), env2):
                    return False
            return True
        want = isinstance(node, Wedge)  # the value that lets a junction continue
        kids = children(node, m)
        for i, c in enumerate(kids):
            if self.value(c, path + (i,), env) != want:
                if node.family is not None:
                    self.diagnostics.setdefault(path, i)
                return not want
        return want

    def _exists_chain(self, node, path, env) -> bool:
        _, vars_, body = _quantifier_chain(node)
        if not isinstance(body, Leaf):
            # fall back to plain search one quantifier at a time
            for a in range(self.m.size):
                env2 = dict(env)
                env2[node.var] = a
                if self.value(node.child, path + (0,), env2):
                    return True
            return False
        # an existential distributes over the disjunction, literal by literal
        bound = set(vars_)
        for l in body.literals:
            free = sorted(set(l.args) & bound)
            for vals in itertools.product(range(self.m.size), repeat=len(free)):
                env2 = dict(env)
                env2.update(zip(free, vals))
                if _literal_true(self.m, l, env2):
                    return True
        return False

    def _forall_leaf(self, vars_, leaf: Leaf, env) -> bool:
        """Backtracking check of a universal block over a disjunction.

        Literals are decided as soon as their variables are assigned; once one
        is true, the remaining variables need not be explored.
        """
        m = self.m
        order = list(vars_)
        known = set(env) - set(order)
        ready = [[] for _ in range(len(order) + 1)]
        pos = {v: i for i, v in enumerate(order)}
        for l in leaf.literals:
            need = [pos[a] for a in l.args if a in pos and a not in known]
            ready[(max(need) + 1) if need else 0].append(l)
        env = dict(env)

        if any(_literal_true(m, l, env) for l in ready[0]):
            return True

        def rec(i):
            if i == len(order):
                return False  # no literal made it true
            v = order[i]
            for a in range(m.size):
                env[v] = a
                if not any(_literal_true(m, l, env) for l in ready[i + 1]) and not rec(i + 1):
                    return False
            return True

        return rec(0)


def evaluate(code: Node, m: FinStructure, env: Optional[Mapping[int, int]] = None,
             g: Optional[Callable] = None, diagnostics: Optional[dict] = None) -> bool:
    """Truth value of ``code`` in ``m`` under ``env``.

    ``diagnostics``, when given, receives ``{path: i}`` for generated junctions
    that were decided by child ``i`` (the least failing conjunct of a false
    wedge, the least true disjunct of a true vee).
    """
    ev = Evaluator(m, g)
    out = ev.value(code, (), env or {})
    if diagnostics is not None:
        diagnostics.update(ev.diagnostics)
    return out


# -- exhaustive tables --------------------------------------------------------------

def cut_nodes(code: Node, m: FinStructure) -> Iterator[tuple[tuple, Node]]:
    """Preorder walk with generated families cut at their bound in ``m``."""
    stack = [((), code)]
    while stack:
        path, node = stack.pop()
        yield path, node
        kids = children(node, m)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))


def valuations(fv, n: int) -> Iterator[EnvKey]:
    fv = sorted(fv)
    for vals in itertools.product(range(n), repeat=len(fv)):
        yield tuple(zip(fv, vals))


def truth_table(code: Node, m: FinStructure, g: Optional[Callable] = None) -> TruthTable:
    """The truth definition: every node, every valuation of its free variables."""
    ev = Evaluator(m, g)
    f = {}
    for path, node in cut_nodes(code, m):
        for key in valuations(node.freevars, m.size):
            f[path, key] = int(ev.value(node, path, dict(key)))
    return TruthTable(f)


def least_witness_skolem(code: Node, m: FinStructure, f: Optional[TruthTable] = None) -> SkolemTable:
    """Least witnesses at every existential node; element 0 where none exists."""
    if f is None:
        f = truth_table(code, m)
    g = {}
    for path, node in cut_nodes(code, m):
        if not isinstance(node, Exists):
            continue
        cfv = node.child.freevars
        for key in valuations(node.freevars, m.size):
            env = dict(key)
            choice = 0
            for a in range(m.size):
                env[node.var] = a
                if f[path + (0,), env_key(env, cfv)]:
                    choice = a
                    break
            g[path, key] = choice
    return SkolemTable(g)


def extract_skolem(code: Node, m: FinStructure, env: Optional[Mapping[int, int]] = None):
    """``(f, g)`` with ``f`` a truth definition with respect to ``g`` and ``f(root, env) = 1``."""
    env = dict(env or {})
    if not evaluate(code, m, env):
        raise Refusal("formula is false in the structure, so there is no truth definition with root value 1")
    f = truth_table(code, m)
    g = least_witness_skolem(code, m, f)
    return f, g


@dataclass
class AuditViolation:
    path: tuple
    env: EnvKey
    clause: str
    message: str


def check_truth_table(code: Node, m: FinStructure, f, g: Optional[Callable] = None) -> list:
    """Every (node, valuation) where ``f`` breaks its truth-definition clause."""
    table = f.entries if isinstance(f, TruthTable) else dict(f)

    def get(path, key):
        return table.get((path, key))

    out = []
    for path, node in cut_nodes(code, m):
        for key in valuations(node.freevars, m.size):
            have = get(path, key)
            if have is None:
                out.append(AuditViolation(path, key, "domain", "missing entry"))
                continue
            env = dict(key)
            if isinstance(node, Leaf):
                clause, want = "leaf", leaf_true(m, node, env)
            elif isinstance(node, (Exists, Forall)):
                cfv = node.child.freevars
                vals = []
                choices = [g(path, key)] if (g is not None and isinstance(node, Exists)) else range(m.size)
                for a in choices:
                    env2 = dict(env)
                    env2[node.var] = a
                    vals.append(get(path + (0,), env_key(env2, cfv)))
                if any(v is None for v in vals):
                    out.append(AuditViolation(path, key, "domain", "clause refers to a missing entry"))
                    continue
                if isinstance(node, Exists):
                    clause, want = ("exists-g" if g is not None else "exists"), any(vals)
                else:
                    clause, want = "forall", all(vals)
            else:
                vals = []
                for i, c in enumerate(children(node, m)):
                    vals.append(get(path + (i,), env_key(env, c.freevars)))
                if any(v is None for v in vals):
                    out.append(AuditViolation(path, key, "domain", "clause refers to a missing entry"))
                    continue
                if isinstance(node, Wedge):
                    clause, want = "wedge", all(vals)
                else:
                    clause, want = "vee", any(vals)
            if bool(have) != bool(want):
                out.append(AuditViolation(path, key, clause, f"entry is {int(bool(have))}, clause gives {int(bool(want))}"))
    return out


# -- refutation ---------------------------------------------------------------------

@dataclass
class RefutationWitness:
    path: list            # node paths sigma_0 < sigma_1 < ... < sigma_n
    valuations: list      # eta_0, ..., eta_n as dicts
    failed_disjunct: int  # index j with the final leaf equal to psi_j
    leaf: Leaf

    def to_sexpr(self):
        return ["witness",
                ["chain"] + [["path"] + list(p) for p in self.path],
                ["valuations"] + [["env"] + [[v, e] for v, e in sorted(env.items())] for env in self.valuations],
                ["disjunct", self.failed_disjunct]]


def skolem_domain(code: Node, m: FinStructure) -> list:
    """All ``(path, key)`` pairs a Skolem function must answer, in order."""
    out = []
    for path, node in cut_nodes(code, m):
        if isinstance(node, Exists):
            for key in valuations(node.freevars, m.size):
                out.append((path, key))
    return out


def refutation_path(code: Node, m: FinStructure, g: Callable, psi=None) -> RefutationWitness:
    """Follow a false wedge sentence down to a falsified leaf.

    Existential steps take ``g``'s choice, universal steps the least element
    whose subtree is false (with respect to ``g``), conjunction steps the least
    false child.
    """
    if code.freevars:
        raise Refusal("refutation paths start from a sentence")
    if not is_wedge(code):
        raise Refusal("refutation paths need a wedge code (no disjunction nodes)")
    if evaluate(code, m):
        raise Refusal("formula is true in the structure")
    ev = Evaluator(m, g)
    path, env = (), {}
    node = code
    chain, vals = [path], [dict(env)]
    while not isinstance(node, Leaf):
        if isinstance(node, Exists):
            a = g(path, env_key_default(env, node.freevars))
            env = dict(env)
            env[node.var] = a
            node, path = node.child, path + (0,)
        elif isinstance(node, Forall):
            for a in range(m.size):
                env2 = dict(env)
                env2[node.var] = a
                if not ev.value(node.child, path + (0,), env2):
                    break
            else:  # pragma: no cover - excluded by the falsity invariant
                raise AssertionError("universal node had no failing element")
            env = env2
            node, path = node.child, path + (0,)
        else:
            for i, c in enumerate(children(node, m)):
                if not ev.value(c, path + (i,), env):
                    break
            else:  # pragma: no cover
                raise AssertionError("conjunction had no failing child")
            node, path = c, path + (i,)
        chain.append(path)
        vals.append(dict(env))
    if leaf_true(m, node, env):  # pragma: no cover
        raise AssertionError("refutation ended at a true leaf")
    if psi is None:
        from .psi import PsiEnumeration

        psi = PsiEnumeration(m.vocab)
    return RefutationWitness(chain, vals, psi.encode(node.literals), node)
