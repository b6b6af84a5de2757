"""Independent reference implementations used by the tests."""

from __future__ import annotations

import itertools
from collections import deque

from wedgepc import fo
from wedgepc.formulas import Exists, Forall, Leaf, Vee, Wedge, children


# -- graphs ---------------------------------------------------------------------

def connected(n: int, edges) -> bool:
    """Breadth-first search from vertex 0."""
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, todo = {0}, deque([0])
    while todo:
        v = todo.popleft()
        for w in adj[v] - seen:
            seen.add(w)
            todo.append(w)
    return len(seen) == n


def bipartite(n: int, edges) -> bool:
    color = {}
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for start in range(n):
        if start in color:
            continue
        color[start] = 0
        todo = [start]
        while todo:
            v = todo.pop()
            for w in adj[v]:
                if w not in color:
                    color[w] = 1 - color[v]
                    todo.append(w)
                elif color[w] == color[v]:
                    return False
    return True


def cycle_edges(n: int):
    return [(i, (i + 1) % n) for i in range(n)]


# -- formula codes ----------------------------------------------------------------

def naive_evaluate(code, m, env=None) -> bool:
    """Direct recursion over the tree, no memo and no shortcuts."""
    env = dict(env or {})
    if isinstance(code, Leaf):
        for l in code.literals:
            args = tuple(env[a] for a in l.args)
            if m.holds(l.symbol, args) != l.negated:
                return True
        return False
    if isinstance(code, Exists):
        return any(naive_evaluate(code.child, m, {**env, code.var: a}) for a in range(m.size))
    if isinstance(code, Forall):
        return all(naive_evaluate(code.child, m, {**env, code.var: a}) for a in range(m.size))
    kids = children(code, m)
    if isinstance(code, Wedge):
        return all(naive_evaluate(c, m, env) for c in kids)
    assert isinstance(code, Vee)
    return any(naive_evaluate(c, m, env) for c in kids)


# -- truncations --------------------------------------------------------------------

class _TupleView:
    def __init__(self, p):
        self.p = p

    def __len__(self):
        return len(self.p)

    def has(self, j):
        return j < len(self.p)

    def __getitem__(self, j):
        return self.p[j]


def naive_eval_fo(tm, phi, env=None) -> bool:
    """Tarskian evaluation with the tuple sort fully enumerated."""
    B, n = tm.B, tm.n
    tuples = [t for k in range(tm.L + 1) for t in itertools.product(range(n), repeat=k)]

    def sat(v):
        return min(v, B)

    def term(t, env):
        if isinstance(t, fo.Var):
            return env[t.name]
        if isinstance(t, fo.Num):
            return sat(t.value)
        if isinstance(t, fo.Add):
            return sat(term(t.a, env) + term(t.b, env))
        if isinstance(t, fo.Mul):
            return sat(term(t.a, env) * term(t.b, env))
        if isinstance(t, fo.Len):
            return len(term(t.p, env))
        if isinstance(t, fo.App):
            return tm.g(term(t.node, env), _TupleView(term(t.p, env)))
        raise TypeError(t)

    def domain(v):
        return {"M": range(n), "N": range(B + 1), "Mtup": tuples}[v.sort]

    def ev(f, env):
        if isinstance(f, fo.Rel):
            return tuple(term(a, env) for a in f.args) in tm.base.table(f.name)
        if isinstance(f, fo.Eq):
            return term(f.a, env) == term(f.b, env)
        if isinstance(f, fo.Lt):
            return term(f.a, env) < term(f.b, env)
        if isinstance(f, fo.Le):
            return term(f.a, env) <= term(f.b, env)
        if isinstance(f, fo.Ind):
            p, i, a = term(f.p, env), term(f.i, env), term(f.m, env)
            return i < len(p) and p[i] == a
        if isinstance(f, fo.InR):
            return term(f.t, env) in tm.R
        if isinstance(f, fo.Top):
            return True
        if isinstance(f, fo.Bot):
            return False
        if isinstance(f, fo.Not):
            return not ev(f.a, env)
        if isinstance(f, fo.And):
            return all(ev(p, env) for p in f.parts)
        if isinstance(f, fo.Or):
            return any(ev(p, env) for p in f.parts)
        if isinstance(f, fo.Implies):
            return (not ev(f.a, env)) or ev(f.b, env)
        if isinstance(f, fo.All):
            return all(ev(f.body, {**env, f.var.name: x}) for x in domain(f.var))
        if isinstance(f, fo.Ex):
            return any(ev(f.body, {**env, f.var.name: x}) for x in domain(f.var))
        if isinstance(f, fo.ExLt):
            bound = term(f.bound, env)
            return any(ev(f.body, {**env, f.var.name: x}) for x in range(min(bound, B + 1)))
        if isinstance(f, fo.ExLenLt):
            bound = term(f.bound, env)
            return any(ev(f.body, {**env, f.var.name: x}) for x in tuples if len(x) < bound)
        raise TypeError(f)

    return ev(phi, dict(env or {}))


# -- literal disjunct order -------------------------------------------------------

def sorted_disjuncts(relations, max_weight: int):
    """Every disjunct of weight <= max_weight, listed by brute force and sorted.

    ``relations`` is ``[(name, arity)]`` with equality already appended.  The
    key is (weight, literal count, sequence of (relation index, polarity, args)).
    """
    from wedgepc.formulas import Literal

    lits = []
    for r, (name, arity) in enumerate(relations):
        for neg in (False, True):
            for args in itertools.product(range(max_weight), repeat=arity):
                w = 1 + sum(args)
                if w <= max_weight:
                    lits.append(((2 * r + neg, args), w, Literal(neg, name, args)))
    out = []

    def extend(prefix, weight):
        if prefix:
            out.append(prefix)
        for key, w, l in lits:
            if weight + w <= max_weight:
                extend(prefix + [(key, w, l)], weight + w)

    extend([], 0)
    out.sort(key=lambda seq: (sum(w for _, w, _ in seq), len(seq), [k for k, _, _ in seq]))
    return [tuple(l for _, _, l in seq) for seq in out]
