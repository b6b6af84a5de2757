"""Vectorized evaluation over many structures of one size at once.

A node evaluates to a boolean tensor of shape ``(count, n, ..., n)`` with one
axis per free variable, in increasing variable order.  A leading axis of size
1 marks a value that is the same in every structure (equality literals).

Quantifier blocks over a junction are evaluated by eliminating one variable at
a time, so a universal block over a long disjunction (the path-walk conjuncts
of the disconnectedness family) costs a chain of small tensors instead of one
tensor with an axis per variable.

Generated families are cut at ``bound`` of an empty structure of the batch's
size, so the bounds must depend on the size only (true for every builtin).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .evaluator import _quantifier_chain
from .formulas import Exists, Leaf, Literal, Node, Vee, Wedge, children
from .structures import EQUALITY, FinStructure, StructureBatch, StructureSpace


@dataclass
class Tensor:
    vars: tuple
    arr: np.ndarray


def _const(value: bool) -> Tensor:
    return Tensor((), np.array([value], dtype=bool))


def _align(t: Tensor, target: tuple) -> np.ndarray:
    arr = t.arr
    for pos, v in enumerate(target):
        if v not in t.vars:
            arr = np.expand_dims(arr, 1 + pos)
    return arr


def _combine(ts, conj: bool) -> Tensor:
    if not ts:
        return _const(conj)
    if len(ts) == 1:
        return ts[0]
    target = tuple(sorted(set().union(*(t.vars for t in ts))))
    op = np.logical_and if conj else np.logical_or
    out = _align(ts[0], target)
    for t in ts[1:]:
        out = op(out, _align(t, target))
    return Tensor(target, out)


def _reduce(t: Tensor, var: int, exists: bool) -> Tensor:
    if var not in t.vars:
        return t
    axis = 1 + t.vars.index(var)
    arr = t.arr.any(axis=axis) if exists else t.arr.all(axis=axis)
    return Tensor(tuple(v for v in t.vars if v != var), arr)


class BatchEvaluator:
    def __init__(self, batch: StructureBatch):
        self.batch = batch
        self.n = batch.size
        self._rel: dict = {}
        self._probe = FinStructure(batch.vocab, batch.size)

    def relation(self, name: str) -> np.ndarray:
        arr = self._rel.get(name)
        if arr is not None:
            return arr
        n = self.n
        if name == EQUALITY:
            arr = np.eye(n, dtype=bool)[None]
        else:
            arity = self.batch.vocab.arity(name)
            cols = [self.batch.column(name, row) for row in itertools.product(range(n), repeat=arity)]
            arr = np.stack(cols, axis=1).reshape((self.batch.count,) + (n,) * arity)
        self._rel[name] = arr
        return arr

    def literal(self, l: Literal) -> Tensor:
        rel = self.relation(l.symbol)
        vars_ = tuple(sorted(set(l.args)))
        if not l.args:
            arr = rel
        else:
            k = len(vars_)
            grids = np.indices((self.n,) * k) if k else None
            index = tuple(grids[vars_.index(a)] for a in l.args)
            arr = rel[(slice(None),) + index]
        return Tensor(vars_, ~arr if l.negated else arr)

    def tensor(self, node: Node) -> Tensor:
        if isinstance(node, Leaf):
            return _combine([self.literal(l) for l in node.literals], conj=False)
        if isinstance(node, (Wedge, Vee)):
            kids = children(node, self._probe)
            return _combine([self.tensor(c) for c in kids], conj=isinstance(node, Wedge))
        kind, vars_, body = _quantifier_chain(node)
        exists = kind is Exists
        if isinstance(body, Leaf):
            factors, conj = [self.literal(l) for l in body.literals], False
        elif isinstance(body, (Wedge, Vee)):
            factors = [self.tensor(c) for c in children(body, self._probe)]
            conj = isinstance(body, Wedge)
        else:
            factors, conj = [self.tensor(body)], True
        distributes = exists != conj
        pending = list(vars_)
        while pending:
            # eliminate the variable whose merged factor is smallest
            def cost(x):
                touch = [f for f in factors if x in f.vars]
                return len(set().union(*(f.vars for f in touch))) if touch else -1

            x = min(pending, key=lambda v: (cost(v), v))
            pending.remove(x)
            touch = [f for f in factors if x in f.vars]
            if not touch:
                continue
            rest = [f for f in factors if x not in f.vars]
            if distributes:
                factors = rest + [_reduce(f, x, exists) for f in touch]
            else:
                factors = rest + [_reduce(_combine(touch, conj), x, exists)]
        return _combine(factors, conj)

    def full(self, node: Node) -> Tensor:
        """Tensor broadcast to the batch count."""
        t = self.tensor(node)
        shape = (self.batch.count,) + (self.n,) * len(t.vars)
        return Tensor(t.vars, np.broadcast_to(t.arr, shape))


def batch_tensor(code: Node, batch: StructureBatch) -> Tensor:
    return BatchEvaluator(batch).full(code)


def batch_evaluate(code: Node, batch: StructureBatch, env: Optional[Mapping[int, int]] = None) -> np.ndarray:
    """Truth value in every structure of the batch, as a boolean vector."""
    t = batch_tensor(code, batch)
    env = env or {}
    missing = [v for v in t.vars if v not in env]
    if missing:
        raise ValueError(f"valuation misses free variables {missing}")
    index = (slice(None),) + tuple(env[v] for v in t.vars)
    return np.ascontiguousarray(t.arr[index])


def evaluate_space(code: Node, space: StructureSpace, chunk: int = 1 << 16) -> Tensor:
    """Like :func:`batch_tensor` over a whole space, in chunks to bound memory."""
    parts, vars_ = [], None
    for start in range(0, space.count, chunk):
        t = batch_tensor(code, space.slice(start, min(space.count, start + chunk)))
        vars_ = t.vars
        parts.append(np.array(t.arr))
    return Tensor(vars_, np.concatenate(parts, axis=0))
