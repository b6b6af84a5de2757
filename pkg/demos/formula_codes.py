"""Build formula codes, evaluate them, negate them and compose disjunctions."""

from __future__ import annotations

from wedgepc.builtins import builtin
from wedgepc.corpus import GRAPH, cycle, graph, leaf, wedge_corpus
from wedgepc.evaluator import evaluate
from wedgepc.formulas import Exists, Forall, fneg, is_wedge, lit, or_compose, serialize_formula, validate

# every vertex has an out-neighbour
total = Forall(0, Exists(1, leaf(lit("E", 0, 1))))
print(serialize_formula(total))
print("valid:", validate(total, GRAPH).valid, "wedge:", is_wedge(total))

# graphs are undirected, so only an isolated vertex lacks an out-neighbour
path = graph(3, [(0, 1)])
c3 = cycle(3)
print("edge plus isolated vertex:", evaluate(total, path), "cycle:", evaluate(total, c3))

# negation pushes through quantifiers and junctions, so the result has no negation node
neg = fneg(total)
print(serialize_formula(neg))
print("negated:", evaluate(neg, path), "wedge:", is_wedge(neg))

# a disjunction of two wedge sentences written again as a wedge sentence
codes = dict(wedge_corpus())
either = or_compose(codes["reflexive"], codes["empty"])
print("or-compose is wedge:", is_wedge(either))
for m in (graph(2, []), graph(2, [(0, 0), (1, 1)]), graph(2, [(0, 1)])):
    print(sorted(m.table("E")), evaluate(either, m))

# generated families are cut at a size-dependent bound when evaluated
inf = builtin("infinite")
dis = builtin("disconnected", "E")
for n in (1, 2, 3):
    edge = [(0, 1)] if n > 1 else []
    print(n, "infinite:", evaluate(inf, graph(n, [])), "disconnected:", evaluate(dis, graph(n, edge)))
