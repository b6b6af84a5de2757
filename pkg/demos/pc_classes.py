"""Projective classes: membership by searching for an expansion that satisfies the axioms."""

from __future__ import annotations

from wedgepc.builtins import builtin
from wedgepc.corpus import (bicoloring_pc, bicoloring_pc_prime, cycle, disconnected_pc, graph,
                            linear_order, non_well_founded_pc)
from wedgepc.evaluator import evaluate
from wedgepc.pcsearch import pc_member, pc_prime_member

# the disconnected graphs, once as an infinitary sentence and once as a PC class
dis, pcd = builtin("disconnected", "R"), disconnected_pc()
for edges in ([], [(0, 1)], [(0, 1), (1, 2)]):
    m = graph(3, edges, "R")
    v = pc_member(m, pcd)
    print(edges, "sentence:", evaluate(dis, m), "pc:", v.kind, "search nodes:", v.stats.get("search-nodes"))

# a single vertex separates the two definitions: the sentence asks for two distinct vertices
one = graph(1, [], "R")
print("single vertex:", evaluate(dis, one), pc_member(one, pcd).kind)

# two-colourable cycles, with the colour as a new unary symbol
for n in range(3, 9):
    print(f"C{n}", pc_member(cycle(n), bicoloring_pc()).kind)

# the sorted variant: P picks out the base structure inside a larger expansion
for n in (4, 5):
    v = pc_prime_member(cycle(n), bicoloring_pc_prime(), 0)
    print(f"C{n} sorted, budget 0:", v.kind, v.note)

# finite linear orders are well founded; without a nonemptiness axiom U = {} is a vacuous witness
for n in (1, 2, 3):
    plain = pc_member(linear_order(n), non_well_founded_pc()).kind
    strict = pc_member(linear_order(n), non_well_founded_pc(True)).kind
    print("order", n, "plain:", plain, "nonempty U:", strict)
