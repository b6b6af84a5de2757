"""Compile a wedge sentence into arithmetic and check it in finite truncations of the tuple model."""

from __future__ import annotations

from wedgepc import arith, fo, sexpr
from wedgepc.corpus import GRAPH, graph, leaf
from wedgepc.evaluator import least_witness_skolem
from wedgepc.formulas import Exists, Forall, lit
from wedgepc.trunc import SkolemTerm, check_pi1_monotone, derive_bounds, nested_pair, verify_biconditional

code = Forall(0, Exists(1, leaf(lit("E", 0, 1))))
enc = arith.encode(code, GRAPH)
for node in enc.nodes:
    print(node.code, node.path, node.kind, "free", node.freevars)

chi = arith.emit_chi(code, enc)
theta = arith.emit_theta(code, enc, enc.relation_span())
print("chi size", fo.size(chi), "pi1", bool(fo.validate_pi1(chi)))
print("theta size", fo.size(theta), "pi1", bool(fo.validate_pi1(theta)))

# true sentence: the extracted witnesses satisfy both sentences, also at doubled bounds
m = graph(3, [(0, 1), (1, 2), (2, 0)])
rep = verify_biconditional(code, m)
print(sexpr.dumps(rep.to_sexpr()))

# false sentence: every witness function runs into a leaf that fails, and the harness reports where
m = graph(3, [(0, 1)])
rep = verify_biconditional(code, m)
print(rep.truth, rep.g_mode, rep.passed)
print(sexpr.dumps(rep.cells[0].to_sexpr()))

# truth in the larger truncation carries down to the smaller one
b = derive_bounds(code, m, enc)
small, large = nested_pair(m, b, SkolemTerm(enc, least_witness_skolem(code, m)))
print("bounds", (small.B, small.L), (large.B, large.L), "preserved", check_pi1_monotone(theta, small, large))
