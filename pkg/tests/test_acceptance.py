"""Acceptance suite: nine criteria, each with its time limit.

Every criterion returns a deterministic report string (no timings), so the
determinism criterion can compare reruns byte for byte.  One pass/fail line
per criterion is printed as it finishes and again in the pytest summary.

Run standalone with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import hashlib
import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import connected, naive_evaluate  # noqa: E402
from wedgepc import arith, fo, sexpr, trunc  # noqa: E402
from wedgepc.batch import evaluate_space  # noqa: E402
from wedgepc.builtins import builtin  # noqa: E402
from wedgepc.corpus import (  # noqa: E402
    GRAPH,
    TWO_BINARY,
    all_graphs,
    all_structures,
    bicoloring_pc,
    closure_counterexamples,
    cycle,
    disconnected_pc,
    existential_control,
    graph,
    harness_corpus,
    random_codes,
    universal_corpus,
    wedge_corpus,
)
from wedgepc.evaluator import evaluate, least_witness_skolem, valuations  # noqa: E402
from wedgepc.fo import ONE, ZERO, All, Eq, Ex, Len, Not, Var  # noqa: E402
from wedgepc.formulas import fneg, is_wedge, or_compose, validate  # noqa: E402
from wedgepc.pcsearch import pc_member  # noqa: E402
from wedgepc.structures import StructureSpace  # noqa: E402
from wedgepc.trunc import SkolemTerm, check_pi1_monotone, derive_bounds, nested_pair, verify_biconditional  # noqa: E402

SEED = 0
LINES: list = []
REPORTS: dict = {}


def digest(texts) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\n")
    return h.hexdigest()[:16]


def harness_structures():
    return [m for n in (1, 2, 3) for m in all_structures(GRAPH, n)]


# -- criteria -------------------------------------------------------------------
# each returns (ok, report)

def criterion_1():
    dis, pcd = builtin("disconnected", "R"), disconnected_pc()
    rows, bad = [], 0
    for n in range(2, 6):
        count = 0
        for m in all_graphs(n, "R"):
            a = evaluate(dis, m)
            b = pc_member(m, pcd).member
            c = not connected(n, m.table("R"))
            count += 1
            bad += not (a == b == c)
        rows.append(f"n={n}:{count}")
    single = graph(1, [], "R")
    excluded = (evaluate(dis, single), pc_member(single, pcd).member)
    report = f"graphs {' '.join(rows)} disagreements {bad} excluded-single-vertex {excluded}"
    return bad == 0 and excluded == (False, True), report


def criterion_2():
    codes = random_codes(200, seed=SEED)
    spaces = [StructureSpace(TWO_BINARY, n) for n in (1, 2, 3)]
    cells = bad = invalid = 0
    for c in codes:
        invalid += not validate(c, TWO_BINARY).valid
        nc = fneg(c)
        for sp in spaces:
            a, b = evaluate_space(c, sp), evaluate_space(nc, sp)
            if a.vars != b.vars:
                bad += 1
                continue
            shape = (sp.count,) + (sp.size,) * len(a.vars)
            A, B = np.broadcast_to(a.arr, shape), np.broadcast_to(b.arr, shape)
            bad += int(np.count_nonzero(A == B))
            cells += A.size
    # scalar cross-check against the naive recursion on a stride of the spaces
    sampled = off = 0
    for i, c in enumerate(codes):
        nc = fneg(c)
        fv = sorted(c.freevars)
        for sp in spaces:
            for idx in range(i % 97, sp.count, 4099):
                m = sp.structure(idx)
                for key in valuations(fv, sp.size):
                    env = dict(key)
                    x = naive_evaluate(c, m, env)
                    off += evaluate(nc, m, env) == x or naive_evaluate(nc, m, env) == x
                    sampled += 1
    report = f"codes 200 valuations {cells} mismatches {bad} invalid {invalid} scalar-sample {sampled} off {off}"
    return bad == 0 and invalid == 0 and off == 0, report


def criterion_3():
    structs = harness_structures()
    corpus = wedge_corpus()
    base = {name: [evaluate(c, m) for m in structs] for name, c in corpus}
    bad = not_wedge = pairs = 0
    for (n1, c1), (n2, c2) in itertools.product(corpus, repeat=2):
        out = or_compose(c1, c2)
        pairs += 1
        not_wedge += not is_wedge(out)
        for i, m in enumerate(structs):
            bad += evaluate(out, m) != (base[n1][i] or base[n2][i])
    report = f"pairs {pairs} structures {len(structs)} mismatches {bad} not-wedge {not_wedge}"
    return bad == 0 and not_wedge == 0, report


def criterion_4():
    structs = harness_structures()
    rows, texts, ok = [], [], True
    for name, code in harness_corpus():
        d1 = d2 = fails = unstable = 0
        for m in structs:
            rep = verify_biconditional(code, m, seed=SEED)
            d1 += rep.truth
            d2 += not rep.truth
            fails += not rep.passed
            unstable += rep.stable is not True
            texts.append(fo_sexpr(rep))
        ok = ok and fails == 0 and unstable == 0
        rows.append(f"{name}:d1={d1},d2={d2},fail={fails},unstable={unstable}")
    report = f"codes {len(rows)} cells {len(texts)} " + " ".join(rows) + f" digest {digest(texts)}"
    return ok and len(rows) >= 10, report


def fo_sexpr(rep) -> str:
    return sexpr.dumps(rep.to_sexpr())


def negative_grammar_cases():
    p, x = Var("p", "Mtup"), Var("x", "N")
    return [
        ("unbounded-tuple-existential", Ex(p, Eq(Len(p), ZERO))),
        ("unbounded-number-existential", All(p, Ex(x, Eq(Len(p), x)))),
        ("negated-universal", Not(All(x, Eq(x, ONE)))),
    ]


def criterion_5():
    emitted = []
    for _, code in harness_corpus():
        enc = arith.encode(code, GRAPH)
        emitted.append(arith.emit_chi(code, enc))
        emitted += [arith.emit_theta(code, enc, s) for s in range(1, 5)]
        emitted.append(arith.emit_theta_single(code, enc))
    passing = sum(bool(fo.validate_pi1(f)) for f in emitted)
    rejected = [name for name, f in negative_grammar_cases() if not fo.validate_pi1(f)]
    report = f"emitted {len(emitted)} pi1 {passing} negatives-rejected {len(rejected)}/3"
    return passing == len(emitted) and len(rejected) == 3, report


def criterion_6():
    structs = harness_structures()
    checks = violations = 0
    for _, code in harness_corpus():
        enc = arith.encode(code, GRAPH)
        chi, thetas = arith.emit_chi(code, enc), {}
        for m in structs:
            b = derive_bounds(code, m, enc)
            if b.s not in thetas:
                thetas[b.s] = arith.emit_theta(code, enc, b.s)
            g = SkolemTerm(enc, least_witness_skolem(code, m))
            small, large = nested_pair(m, b, g)
            for phi in (chi, thetas[b.s]):
                checks += 1
                violations += not check_pi1_monotone(phi, small, large)
    return violations == 0, f"checks {checks} violations {violations}"


def criterion_7():
    rows, ok = [], True
    for name, code in universal_corpus():
        found = len(closure_counterexamples(code, GRAPH, 4))
        ok = ok and found == 0
        rows.append(f"{name}:{found}")
    control = closure_counterexamples(existential_control(), GRAPH, 4, limit=1)
    first = None
    if control:
        m, subset = control[0]
        first = (m.size, sorted(m.table("E")), subset)
    ok = ok and first == (2, [(1, 1)], (0,))
    return ok, "universal " + " ".join(rows) + f" control-first {first}"


def criterion_8():
    kinds = {n: pc_member(cycle(n), bicoloring_pc()).kind for n in range(3, 9)}
    right = sum((kinds[n] == "member") == (n % 2 == 0) for n in kinds)
    return right == 6, " ".join(f"C{n}:{k}" for n, k in kinds.items()) + f" correct {right}/6"


CRITERIA = {
    1: ("triple agreement on disconnectedness", criterion_1, 60),
    2: ("fneg soundness", criterion_2, 60),
    3: ("or_compose soundness and shape", criterion_3, 120),
    4: ("truncation harness, both directions and stability", criterion_4, 600),
    5: ("Pi1 grammar", criterion_5, 1),
    6: ("Pi1 downward preservation", criterion_6, 120),
    7: ("substructure closure", criterion_7, 60),
    8: ("cycle 2-coloring", criterion_8, 10),
}


def run_criterion(k: int):
    title, fn, limit = CRITERIA[k]
    t0 = time.perf_counter()
    ok, report = fn()
    elapsed = time.perf_counter() - t0
    passed = ok and elapsed < limit
    line = f"criterion {k} {'PASS' if passed else 'FAIL'}: {title} | {report} | {elapsed:.1f}s (limit {limit}s)"
    print(line, flush=True)
    LINES.append(line)
    return passed, report


def first_run(k: int):
    if k not in REPORTS:
        REPORTS[k] = run_criterion(k)
    return REPORTS[k]


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    assert first_run(k)[0]


def test_criterion_9_determinism():
    t0 = time.perf_counter()
    firsts = {k: first_run(k)[1] for k in sorted(CRITERIA)}
    trunc.clear_caches()  # the rerun recompiles and re-emits everything
    differing = [k for k in sorted(CRITERIA) if CRITERIA[k][1]()[1] != firsts[k]]
    line = (f"criterion 9 {'PASS' if not differing else 'FAIL'}: determinism of criteria 1-8 | "
            f"differing {differing} | {time.perf_counter() - t0:.1f}s (no limit)")
    print(line, flush=True)
    LINES.append(line)
    assert not differing


if __name__ == "__main__":
    passed = [first_run(k)[0] for k in sorted(CRITERIA)]
    try:
        test_criterion_9_determinism()
    except AssertionError:
        passed.append(False)
    sys.exit(0 if all(passed) else 1)
