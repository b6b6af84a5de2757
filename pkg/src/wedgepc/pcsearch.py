"""Pseudo-elementary membership by exhaustive search over expansions.

Axioms are grounded over the structure's universe into a propositional
formula whose variables are the unknown table entries.  The search branches on
those entries in enumeration order, value 0 first, with clause propagation for
pruning, so the first witness it finds is the first witness in
:func:`enumerate_expansions` order.  :func:`pc_member_bruteforce` walks that
enumeration directly and serves as the reference.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from . import sexpr
from .evaluator import evaluate
from .formulas import (
    Exists,
    Forall,
    FormulaError,
    Leaf,
    Literal,
    Node,
    Vee,
    Wedge,
    has_family,
    parse_formula_form,
    serialize_formula,
    formula_to_sexpr,
    validate,
)
from .structures import (
    EQUALITY,
    FinStructure,
    StructureError,
    Vocabulary,
    parse_vocab_form,
    structure_to_sexpr,
    subsets_with_substructures,
)


class PCError(ValueError):
    pass


@dataclass(frozen=True)
class PCDefinition:
    base: Vocabulary
    extended: Vocabulary
    axioms: tuple
    sort_predicate: Optional[str] = None
    name: str = ""
    # a finite prefix standing in for an infinite theory
    prefix_of_theory: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))
        if not self.base.issubset(self.extended):
            raise PCError("base vocabulary must be contained in the extended one")
        if self.sort_predicate is not None:
            p = self.sort_predicate
            if p in self.base.names:
                raise PCError(f"sort predicate {p} must not be a base symbol")
            if p not in self.extended.names or self.extended.arity(p) != 1:
                raise PCError(f"sort predicate {p} must be a unary symbol of the extended vocabulary")
        for i, ax in enumerate(self.axioms):
            if has_family(ax):
                raise PCError(f"axiom {i} is infinitary; axioms must be finite codes")
            rep = validate(ax, self.extended)
            if not rep.valid:
                v = rep.violations[0]
                raise PCError(f"axiom {i} is invalid at {v.path}: {v.message}")
            if not rep.is_sentence:
                raise PCError(f"axiom {i} has free variables {sorted(rep.root_freevars)}")

    @property
    def new_symbols(self) -> tuple:
        base = set(self.base.names)
        return tuple((s, a) for s, a in self.extended if s not in base)

    def to_sexpr(self):
        out = ["pc", ["base", self.base.to_sexpr()], ["extended", self.extended.to_sexpr()]]
        if self.sort_predicate is not None:
            out.append(["sort", self.sort_predicate])
        out += [["axiom", formula_to_sexpr(a)] for a in self.axioms]
        return out


def parse_pc_form(form) -> PCDefinition:
    sexpr.expect_head(form, "pc")
    base = extended = None
    sort = None
    axioms = []
    for item in form[1:]:
        if not isinstance(item, list) or not item:
            raise sexpr.fail("expected a (base ...), (extended ...), (sort P) or (axiom ...) clause", item)
        head = item[0]
        if head == "base" and len(item) == 2:
            base = parse_vocab_form(item[1])
        elif head == "extended" and len(item) == 2:
            extended = parse_vocab_form(item[1])
        elif head == "sort" and len(item) == 2 and isinstance(item[1], str):
            sort = str(item[1])
        elif head == "axiom" and len(item) == 2:
            axioms.append(parse_formula_form(item[1]))
        else:
            raise sexpr.fail(f"unexpected clause {head!r}", item)
    if base is None or extended is None:
        raise sexpr.fail("a pc definition needs (base VOCAB) and (extended VOCAB)", form)
    try:
        return PCDefinition(base, extended, tuple(axioms), sort)
    except (PCError, StructureError) as e:
        raise sexpr.fail(str(e), form) from None


def parse_pc(text: str) -> PCDefinition:
    return parse_pc_form(sexpr.loads(text))


def serialize_pc(defn: PCDefinition) -> str:
    return sexpr.dumps_pretty(defn.to_sexpr())


@dataclass
class Verdict:
    kind: str                              # member | non_member | unknown
    witness: Optional[FinStructure] = None
    stats: dict = field(default_factory=dict)
    note: str = ""

    @property
    def member(self) -> bool:
        return self.kind == "member"

    def to_sexpr(self):
        out = ["verdict", self.kind]
        if self.witness is not None:
            out.append(["witness", structure_to_sexpr(self.witness)])
        out.append(["stats"] + [[k, v] for k, v in sorted(self.stats.items())])
        if self.note:
            out.append(["note", self.note.replace(" ", "-")])
        return out


# -- expansions ------------------------------------------------------------------

def _slots(symbols, size):
    return [(name, row) for name, arity in symbols for row in itertools.product(range(size), repeat=arity)]


def enumerate_expansions(m: FinStructure, extended: Vocabulary) -> Iterator[FinStructure]:
    """Every interpretation of the new symbols, lexicographic over table bits.

    Slots are the new symbols in declaration order, tuples in lexicographic
    order; the first slot is the most significant bit, so the first expansion
    has all new tables empty.
    """
    if not m.vocab.issubset(extended):
        raise PCError("structure vocabulary is not part of the extended vocabulary")
    base = set(m.vocab.names)
    new = [(s, a) for s, a in extended if s not in base]
    slots = _slots(new, m.size)
    for bits in itertools.product((0, 1), repeat=len(slots)):
        tables = {s: [] for s, _ in new}
        for b, (s, row) in zip(bits, slots):
            if b:
                tables[s].append(row)
        yield m.expand(extended, tables)


def pc_member_bruteforce(m: FinStructure, defn: PCDefinition) -> Verdict:
    count = 0
    for exp in enumerate_expansions(m, defn.extended):
        count += 1
        if all(evaluate(ax, exp) for ax in defn.axioms):
            return Verdict("member", exp, {"expansions": count})
    return Verdict("non_member", None, {"expansions": count})


# -- grounding --------------------------------------------------------------------
# Ground formulas: True, False, int literal (+v / -v), ("and", parts), ("or", parts).

def _mk(op: str, parts: list):
    neutral, absorbing = (True, False) if op == "and" else (False, True)
    out = []
    for p in parts:
        if p is absorbing:
            return absorbing
        if p is neutral:
            continue
        if isinstance(p, tuple) and p[0] == op:
            out.extend(p[1])
        else:
            out.append(p)
    if not out:
        return neutral
    if len(out) == 1:
        return out[0]
    return (op, tuple(out))


class Grounder:
    """Grounds codes over a universe; ``atom(symbol, args)`` gives a literal or a constant."""

    def __init__(self, size: int, atom: Callable):
        self.size = size
        self.atom = atom

    def ground(self, node: Node, env: dict):
        if isinstance(node, Leaf):
            parts = []
            for l in node.literals:
                a = self.atom(l.symbol, tuple(env[x] for x in l.args))
                if isinstance(a, bool):
                    parts.append(a != l.negated)
                else:
                    parts.append(-a if l.negated else a)
            return _mk("or", parts)
        if isinstance(node, (Exists, Forall)):
            op = "or" if isinstance(node, Exists) else "and"
            parts = []
            for e in range(self.size):
                env2 = dict(env)
                env2[node.var] = e
                parts.append(self.ground(node.child, env2))
                if parts[-1] is (op == "or"):
                    break
            return _mk(op, parts)
        if node.family is not None:
            raise FormulaError("cannot ground a generated family")
        op = "and" if isinstance(node, Wedge) else "or"
        return _mk(op, [self.ground(c, env) for c in node.children])


def eval_ground(f, assign: Sequence[int]) -> bool:
    """Truth of a ground formula; ``assign[v]`` is 0/1 for variable v."""
    if f is True or f is False:
        return f
    if isinstance(f, int):
        return bool(assign[f]) if f > 0 else not assign[-f]
    if f[0] == "and":
        return all(eval_ground(p, assign) for p in f[1])
    return any(eval_ground(p, assign) for p in f[1])


def to_cnf(f, next_var: int) -> tuple[list, int]:
    """Clauses implied by ``f`` with one-sided auxiliaries; returns (clauses, next free var).

    Any model of the clauses satisfies ``f`` on the original variables, and any
    assignment satisfying ``f`` extends to a model of the clauses.
    """
    clauses: list = []
    counter = [next_var]

    def clauses_of(g) -> list:
        if g is True:
            return []
        if g is False:
            return [[]]
        if isinstance(g, int):
            return [[g]]
        if g[0] == "and":
            out = []
            for p in g[1]:
                out.extend(clauses_of(p))
            return out
        clause = []
        extra = []
        for p in g[1]:
            if isinstance(p, int):
                clause.append(p)
            else:
                sub = clauses_of(p)
                if len(sub) == 1:
                    clause.extend(sub[0])
                else:
                    a = counter[0]
                    counter[0] += 1
                    clause.append(a)
                    extra.extend([[-a] + c for c in sub])
        return [clause] + extra

    clauses = clauses_of(f)
    return clauses, counter[0]


class Solver:
    """Chronological DPLL with watched literals.

    Branches only on variables ``1..n_decision`` in increasing order, value 0
    first.  Once those are all assigned, ``accept(assign)`` decides.
    """

    def __init__(self, n_vars: int, clauses: list, n_decision: int, accept: Callable):
        self.n = n_vars
        self.n_decision = n_decision
        self.accept = accept
        self.value = [0] * (n_vars + 1)  # 1 true, -1 false, 0 unassigned
        self.trail: list = []
        self.watches: dict = {}
        self.clauses: list = []
        self.units: list = []
        self.empty = False
        self.nodes = 0
        for c in clauses:
            c = list(dict.fromkeys(c))
            if any(-l in c for l in c):
                continue
            if not c:
                self.empty = True
            elif len(c) == 1:
                self.units.append(c[0])
            else:
                idx = len(self.clauses)
                self.clauses.append(c)
                self.watches.setdefault(c[0], []).append(idx)
                self.watches.setdefault(c[1], []).append(idx)

    def _lit_value(self, l):
        v = self.value[abs(l)]
        return v if l > 0 else -v

    def _assign(self, l) -> bool:
        cur = self._lit_value(l)
        if cur == 1:
            return True
        if cur == -1:
            return False
        self.value[abs(l)] = 1 if l > 0 else -1
        self.trail.append(l)
        return True

    def _propagate(self, start: int) -> bool:
        i = start
        while i < len(self.trail):
            p = self.trail[i]
            i += 1
            false_lit = -p
            ws = self.watches.get(false_lit)
            if not ws:
                continue
            keep = []
            j = 0
            conflict = False
            while j < len(ws):
                ci = ws[j]
                j += 1
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self._lit_value(c[0]) == 1:
                    keep.append(ci)
                    continue
                for k in range(2, len(c)):
                    if self._lit_value(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self.watches.setdefault(c[1], []).append(ci)
                        break
                else:
                    keep.append(ci)
                    if self._lit_value(c[0]) == -1:
                        conflict = True
                        keep.extend(ws[j:])
                        break
                    self._assign(c[0])
            self.watches[false_lit] = keep
            if conflict:
                return False
        return True

    def _undo(self, size: int):
        while len(self.trail) > size:
            self.value[abs(self.trail.pop())] = 0

    def solve(self, fixed: Sequence[int] = ()) -> Optional[list]:
        """First accepted assignment in branching order, or ``None``."""
        if self.empty:
            return None
        for l in list(self.units) + list(fixed):
            if not self._assign(l):
                return None
        if not self._propagate(0):
            return None
        stack: list = []  # (var, trail size before decision, flipped)
        while True:
            v = next((x for x in range(1, self.n_decision + 1) if self.value[x] == 0), None)
            ok = True
            if v is None:
                assign = [0] + [1 if self.value[x] == 1 else 0 for x in range(1, self.n + 1)]
                if self.accept(assign):
                    return assign
                ok = False
            else:
                self.nodes += 1
                stack.append((v, len(self.trail), False))
                self._assign(-v)
                ok = self._propagate(len(self.trail) - 1)
            while not ok:
                while stack and stack[-1][2]:
                    _, size, _ = stack.pop()
                    self._undo(size)
                if not stack:
                    return None
                v, size, _ = stack.pop()
                self._undo(size)
                self.nodes += 1
                stack.append((v, size, True))
                self._assign(v)
                ok = self._propagate(len(self.trail) - 1)


@dataclass
class GroundProblem:
    formula: object
    slots: list          # variable k+1 <-> slots[k] = (symbol, row)
    size: int
    vocab: Vocabulary
    fixed_tables: dict   # symbol -> set of rows known true


def _ground_problem(axioms, vocab: Vocabulary, size: int, known: Callable, slot_list: list) -> GroundProblem:
    var_of = {s: k + 1 for k, s in enumerate(slot_list)}

    def atom(symbol, args):
        if symbol == EQUALITY:
            return args[0] == args[1]
        v = var_of.get((symbol, args))
        if v is not None:
            return v
        return known(symbol, args)

    g = Grounder(size, atom)
    f = _mk("and", [g.ground(ax, {}) for ax in axioms])
    return GroundProblem(f, slot_list, size, vocab, {})


def _solve_problem(problem: GroundProblem, fixed: Sequence[int] = ()) -> tuple[Optional[list], int]:
    n_dec = len(problem.slots)
    clauses, top = to_cnf(problem.formula, n_dec + 1)

    def accept(assign):
        return eval_ground(problem.formula, assign)

    solver = Solver(top - 1, clauses, n_dec, accept)
    sol = solver.solve(fixed)
    return sol, solver.nodes


def _solve_prefix(args):
    problem, prefix = args
    return _solve_problem(problem, prefix)


def _solve_partitioned(problem: GroundProblem, jobs: int) -> tuple[Optional[list], int]:
    """Split on the first few branching variables; the lexicographically first
    part with a solution gives the overall first solution."""
    n_dec = len(problem.slots)
    bits = 0
    while (1 << bits) < jobs and bits < n_dec:
        bits += 1
    if jobs <= 1 or bits == 0:
        return _solve_problem(problem)
    prefixes = []
    for combo in itertools.product((0, 1), repeat=bits):
        prefixes.append([(k + 1) if b else -(k + 1) for k, b in enumerate(combo)])
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_solve_prefix, [(problem, p) for p in prefixes]))
    nodes = sum(r[1] for r in results)
    for sol, _ in results:
        if sol is not None:
            return sol, nodes
    return None, nodes


def _tables_from(assign, slots) -> dict:
    tables: dict = {}
    for k, (s, row) in enumerate(slots):
        if assign[k + 1]:
            tables.setdefault(s, []).append(row)
    return tables


def pc_member(m: FinStructure, defn: PCDefinition, jobs: int = 1) -> Verdict:
    """Exact PC membership: the first expansion of ``m`` satisfying every axiom."""
    if defn.sort_predicate is not None:
        raise PCError("definition has a sort predicate; use pc_prime_member")
    if m.vocab != defn.base:
        if not (m.vocab.issubset(defn.base) and defn.base.issubset(m.vocab)):
            raise PCError(f"structure vocabulary {m.vocab.names} does not match base {defn.base.names}")
    slots = _slots(defn.new_symbols, m.size)
    problem = _ground_problem(defn.axioms, defn.extended, m.size, lambda s, a: m.holds(s, a), slots)
    sol, nodes = _solve_partitioned(problem, jobs)
    stats = {"search-nodes": nodes, "unknown-entries": len(slots)}
    if sol is None:
        return Verdict("non_member", None, stats)
    witness = m.expand(defn.extended, _tables_from(sol, slots))
    return Verdict("member", witness, stats)


def _forces_total_sort(defn: PCDefinition) -> bool:
    p = defn.sort_predicate
    for ax in defn.axioms:
        if (isinstance(ax, Forall) and isinstance(ax.child, Leaf) and len(ax.child.literals) == 1):
            l = ax.child.literals[0]
            if l == Literal(False, p, (ax.var,)):
                return True
    return False


def pc_prime_member(m: FinStructure, defn: PCDefinition, extra_budget: int = 0, jobs: int = 1) -> Verdict:
    """PC' membership with at most ``extra_budget`` elements outside the sort.

    A structure of size ``|M| + e`` has P true exactly on the first ``|M|``
    elements and agrees with ``m`` there; base-table entries touching the
    extra elements and all other new tables are searched.
    """
    p = defn.sort_predicate
    if p is None:
        raise PCError("definition has no sort predicate")
    if not (m.vocab.issubset(defn.base) and defn.base.issubset(m.vocab)):
        raise PCError(f"structure vocabulary {m.vocab.names} does not match base {defn.base.names}")
    n = m.size
    total_nodes = 0
    others = tuple((s, a) for s, a in defn.new_symbols if s != p)
    for extra in range(extra_budget + 1):
        size = n + extra
        slots = [(s, row) for s, a in defn.base for row in itertools.product(range(size), repeat=a)
                 if any(e >= n for e in row)]
        slots += _slots(others, size)

        def known(symbol, args, n=n):
            if symbol == p:
                return args[0] < n
            return m.holds(symbol, args)

        problem = _ground_problem(defn.axioms, defn.extended, size, known, slots)
        sol, nodes = _solve_partitioned(problem, jobs)
        total_nodes += nodes
        if sol is not None:
            tables = {s: list(m.table(s)) for s in defn.base.names}
            for s, rows in _tables_from(sol, slots).items():
                tables.setdefault(s, []).extend(rows)
            tables[p] = [(i,) for i in range(n)]
            witness = FinStructure(defn.extended, size, tables)
            return Verdict("member", witness, {"search-nodes": total_nodes, "size": size})
    stats = {"search-nodes": total_nodes, "budget": extra_budget}
    if _forces_total_sort(defn):
        return Verdict("non_member", None, stats, note="an axiom makes the sort total so no extension can help")
    return Verdict("unknown", None, stats, note="budget exhausted without a witness")


def as_pc_prime(defn: PCDefinition, predicate: str = "P") -> PCDefinition:
    """The same class as a PC' definition whose sort is the whole universe."""
    if predicate in defn.extended.names:
        raise PCError(f"{predicate} is already used")
    ext = defn.extended.union(Vocabulary([(predicate, 1)]))
    total = Forall(0, Leaf((Literal(False, predicate, (0,)),)))
    return PCDefinition(defn.base, ext, defn.axioms + (total,), predicate, name=defn.name)


# -- substructure closure ----------------------------------------------------------

@dataclass
class ClosureReport:
    counterexamples: list  # (structure, subset, substructure)
    checked: int

    @property
    def closed(self) -> bool:
        return not self.counterexamples

    def to_sexpr(self):
        out = ["closure", ["checked", self.checked], ["closed", self.closed]]
        for m, subset, sub in self.counterexamples:
            out.append(["counterexample", structure_to_sexpr(m), ["subset"] + list(subset)])
        return out


def membership_test(spec) -> Callable[[FinStructure], bool]:
    if callable(spec) and not isinstance(spec, PCDefinition):
        return spec
    if isinstance(spec, PCDefinition):
        return lambda m: pc_member(m, spec).member
    return lambda m: evaluate(spec, m)


def closed_under_substructures(spec, family: Iterable[FinStructure], first_only: bool = False) -> ClosureReport:
    """Members of ``family`` that have a non-member substructure."""
    test = membership_test(spec)
    cache: dict = {}

    def member(s):
        hit = cache.get(s)
        if hit is None:
            hit = cache[s] = test(s)
        return hit

    out, checked = [], 0
    for m in family:
        checked += 1
        if not member(m):
            continue
        for subset, sub in subsets_with_substructures(m):
            if not member(sub):
                out.append((m, subset, sub))
                if first_only:
                    break
    return ClosureReport(out, checked)
