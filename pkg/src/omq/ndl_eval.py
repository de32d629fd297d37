"""Bottom-up evaluation of nonrecursive datalog over data instances.

Answers follow the closure semantics: every variable ranges over the
individuals of the instance, equality atoms unify variables, and the virtual
unary predicate `adom` holds of every individual.  The main evaluator
materializes IDB predicates in topological order with greedy hash joins; a
deliberately simple clause-by-clause fixpoint evaluator is kept alongside as
an independent oracle.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core_syntax import Atom, DataInstance, Eq, NdlClause, NdlQuery, TOP_PRED


@dataclass
class EvalRun:
    """Outcome of one evaluation: answers plus per-predicate tuple counts."""

    answers: frozenset[tuple[str, ...]] | bool
    tuples_per_predicate: dict[str, int]
    wall_time: float


def stats(run: EvalRun) -> dict:
    return {
        "tuples_per_predicate": dict(run.tuples_per_predicate),
        "wall_time": run.wall_time,
    }


def stats_csv(run: EvalRun) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["predicate", "tuples"])
    for pred in sorted(run.tuples_per_predicate):
        writer.writerow([pred, run.tuples_per_predicate[pred]])
    writer.writerow(["wall_time_seconds", f"{run.wall_time:.6f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Relations and joins
# ---------------------------------------------------------------------------


@dataclass
class _Rel:
    cols: tuple[str, ...]
    rows: set[tuple[str, ...]]


def _edb_relations(data: DataInstance) -> dict[str, set[tuple[str, ...]]]:
    rels: dict[str, set[tuple[str, ...]]] = {}
    for pred, a in data.unary_facts:
        rels.setdefault(pred, set()).add((a,))
    for pred, a, b in data.binary_facts:
        rels.setdefault(pred, set()).add((a, b))
    rels[TOP_PRED] = {(a,) for a in data.individuals}
    return rels


def _atom_to_rel(
    atom: Atom,
    rows: set[tuple[str, ...]],
    bound: Mapping[str, str],
) -> _Rel:
    """Filter an atom's base relation by constants and repeated variables."""
    cols: list[str] = []
    checks: list[tuple[int, str]] = []  # position must equal constant
    dups: list[tuple[int, int]] = []  # positions must be equal
    seen: dict[str, int] = {}
    for i, v in enumerate(atom.args):
        if v in bound:
            checks.append((i, bound[v]))
        elif v in seen:
            dups.append((seen[v], i))
        else:
            seen[v] = i
            cols.append(v)
    keep = [i for i, v in enumerate(atom.args) if v not in bound and seen.get(v) == i]
    out = set()
    for row in rows:
        if any(row[i] != c for i, c in checks):
            continue
        if any(row[i] != row[j] for i, j in dups):
            continue
        out.add(tuple(row[i] for i in keep))
    return _Rel(tuple(cols), out)


def _join(left: _Rel, right: _Rel) -> _Rel:
    shared = [c for c in right.cols if c in left.cols]
    new_cols = left.cols + tuple(c for c in right.cols if c not in left.cols)
    lpos = [left.cols.index(c) for c in shared]
    rpos = [right.cols.index(c) for c in shared]
    rkeep = [i for i, c in enumerate(right.cols) if c not in shared]
    index: dict[tuple, list[tuple]] = {}
    for row in right.rows:
        index.setdefault(tuple(row[i] for i in rpos), []).append(
            tuple(row[i] for i in rkeep)
        )
    rows = set()
    for row in left.rows:
        key = tuple(row[i] for i in lpos)
        for ext in index.get(key, ()):
            rows.add(row + ext)
    return _Rel(new_cols, rows)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, v: str) -> str:
        self.parent.setdefault(v, v)
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative: the smaller name
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


def _clause_rows(
    clause: NdlClause,
    relations: Mapping[str, set[tuple[str, ...]]],
    individuals: set[str],
    prebound: Mapping[str, str],
) -> set[tuple[str, ...]]:
    """All head tuples derivable from one clause given current relations."""
    uf = _UnionFind()
    for eq in clause.body_eqs:
        uf.union(eq.lhs, eq.rhs)
    for v in clause.variables:
        uf.find(v)

    # Constants reach a class through prebound parameter names.
    const_of: dict[str, str] = {}
    for v, c in prebound.items():
        if v in uf.parent:
            rep = uf.find(v)
            if rep in const_of and const_of[rep] != c:
                return set()
            const_of[rep] = c
    for rep, c in const_of.items():
        if c not in individuals:
            return set()

    atoms = [
        Atom(a.pred, tuple(uf.find(v) for v in a.args)) for a in clause.body_atoms
    ]
    covered = {v for a in atoms for v in a.args}
    head_reps = tuple(uf.find(v) for v in clause.head.args)
    for rep in dict.fromkeys(list(head_reps)):
        if rep not in covered and rep not in const_of:
            atoms.append(Atom(TOP_PRED, (rep,)))
            covered.add(rep)
    # Classes bound by equalities alone (no atom, no head slot, no constant)
    # still range over the individuals; they only matter when there are none.
    dangling = {
        uf.find(v) for v in clause.variables
    } - covered - set(const_of) - set(head_reps)
    if dangling and not individuals:
        return set()

    rels = [
        _atom_to_rel(a, relations.get(a.pred, set()), const_of) for a in atoms
    ]
    if not rels:
        return {tuple(const_of.get(r, r) for r in head_reps)} if all(
            r in const_of for r in head_reps
        ) else set()

    order = list(range(len(rels)))
    order.sort(key=lambda i: len(rels[i].rows))
    current = rels[order[0]]
    pending = order[1:]
    while pending:
        joinable = [i for i in pending if set(rels[i].cols) & set(current.cols)]
        pool = joinable or pending
        nxt = min(pool, key=lambda i: len(rels[i].rows))
        pending.remove(nxt)
        current = _join(current, rels[nxt])
        if not current.rows:
            return set()

    pos = {c: i for i, c in enumerate(current.cols)}
    out = set()
    for row in current.rows:
        out.add(
            tuple(
                const_of[r] if r in const_of else row[pos[r]] for r in head_reps
            )
        )
    return out


# ---------------------------------------------------------------------------
# Program-level evaluation
# ---------------------------------------------------------------------------


def _check_arities(ndl: NdlQuery, data: DataInstance) -> None:
    data_arity: dict[str, int] = {}
    for pred, _a in data.unary_facts:
        data_arity[pred] = 1
    for pred, _a, _b in data.binary_facts:
        if data_arity.get(pred, 2) != 2:
            raise ValueError(f"predicate {pred} used with arities 1 and 2 in data")
        data_arity[pred] = 2
    data_arity[TOP_PRED] = 1
    for pred in sorted(ndl.edb_predicates):
        arity = ndl.arity_of(pred)
        if pred in data_arity and data_arity[pred] != arity:
            raise ValueError(
                f"EDB predicate {pred}: program arity {arity}, data arity {data_arity[pred]}"
            )


def _stratify(ndl: NdlQuery) -> list[str]:
    """IDB predicates in dependence (topological) order; error on recursion."""
    deps: dict[str, set[str]] = {p: set() for p in ndl.idb_predicates}
    for clause in ndl.clauses:
        for a in clause.body_atoms:
            if a.pred in deps:
                deps[clause.head.pred].add(a.pred)
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(p: str) -> None:
        if state.get(p) == 2:
            return
        if state.get(p) == 1:
            raise ValueError(f"recursive program: cycle through {p}")
        state[p] = 1
        for d in sorted(deps[p]):
            visit(d)
        state[p] = 2
        order.append(p)

    for p in sorted(deps):
        visit(p)
    return order


def run_evaluation(
    ndl: NdlQuery,
    data: DataInstance,
    candidate: Sequence[str] | None = None,
) -> EvalRun:
    """Materialize the program bottom-up; optionally pre-bind the goal tuple.

    With a candidate, parameter variables are grounded to the candidate values
    throughout (per-clause, at declared parameter positions of the head) and
    the result is a boolean.  Programs without full goal-parameter metadata
    fall back to full evaluation plus a membership check.
    """
    _check_arities(ndl, data)
    start = time.perf_counter()
    individuals = set(data.individuals)
    relations = _edb_relations(data)

    goal_params = ndl.params.get(ndl.goal_pred, ())
    groundable = (
        candidate is not None
        and tuple(goal_params) == tuple(range(ndl.goal_arity))
    )
    global_binding: dict[str, str] = {}
    if groundable and candidate is not None:
        if len(candidate) != ndl.goal_arity:
            raise ValueError("candidate arity does not match the goal")
        goal_clauses = ndl.clauses_for(ndl.goal_pred)
        if goal_clauses:
            names = goal_clauses[0].head.args
            global_binding = dict(zip(names, candidate))

    def clause_binding(clause: NdlClause) -> dict[str, str]:
        if not global_binding:
            return {}
        out: dict[str, str] = {}
        positions = ndl.params.get(clause.head.pred, ())
        for i in positions:
            name = clause.head.args[i]
            if name in global_binding:
                out[name] = global_binding[name]
        return out

    for pred in _stratify(ndl):
        rows: set[tuple[str, ...]] = set()
        for clause in ndl.clauses_for(pred):
            rows |= _clause_rows(clause, relations, individuals, clause_binding(clause))
        relations[pred] = rows

    goal_rows = relations.get(ndl.goal_pred, set())
    counts = {p: len(relations.get(p, ())) for p in sorted(ndl.idb_predicates)}
    elapsed = time.perf_counter() - start

    if candidate is not None:
        tup = tuple(candidate)
        return EvalRun(tup in goal_rows, counts, elapsed)
    return EvalRun(frozenset(goal_rows), counts, elapsed)


def evaluate(
    ndl: NdlQuery,
    data: DataInstance,
    candidate: Sequence[str] | None = None,
) -> frozenset[tuple[str, ...]] | bool:
    """Goal tuples of the program over the data (or a boolean for a candidate)."""
    return run_evaluation(ndl, data, candidate).answers


# ---------------------------------------------------------------------------
# Naive fixpoint oracle
# ---------------------------------------------------------------------------


def naive_evaluate(ndl: NdlQuery, data: DataInstance) -> frozenset[tuple[str, ...]]:
    """Clause-by-clause fixpoint with plain backtracking matching.

    Independent of the join machinery above; intended as a small-scale oracle
    (it also terminates on recursive programs, by saturation).
    """
    _check_arities(ndl, data)
    individuals = sorted(data.individuals)
    facts: set[tuple[str, tuple[str, ...]]] = {
        (pred, args) for pred, args in _ground_atoms(data)
    }

    def match(
        body_atoms: list[Atom],
        eqs: list[Eq],
        binding: dict[str, str],
        free_vars: list[str],
    ) -> Iterable[dict[str, str]]:
        if body_atoms:
            atom, rest = body_atoms[0], body_atoms[1:]
            for pred, args in facts:
                if pred != atom.pred or len(args) != len(atom.args):
                    continue
                new = dict(binding)
                ok = True
                for v, c in zip(atom.args, args):
                    if new.get(v, c) != c:
                        ok = False
                        break
                    new[v] = c
                if ok:
                    yield from match(rest, eqs, new, free_vars)
            return
        pending = [e for e in eqs if e.lhs in binding and e.rhs in binding]
        if any(binding[e.lhs] != binding[e.rhs] for e in pending):
            return
        todo = [v for v in free_vars if v not in binding]
        if not todo:
            if all(binding[e.lhs] == binding[e.rhs] for e in eqs):
                yield binding
            return
        v = todo[0]
        for c in individuals:
            new = dict(binding)
            new[v] = c
            yield from match([], eqs, new, free_vars)

    changed = True
    while changed:
        changed = False
        for clause in ndl.clauses:
            # adom facts are part of the fact set, so body atoms over the
            # active-domain predicate match like any other atom.
            eqs = list(clause.body_eqs)
            free = sorted(
                set(clause.head.args) | {v for e in eqs for v in (e.lhs, e.rhs)}
            )
            derived = [
                (clause.head.pred, tuple(binding[v] for v in clause.head.args))
                for binding in match(list(clause.body_atoms), eqs, {}, free)
            ]
            for fact in derived:
                if fact not in facts:
                    facts.add(fact)
                    changed = True
    return frozenset(
        args
        for pred, args in facts
        if pred == ndl.goal_pred and len(args) == ndl.goal_arity
    )


def _ground_atoms(data: DataInstance) -> Iterable[tuple[str, tuple[str, ...]]]:
    for pred, a in data.unary_facts:
        yield pred, (a,)
    for pred, a, b in data.binary_facts:
        yield pred, (a, b)
    for a in data.individuals:
        yield TOP_PRED, (a,)
