"""Shared test utilities: fixture loading, random inputs, program isomorphism."""

from __future__ import annotations

import random
from pathlib import Path

from omq import (
    Atom,
    ConjunctiveQuery,
    DataInstance,
    Eq,
    NdlClause,
    NdlQuery,
    Ontology,
    parse_cq,
    parse_data,
    parse_ndl,
    parse_ontology,
)

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def zoo_ontology() -> Ontology:
    return parse_ontology(fixture_text("zoo.owl"))


def zoo_query() -> ConjunctiveQuery:
    return parse_cq(fixture_text("zoo.cq"))


def golden_ndl(name: str) -> NdlQuery:
    return parse_ndl(fixture_text(name))


# ---------------------------------------------------------------------------
# Random inputs (all driven by a caller-supplied random.Random)
# ---------------------------------------------------------------------------

ROLES = ("R", "S", "P")
CONCEPTS = ("A", "B", "C")


def random_tree_cq(
    rng: random.Random,
    n_vars: int,
    n_extra_unary: int = 0,
    n_answers: int = 0,
    max_leaves: int | None = None,
) -> ConjunctiveQuery:
    """A connected tree-shaped CQ; with max_leaves, the Gaifman tree keeps
    at most that many leaves (attachment points restricted to path ends)."""
    variables = [f"x{i}" for i in range(n_vars)]
    atoms: set[Atom] = set()
    degree = {v: 0 for v in variables}
    for i in range(1, n_vars):
        current = variables[:i]
        pool = current
        if max_leaves is not None and i >= 2:
            # attaching at a leaf keeps the leaf count; attaching at an
            # internal node adds a leaf
            n_leaves = sum(1 for v in current if degree[v] <= 1)
            if n_leaves >= max_leaves:
                pool = [v for v in current if degree[v] <= 1]
        a, b = rng.choice(pool), variables[i]
        degree[a] += 1
        degree[b] += 1
        pair = (a, b) if rng.random() < 0.5 else (b, a)
        atoms.add(Atom(rng.choice(ROLES), pair))
    for _ in range(n_extra_unary):
        atoms.add(Atom(rng.choice(CONCEPTS), (rng.choice(variables),)))
    return ConjunctiveQuery(frozenset(atoms), tuple(variables[:n_answers]))


_AXIOM_POOL: list[str] = []
for _r in ROLES:
    for _c in CONCEPTS:
        _AXIOM_POOL.append(f"{_c} SubClassOf exists {_r}")
        _AXIOM_POOL.append(f"{_c} SubClassOf exists inv {_r}")
        _AXIOM_POOL.append(f"exists {_r} SubClassOf {_c}")
        _AXIOM_POOL.append(f"exists inv {_r} SubClassOf {_c}")
    for _s in ROLES:
        if _r != _s:
            _AXIOM_POOL.append(f"{_r} SubPropertyOf {_s}")
            _AXIOM_POOL.append(f"{_r} SubPropertyOf inv {_s}")
for _c in CONCEPTS:
    for _d in CONCEPTS:
        if _c != _d:
            _AXIOM_POOL.append(f"{_c} SubClassOf {_d}")


def random_ontology(rng: random.Random, n_axioms: tuple[int, int] = (2, 6)) -> Ontology:
    n = rng.randint(*n_axioms)
    return parse_ontology("\n".join(rng.sample(_AXIOM_POOL, n)))


def random_ontology_of_depth(
    rng: random.Random, max_depth: int, n_axioms: tuple[int, int] = (2, 6)
) -> Ontology:
    """Rejection-sample ontologies until the full-existential depth is finite
    and at most max_depth."""
    from omq import depth
    from omq.ql_reasoner import build_closures

    while True:
        onto = random_ontology(rng, n_axioms)
        d = depth(onto, build_closures(onto))
        if not d.is_infinite and d.value <= max_depth:
            return onto


def random_data(
    rng: random.Random,
    n_individuals: int,
    roles=ROLES,
    concepts=CONCEPTS,
    density: int = 3,
) -> DataInstance:
    individuals = [f"e{i}" for i in range(n_individuals)]
    lines = []
    for _ in range(rng.randint(1, density * n_individuals)):
        lines.append(
            f"{rng.choice(roles)}({rng.choice(individuals)},{rng.choice(individuals)})."
        )
    for _ in range(rng.randint(1, 2 * n_individuals)):
        lines.append(f"{rng.choice(concepts)}({rng.choice(individuals)}).")
    return parse_data("\n".join(lines))


def random_ndl(rng: random.Random, n_layers: int = 3, linear: bool = False) -> NdlQuery:
    """A random nonrecursive program over the EDB signature ROLES + CONCEPTS.

    Layered construction keeps the dependence graph acyclic; with linear=True
    every body uses at most one IDB atom.
    """
    edb_bin = list(ROLES)
    edb_un = list(CONCEPTS)
    clauses: list[NdlClause] = []
    previous: list[tuple[str, int]] = []  # (pred, arity) of earlier layers
    counter = 0
    for layer in range(n_layers):
        this_layer: list[tuple[str, int]] = []
        for _ in range(rng.randint(1, 2)):
            arity = rng.randint(1, 2)
            pred = f"I{counter}"
            counter += 1
            for _ in range(rng.randint(1, 2)):
                n_vars = rng.randint(arity, arity + 2)
                variables = [f"v{i}" for i in range(n_vars)]
                body: list = []
                idb_budget = 1 if linear else rng.randint(0, 2)
                for _ in range(rng.randint(1, 3)):
                    use_idb = previous and idb_budget > 0 and rng.random() < 0.5
                    if use_idb:
                        p, ar = rng.choice(previous)
                        idb_budget -= 1
                    else:
                        if rng.random() < 0.6:
                            p, ar = rng.choice(edb_bin), 2
                        else:
                            p, ar = rng.choice(edb_un), 1
                    body.append(Atom(p, tuple(rng.choice(variables) for _ in range(ar))))
                if rng.random() < 0.3:
                    body.append(Eq(rng.choice(variables), rng.choice(variables)))
                body_vars = sorted(
                    {v for item in body for v in
                     (item.args if isinstance(item, Atom) else (item.lhs, item.rhs))}
                )
                head_args = tuple(
                    rng.choice(body_vars) for _ in range(arity)
                )
                clauses.append(NdlClause(Atom(pred, head_args), tuple(body)))
            this_layer.append((pred, arity))
        previous.extend(this_layer)
    goal_pred, goal_arity = previous[-1]
    return NdlQuery(tuple(clauses), goal_pred, goal_arity)


# ---------------------------------------------------------------------------
# Structural isomorphism of NDL programs
# ---------------------------------------------------------------------------


def _clause_signature(clause: NdlClause, idb: frozenset[str]) -> tuple:
    edb = sorted(a.pred for a in clause.body_atoms if a.pred not in idb)
    n_idb = sum(1 for a in clause.body_atoms if a.pred in idb)
    return (clause.head.arity, tuple(edb), n_idb, len(clause.body_eqs))


class _VarMap:
    """A bijective variable mapping built incrementally."""

    def __init__(self):
        self.fwd: dict[str, str] = {}
        self.rev: dict[str, str] = {}

    def bind(self, pairs) -> bool:
        staged = list(pairs)
        for x, y in staged:
            if self.fwd.get(x, y) != y or self.rev.get(y, x) != x:
                return False
            self.fwd[x] = y
            self.rev[y] = x
        return True

    def snapshot(self) -> tuple[dict, dict]:
        return dict(self.fwd), dict(self.rev)

    def restore(self, snap: tuple[dict, dict]) -> None:
        self.fwd, self.rev = snap


def _attempts(item, other, idb_a, idb_b, pred_map):
    """Yield (variable pairs, optional predicate-map extension) alignments."""
    if isinstance(item, Eq) and isinstance(other, Eq):
        yield ((item.lhs, other.lhs), (item.rhs, other.rhs)), None
        yield ((item.lhs, other.rhs), (item.rhs, other.lhs)), None
    elif isinstance(item, Atom) and isinstance(other, Atom) and item.arity == other.arity:
        a_idb, b_idb = item.pred in idb_a, other.pred in idb_b
        pairs = tuple(zip(item.args, other.args))
        if a_idb and b_idb:
            image = pred_map.get(item.pred)
            if image is None and other.pred not in pred_map.values():
                yield pairs, (item.pred, other.pred)
            elif image == other.pred:
                yield pairs, None
        elif not a_idb and not b_idb and item.pred == other.pred:
            yield pairs, None


def _match_items(items_a, items_b, idb_a, idb_b, pred_map, theta) -> bool:
    if not items_a:
        return True
    item, *rest_a = items_a
    for k, other in enumerate(items_b):
        for pairs, extension in _attempts(item, other, idb_a, idb_b, pred_map):
            snap = theta.snapshot()
            if extension is not None:
                pred_map[extension[0]] = extension[1]
            if theta.bind(pairs) and _match_items(
                rest_a, items_b[:k] + items_b[k + 1:], idb_a, idb_b, pred_map, theta
            ):
                return True
            theta.restore(snap)
            if extension is not None:
                del pred_map[extension[0]]
    return False


def _match_clause(ca, cb, idb_a, idb_b, pred_map) -> dict | None:
    image = pred_map.get(ca.head.pred)
    if image is None:
        if cb.head.pred in pred_map.values():
            return None
    elif image != cb.head.pred:
        return None
    if ca.head.arity != cb.head.arity:
        return None
    trial = dict(pred_map)
    trial[ca.head.pred] = cb.head.pred
    theta = _VarMap()
    if not theta.bind(zip(ca.head.args, cb.head.args)):
        return None
    if _match_items(list(ca.body), list(cb.body), idb_a, idb_b, trial, theta):
        return trial
    return None


def _match_all(clauses_a, clauses_b, idb_a, idb_b, pred_map) -> bool:
    if not clauses_a:
        return True
    ca, *rest = clauses_a
    sig_a = _clause_signature(ca, idb_a)
    for k, cb in enumerate(clauses_b):
        if _clause_signature(cb, idb_b) != sig_a:
            continue
        extended = _match_clause(ca, cb, idb_a, idb_b, pred_map)
        if extended is not None and _match_all(
            rest, clauses_b[:k] + clauses_b[k + 1:], idb_a, idb_b, extended
        ):
            pred_map.clear()
            pred_map.update(extended)
            return True
    return False


def ndl_isomorphic(a: NdlQuery, b: NdlQuery) -> bool:
    """Equality up to IDB-predicate renaming, per-clause variable renaming,
    clause order and body order; EDB predicate names and all argument orders
    are fixed; equalities match symmetrically."""
    if len(a.clauses) != len(b.clauses) or a.goal_arity != b.goal_arity:
        return False
    idb_a, idb_b = a.idb_predicates, b.idb_predicates
    if len(idb_a) != len(idb_b):
        return False
    return _match_all(
        sorted(a.clauses, key=lambda c: _clause_signature(c, idb_a)),
        list(b.clauses),
        idb_a,
        idb_b,
        {a.goal_pred: b.goal_pred},
    )
