"""Ontology reasoning: normal form, entailment closures, word structure, depth.

The closure tables answer every atomic entailment judgment the rest of the
toolkit needs:

* ``T |= tau(x) -> tau'(x)``  (basic concept subsumption, including guards),
* ``T |= rho(x,y) -> sigma(x,y)``  (role subsumption),
* ``T |= rho(x,x)``  (entailed reflexivity).

The word structure W_T (sequences of roles labelling chase nulls) is derived
from the closures: a word rho_1...rho_n is admissible iff no rho_i is entailed
reflexive and each consecutive pair satisfies "an incoming rho_i implies an
outgoing rho_{i+1}" without rho_{i+1} being forced back onto the same edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .core_syntax import (
    Atom,
    Axiom,
    Concept,
    ConceptName,
    DataInstance,
    DisjointConcepts,
    DisjointRoles,
    Exists,
    Irreflexive,
    Ontology,
    Reflexive,
    Role,
    SubClass,
    SubRole,
    Top,
)

Word = tuple[Role, ...]

EPSILON: Word = ()


class InfiniteDepthError(ValueError):
    """Raised when an operation requires a finite-depth ontology."""


# ---------------------------------------------------------------------------
# Normal form
# ---------------------------------------------------------------------------


def _role_sort_key(role: Role) -> tuple[str, bool]:
    return (role.name, role.inverse)


def normalize(onto: Ontology) -> Ontology:
    """Add, per role, a guard concept equivalent to "has a successor via the role".

    Existing user-written guards (a concept name with both inclusion directions
    already present) are adopted rather than duplicated, so the operation is
    idempotent and round-trips through text form.  Freshly added guard axioms
    are recorded so size and depth accounting can discount them.
    """
    if onto.normalized:
        return onto

    axioms = list(onto.axioms)
    inclusion_pairs = {(ax.sub, ax.sup) for ax in axioms if isinstance(ax, SubClass)}
    taken = set(onto.concept_names)
    generated_names: dict[Role, str] = {}
    generated_axioms: list[Axiom] = []

    for role in sorted(onto.roles, key=_role_sort_key):
        target = Exists(role)
        adopted = sorted(
            c.name
            for (c, e) in inclusion_pairs
            if isinstance(c, ConceptName) and e == target and (target, c) in inclusion_pairs
        )
        if adopted:
            generated_names[role] = adopted[0]
            continue
        base = f"A_{role.name}_inv" if role.inverse else f"A_{role.name}"
        name = base
        n = 2
        while name in taken:
            name = f"{base}_{n}"
            n += 1
        taken.add(name)
        generated_names[role] = name
        fresh = [SubClass(ConceptName(name), target), SubClass(target, ConceptName(name))]
        axioms.extend(fresh)
        generated_axioms.extend(fresh)

    normalized = Ontology(tuple(axioms), normalized=True, generated_names=generated_names)
    object.__setattr__(normalized, "generated_axioms", frozenset(generated_axioms))
    return normalized


def generated_axioms_of(onto: Ontology) -> frozenset[Axiom]:
    """The axioms added (not adopted) by normalization; empty otherwise."""
    return getattr(onto, "generated_axioms", frozenset())


# ---------------------------------------------------------------------------
# Closure tables
# ---------------------------------------------------------------------------


@dataclass
class ClosureTables:
    """Reflexive-transitive entailment closures over the ontology vocabulary."""

    concept_sups: dict[Concept, frozenset[Concept]]
    role_sups: dict[Role, frozenset[Role]]
    reflexive_roles: frozenset[Role]
    basic_concepts: tuple[Concept, ...]
    roles: tuple[Role, ...]

    # -- judgments ----------------------------------------------------------

    def sups_of_concept(self, c: Concept) -> frozenset[Concept]:
        out = self.concept_sups.get(c)
        if out is None:
            out = frozenset({c, Top()}) if not isinstance(c, Top) else frozenset({c})
        return out

    def sups_of_role(self, r: Role) -> frozenset[Role]:
        return self.role_sups.get(r, frozenset({r}))

    def sub_concept(self, c1: Concept, c2: Concept) -> bool:
        """T |= c1(x) -> c2(x)."""
        return c2 in self.sups_of_concept(c1)

    def sub_role(self, r1: Role, r2: Role) -> bool:
        """T |= r1(x,y) -> r2(x,y)."""
        return r2 in self.sups_of_role(r1)

    def is_reflexive(self, r: Role) -> bool:
        """T |= r(x,x)."""
        return r in self.reflexive_roles

    def concepts_below(self, c: Concept) -> list[Concept]:
        """All basic concepts tau with T |= tau -> c, in deterministic order."""
        return [t for t in self.basic_concepts if self.sub_concept(t, c)]

    def roles_below(self, r: Role) -> list[Role]:
        """All roles sigma with T |= sigma -> r, in deterministic order."""
        return [s for s in self.roles if self.sub_role(s, r)]

    def incoming_implies_concept(self, r: Role, name: str) -> bool:
        """T |= (exists y r(y,x)) -> name(x): an incoming r-edge forces the concept."""
        return self.sub_concept(Exists(r.inv), ConceptName(name))


def build_closures(onto: Ontology) -> ClosureTables:
    """Least reflexive-transitive closures of the axiom graph.

    Rules: declared inclusions; role inclusions propagated to inverses and
    lifted to existentials (rho <= sigma gives exists rho <= exists sigma);
    everything below Top; Top below exists rho for entailed-reflexive rho
    (every element has a rho-successor, namely itself); reflexivity closed
    upward under role inclusion and inversion.
    """
    roles = sorted(onto.roles, key=_role_sort_key)

    role_edges: dict[Role, set[Role]] = {r: {r} for r in roles}
    for ax in onto.axioms:
        if isinstance(ax, SubRole):
            for sub, sup in ((ax.sub, ax.sup), (ax.sub.inv, ax.sup.inv)):
                role_edges.setdefault(sub, {sub}).add(sup)
                role_edges.setdefault(sup, {sup})
    role_sups = {r: frozenset(_reachable(r, role_edges)) for r in role_edges}

    reflexive: set[Role] = set()
    for ax in onto.axioms:
        if isinstance(ax, Reflexive):
            reflexive.add(ax.role)
            reflexive.add(ax.role.inv)
    reflexive = {s for r in reflexive for s in role_sups.get(r, {r})}
    reflexive |= {r.inv for r in reflexive}

    top = Top()
    concepts: list[Concept] = [top]
    concepts += [ConceptName(n) for n in sorted(onto.concept_names)]
    concepts += [Exists(r) for r in roles]
    concept_edges: dict[Concept, set[Concept]] = {c: {c, top} for c in concepts}
    concept_edges[top] = {top}
    for ax in onto.axioms:
        if isinstance(ax, SubClass):
            concept_edges.setdefault(ax.sub, {ax.sub, top}).add(ax.sup)
            concept_edges.setdefault(ax.sup, {ax.sup, top})
    for r, sups in role_sups.items():
        for s in sups:
            concept_edges.setdefault(Exists(r), {Exists(r), top}).add(Exists(s))
    for r in reflexive:
        concept_edges[top].add(Exists(r))
    concept_sups = {c: frozenset(_reachable(c, concept_edges)) for c in concept_edges}

    all_concepts = tuple(sorted(concept_edges, key=str))
    return ClosureTables(
        concept_sups=concept_sups,
        role_sups=role_sups,
        reflexive_roles=frozenset(reflexive),
        basic_concepts=all_concepts,
        roles=tuple(roles),
    )


def _reachable(start, edges: Mapping) -> set:
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in edges.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


# ---------------------------------------------------------------------------
# Word structure and depth
# ---------------------------------------------------------------------------


@dataclass
class RoleSuccessorGraph:
    """Letter-successor structure of W_T: which role can follow which."""

    nodes: tuple[Role, ...]
    edges: dict[Role, tuple[Role, ...]]
    startable: frozenset[Role]

    def successors(self, r: Role) -> tuple[Role, ...]:
        return self.edges.get(r, ())


def build_role_graph(onto: Ontology, tables: ClosureTables | None = None) -> RoleSuccessorGraph:
    tables = tables or build_closures(onto)
    nodes = tuple(r for r in tables.roles if not tables.is_reflexive(r))
    edges: dict[Role, tuple[Role, ...]] = {}
    for r in nodes:
        succ = tuple(
            s
            for s in nodes
            if tables.sub_concept(Exists(r.inv), Exists(s)) and not tables.sub_role(r, s.inv)
        )
        edges[r] = succ
    startable = frozenset(
        r for r in nodes if any(tables.sub_concept(t, Exists(r)) for t in tables.basic_concepts)
    )
    return RoleSuccessorGraph(nodes, edges, startable)


def role_successors(onto: Ontology, role: Role) -> set[Role]:
    """Roles that may follow ``role`` in a word of W_T."""
    return set(build_role_graph(onto).successors(role))


@dataclass(frozen=True, order=True)
class Depth:
    """Ontology depth: maximal word length, the depth-0 convention, or infinity."""

    finite: bool
    value: int = 0

    @classmethod
    def of(cls, value: int) -> "Depth":
        return cls(True, value)

    @classmethod
    def infinite(cls) -> "Depth":
        return cls(False)

    @property
    def is_infinite(self) -> bool:
        return not self.finite

    def __str__(self) -> str:
        return str(self.value) if self.finite else "inf"


def depth(onto: Ontology, tables: ClosureTables | None = None) -> Depth:
    """Depth of the ontology.

    Depth 0 by convention when no non-generated axiom has an existential on the
    right-hand side (guard axioms added by normalization do not count; guards
    the user wrote out count).  Otherwise the longest word in W_T, or infinity
    when the letter-successor graph has a reachable cycle.
    """
    generated = generated_axioms_of(onto)
    has_exists_rhs = any(
        isinstance(ax, SubClass) and isinstance(ax.sup, Exists) and ax not in generated
        for ax in onto.axioms
    )
    if not has_exists_rhs:
        return Depth.of(0)

    graph = build_role_graph(onto, tables)
    start = [r for r in graph.nodes if r in graph.startable]
    if not start:
        return Depth.of(0)

    # Longest path from a startable node; infinite iff a cycle is reachable.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {r: WHITE for r in graph.nodes}
    longest: dict[Role, int] = {}

    def visit(node: Role) -> int:
        if color[node] == GRAY:
            raise InfiniteDepthError("cycle in the role successor graph")
        if color[node] == BLACK:
            return longest[node]
        color[node] = GRAY
        best = 1
        for nxt in graph.successors(node):
            best = max(best, 1 + visit(nxt))
        color[node] = BLACK
        longest[node] = best
        return best

    try:
        return Depth.of(max(visit(r) for r in start))
    except InfiniteDepthError:
        return Depth.infinite()


def words(
    onto: Ontology,
    tables: ClosureTables | None = None,
    max_length: int | None = None,
) -> list[Word]:
    """Enumerate W_T sorted by (length, role order).

    Without ``max_length`` the ontology must have finite depth; with it, the
    enumeration is truncated at that word length (usable for any ontology).
    """
    tables = tables or build_closures(onto)
    graph = build_role_graph(onto, tables)
    if max_length is None:
        d = depth(onto, tables)
        if d.is_infinite:
            raise InfiniteDepthError("W_T is infinite; pass max_length to truncate")
        max_length = d.value

    out: list[Word] = []
    frontier: list[Word] = [(r,) for r in sorted(graph.startable, key=_role_sort_key)]
    length = 1
    while frontier and length <= max_length:
        out.extend(frontier)
        frontier = [
            w + (s,) for w in frontier for s in sorted(graph.successors(w[-1]), key=_role_sort_key)
        ]
        length += 1
    return out


# ---------------------------------------------------------------------------
# Ground saturation and consistency
# ---------------------------------------------------------------------------


def saturate(onto: Ontology, data: DataInstance, tables: ClosureTables | None = None) -> DataInstance:
    """Close the data under all entailed ground atoms over its individuals.

    Binary closure first (role subsumption, entailed-reflexive loops), then
    unary closure (concept subsumption from asserted concepts, edge endpoints,
    and Top); unary facts never force new ground binary facts, so one pass of
    each suffices.
    """
    tables = tables or build_closures(onto)
    out = data.copy()

    for pred, a, b in list(data.binary_facts):
        for sup in tables.sups_of_role(Role(pred)):
            out.binary_facts.add(sup.apply(a, b))
    inds = out.individuals
    for r in tables.reflexive_roles:
        if not r.inverse:
            for a in inds:
                out.binary_facts.add((r.name, a, a))

    exists_roles: dict[str, set[Role]] = {a: set() for a in inds}
    for pred, a, b in out.binary_facts:
        exists_roles.setdefault(a, set()).add(Role(pred))
        exists_roles.setdefault(b, set()).add(Role(pred, True))
    asserted: dict[str, set[str]] = {}
    for pred, a in out.unary_facts:
        asserted.setdefault(a, set()).add(pred)

    for a in inds:
        satisfied: set[Concept] = {Top()}
        satisfied.update(ConceptName(n) for n in asserted.get(a, ()))
        satisfied.update(Exists(r) for r in exists_roles.get(a, ()))
        closed: set[Concept] = set()
        for c in satisfied:
            closed.update(tables.sups_of_concept(c))
        for c in closed:
            if isinstance(c, ConceptName):
                out.unary_facts.add((c.name, a))
    return out


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    witness: str | None = None

    def __bool__(self) -> bool:
        return self.consistent


def check_consistency(
    onto: Ontology, data: DataInstance, tables: ClosureTables | None = None
) -> ConsistencyResult:
    """Check that no disjointness or irreflexivity premise fires.

    Covers the saturated ground atoms and, beyond the individuals, the
    anonymous part: a null labelled by a word ending in rho satisfies exactly
    the concepts above "has an incoming rho" (plus Top's consequences), and the
    edge into it satisfies exactly the roles above rho.
    """
    tables = tables or build_closures(onto)
    disjoint_concepts = [ax for ax in onto.axioms if isinstance(ax, DisjointConcepts)]
    disjoint_roles = [ax for ax in onto.axioms if isinstance(ax, DisjointRoles)]
    irreflexive = [ax for ax in onto.axioms if isinstance(ax, Irreflexive)]
    if not (disjoint_concepts or disjoint_roles or irreflexive):
        return ConsistencyResult(True)

    saturated = saturate(onto, data, tables)
    inds = saturated.individuals

    concepts_at: dict[str, set[str]] = {}
    for pred, a in saturated.unary_facts:
        concepts_at.setdefault(a, set()).add(pred)
    for ax in disjoint_concepts:
        for a in sorted(inds):
            if _concept_holds_ground(ax.a, a, concepts_at, saturated) and _concept_holds_ground(
                ax.b, a, concepts_at, saturated
            ):
                return ConsistencyResult(False, f"{ax} violated at {a}")

    pair_roles: dict[tuple[str, str], set[Role]] = {}
    for pred, a, b in saturated.binary_facts:
        pair_roles.setdefault((a, b), set()).add(Role(pred))
        pair_roles.setdefault((b, a), set()).add(Role(pred, True))
    for ax in disjoint_roles:
        for (a, b), rs in sorted(pair_roles.items()):
            if ax.a in rs and ax.b in rs:
                return ConsistencyResult(False, f"{ax} violated at ({a},{b})")
    for ax in irreflexive:
        for a in sorted(inds):
            if ax.role in pair_roles.get((a, a), set()):
                return ConsistencyResult(False, f"{ax} violated at {a}")

    # Anonymous part: letters reachable from the data through the word graph.
    graph = build_role_graph(onto, tables)
    triggered: set[Role] = set()
    for a in sorted(inds):
        entailed = {
            c.role
            for cs in concepts_at.get(a, set())
            for c in tables.sups_of_concept(ConceptName(cs))
            if isinstance(c, Exists)
        }
        entailed.update(
            c.role for c in tables.sups_of_concept(Top()) if isinstance(c, Exists)
        )
        triggered.update(r for r in entailed if r in graph.edges)
    frontier = list(triggered)
    while frontier:
        r = frontier.pop()
        for s in graph.successors(r):
            if s not in triggered:
                triggered.add(s)
                frontier.append(s)

    for rho in sorted(triggered, key=_role_sort_key):
        null_concepts = set(tables.sups_of_concept(Exists(rho.inv)))
        null_concepts.update(tables.sups_of_concept(Top()))
        for ax in disjoint_concepts:
            if ax.a in null_concepts and ax.b in null_concepts:
                return ConsistencyResult(False, f"{ax} violated at an anonymous {rho}-successor")
        edge_roles = tables.sups_of_role(rho)
        for ax in disjoint_roles:
            if ax.a in edge_roles and ax.b in edge_roles:
                return ConsistencyResult(
                    False, f"{ax} violated on the edge to an anonymous {rho}-successor"
                )

    if inds:
        for ax in irreflexive:
            if tables.is_reflexive(ax.role):
                return ConsistencyResult(False, f"{ax} contradicts entailed reflexivity")
        for ax in disjoint_roles:
            if tables.is_reflexive(ax.a) and tables.is_reflexive(ax.b):
                return ConsistencyResult(False, f"{ax} violated on self-loops")

    return ConsistencyResult(True)


def _concept_holds_ground(
    c: Concept, a: str, concepts_at: dict[str, set[str]], data: DataInstance
) -> bool:
    if isinstance(c, Top):
        return True
    if isinstance(c, ConceptName):
        return c.name in concepts_at.get(a, set())
    return any(x == a for x, _y in data.role_pairs(c.role))
