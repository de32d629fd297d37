"""Syntax layer: ontologies, conjunctive queries, data instances, NDL programs.

All values are immutable after construction and hashable where that is useful
(atoms, roles, concepts, clauses), so they can be shared freely, used as dict
keys, and compared structurally in tests.

Text formats (one statement per line unless noted):

* ontology   -- ``<C> SubClassOf <C>``, ``<C> DisjointWith <C>``,
  ``<r> SubPropertyOf <r>``, ``<r> DisjointWith <r>``, ``reflexive <r>``,
  ``irreflexive <r>`` with ``<C> ::= TOP | NAME | exists <r>`` and
  ``<r> ::= NAME | inv NAME``.  ``#`` starts a comment.
* CQ         -- ``q(<vars?>) :- <atom> ("," <atom>)* "."`` with unary/binary atoms.
* data       -- ``NAME(a).`` / ``NAME(a,b).`` lines, ``#`` comments.
* NDL        -- datalog clauses ``Head(...) :- item, item.`` where an item is an
  atom or an equality ``x = y``; the goal is declared by a ``% goal: NAME/arity``
  header line and parameter positions by optional ``% params: NAME i j ...``
  header lines (0-based).  Other ``%`` lines are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

#: Reserved unary EDB predicate naming the active domain (the top concept).
TOP_PRED = "adom"


class ParseError(ValueError):
    """Syntax error in one of the text formats, carrying a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _check_ident(token: str, what: str, line: int | None = None) -> str:
    if not IDENT_RE.match(token):
        raise ParseError(f"{what} {token!r} is not a valid identifier", line)
    return token


# ---------------------------------------------------------------------------
# Roles and concepts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Role:
    """A role P or its inverse P^-."""

    name: str
    inverse: bool = False

    @property
    def inv(self) -> "Role":
        return Role(self.name, not self.inverse)

    def __str__(self) -> str:
        return f"inv {self.name}" if self.inverse else self.name

    def apply(self, x: str, y: str) -> tuple[str, str, str]:
        """Predicate name and argument pair for this role read as rho(x, y)."""
        return (self.name, y, x) if self.inverse else (self.name, x, y)


@dataclass(frozen=True, order=True)
class Top:
    """The top concept; holds of every domain element."""

    def __str__(self) -> str:
        return "TOP"


@dataclass(frozen=True, order=True)
class ConceptName:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    """The concept "has some rho-successor"."""

    role: Role

    def __str__(self) -> str:
        return f"exists {self.role}"


Concept = Union[Top, ConceptName, Exists]


# ---------------------------------------------------------------------------
# Axioms and ontologies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubClass:
    sub: Concept
    sup: Concept

    def __str__(self) -> str:
        return f"{self.sub} SubClassOf {self.sup}"


@dataclass(frozen=True)
class DisjointConcepts:
    a: Concept
    b: Concept

    def __str__(self) -> str:
        return f"{self.a} DisjointWith {self.b}"


@dataclass(frozen=True)
class SubRole:
    sub: Role
    sup: Role

    def __str__(self) -> str:
        return f"{self.sub} SubPropertyOf {self.sup}"


@dataclass(frozen=True)
class DisjointRoles:
    a: Role
    b: Role

    def __str__(self) -> str:
        return f"{self.a} DisjointWith {self.b}"


@dataclass(frozen=True)
class Reflexive:
    role: Role

    def __str__(self) -> str:
        return f"reflexive {self.role}"


@dataclass(frozen=True)
class Irreflexive:
    role: Role

    def __str__(self) -> str:
        return f"irreflexive {self.role}"


Axiom = Union[SubClass, DisjointConcepts, SubRole, DisjointRoles, Reflexive, Irreflexive]


@dataclass(frozen=True)
class Ontology:
    """A set of axioms, kept in source order for diagnostics.

    ``generated_names`` records the guard concept introduced for each role by
    normalization (``A_rho(x) <-> exists y rho(x,y)``); it is empty for parsed,
    un-normalized ontologies.  Axioms mentioning a generated guard are the
    normalization axioms and are discounted where the theory requires it
    (the depth-0 convention).
    """

    axioms: tuple[Axiom, ...]
    normalized: bool = False
    generated_names: Mapping[Role, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "generated_names", dict(self.generated_names))

    @property
    def roles(self) -> frozenset[Role]:
        """R_T: every role occurring in the ontology, closed under inverse."""
        found: set[Role] = set()
        for ax in self.axioms:
            for role in _axiom_roles(ax):
                found.add(Role(role.name, False))
                found.add(Role(role.name, True))
        return frozenset(found)

    @property
    def concept_names(self) -> frozenset[str]:
        names: set[str] = set()
        for ax in self.axioms:
            for c in _axiom_concepts(ax):
                if isinstance(c, ConceptName):
                    names.add(c.name)
        return frozenset(names)

    @property
    def role_names(self) -> frozenset[str]:
        return frozenset(r.name for r in self.roles)

    def guard_name(self, role: Role) -> str:
        """Name of the guard concept A_rho for a role of a normalized ontology."""
        try:
            return self.generated_names[role]
        except KeyError:
            raise KeyError(f"no guard recorded for role {role}") from None

    def is_generated(self, ax: Axiom) -> bool:
        """True for axioms introduced by normalization (guard biconditionals)."""
        guards = set(self.generated_names.values())
        if not guards:
            return False
        return any(
            isinstance(c, ConceptName) and c.name in guards for c in _axiom_concepts(ax)
        )


def _axiom_roles(ax: Axiom) -> Iterator[Role]:
    if isinstance(ax, (SubRole, DisjointRoles)):
        yield from (ax.sub, ax.sup) if isinstance(ax, SubRole) else (ax.a, ax.b)
    elif isinstance(ax, (Reflexive, Irreflexive)):
        yield ax.role
    else:
        for c in _axiom_concepts(ax):
            if isinstance(c, Exists):
                yield c.role


def _axiom_concepts(ax: Axiom) -> Iterator[Concept]:
    if isinstance(ax, SubClass):
        yield ax.sub
        yield ax.sup
    elif isinstance(ax, DisjointConcepts):
        yield ax.a
        yield ax.b


# ---------------------------------------------------------------------------
# Atoms, conjunctive queries, data instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Atom:
    """A predicate atom over variables (in queries/programs) or constants (in data)."""

    pred: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.pred}({','.join(self.args)})"

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True, order=True)
class Eq:
    """An equality body item ``lhs = rhs``."""

    lhs: str
    rhs: str

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


BodyItem = Union[Atom, Eq]


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A CQ as a set of unary/binary atoms with an ordered answer tuple."""

    atoms: frozenset[Atom]
    answer_vars: tuple[str, ...]
    name: str = "q"

    def __post_init__(self):
        for a in self.atoms:
            if a.arity not in (1, 2):
                raise ValueError(f"CQ atom {a} must be unary or binary")
        missing = set(self.answer_vars) - self.variables
        if missing:
            raise ValueError(f"answer variables {sorted(missing)} do not occur in the body")

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for a in self.atoms for v in a.args)

    @property
    def existential_vars(self) -> frozenset[str]:
        return self.variables - set(self.answer_vars)

    @property
    def is_boolean(self) -> bool:
        return not self.answer_vars

    def unary_atoms(self) -> list[Atom]:
        return sorted(a for a in self.atoms if a.arity == 1)

    def binary_atoms(self) -> list[Atom]:
        return sorted(a for a in self.atoms if a.arity == 2)

    def __str__(self) -> str:
        return serialize_cq(self)


@dataclass
class DataInstance:
    """A finite set of ground unary and binary facts."""

    unary_facts: set[tuple[str, str]] = field(default_factory=set)
    binary_facts: set[tuple[str, str, str]] = field(default_factory=set)

    @property
    def individuals(self) -> frozenset[str]:
        inds = {a for _, a in self.unary_facts}
        inds.update(x for _, a, b in self.binary_facts for x in (a, b))
        return frozenset(inds)

    def add(self, atom: Atom) -> None:
        if atom.arity == 1:
            self.unary_facts.add((atom.pred, atom.args[0]))
        elif atom.arity == 2:
            self.binary_facts.add((atom.pred, atom.args[0], atom.args[1]))
        else:
            raise ValueError(f"data atom {atom} must be unary or binary")

    def atoms(self) -> Iterator[Atom]:
        for pred, a in sorted(self.unary_facts):
            yield Atom(pred, (a,))
        for pred, a, b in sorted(self.binary_facts):
            yield Atom(pred, (a, b))

    def has_role(self, role: Role, a: str, b: str) -> bool:
        """rho(a, b) in A, resolving inverses."""
        pred, x, y = role.apply(a, b)
        return (pred, x, y) in self.binary_facts

    def role_pairs(self, role: Role) -> Iterator[tuple[str, str]]:
        """All (a, b) with rho(a, b) in A."""
        for pred, x, y in self.binary_facts:
            if pred == role.name:
                yield (y, x) if role.inverse else (x, y)

    def copy(self) -> "DataInstance":
        return DataInstance(set(self.unary_facts), set(self.binary_facts))

    def __len__(self) -> int:
        return len(self.unary_facts) + len(self.binary_facts)


# ---------------------------------------------------------------------------
# NDL programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NdlClause:
    head: Atom
    body: tuple[BodyItem, ...]

    def __post_init__(self):
        body_vars = set()
        for item in self.body:
            if isinstance(item, Atom):
                body_vars.update(item.args)
            else:
                body_vars.update((item.lhs, item.rhs))
        missing = set(self.head.args) - body_vars
        if missing:
            raise ValueError(
                f"head variables {sorted(missing)} of {self.head} do not occur in the body"
            )

    @property
    def body_atoms(self) -> tuple[Atom, ...]:
        return tuple(i for i in self.body if isinstance(i, Atom))

    @property
    def body_eqs(self) -> tuple[Eq, ...]:
        return tuple(i for i in self.body if isinstance(i, Eq))

    @property
    def variables(self) -> frozenset[str]:
        out = set(self.head.args)
        for item in self.body:
            if isinstance(item, Atom):
                out.update(item.args)
            else:
                out.update((item.lhs, item.rhs))
        return frozenset(out)

    def __str__(self) -> str:
        body = ", ".join(str(i) for i in self.body)
        return f"{self.head} :- {body}."


@dataclass(frozen=True)
class NdlQuery:
    """An NDL program together with its goal predicate and parameter positions.

    ``params`` maps an IDB predicate to the 0-based argument positions holding
    its parameters (the positions bound to constants when the query is
    a-grounded); programs produced by the rewriters declare them, parsed
    programs may leave the map empty.
    """

    clauses: tuple[NdlClause, ...]
    goal_pred: str
    goal_arity: int
    params: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))

    @property
    def idb_predicates(self) -> frozenset[str]:
        return frozenset(c.head.pred for c in self.clauses)

    @property
    def edb_predicates(self) -> frozenset[str]:
        idb = self.idb_predicates
        return frozenset(
            a.pred for c in self.clauses for a in c.body_atoms if a.pred not in idb
        )

    @property
    def predicates(self) -> frozenset[str]:
        return self.idb_predicates | self.edb_predicates | {self.goal_pred}

    def arity_of(self, pred: str) -> int:
        if pred == self.goal_pred:
            return self.goal_arity
        for c in self.clauses:
            if c.head.pred == pred:
                return c.head.arity
            for a in c.body_atoms:
                if a.pred == pred:
                    return a.arity
        raise KeyError(pred)

    def clauses_for(self, pred: str) -> list[NdlClause]:
        return [c for c in self.clauses if c.head.pred == pred]

    def __len__(self) -> int:
        return len(self.clauses)

    def __str__(self) -> str:
        return serialize_ndl(self)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _logical_lines(text: str, comment: str = "#") -> Iterator[tuple[int, str]]:
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(comment, 1)[0].strip()
        if line:
            yield i, line


def _parse_role(tokens: list[str], line: int) -> Role:
    if len(tokens) == 2 and tokens[0] == "inv":
        return Role(_check_ident(tokens[1], "role name", line), True)
    if len(tokens) == 1:
        return Role(_check_ident(tokens[0], "role name", line), False)
    raise ParseError(f"malformed role {' '.join(tokens)!r}", line)


def _parse_concept(tokens: list[str], line: int) -> Concept:
    if tokens == ["TOP"]:
        return Top()
    if tokens and tokens[0] == "exists":
        return Exists(_parse_role(tokens[1:], line))
    if len(tokens) == 1:
        return ConceptName(_check_ident(tokens[0], "concept name", line))
    raise ParseError(f"malformed concept {' '.join(tokens)!r}", line)


def _looks_like_concept(tokens: list[str]) -> bool:
    return tokens == ["TOP"] or (bool(tokens) and tokens[0] == "exists")


def _looks_like_role(tokens: list[str]) -> bool:
    return bool(tokens) and tokens[0] == "inv"


def parse_ontology(text: str) -> Ontology:
    """Parse the line-oriented ontology format into an un-normalized Ontology.

    ``NAME DisjointWith NAME`` is ambiguous between concepts and roles; it is
    read as role disjointness when both names occur in a role position
    somewhere in the document, and as concept disjointness otherwise.
    """
    lines = list(_logical_lines(text))

    role_vocab: set[str] = set()
    for _ln, line in lines:
        tokens = line.split()
        for kw in ("SubPropertyOf",):
            if kw in tokens:
                for side in " ".join(tokens).split(kw):
                    role_vocab.update(t for t in side.split() if t != "inv")
        if tokens and tokens[0] in ("reflexive", "irreflexive"):
            role_vocab.update(t for t in tokens[1:] if t != "inv")
        while "exists" in tokens:
            i = tokens.index("exists")
            rest = tokens[i + 1 :]
            if rest and rest[0] == "inv" and len(rest) > 1:
                role_vocab.add(rest[1])
            elif rest:
                role_vocab.add(rest[0])
            tokens = rest

    axioms: list[Axiom] = []
    for ln, line in lines:
        tokens = line.split()
        if tokens[0] == "reflexive":
            axioms.append(Reflexive(_parse_role(tokens[1:], ln)))
        elif tokens[0] == "irreflexive":
            axioms.append(Irreflexive(_parse_role(tokens[1:], ln)))
        elif "SubClassOf" in tokens:
            i = tokens.index("SubClassOf")
            axioms.append(
                SubClass(_parse_concept(tokens[:i], ln), _parse_concept(tokens[i + 1 :], ln))
            )
        elif "SubPropertyOf" in tokens:
            i = tokens.index("SubPropertyOf")
            axioms.append(
                SubRole(_parse_role(tokens[:i], ln), _parse_role(tokens[i + 1 :], ln))
            )
        elif "DisjointWith" in tokens:
            i = tokens.index("DisjointWith")
            lhs, rhs = tokens[:i], tokens[i + 1 :]
            if _looks_like_concept(lhs) or _looks_like_concept(rhs):
                axioms.append(
                    DisjointConcepts(_parse_concept(lhs, ln), _parse_concept(rhs, ln))
                )
            elif _looks_like_role(lhs) or _looks_like_role(rhs):
                axioms.append(DisjointRoles(_parse_role(lhs, ln), _parse_role(rhs, ln)))
            elif (
                len(lhs) == 1
                and len(rhs) == 1
                and lhs[0] in role_vocab
                and rhs[0] in role_vocab
            ):
                axioms.append(DisjointRoles(_parse_role(lhs, ln), _parse_role(rhs, ln)))
            else:
                axioms.append(
                    DisjointConcepts(_parse_concept(lhs, ln), _parse_concept(rhs, ln))
                )
        else:
            raise ParseError(f"unknown axiom form {line!r}", ln)
    return Ontology(tuple(axioms))


_ATOM_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([^()]*?)\s*\)\s*\Z")
_EQ_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\s*\Z")


def _split_items(text: str, line: int) -> list[str]:
    """Split a comma-separated item list, respecting parentheses."""
    items, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses", line)
        elif ch == "," and depth == 0:
            items.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise ParseError("unbalanced parentheses", line)
    items.append(text[start:])
    return [i.strip() for i in items if i.strip()]


def _parse_atom(text: str, line: int) -> Atom:
    m = _ATOM_RE.match(text)
    if not m:
        raise ParseError(f"malformed atom {text.strip()!r}", line)
    pred = m.group(1)
    args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
    for a in args:
        _check_ident(a, "term", line)
    return Atom(pred, args)


def _parse_body_item(text: str, line: int) -> BodyItem:
    m = _EQ_RE.match(text)
    if m:
        return Eq(m.group(1), m.group(2))
    return _parse_atom(text, line)


def parse_cq(text: str) -> ConjunctiveQuery:
    """Parse ``q(x0,x7) :- R(x0,x1), ... .`` into a ConjunctiveQuery."""
    content = " ".join(line for _ln, line in _logical_lines(text))
    if not content:
        raise ParseError("empty query document")
    if ":-" not in content:
        raise ParseError("query must contain ':-'")
    head_txt, body_txt = content.split(":-", 1)
    body_txt = body_txt.strip()
    if not body_txt.endswith("."):
        raise ParseError("query must end with '.'")
    head = _parse_atom(head_txt, 1) if "(" in head_txt else Atom(head_txt.strip(), ())
    atoms = []
    for item in _split_items(body_txt[:-1], 1):
        atom = _parse_atom(item, 1)
        if atom.arity not in (1, 2):
            raise ParseError(f"CQ atom {atom} must be unary or binary", 1)
        atoms.append(atom)
    try:
        return ConjunctiveQuery(frozenset(atoms), head.args, name=head.pred)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def parse_data(text: str) -> DataInstance:
    """Parse fact lines into a DataInstance (duplicates deduplicated silently)."""
    data = DataInstance()
    arities: dict[str, int] = {}
    for ln, line in _logical_lines(text):
        if not line.endswith("."):
            raise ParseError("fact must end with '.'", ln)
        atom = _parse_atom(line[:-1], ln)
        if atom.arity not in (1, 2):
            raise ParseError(f"fact {atom} must be unary or binary", ln)
        if arities.setdefault(atom.pred, atom.arity) != atom.arity:
            raise ParseError(f"predicate {atom.pred} used with conflicting arities", ln)
        data.add(atom)
    return data


_GOAL_RE = re.compile(r"%\s*goal:\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*\Z")
_PARAMS_RE = re.compile(r"%\s*params:\s*([A-Za-z_][A-Za-z0-9_]*)((?:\s+\d+)*)\s*\Z")


def parse_ndl(text: str) -> NdlQuery:
    """Parse an NDL program document (``%`` comments, ``% goal:`` header)."""
    goal: tuple[str, int] | None = None
    params: dict[str, tuple[int, ...]] = {}
    clauses: list[NdlClause] = []
    arities: dict[str, int] = {}

    def check_arity(atom: Atom, ln: int) -> None:
        if arities.setdefault(atom.pred, atom.arity) != atom.arity:
            raise ParseError(f"predicate {atom.pred} used with conflicting arities", ln)

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            m = _GOAL_RE.match(line)
            if m:
                goal = (m.group(1), int(m.group(2)))
                continue
            m = _PARAMS_RE.match(line)
            if m:
                params[m.group(1)] = tuple(int(t) for t in m.group(2).split())
            continue
        if ":-" not in line:
            raise ParseError("clause must contain ':-'", ln)
        if not line.endswith("."):
            raise ParseError("clause must end with '.'", ln)
        head_txt, body_txt = line[:-1].split(":-", 1)
        head = _parse_atom(head_txt, ln)
        check_arity(head, ln)
        body: list[BodyItem] = []
        for item_txt in _split_items(body_txt, ln):
            item = _parse_body_item(item_txt, ln)
            if isinstance(item, Atom):
                check_arity(item, ln)
            body.append(item)
        try:
            clauses.append(NdlClause(head, tuple(body)))
        except ValueError as exc:
            raise ParseError(str(exc), ln) from exc

    if goal is None:
        raise ParseError("missing '% goal: NAME/arity' header")
    if goal[0] in arities and arities[goal[0]] != goal[1]:
        raise ParseError(f"goal {goal[0]}/{goal[1]} conflicts with use at arity {arities[goal[0]]}")
    return NdlQuery(tuple(clauses), goal[0], goal[1], params)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_ontology(onto: Ontology) -> str:
    return "".join(f"{ax}\n" for ax in onto.axioms)


def serialize_cq(cq: ConjunctiveQuery) -> str:
    body = ", ".join(str(a) for a in sorted(cq.atoms))
    return f"{cq.name}({','.join(cq.answer_vars)}) :- {body}.\n"


def serialize_data(data: DataInstance) -> str:
    return "".join(f"{atom}.\n" for atom in data.atoms())


def serialize_ndl(query: NdlQuery) -> str:
    out = [f"% goal: {query.goal_pred}/{query.goal_arity}"]
    for pred in sorted(query.params):
        positions = query.params[pred]
        out.append(f"% params: {pred} {' '.join(str(p) for p in positions)}".rstrip())
    out.extend(str(c) for c in query.clauses)
    return "\n".join(out) + "\n"
