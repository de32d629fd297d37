"""Command-line interface for the OMQ compiler toolkit.

Subcommands
-----------
analyze    shape/width report for a conjunctive query
rewrite    compile an (ontology, query) pair into a nonrecursive datalog program
transform  apply a program transformation (skinny / star / linarb / inline)
eval       evaluate a datalog program over a data instance
answer     end-to-end certain answers (rewrite + evaluate, or the chase oracle)
gen        emit benchmark families with brute-force ground-truth sidecars
bench      size study and evaluation harness (CSV + markdown + PNG)

The ``--verify`` group flag cross-checks rewrite/eval results against the
chase oracle whenever the instance is small enough (at most
:data:`VERIFY_MAX_VARS` query variables and :data:`VERIFY_MAX_INDIVIDUALS`
individuals).  ``OMQ_THREADS`` sets the default worker-pool size for the
benchmark commands.  Every command is deterministic given identical inputs
and seeds (timing columns excepted) and exits 0 iff no error fired.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .chase_oracle import InconsistentInstance, certain_answers, complete
from .core_syntax import (
    ConjunctiveQuery,
    DataInstance,
    NdlQuery,
    Ontology,
    parse_cq,
    parse_data,
    parse_ndl,
    parse_ontology,
    serialize_cq,
    serialize_data,
    serialize_ndl,
    serialize_ontology,
)
from .cq_analysis import classify, tree_decompose
from .generators import (
    gen_clique_omq,
    gen_er_data,
    gen_hitting_set_omq,
    gen_logcfl_query,
    gen_sat_omq,
    gen_sequence_query,
    gen_tree_instance_and_query,
    has_hitting_set,
    has_multicolored_clique,
    in_hardest_logcfl,
    is_satisfiable,
    sat_ontology,
)
from .ndl_core import (
    inline_single_use,
    linear_arbitrary_transform,
    metrics,
    star_transform,
    to_skinny,
)
from .ndl_eval import run_evaluation, stats_csv
from .rewriters import rewrite

VERIFY_MAX_VARS = 8
VERIFY_MAX_INDIVIDUALS = 500
THREADS_ENV_VAR = "OMQ_THREADS"

ALGOS = ("lin", "log", "tw", "twstar")
REGIMES = ("complete", "arbitrary")

# Benchmark fixtures: a role P entailing S forward and R backward, guarded in
# every direction, and three 15-letter R/S sequences whose chain queries the
# size study rewrites at every prefix length.  The vertex labels A and B of
# the Erdos-Renyi generator assert an outgoing resp. incoming P-edge, so
# S-atoms can only ever match in the anonymous part — the datasets themselves
# carry no S-edges.
BENCH_ONTOLOGY = """\
P SubPropertyOf S
P SubPropertyOf inv R
A SubClassOf exists P
B SubClassOf exists inv P
A_P SubClassOf exists P
exists P SubClassOf A_P
A_Pi SubClassOf exists inv P
exists inv P SubClassOf A_Pi
A_R SubClassOf exists R
exists R SubClassOf A_R
A_Ri SubClassOf exists inv R
exists inv R SubClassOf A_Ri
A_S SubClassOf exists S
exists S SubClassOf A_S
A_Si SubClassOf exists inv S
exists inv S SubClassOf A_Si
"""

BENCH_SEQUENCES = {
    "seq1": "RRSRSRSRRSRRSSR",
    "seq2": "SRRRRRSRSRRRRRR",
    "seq3": "SRRSSRSRSRRSRRS",
}


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _friendly(fn):
    """Convert domain errors into clean CLI failures (exit code 1)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, InconsistentInstance) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_ontology(path: str) -> Ontology:
    return parse_ontology(_read(path))


def _load_cq(path: str) -> ConjunctiveQuery:
    return parse_cq(_read(path))


def _load_data(path: str) -> DataInstance:
    return parse_data(_read(path))


def _load_ndl(path: str) -> NdlQuery:
    return parse_ndl(_read(path))


def _write_or_print(text: str, output: str | None, summary: str | None = None) -> None:
    if output is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        Path(output).write_text(text, encoding="utf-8")
        if summary:
            click.echo(f"{summary} -> {output}")


def _print_answers(answers) -> None:
    """One comma-joined tuple per line; 'true'/'false' for boolean results."""
    if isinstance(answers, bool):
        click.echo("true" if answers else "false")
        return
    for tup in sorted(answers):
        click.echo(",".join(tup))


def _answers_digest(answers) -> str:
    lines = "\n".join(sorted(",".join(t) for t in answers))
    return hashlib.sha256(lines.encode("utf-8")).hexdigest()


def _verify_small_enough(cq: ConjunctiveQuery, data: DataInstance) -> bool:
    return (
        len(cq.variables) <= VERIFY_MAX_VARS
        and len(data.individuals) <= VERIFY_MAX_INDIVIDUALS
    )


def _cross_check(
    ontology: Ontology,
    cq: ConjunctiveQuery,
    data: DataInstance,
    got,
    label: str,
) -> None:
    """Compare ``got`` with the chase oracle; raise on mismatch, warn on skip."""
    if not _verify_small_enough(cq, data):
        click.echo(
            f"verify: skipped for {label} (instance exceeds "
            f"{VERIFY_MAX_VARS} variables / {VERIFY_MAX_INDIVIDUALS} individuals)",
            err=True,
        )
        return
    expected = certain_answers(ontology, cq, data)
    if frozenset(got) != expected:
        missing = sorted(expected - frozenset(got))[:5]
        extra = sorted(frozenset(got) - expected)[:5]
        raise click.ClickException(
            f"verification failed for {label}: "
            f"missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    click.echo(f"verify: {label} matches the chase oracle", err=True)


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            n = int(env)
            if n >= 1:
                return n
        except ValueError:
            pass
    return os.cpu_count() or 1


def _markdown_table(header: list[str], rows: list[list[str]]) -> str:
    cols = [header] + rows
    widths = [max(len(str(r[i])) for r in cols) for i in range(len(header))]

    def line(cells):
        return "| " + " | ".join(str(c).ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Group
# ---------------------------------------------------------------------------


@click.group()
@click.option(
    "--verify",
    is_flag=True,
    help="Cross-check rewrite/eval results against the chase oracle when the "
    f"instance has at most {VERIFY_MAX_VARS} query variables and "
    f"{VERIFY_MAX_INDIVIDUALS} individuals.",
)
@click.version_option(package_name="artifact", prog_name="omq")
@click.pass_context
def main(ctx: click.Context, verify: bool) -> None:
    """Compile, transform, evaluate and verify OWL 2 QL ontology-mediated queries."""
    ctx.ensure_object(dict)
    ctx.obj["verify"] = verify


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


@main.command()
@click.argument("query", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
@_friendly
def analyze(query: str, as_json: bool) -> None:
    """Shape and width report for the conjunctive query in QUERY."""
    cq = _load_cq(query)
    shape = classify(cq)
    decomposition = tree_decompose(cq)
    report = {
        "name": cq.name,
        "atoms": len(cq.atoms),
        "variables": shape.variables,
        "answer_variables": list(cq.answer_vars),
        "connected": shape.connected,
        "tree_shaped": shape.tree_shaped,
        "linear": shape.linear,
        "leaves": shape.leaves,
        "treewidth": decomposition.width,
    }
    if as_json:
        click.echo(json.dumps(report, indent=2))
        return
    click.echo(f"query {cq.name}: {shape}")
    for key in ("atoms", "answer_variables", "treewidth"):
        click.echo(f"  {key.replace('_', ' ')}: {report[key]}")


# ---------------------------------------------------------------------------
# rewrite
# ---------------------------------------------------------------------------


@main.command(name="rewrite")
@click.option("-T", "--ontology", "ontology_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Ontology file.")
@click.option("-q", "--query", "query_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Conjunctive query file.")
@click.option("--algo", type=click.Choice(ALGOS), default="tw", show_default=True,
              help="Rewriting algorithm.")
@click.option("--regime", type=click.Choice(REGIMES), default="complete",
              show_default=True, help="Data regime the program targets.")
@click.option("-o", "--output", type=click.Path(dir_okay=False),
              help="Write the program here instead of stdout.")
@click.option("-d", "--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              help="Data instance used by --verify.")
@click.pass_context
@_friendly
def rewrite_cmd(
    ctx: click.Context,
    ontology_path: str,
    query_path: str,
    algo: str,
    regime: str,
    output: str | None,
    data_path: str | None,
) -> None:
    """Rewrite the OMQ (ontology, query) into a nonrecursive datalog program."""
    ontology = _load_ontology(ontology_path)
    cq = _load_cq(query_path)
    program = rewrite(ontology, cq, algo, regime)
    m = metrics(program)
    summary = (
        f"{algo}/{regime}: {len(program.clauses)} clauses, "
        f"width {m.width}, depth {m.depth}"
    )
    _write_or_print(serialize_ndl(program), output, summary)
    if ctx.obj.get("verify"):
        if data_path is None:
            raise click.ClickException("--verify on rewrite needs --data")
        data = _load_data(data_path)
        instance = complete(ontology, data) if regime == "complete" else data
        got = run_evaluation(program, instance).answers
        _cross_check(ontology, cq, data, got, f"{algo}/{regime} rewriting")


# ---------------------------------------------------------------------------
# transform
# ---------------------------------------------------------------------------

_TRANSFORMS = {
    "skinny": "binarize every clause body (at most two atoms per body)",
    "star": "complete-regime program -> arbitrary-regime program",
    "linarb": "linearity-preserving variant of star",
    "inline": "inline single-use predicates",
}


@main.command()
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.option("--op", required=True, type=click.Choice(sorted(_TRANSFORMS)),
              help="; ".join(f"{k}: {v}" for k, v in sorted(_TRANSFORMS.items())))
@click.option("-T", "--ontology", "ontology_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Ontology (required for star/linarb).")
@click.option("-o", "--output", type=click.Path(dir_okay=False),
              help="Write the transformed program here instead of stdout.")
@_friendly
def transform(program: str, op: str, ontology_path: str | None, output: str | None) -> None:
    """Apply a program transformation to the datalog program in PROGRAM."""
    ndl = _load_ndl(program)
    if op in ("star", "linarb"):
        if ontology_path is None:
            raise click.ClickException(f"--op {op} needs -T/--ontology")
        ontology = _load_ontology(ontology_path)
        out = (star_transform if op == "star" else linear_arbitrary_transform)(ndl, ontology)
    elif op == "skinny":
        out = to_skinny(ndl)
    else:
        out = inline_single_use(ndl)
    m = metrics(out)
    summary = f"{op}: {len(out.clauses)} clauses, width {m.width}, depth {m.depth}"
    _write_or_print(serialize_ndl(out), output, summary)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@main.command(name="eval")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--stats", "show_stats", is_flag=True,
              help="Print per-predicate tuple counts (CSV) to stderr.")
@click.option("--candidate", help="Check one comma-separated answer tuple instead.")
@_friendly
def eval_cmd(program: str, data: str, show_stats: bool, candidate: str | None) -> None:
    """Evaluate the datalog program in PROGRAM over the instance in DATA."""
    ndl = _load_ndl(program)
    instance = _load_data(data)
    tup = tuple(candidate.split(",")) if candidate is not None else None
    if tup == ("",):
        tup = ()
    run = run_evaluation(ndl, instance, tup)
    if ndl.goal_arity == 0 and not isinstance(run.answers, bool):
        _print_answers(bool(run.answers))
    else:
        _print_answers(run.answers)
    if show_stats:
        click.echo(stats_csv(run), err=True, nl=False)


# ---------------------------------------------------------------------------
# answer
# ---------------------------------------------------------------------------


@main.command()
@click.option("-T", "--ontology", "ontology_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Ontology file.")
@click.option("-q", "--query", "query_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Conjunctive query file.")
@click.option("-d", "--data", "data_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Data instance file.")
@click.option("--algo", type=click.Choice(ALGOS + ("oracle",)), default="tw",
              show_default=True, help="Rewriting algorithm, or the chase oracle itself.")
@click.option("--regime", type=click.Choice(REGIMES), default="arbitrary",
              show_default=True,
              help="complete saturates the data first; arbitrary evaluates it raw.")
@click.pass_context
@_friendly
def answer(
    ctx: click.Context,
    ontology_path: str,
    query_path: str,
    data_path: str,
    algo: str,
    regime: str,
) -> None:
    """Certain answers of the OMQ (ontology, query) over the data instance."""
    ontology = _load_ontology(ontology_path)
    cq = _load_cq(query_path)
    data = _load_data(data_path)
    if algo == "oracle":
        got = certain_answers(ontology, cq, data)
    else:
        program = rewrite(ontology, cq, algo, regime)
        instance = complete(ontology, data) if regime == "complete" else data
        got = run_evaluation(program, instance).answers
    if not cq.answer_vars:
        _print_answers(bool(got))
    else:
        _print_answers(got)
    if ctx.obj.get("verify") and algo != "oracle":
        _cross_check(ontology, cq, data, got, f"{algo}/{regime} answers")


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


@main.group()
def gen() -> None:
    """Generate benchmark inputs plus a JSON ground-truth sidecar."""


def _emit_family(
    prefix: str,
    *,
    ontology: Ontology | None = None,
    cq: ConjunctiveQuery | None = None,
    data: DataInstance | None = None,
    sidecar: dict,
) -> None:
    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def put(suffix: str, text: str) -> None:
        path = base.with_suffix(suffix) if base.suffix == "" else Path(str(base) + suffix)
        path.write_text(text, encoding="utf-8")
        written.append(str(path))

    if ontology is not None:
        put(".owl", serialize_ontology(ontology))
    if cq is not None:
        put(".cq", serialize_cq(cq))
    if data is not None:
        put(".dat", serialize_data(data))
    put(".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    for path in written:
        click.echo(f"wrote {path}")


def _expected_answers(certain: bool, tuple_: tuple[str, ...] = ()) -> list[list[str]]:
    return [list(tuple_)] if certain else []


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise click.ClickException(f"bad {what} {text!r}: comma-separated integers") from exc


@gen.command()
@click.option("--vertices", "-n", type=int, required=True, help="Number of vertices.")
@click.option("--edge-prob", "-p", type=float, required=True,
              help="Probability of each directed R-edge.")
@click.option("--label-prob", "-q", type=float, required=True,
              help="Probability of each A/B vertex label.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def er(vertices: int, edge_prob: float, label_prob: float, seed: int, output: str) -> None:
    """Erdos-Renyi data: random R-edges plus A/B labels (no S-edges)."""
    data = gen_er_data(vertices, edge_prob, label_prob, seed)
    sidecar = {
        "family": "er",
        "num_vertices": vertices,
        "edge_prob": edge_prob,
        "label_prob": label_prob,
        "seed": seed,
        "num_r_edges": sum(1 for f in data.binary_facts if f[0] == "R"),
        "num_a_labels": sum(1 for f in data.unary_facts if f[0] == "A"),
        "num_b_labels": sum(1 for f in data.unary_facts if f[0] == "B"),
    }
    _emit_family(output, data=data, sidecar=sidecar)


@gen.command()
@click.option("--word", required=True, help="Predicate letters, e.g. RRSRS.")
@click.option("--length", "-n", type=int, default=None,
              help="Chain length (defaults to the whole word).")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def seq(word: str, length: int | None, output: str) -> None:
    """Chain query word[0](x0,x1), word[1](x1,x2), ... with answers (x0, xn)."""
    n = len(word) if length is None else length
    cq = gen_sequence_query(word, n)
    sidecar = {"family": "seq", "word": word, "length": n, "atoms": len(cq.atoms)}
    _emit_family(output, cq=cq, sidecar=sidecar)


@gen.command(name="hitting-set")
@click.option("--vertices", "-n", type=int, required=True,
              help="Universe size (vertices are 1..n).")
@click.option("--edge", "edges", multiple=True, required=True,
              help="Hyperedge as comma-separated vertices; repeatable.")
@click.option("-k", type=int, required=True, help="Hitting-set size.")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def hitting_set(vertices: int, edges: tuple[str, ...], k: int, output: str) -> None:
    """OMQ certain iff the hypergraph has a hitting set of size k."""
    parsed = [_parse_int_list(e, "edge") for e in edges]
    ontology, cq, data = gen_hitting_set_omq(vertices, parsed, k)
    certain = has_hitting_set(vertices, parsed, k)
    sidecar = {
        "family": "hitting-set",
        "num_vertices": vertices,
        "edges": [list(e) for e in parsed],
        "k": k,
        "certain": certain,
        "expected_answers": _expected_answers(certain),
    }
    _emit_family(output, ontology=ontology, cq=cq, data=data, sidecar=sidecar)


@gen.command()
@click.option("--vertices", "-n", type=int, required=True,
              help="Number of graph vertices (1..n).")
@click.option("--edge", "edges", multiple=True, required=True,
              help="Undirected edge as 'u,v'; repeatable.")
@click.option("--part", "parts", multiple=True, required=True,
              help="One colour class as comma-separated vertices; repeatable.")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def clique(vertices: int, edges: tuple[str, ...], parts: tuple[str, ...], output: str) -> None:
    """OMQ certain iff the partitioned graph has a multicoloured clique."""
    parsed_edges = [_parse_int_list(e, "edge") for e in edges]
    partition = [_parse_int_list(p, "part") for p in parts]
    ontology, cq, data = gen_clique_omq(vertices, parsed_edges, partition)
    certain = has_multicolored_clique(vertices, parsed_edges, partition)
    sidecar = {
        "family": "clique",
        "num_vertices": vertices,
        "edges": [list(e) for e in parsed_edges],
        "partition": [list(p) for p in partition],
        "certain": certain,
        "expected_answers": _expected_answers(certain),
    }
    _emit_family(output, ontology=ontology, cq=cq, data=data, sidecar=sidecar)


@gen.command()
@click.option("--clause", "clauses", multiple=True, required=True,
              help="CNF clause as comma-separated non-zero literals; repeatable.")
@click.option("--num-vars", type=int, default=None,
              help="Variable count (defaults to the largest mentioned).")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def sat(clauses: tuple[str, ...], num_vars: int | None, output: str) -> None:
    """OMQ certain iff the CNF is satisfiable."""
    parsed = [_parse_int_list(c, "clause") for c in clauses]
    ontology, cq, data = gen_sat_omq(parsed, num_vars)
    certain = is_satisfiable(parsed, num_vars)
    sidecar = {
        "family": "sat",
        "clauses": [list(c) for c in parsed],
        "num_vars": num_vars,
        "certain": certain,
        "expected_answers": _expected_answers(certain),
    }
    _emit_family(output, ontology=ontology, cq=cq, data=data, sidecar=sidecar)


@gen.command()
@click.option("--clause", "clauses", multiple=True, required=True,
              help="CNF clause as comma-separated non-zero literals; repeatable. "
              "The clause count must be a power of two.")
@click.option("--alpha", required=True,
              help="Leaf labelling as a 0/1 string, one bit per clause.")
@click.option("--num-vars", type=int, default=None,
              help="Variable count (defaults to the largest mentioned).")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def tree(clauses: tuple[str, ...], alpha: str, num_vars: int | None, output: str) -> None:
    """Tree-shaped data instance + query; certain iff the residual CNF is satisfiable.

    The residual CNF drops every clause whose alpha bit is 1.
    """
    parsed = [_parse_int_list(c, "clause") for c in clauses]
    if not set(alpha) <= {"0", "1"} or len(alpha) != len(parsed):
        raise click.ClickException("--alpha must be a 0/1 string with one bit per clause")
    bits = tuple(int(b) for b in alpha)
    cq, data = gen_tree_instance_and_query(parsed, bits, num_vars)
    ontology = sat_ontology()
    residual = [c for c, bit in zip(parsed, bits) if not bit]
    certain = is_satisfiable(residual, num_vars) if residual else True
    sidecar = {
        "family": "tree",
        "clauses": [list(c) for c in parsed],
        "alpha": alpha,
        "num_vars": num_vars,
        "certain": certain,
        "expected_answers": _expected_answers(certain, ("a",)),
    }
    _emit_family(output, ontology=ontology, cq=cq, data=data, sidecar=sidecar)


@gen.command()
@click.option("--word", required=True,
              help="Word over [ ] # a1 a2 b1 b2 (whitespace ignored).")
@click.option("-o", "--output", required=True, help="Output path prefix.")
@_friendly
def logcfl(word: str, output: str) -> None:
    """OMQ certain over {A(a)} iff the word lies in the hardest-LOGCFL language."""
    ontology, cq = gen_logcfl_query(word)
    data = parse_data("A(a).")
    certain = in_hardest_logcfl(word)
    sidecar = {
        "family": "logcfl",
        "word": word,
        "certain": certain,
        "expected_answers": _expected_answers(certain),
    }
    _emit_family(output, ontology=ontology, cq=cq, data=data, sidecar=sidecar)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


@main.group()
def bench() -> None:
    """Benchmark harness: rewriting sizes and evaluation timings."""


def _sizes_task(task: tuple[str, str, int, str, str]) -> tuple[str, int, str, int]:
    """Worker: clause count of one (sequence, n, algo) rewriting."""
    seq_name, word, n, algo, ontology_text = task
    ontology = parse_ontology(ontology_text)
    program = rewrite(ontology, gen_sequence_query(word, n), algo, "complete")
    return seq_name, n, algo, len(program.clauses)


def _algo_label(algo: str) -> str:
    return {"lin": "Lin", "log": "Log", "tw": "Tw", "twstar": "Tw*"}[algo]


def _render_sizes_png(
    path: Path,
    sequences: dict[str, str],
    max_n: int,
    counts: dict[tuple[str, int, str], int],
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, len(sequences), figsize=(5 * len(sequences), 4),
                             squeeze=False)
    xs = list(range(1, max_n + 1))
    for ax, (name, word) in zip(axes[0], sorted(sequences.items())):
        for algo in ALGOS:
            ax.plot(xs, [counts[(name, n, algo)] for n in xs],
                    marker="o", markersize=3, label=_algo_label(algo))
        ax.set_title(f"{name}: {word}")
        ax.set_xlabel("query atoms n")
        ax.set_ylabel("clauses")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


@bench.command(name="sizes")
@click.option("--max-n", type=int, default=15, show_default=True,
              help="Rewrite every prefix length n = 1..max-n.")
@click.option("--sequence", "extra", multiple=True,
              help="Extra R/S word to study (named custom1, custom2, ...).")
@click.option("-T", "--ontology", "ontology_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Ontology (defaults to the built-in benchmark ontology).")
@click.option("-o", "--output-dir", default="bench", show_default=True,
              help="Directory for sizes.csv / sizes.md / sizes.png.")
@click.option("--threads", type=int, default=None,
              help=f"Worker processes (default: ${THREADS_ENV_VAR} or CPU count).")
@_friendly
def bench_sizes(
    max_n: int,
    extra: tuple[str, ...],
    ontology_path: str | None,
    output_dir: str,
    threads: int | None,
) -> None:
    """Clause counts of Lin/Log/Tw/Tw* rewritings of the sequence queries."""
    sequences = dict(BENCH_SEQUENCES)
    for i, word in enumerate(extra, start=1):
        sequences[f"custom{i}"] = word
    short = [name for name, word in sequences.items() if len(word) < max_n]
    if short:
        raise click.ClickException(
            f"--max-n {max_n} exceeds the length of sequence(s) {', '.join(short)}"
        )
    ontology_text = _read(ontology_path) if ontology_path else BENCH_ONTOLOGY

    tasks = [
        (name, word, n, algo, ontology_text)
        for name, word in sorted(sequences.items())
        for n in range(1, max_n + 1)
        for algo in ALGOS
    ]
    workers = threads or _default_threads()
    counts: dict[tuple[str, int, str], int] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name, n, algo, count in pool.map(_sizes_task, tasks):
                counts[(name, n, algo)] = count
    else:
        for task in tasks:
            name, n, algo, count = _sizes_task(task)
            counts[(name, n, algo)] = count

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["sequence", "word", "n"] + [_algo_label(a) for a in ALGOS]
    rows = [
        [name, sequences[name], n] + [counts[(name, n, a)] for a in ALGOS]
        for name in sorted(sequences)
        for n in range(1, max_n + 1)
    ]
    _write_csv(out / "sizes.csv", header, rows)

    md_parts = []
    for name in sorted(sequences):
        md_parts.append(f"### {name}: `{sequences[name]}`\n")
        md_rows = [
            [str(n)] + [str(counts[(name, n, a)]) for a in ALGOS]
            for n in range(1, max_n + 1)
        ]
        md_parts.append(_markdown_table(["n"] + [_algo_label(a) for a in ALGOS], md_rows))
    (out / "sizes.md").write_text("\n".join(md_parts), encoding="utf-8")
    _render_sizes_png(out / "sizes.png", sequences, max_n, counts)
    for name in ("sizes.csv", "sizes.md", "sizes.png"):
        click.echo(f"wrote {out / name}")


def _eval_task(task: tuple[str, str, str, str, str]) -> dict:
    """Worker: rewrite + evaluate one (dataset, query, algo) cell."""
    data_path, query_path, algo, regime, ontology_text = task
    ontology = parse_ontology(ontology_text)
    cq = parse_cq(Path(query_path).read_text(encoding="utf-8"))
    data = parse_data(Path(data_path).read_text(encoding="utf-8"))
    program = rewrite(ontology, cq, algo, regime)
    instance = complete(ontology, data) if regime == "complete" else data
    run = run_evaluation(program, instance)
    answers = run.answers
    return {
        "dataset": Path(data_path).name,
        "query": Path(query_path).name,
        "algo": algo,
        "wall_time": run.wall_time,
        "answers": len(answers),
        "digest": _answers_digest(answers),
        "predicates": dict(run.tuples_per_predicate),
        "num_vars": len(cq.variables),
        "num_individuals": len(data.individuals),
    }


def _render_eval_png(path: Path, rows: list[dict]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cells = sorted({(r["dataset"], r["query"]) for r in rows})
    algos = sorted({r["algo"] for r in rows}, key=ALGOS.index)
    times = {(r["dataset"], r["query"], r["algo"]): r["wall_time"] for r in rows}
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(cells) * len(algos)), 4))
    width = 0.8 / max(len(algos), 1)
    for i, algo in enumerate(algos):
        xs = [j + i * width for j in range(len(cells))]
        ys = [times.get((d, q, algo), 0.0) for d, q in cells]
        ax.bar(xs, ys, width=width, label=_algo_label(algo))
    ax.set_xticks([j + width * (len(algos) - 1) / 2 for j in range(len(cells))])
    ax.set_xticklabels([f"{d}\n{q}" for d, q in cells], fontsize=8)
    ax.set_ylabel("evaluation wall time (s)")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


@bench.command(name="eval")
@click.option("-T", "--ontology", "ontology_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Ontology (defaults to the built-in benchmark ontology).")
@click.option("-d", "--data", "data_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), help="Dataset; repeatable.")
@click.option("-q", "--query", "query_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), help="Query; repeatable.")
@click.option("--algos", default=",".join(ALGOS), show_default=True,
              help="Comma-separated subset of lin,log,tw,twstar.")
@click.option("--regime", type=click.Choice(REGIMES), default="arbitrary",
              show_default=True, help="complete saturates each dataset before evaluating.")
@click.option("-o", "--output-dir", default="bench", show_default=True,
              help="Directory for eval.csv / eval_predicates.csv / eval.md / eval.png.")
@click.option("--threads", type=int, default=None,
              help=f"Worker processes (default: ${THREADS_ENV_VAR} or CPU count).")
@click.pass_context
@_friendly
def bench_eval(
    ctx: click.Context,
    ontology_path: str | None,
    data_paths: tuple[str, ...],
    query_paths: tuple[str, ...],
    algos: str,
    regime: str,
    output_dir: str,
    threads: int | None,
) -> None:
    """Evaluate every (dataset, query, algorithm) cell and cross-check the counts."""
    chosen = tuple(a.strip() for a in algos.split(",") if a.strip())
    bad = [a for a in chosen if a not in ALGOS]
    if bad or not chosen:
        raise click.ClickException(f"--algos must be a subset of {','.join(ALGOS)}")
    ontology_text = _read(ontology_path) if ontology_path else BENCH_ONTOLOGY

    tasks = [
        (d, q, algo, regime, ontology_text)
        for d in data_paths
        for q in query_paths
        for algo in chosen
    ]
    workers = threads or _default_threads()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_eval_task, tasks))
    else:
        rows = [_eval_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["dataset"], r["query"], ALGOS.index(r["algo"])))

    # answer sets must agree across algorithms on every (dataset, query) cell
    by_cell: dict[tuple[str, str], set[tuple[int, str]]] = {}
    for row in rows:
        by_cell.setdefault((row["dataset"], row["query"]), set()).add(
            (row["answers"], row["digest"])
        )
    for (d, q), variants in sorted(by_cell.items()):
        if len(variants) > 1:
            raise click.ClickException(
                f"answer mismatch across algorithms on ({d}, {q}): "
                f"counts {sorted(v[0] for v in variants)}"
            )

    if ctx.obj.get("verify"):
        ontology = parse_ontology(ontology_text)
        for d, q in sorted({(r["dataset"], r["query"]) for r in rows}):
            row = next(r for r in rows if (r["dataset"], r["query"]) == (d, q))
            data_path = next(p for p in data_paths if Path(p).name == d)
            query_path = next(p for p in query_paths if Path(p).name == q)
            cq = _load_cq(query_path)
            data = _load_data(data_path)
            if not _verify_small_enough(cq, data):
                click.echo(f"verify: skipped for ({d}, {q}) (instance too large)", err=True)
                continue
            expected = certain_answers(ontology, cq, data)
            if _answers_digest(expected) != row["digest"]:
                raise click.ClickException(
                    f"oracle mismatch on ({d}, {q}): oracle {len(expected)} answers, "
                    f"programs {row['answers']}"
                )
            click.echo(f"verify: ({d}, {q}) matches the chase oracle", err=True)

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["dataset", "query", "algo", "wall_time_s", "answers"]
    _write_csv(
        out / "eval.csv",
        header,
        [[r["dataset"], r["query"], _algo_label(r["algo"]),
          f"{r['wall_time']:.4f}", r["answers"]] for r in rows],
    )
    _write_csv(
        out / "eval_predicates.csv",
        ["dataset", "query", "algo", "predicate", "tuples"],
        [[r["dataset"], r["query"], _algo_label(r["algo"]), pred, count]
         for r in rows for pred, count in sorted(r["predicates"].items())],
    )
    md = _markdown_table(
        header,
        [[r["dataset"], r["query"], _algo_label(r["algo"]),
          f"{r['wall_time']:.4f}", str(r["answers"])] for r in rows],
    )
    (out / "eval.md").write_text(md, encoding="utf-8")
    _render_eval_png(out / "eval.png", rows)
    for name in ("eval.csv", "eval_predicates.csv", "eval.md", "eval.png"):
        click.echo(f"wrote {out / name}")


if __name__ == "__main__":
    main()
