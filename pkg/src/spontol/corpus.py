"""Data model, parser, serializer, and synthetic generator for predicate-form corpora.

Corpus text format (one statement per line)::

    # comment
    story <name>
    <relation> <arg1> ... <argN>
    sameAs <label> (<relation> <arg1> ... <argN>)

A ``story`` line opens a new story; every following non-blank, non-comment
line is a statement of that story until the next header. Statements form a
set: duplicates collapse, and serialization emits them sorted by rendered
line, so parse/serialize round-trips are byte-stable.

``sameAs`` lines bind a label to an inner statement; the label may appear as
an argument of other statements (nesting is expressed through labels, never
through nested parentheses). All other tokens are opaque symbols.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property

from .rng import derive_rng

SAMEAS = "sameAs"
STORY_HEADER = "story"

_SAMEAS_RE = re.compile(r"^sameAs\s+(\S+)\s+\(\s*([^()]+?)\s*\)$")
_BAD_SYMBOL_RE = re.compile(r"[\s()]")


class CorpusError(ValueError):
    """Malformed corpus text or an inconsistent corpus."""


class GenerationError(ValueError):
    """Infeasible synthetic-corpus parameters."""


@dataclass(frozen=True)
class Statement:
    """One relational statement.

    ``label`` is None for a plain statement; for a ``sameAs`` statement it
    holds the label bound to the inner statement, whose relation and
    arguments live in ``relation``/``args``.
    """

    relation: str
    args: tuple[str, ...]
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.args:
            raise CorpusError(f"statement {self.relation!r} has no arguments")
        symbols = (self.relation, *self.args) + ((self.label,) if self.label else ())
        for tok in symbols:
            if not tok or _BAD_SYMBOL_RE.search(tok):
                raise CorpusError(f"invalid symbol {tok!r}")
        # Reserved first tokens would be misread on reparse.
        if self.label is None and self.relation in (STORY_HEADER, SAMEAS):
            raise CorpusError(f"{self.relation!r} cannot be a plain relation")
        if self.relation.startswith("#"):
            raise CorpusError(f"relation {self.relation!r} would render as a comment")

    @property
    def is_labeled(self) -> bool:
        return self.label is not None

    @property
    def arity(self) -> int:
        return len(self.args)

    def symbols(self) -> frozenset[str]:
        """Symbols relevant for connectivity: arguments plus the label."""
        if self.label is None:
            return frozenset(self.args)
        return frozenset((self.label, *self.args))

    def rendered(self) -> str:
        body = " ".join((self.relation, *self.args))
        if self.label is None:
            return body
        return f"{SAMEAS} {self.label} ({body})"


@dataclass(frozen=True)
class Story:
    """A named, unordered set of statements (stored sorted and deduplicated)."""

    name: str
    statements: tuple[Statement, ...]

    def __post_init__(self) -> None:
        if not self.name or _BAD_SYMBOL_RE.search(self.name):
            raise CorpusError(f"invalid story name {self.name!r}")
        ordered = tuple(sorted(set(self.statements), key=Statement.rendered))
        object.__setattr__(self, "statements", ordered)
        seen: set[str] = set()
        for s in ordered:
            if s.label is not None:
                if s.label in seen:
                    raise CorpusError(
                        f"duplicate label {s.label!r} in story {self.name!r}"
                    )
                seen.add(s.label)

    @cached_property
    def labels(self) -> dict[str, Statement]:
        return {s.label: s for s in self.statements if s.label is not None}


@dataclass(frozen=True)
class ArityConflict:
    relation: str
    arities: tuple[int, ...]
    offenders: tuple[tuple[str, str], ...]  # (story name, rendered statement)


@dataclass(frozen=True)
class Corpus:
    stories: tuple[Story, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stories", tuple(self.stories))
        seen: set[str] = set()
        for st in self.stories:
            if st.name in seen:
                raise CorpusError(f"duplicate story name {st.name!r}")
            seen.add(st.name)

    def story(self, name: str) -> Story:
        for st in self.stories:
            if st.name == name:
                return st
        raise CorpusError(f"no story named {name!r}")

    @cached_property
    def relation_arities(self) -> dict[str, int]:
        """First observed arity per relation symbol."""
        out: dict[str, int] = {}
        for st in self.stories:
            for s in st.statements:
                out.setdefault(s.relation, s.arity)
        return out

    def arity_conflicts(self) -> tuple[ArityConflict, ...]:
        """Relations used with two or more distinct arities, with offending lines."""
        uses: dict[str, dict[int, list[tuple[str, str]]]] = {}
        for st in self.stories:
            for s in st.statements:
                uses.setdefault(s.relation, {}).setdefault(s.arity, []).append(
                    (st.name, s.rendered())
                )
        conflicts = []
        for rel in sorted(uses):
            by_arity = uses[rel]
            if len(by_arity) < 2:
                continue
            offenders = tuple(
                line for arity in sorted(by_arity) for line in by_arity[arity]
            )
            conflicts.append(ArityConflict(rel, tuple(sorted(by_arity)), offenders))
        return tuple(conflicts)


def parse_corpus(text: str, strict: bool = False) -> Corpus:
    """Parse corpus text.

    Unknown tokens become opaque symbols. With ``strict=True``, relations
    observed at inconsistent arities raise instead of being left to
    ``arity_conflicts``.
    """
    stories: list[Story] = []
    current_name: str | None = None
    current: list[Statement] = []

    def finish() -> None:
        if current_name is not None:
            stories.append(Story(current_name, tuple(current)))
            current.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == STORY_HEADER:
            if len(tokens) != 2:
                raise CorpusError(f"line {lineno}: malformed story header {line!r}")
            finish()
            current_name = tokens[1]
            continue
        if current_name is None:
            raise CorpusError(f"line {lineno}: statement before any story header")
        if tokens[0] == SAMEAS:
            m = _SAMEAS_RE.match(line)
            if not m:
                raise CorpusError(
                    f"line {lineno}: malformed sameAs parenthesization in {line!r}"
                )
            label, inner = m.group(1), m.group(2).split()
            if len(inner) < 2:
                raise CorpusError(
                    f"line {lineno}: sameAs inner statement needs arguments"
                )
            stmt = Statement(inner[0], tuple(inner[1:]), label=label)
        else:
            if len(tokens) < 2:
                raise CorpusError(
                    f"line {lineno}: statement {line!r} needs at least one argument"
                )
            stmt = Statement(tokens[0], tuple(tokens[1:]))
        current.append(stmt)
    finish()
    corpus = Corpus(tuple(stories))
    if strict:
        conflicts = corpus.arity_conflicts()
        if conflicts:
            detail = "; ".join(
                f"{c.relation} used at arities {list(c.arities)}" for c in conflicts
            )
            raise CorpusError(f"inconsistent relation arities: {detail}")
    return corpus


def serialize_corpus(corpus: Corpus) -> str:
    """Render a corpus in the line format; statements sorted, byte-stable."""
    blocks = []
    for st in corpus.stories:
        lines = [f"{STORY_HEADER} {st.name}"]
        lines.extend(s.rendered() for s in st.statements)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# Ground truth for synthetic corpora


@dataclass(frozen=True)
class PlantedSchema:
    schema_id: str
    template: tuple[Statement, ...]


@dataclass(frozen=True, eq=False)
class GroundTruth:
    schemas: tuple[PlantedSchema, ...]
    placements: Mapping[str, frozenset[str]]  # story name -> schema ids

    def __post_init__(self) -> None:
        known = {s.schema_id for s in self.schemas}
        for name, ids in self.placements.items():
            missing = set(ids) - known
            if missing:
                raise CorpusError(
                    f"placement for {name!r} names unknown schemas {sorted(missing)}"
                )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GroundTruth)
            and self.schemas == other.schemas
            and dict(self.placements) == dict(other.placements)
        )


def serialize_ground_truth(gt: GroundTruth) -> str:
    lines = ["groundtruth 1"]
    for schema in gt.schemas:
        lines.append(f"schema {schema.schema_id}")
        lines.extend(f"stmt {s.rendered()}" for s in schema.template)
        lines.append("end")
    for name in sorted(gt.placements):
        ids = " ".join(sorted(gt.placements[name]))
        lines.append(f"placement {name} {ids}".rstrip())
    return "\n".join(lines) + "\n"


def parse_ground_truth(text: str) -> GroundTruth:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "groundtruth 1":
        raise CorpusError("unrecognized ground-truth format")
    schemas: list[PlantedSchema] = []
    placements: dict[str, frozenset[str]] = {}
    schema_id: str | None = None
    template: list[Statement] = []
    for line in lines[1:]:
        tokens = line.split()
        if tokens[0] == "schema":
            schema_id = tokens[1]
            template = []
        elif tokens[0] == "stmt":
            body = line.split(None, 1)[1]
            parsed = parse_corpus(f"story _t\n{body}\n")
            template.extend(parsed.stories[0].statements)
        elif tokens[0] == "end":
            if schema_id is None:
                raise CorpusError("ground truth: 'end' outside a schema block")
            schemas.append(PlantedSchema(schema_id, tuple(template)))
            schema_id = None
        elif tokens[0] == "placement":
            placements[tokens[1]] = frozenset(tokens[2:])
        else:
            raise CorpusError(f"ground truth: unrecognized line {line!r}")
    return GroundTruth(tuple(schemas), placements)


# ---------------------------------------------------------------------------
# Synthetic corpus generation


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for ``generate_synthetic``.

    ``mean_statements`` tunes the clipped offset-exponential that story sizes
    are drawn from; the default targets roughly 0.3 * (max - min) above the
    minimum, which reproduces fable-like size distributions.
    """

    num_stories: int
    min_statements: int
    max_statements: int
    num_schemas: int = 0
    schema_size: int = 0
    placements_per_schema: int = 0
    noise_relation_vocab: int = 120
    labeled_noise_prob: float = 0.0
    mean_statements: float | None = None

    def validate(self) -> None:
        if self.num_stories < 1:
            raise GenerationError("num_stories must be >= 1")
        if not 1 <= self.min_statements <= self.max_statements:
            raise GenerationError("need 1 <= min_statements <= max_statements")
        if self.num_schemas < 0:
            raise GenerationError("num_schemas must be >= 0")
        if self.num_schemas > 0:
            if self.schema_size < 1:
                raise GenerationError("schema_size must be >= 1 when planting schemas")
            if self.schema_size > self.max_statements:
                raise GenerationError("schema_size exceeds max_statements")
            if not 0 <= self.placements_per_schema <= self.num_stories:
                raise GenerationError("placements_per_schema out of range")
        if self.noise_relation_vocab < 1:
            raise GenerationError("noise_relation_vocab must be >= 1")


def _story_sizes(params: GeneratorParams, rng) -> list[int]:
    lo, hi = params.min_statements, params.max_statements
    if lo == hi:
        return [lo] * params.num_stories
    mean_extra = (
        params.mean_statements - lo
        if params.mean_statements is not None
        else 0.3 * (hi - lo)
    )
    mean_extra = max(mean_extra, 0.5)
    sizes = []
    for _ in range(params.num_stories):
        extra = int(rng.expovariate(1.0 / mean_extra))
        sizes.append(min(hi, lo + extra))
    return sizes


def _make_template(schema_index: int, size: int, rng) -> tuple[Statement, ...]:
    """A connected statement template over placeholder variables."""
    stmts: list[Statement] = []
    variables: list[str] = []

    def fresh() -> str:
        variables.append(f"${len(variables)}")
        return variables[-1]

    for t in range(size):
        relation = f"s{schema_index:02d}r{t}"
        arity = rng.randint(1, 3)
        args = []
        for _ in range(arity):
            if variables and rng.random() < 0.5:
                args.append(rng.choice(variables))
            else:
                args.append(fresh())
        # Guarantee connectivity: one slot always reuses an earlier variable.
        if t > 0:
            prior = sorted({v for s in stmts for v in s.args})
            if not set(args) & set(prior):
                args[rng.randrange(len(args))] = rng.choice(prior)
        stmts.append(Statement(relation, tuple(args)))
    return tuple(stmts)


def generate_synthetic(params: GeneratorParams, seed: int) -> tuple[Corpus, GroundTruth]:
    """Generate a corpus with planted schemas plus connected noise.

    Each planted schema is a fixed relational template; placements re-use the
    template's relation symbols but instantiate fresh entity symbols per
    story, so placements share structure without sharing surface entities.
    Deterministic for a fixed seed.
    """
    params.validate()
    rng = derive_rng(seed, "corpus-gen")

    noise_arity = {
        f"nr{i:03d}": rng.randint(1, 3) for i in range(params.noise_relation_vocab)
    }
    noise_relations = sorted(noise_arity)

    schemas = [
        PlantedSchema(f"schema{j:02d}", _make_template(j, params.schema_size, rng))
        for j in range(params.num_schemas)
    ]

    sizes = _story_sizes(params, rng)
    planted: dict[int, list[PlantedSchema]] = {i: [] for i in range(params.num_stories)}
    load = [0] * params.num_stories
    for schema in schemas:
        capacity = [
            i
            for i in range(params.num_stories)
            if load[i] + params.schema_size <= sizes[i]
        ]
        if len(capacity) < params.placements_per_schema:
            raise GenerationError(
                f"cannot place {schema.schema_id}: only {len(capacity)} stories "
                f"have room for {params.schema_size} more statements"
            )
        # Spread placements: prefer stories hosting fewer schemas so far, with
        # random tie order, so coverage is broad rather than clumped.
        rng.shuffle(capacity)
        capacity.sort(key=lambda i: len(planted[i]))
        for i in capacity[: params.placements_per_schema]:
            planted[i].append(schema)
            load[i] += params.schema_size

    stories: list[Story] = []
    placements: dict[str, frozenset[str]] = {}
    for i in range(params.num_stories):
        name = f"story{i:03d}"
        statements: set[Statement] = set()
        entities: list[str] = []
        n_entities = 0
        n_labels = 0

        def fresh_entity() -> str:
            nonlocal n_entities
            n_entities += 1
            sym = f"e{i}x{n_entities}"
            entities.append(sym)
            return sym

        for schema in planted[i]:
            binding: dict[str, str] = {}
            for s in schema.template:
                args = tuple(
                    binding.setdefault(a, fresh_entity()) if a.startswith("$") else a
                    for a in s.args
                )
                statements.add(Statement(s.relation, args))

        while len(statements) < sizes[i]:
            relation = noise_relations[rng.randrange(len(noise_relations))]
            args = []
            for _ in range(noise_arity[relation]):
                if entities and rng.random() < 0.7:
                    args.append(entities[rng.randrange(len(entities))])
                else:
                    args.append(fresh_entity())
            stmt = Statement(relation, tuple(args))
            if stmt in statements:
                args[-1] = fresh_entity()
                stmt = Statement(relation, tuple(args))
            if rng.random() < params.labeled_noise_prob:
                n_labels += 1
                label = f"e{i}L{n_labels}"
                stmt = Statement(relation, tuple(args), label=label)
                entities.append(label)
            statements.add(stmt)

        stories.append(Story(name, tuple(statements)))
        placements[name] = frozenset(s.schema_id for s in planted[i])

    corpus = Corpus(tuple(stories))
    return corpus, GroundTruth(tuple(schemas), placements)
