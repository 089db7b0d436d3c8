"""Concept-DAG compression of feature bags, and the greedy bag parser.

An ontology stores concepts (bags whose atoms may reference other concepts)
and instances (input bags rewritten in terms of concepts). Every stored atom,
base token or concept reference, costs one description-length unit, so the
description length of the ontology is the total element count of all stored
bags, with instance bags weighted by their multiplicity.

``chunk`` grows an ontology greedily: candidate concepts are intersections of
node bags, scored by the compression they buy (k supporters of a candidate of
size c save k*(c-1) elements against a definition cost of c), and the best
positive candidate is materialized and substituted into every supporter until
no candidate helps. Concept bags take part in later intersections, which is
what produces multi-level, multiple-inheritance structure.

``parse`` re-encodes a new bag against a frozen ontology as concepts plus
additions (tokens no concept covers) and deletions (concept tokens absent
from the bag), fetching candidate concepts through an inverted index so only
concepts sharing at least one token with the bag are ever scored.
"""

from __future__ import annotations

import heapq
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from .rng import content_id

Bag = frozenset[str]


class OntologyError(ValueError):
    """Inconsistent ontology state (cycles, dangling references)."""


@dataclass(frozen=True)
class ParseResult:
    """A bag re-encoded as concepts + additions - deletions.

    ``comparisons`` counts every concept scoring performed while parsing.
    """

    concepts_used: frozenset[str]
    additions: frozenset[str]
    deletions: frozenset[str]
    comparisons: int

    @property
    def dl(self) -> int:
        return len(self.concepts_used) + len(self.additions) + len(self.deletions)


class Ontology:
    """Immutable concept DAG plus the rewritten instance bags it was built from."""

    def __init__(
        self,
        concepts: Mapping[str, Bag],
        instances: Mapping[str, Bag],
        multiplicity: Mapping[str, int] | None = None,
        dl_trace: tuple[int, ...] = (),
    ):
        self.concepts: dict[str, Bag] = {k: frozenset(v) for k, v in concepts.items()}
        self.instances: dict[str, Bag] = {k: frozenset(v) for k, v in instances.items()}
        overlap = set(self.concepts) & set(self.instances)
        if overlap:
            raise OntologyError(f"ids used as both concept and instance: {sorted(overlap)}")
        self.multiplicity: dict[str, int] = {
            k: (multiplicity or {}).get(k, 1) for k in self.instances
        }
        self.dl_trace = dl_trace
        self._closures: dict[str, Bag] = {}
        for cid in self.concepts:
            self.closure(cid)  # also validates acyclicity

    # -- structure ---------------------------------------------------------

    def is_concept(self, token: str) -> bool:
        return token in self.concepts

    def closure(self, cid: str) -> Bag:
        """Base tokens a concept expands to."""
        done = self._closures
        if cid in done:
            return done[cid]
        if cid not in self.concepts:
            raise OntologyError(f"unknown concept {cid!r}")
        visiting: set[str] = set()
        stack = [cid]
        while stack:
            node = stack[-1]
            if node in done:
                stack.pop()
                continue
            if node in visiting:
                out: set[str] = set()
                for token in self.concepts[node]:
                    if token in self.concepts:
                        out |= done[token]
                    else:
                        out.add(token)
                done[node] = frozenset(out)
                visiting.discard(node)
                stack.pop()
                continue
            visiting.add(node)
            for token in self.concepts[node]:
                if token in self.concepts and token not in done:
                    if token in visiting:
                        raise OntologyError(f"concept cycle through {token!r}")
                    stack.append(token)
        return done[cid]

    def expand(self, bag: Iterable[str]) -> Bag:
        """Unfold a bag's concept references into base tokens."""
        out: set[str] = set()
        for token in bag:
            if token in self.concepts:
                out |= self.closure(token)
            else:
                out.add(token)
        return frozenset(out)

    def inherited_concepts(self, ids: Iterable[str]) -> frozenset[str]:
        """The given concept ids plus every concept reachable through their bags."""
        out: set[str] = set()
        stack = [i for i in ids if i in self.concepts]
        while stack:
            cid = stack.pop()
            if cid in out:
                continue
            out.add(cid)
            stack.extend(t for t in self.concepts[cid] if t in self.concepts)
        return frozenset(out)

    def instance_concepts(self, iid: str) -> frozenset[str]:
        """Concepts an instance's rewritten bag references directly."""
        return frozenset(t for t in self.instances[iid] if t in self.concepts)

    def description_length(self) -> int:
        total = sum(len(bag) for bag in self.concepts.values())
        total += sum(
            self.multiplicity[iid] * len(bag) for iid, bag in self.instances.items()
        )
        return total

    @cached_property
    def _concept_index(self) -> dict[str, tuple[str, ...]]:
        """Inverted index: base token -> concept ids whose closure contains it."""
        index: dict[str, list[str]] = {}
        for cid in sorted(self.concepts):
            for token in self.closure(cid):
                index.setdefault(token, []).append(cid)
        return {t: tuple(ids) for t, ids in index.items()}

    def concepts_containing(self, token: str) -> tuple[str, ...]:
        return self._concept_index.get(token, ())

    # -- serialization -----------------------------------------------------

    FORMAT = "ontology 1"

    def to_text(self) -> str:
        lines = [self.FORMAT]
        for cid in sorted(self.concepts):
            lines.append(" ".join(["concept", cid, *sorted(self.concepts[cid])]))
        for iid in sorted(self.instances):
            lines.append(
                " ".join(
                    ["instance", iid, str(self.multiplicity[iid])]
                    + sorted(self.instances[iid])
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Ontology":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != cls.FORMAT:
            raise OntologyError("unrecognized ontology format")
        concepts: dict[str, Bag] = {}
        instances: dict[str, Bag] = {}
        multiplicity: dict[str, int] = {}
        for line in lines[1:]:
            tokens = line.split()
            if tokens[0] == "concept":
                concepts[tokens[1]] = frozenset(tokens[2:])
            elif tokens[0] == "instance":
                instances[tokens[1]] = frozenset(tokens[3:])
                multiplicity[tokens[1]] = int(tokens[2])
            else:
                raise OntologyError(f"unrecognized ontology line {line!r}")
        return cls(concepts, instances, multiplicity)

    def to_dot(self, include_instances: bool = True) -> str:
        lines = ["digraph ontology {", "  rankdir=LR;"]
        for cid in sorted(self.concepts):
            lines.append(
                f'  "{cid}" [shape=ellipse, style=filled, fillcolor=gray20, fontcolor=white];'
            )
        for cid in sorted(self.concepts):
            for token in sorted(self.concepts[cid]):
                if token in self.concepts:
                    lines.append(f'  "{cid}" -> "{token}";')
        if include_instances:
            for iid in sorted(self.instances):
                lines.append(f'  "{iid}" [shape=box];')
                for token in sorted(self.instance_concepts(iid)):
                    lines.append(f'  "{iid}" -> "{token}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# The chunker


@dataclass(frozen=True)
class ChunkConfig:
    """Performance guardrails for candidate generation.

    Tokens whose posting list exceeds ``pair_posting_cap`` are not enumerated
    when proposing candidate pairs (candidates between such nodes are still
    reachable through rarer shared tokens, and supporter counting is never
    capped, so accepted gains stay exact).
    """

    pair_posting_cap: int = 200


DEFAULT_CHUNK_CONFIG = ChunkConfig()


class _ChunkState:
    def __init__(self, instances: dict[str, Bag], multiplicity: dict[str, int], cfg: ChunkConfig):
        self.cfg = cfg
        self.bags: dict[str, set[str]] = {i: set(b) for i, b in instances.items()}
        self.mult: dict[str, int] = dict(multiplicity)
        self.concept_ids: list[str] = []
        self.concept_bags: dict[str, set[str]] = {}
        self.posting: dict[str, set[str]] = {}
        self.weight: dict[str, int] = {}
        for iid, bag in self.bags.items():
            for token in bag:
                self.posting.setdefault(token, set()).add(iid)
                self.weight[token] = self.weight.get(token, 0) + self.mult[iid]
        # candidate key -> (gain, closure size) as last pushed
        self.queued: dict[tuple[str, ...], tuple[int, int]] = {}
        self.heap: list[tuple[int, int, tuple[str, ...]]] = []

    # -- candidate bookkeeping ------------------------------------------

    def closure_size(self, key: Iterable[str]) -> int:
        out: set[str] = set()
        stack = list(key)
        seen: set[str] = set()
        while stack:
            token = stack.pop()
            if token in self.concept_bags:
                if token not in seen:
                    seen.add(token)
                    stack.extend(self.concept_bags[token])
            else:
                out.add(token)
        return len(out)

    def push(self, key: tuple[str, ...], gain: int, csize: int) -> None:
        if self.queued.get(key) == (gain, csize):
            return
        self.queued[key] = (gain, csize)
        heapq.heappush(self.heap, (-gain, -csize, key))

    def optimistic_gain(self, key: tuple[str, ...]) -> int:
        k_ub = min(self.weight.get(t, 0) for t in key)
        return k_ub * (len(key) - 1) - len(key)

    def true_gain(self, key: tuple[str, ...]) -> tuple[int, list[str]]:
        key_set = set(key)
        best_token = min(key, key=lambda t: (self.weight.get(t, 0), t))
        supporters = [
            v
            for v in sorted(self.posting.get(best_token, ()))
            if key_set <= self.bags[v]
        ]
        k_eff = sum(self.mult[v] for v in supporters)
        return k_eff * (len(key) - 1) - len(key), supporters

    def propose_pair(self, a: str, b: str) -> None:
        inter = self.bags[a] & self.bags[b]
        if len(inter) < 2:
            return
        key = tuple(sorted(inter))
        gain = self.optimistic_gain(key)
        if gain > 0:
            self.push(key, gain, self.closure_size(key))

    def propose_self(self, a: str) -> None:
        if self.mult.get(a, 1) >= 2 and len(self.bags[a]) >= 2:
            key = tuple(sorted(self.bags[a]))
            gain = self.optimistic_gain(key)
            if gain > 0:
                self.push(key, gain, self.closure_size(key))


def chunk(
    bags: Sequence[Bag] | Mapping[str, Bag],
    *,
    multiplicities: Mapping[str, int] | None = None,
    config: ChunkConfig | None = None,
) -> Ontology:
    """Build an ontology from feature bags by greedy intersection chunking.

    ``bags`` may be a sequence (instances get content-derived ids; identical
    bags collapse with summed multiplicity) or a mapping of instance id ->
    bag. The returned ontology carries ``dl_trace``, the description length
    after each accepted concept, starting from the raw encoding.
    """
    cfg = config or DEFAULT_CHUNK_CONFIG
    if isinstance(bags, Mapping):
        instances = {iid: frozenset(bag) for iid, bag in bags.items()}
        mult = {iid: (multiplicities or {}).get(iid, 1) for iid in instances}
    else:
        instances = {}
        mult = {}
        for bag in bags:
            bag = frozenset(bag)
            iid = content_id("i", tuple(sorted(bag)))
            if iid in instances:
                mult[iid] += 1
            else:
                instances[iid] = bag
                mult[iid] = 1

    state = _ChunkState(instances, mult, cfg)
    cap = cfg.pair_posting_cap

    # Initial pool: intersections of node pairs sharing >= 2 tokens.
    node_order = sorted(state.bags)
    for u in node_order:
        shared = Counter()
        for token in sorted(state.bags[u]):
            posting = state.posting[token]
            if len(posting) > cap:
                continue
            for v in posting:
                if v > u:
                    shared[v] += 1
        for v in sorted(shared):
            if shared[v] >= 2:
                state.propose_pair(u, v)
        state.propose_self(u)

    dl = sum(mult[i] * len(bag) for i, bag in instances.items())
    trace = [dl]

    while state.heap:
        neg_gain, neg_csize, key = heapq.heappop(state.heap)
        queued = state.queued.get(key)
        if queued != (-neg_gain, -neg_csize):
            continue  # superseded entry
        gain, supporters = state.true_gain(key)
        if gain != -neg_gain:
            if gain > 0:
                state.push(key, gain, -neg_csize)
            else:
                del state.queued[key]
            continue
        if gain <= 0:
            del state.queued[key]
            continue

        # Materialize the concept and substitute it into every supporter.
        del state.queued[key]
        cid = content_id("k", key)
        while cid in state.bags:
            cid = content_id("k", key + (cid,))
        key_set = set(key)
        state.bags[cid] = set(key_set)
        state.concept_bags[cid] = state.bags[cid]
        state.mult[cid] = 1
        state.concept_ids.append(cid)
        state.posting[cid] = set()
        state.weight[cid] = 0
        for token in key:
            state.posting[token].add(cid)
            state.weight[token] += 1
        for v in supporters:
            state.bags[v] -= key_set
            state.bags[v].add(cid)
            for token in key:
                state.posting[token].discard(v)
                state.weight[token] -= state.mult[v]
            state.posting[cid].add(v)
            state.weight[cid] += state.mult[v]
        dl -= gain
        trace.append(dl)

        # Refresh candidates around the rewrite: supporter pairs (they now
        # share the new concept token) and the concept against every node
        # sharing part oI its definition.
        if len(supporters) <= cap:
            for a, b in combinations(sorted(supporters), 2):
                state.propose_pair(a, b)
        for a in supporters:
            state.propose_self(a)
        for token in key:
            posting = state.posting[token]
            if len(posting) > cap:
                continue
            for v in sorted(posting):
                if v != cid:
                    state.propose_pair(cid, v)

    concepts = {cid: frozenset(state.bags[cid]) for cid in state.concept_ids}
    rewritten = {iid: frozenset(state.bags[iid]) for iid in instances}
    return Ontology(concepts, rewritten, mult, dl_trace=tuple(trace))


def description_length(ontology: Ontology) -> int:
    return ontology.description_length()


# ---------------------------------------------------------------------------
# Parsing, reconstruction, prediction


def parse(bag: Iterable[str], ontology: Ontology, theta: float = 0.5) -> ParseResult:
    """Greedy minimum-description-length cover of ``bag`` by ontology concepts.

    Only concepts sharing at least one token with the bag are fetched (via
    the inverted index) and scored; every scoring bumps ``comparisons``. A
    concept qualifies when its closure covers at least ``theta`` of itself
    inside the bag, and is selected while its gain (newly covered tokens
    minus the reference cost minus exception cost) stays non-negative.
    """
    bag = frozenset(bag)
    candidate_ids = sorted({cid for t in bag for cid in ontology.concepts_containing(t)})
    # Each candidate concept is examined (scored) once; later greedy rounds
    # re-rank the survivors but visit no new node.
    comparisons = len(candidate_ids)
    survivors: list[tuple[str, Bag, int]] = []
    for cid in candidate_ids:
        cl = ontology.closure(cid)
        if not cl or len(cl & bag) / len(cl) < theta:
            continue
        survivors.append((cid, cl, len(cl - bag)))

    used: list[str] = []
    deletions: set[str] = set()
    remaining = set(bag)
    while survivors:
        best_cid: str | None = None
        best_cl: Bag = frozenset()
        best_gain = best_csize = -1
        kept = []
        for cid, cl, extra in survivors:
            gain = len(cl & remaining) - 1 - extra
            if gain < 0:
                continue  # gains never recover once negative
            kept.append((cid, cl, extra))
            better = (
                best_cid is None
                or gain > best_gain
                or (
                    gain == best_gain
                    and (len(cl) > best_csize or (len(cl) == best_csize and cid < best_cid))
                )
            )
            if better:
                best_cid, best_cl, best_gain, best_csize = cid, cl, gain, len(cl)
        if best_cid is None:
            break
        used.append(best_cid)
        deletions |= best_cl - bag
        remaining -= best_cl
        survivors = [entry for entry in kept if entry[0] != best_cid]
    return ParseResult(
        frozenset(used), frozenset(remaining), frozenset(deletions), comparisons
    )


def reconstruct(result: ParseResult, ontology: Ontology) -> Bag:
    """Invert a parse: concept closures plus additions minus deletions."""
    out: set[str] = set(result.additions)
    for cid in result.concepts_used:
        out |= ontology.closure(cid)
    return frozenset(out - result.deletions)


def unfold(result: ParseResult, ontology: Ontology) -> Bag:
    """Expand a parse top-down: every used concept's closure plus additions."""
    out: set[str] = set(result.additions)
    for cid in result.concepts_used:
        if not ontology.is_concept(cid):
            raise OntologyError(f"parse references unknown concept {cid!r}")
        out |= ontology.closure(cid)
    return frozenset(out)


def predicted_tokens(result: ParseResult, ontology: Ontology, observed: Iterable[str]) -> Bag:
    """Tokens the unfolded parse asserts beyond what was observed."""
    return unfold(result, ontology) - frozenset(observed)
