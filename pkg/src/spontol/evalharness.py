"""Brute-force oracles, the train/test evaluation protocol, and report files.

Oracles are exhaustive references for small instances: exact maximum common
connected substructure between two stories, exact optimal parse description
length, and exact optimal chunk description length over a bounded concept
pool. The evaluation protocol splits a corpus into train/test, builds a model
on the training stories, and scores retrieval against the linear baseline:
a test story's retrieval is judged by how much of the baseline's top-k it
recalls, and cost by schema-level scoring counts versus the baseline's
store-size scans.

Report files (written by ``write_reports``):

- ``eval_trials.csv``: one row per trial, then ``mean`` and ``stderr`` rows.
  Columns: trial, seed, accuracy, accuracy_k1, accuracy_k3, accuracy_k5,
  spontol_comparisons, baseline_comparisons, window_comparisons.
- ``eval_stories.csv``: per-trial per-story rows. Columns: trial, story,
  comparisons, window_comparisons, retrieved_count, recall_k1, recall_k3,
  recall_k5.
- ``eval_summary.txt``: the two-system accuracy/comparisons table.
"""

from __future__ import annotations

import math
import statistics
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

from .baseline import build_store, linear_retrieve
from .corpus import Corpus, Statement, Story
from .ontology import Bag, Ontology
from .pipeline import BuildParams, build, retrieve_instances
from .rng import derive_rng, derive_seed

REPORT_KS = (1, 3, 5)


class OracleLimitError(ValueError):
    """Instance exceeds the oracle's exhaustive-search budget."""


# ---------------------------------------------------------------------------
# Oracle: maximum common connected substructure


def _statement_kind(s: Statement) -> tuple:
    return (s.is_labeled, s.relation, s.arity)


def _statement_symbols(s: Statement) -> tuple[str, ...]:
    if s.is_labeled:
        return (s.label, *s.args)
    return s.args


def _embed(
    stmts: Sequence[Statement], story: Story
) -> dict[str, str] | None:
    """Injective mapping of the statements into the story, entities renamed."""
    targets = list(story.statements)
    by_kind: dict[tuple, list[int]] = {}
    for i, t in enumerate(targets):
        by_kind.setdefault(_statement_kind(t), []).append(i)
    order = sorted(
        range(len(stmts)), key=lambda i: len(by_kind.get(_statement_kind(stmts[i]), ()))
    )

    mapping: dict[str, str] = {}
    reverse: dict[str, str] = {}
    used: set[int] = set()

    def attempt(pos: int) -> bool:
        if pos == len(stmts):
            return True
        s = stmts[order[pos]]
        source = _statement_symbols(s)
        for idx in by_kind.get(_statement_kind(s), ()):
            if idx in used:
                continue
            target = _statement_symbols(targets[idx])
            added: list[str] = []
            ok = True
            for a, b in zip(source, target):
                if mapping.get(a) == b and reverse.get(b) == a:
                    continue
                if a in mapping or b in reverse:
                    ok = False
                    break
                mapping[a] = b
                reverse[b] = a
                added.append(a)
            if ok:
                used.add(idx)
                if attempt(pos + 1):
                    return True
                used.discard(idx)
            for a in added:
                reverse.pop(mapping.pop(a))
        return False

    return dict(mapping) if attempt(0) else None


def _connected_subsets(story: Story) -> dict[int, list[frozenset[int]]]:
    """All connected statement index sets, grouped by size."""
    from .windows import StoryGraph

    graph = StoryGraph(story)
    n = len(story.statements)
    seen: set[frozenset[int]] = {frozenset({i}) for i in range(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for subset in frontier:
            reachable = set()
            for i in subset:
                reachable |= graph.adjacency[i]
            for j in sorted(reachable - subset):
                grown = subset | {j}
                if grown not in seen:
                    seen.add(grown)
                    nxt.append(grown)
        frontier = nxt
    by_size: dict[int, list[frozenset[int]]] = {}
    for subset in seen:
        by_size.setdefault(len(subset), []).append(subset)
    return by_size


def oracle_common_substructure(
    a: Story, b: Story, max_statements: int = 8
) -> tuple[int, dict[str, str]]:
    """Exact largest common connected substructure size and one witness mapping.

    Exhaustive: both stories must have at most ``max_statements`` statements.
    """
    if len(a.statements) > max_statements or len(b.statements) > max_statements:
        raise OracleLimitError(
            f"stories exceed the {max_statements}-statement oracle limit"
        )
    if len(a.statements) > len(b.statements):
        size, mapping = oracle_common_substructure(b, a, max_statements)
        return size, {v: k for k, v in mapping.items()}
    by_size = _connected_subsets(a)
    for size in sorted(by_size, reverse=True):
        for subset in sorted(by_size[size], key=sorted):
            stmts = [a.statements[i] for i in sorted(subset)]
            mapping = _embed(stmts, b)
            if mapping is not None:
                return size, mapping
    return 0, {}


def template_embeds(template: Sequence[Statement], story: Story) -> bool:
    """One-sided embedding check (story size unbounded, template small)."""
    if len(template) > 12:
        raise OracleLimitError("template exceeds the 12-statement limit")
    return _embed(list(template), story) is not None


# ---------------------------------------------------------------------------
# Oracle: optimal parse


def oracle_optimal_parse(
    bag: Iterable[str], ontology: Ontology, max_concepts: int = 6, max_tokens: int = 12
) -> int:
    """Exact minimum parse description length over all concept subsets."""
    bag = frozenset(bag)
    cids = sorted(ontology.concepts)
    if len(cids) > max_concepts:
        raise OracleLimitError(f"ontology exceeds {max_concepts} concepts")
    if len(bag) > max_tokens:
        raise OracleLimitError(f"bag exceeds {max_tokens} tokens")
    best = len(bag)
    for r in range(1, len(cids) + 1):
        for subset in combinations(cids, r):
            covered: set[str] = set()
            for cid in subset:
                covered |= ontology.closure(cid)
            dl = len(subset) + len(bag - covered) + len(covered - bag)
            best = min(best, dl)
    return best


# ---------------------------------------------------------------------------
# Oracle: optimal chunk


def _encoding_cost(target: Bag, parts: Sequence[Bag], allow_equal: bool) -> int:
    usable = [p for p in parts if p <= target and (allow_equal or p != target)]
    best = len(target)
    for r in range(1, len(usable) + 1):
        for chosen in combinations(usable, r):
            union: set[str] = set()
            for p in chosen:
                union |= p
            best = min(best, r + len(target - union))
    return best


def oracle_optimal_chunk(
    bags: Sequence[Iterable[str]],
    max_concepts: int = 3,
    extra_closures: Iterable[Iterable[str]] = (),
    max_bags: int = 5,
    max_tokens: int = 8,
) -> int:
    """Exact minimum ontology description length over a bounded concept pool.

    The pool is the intersection semilattice of the instance bags (plus any
    ``extra_closures``, e.g. closures a greedy run chose, which guarantees the
    oracle value never exceeds that run's). Concepts are sets of base tokens;
    definitions may reference strictly smaller chosen concepts, instances may
    reference any chosen concept.
    """
    bags = [frozenset(b) for b in bags]
    tokens = set().union(*bags) if bags else set()
    if len(bags) > max_bags:
        raise OracleLimitError(f"more than {max_bags} bags")
    if len(tokens) > max_tokens:
        raise OracleLimitError(f"more than {max_tokens} distinct tokens")

    pool: set[Bag] = {frozenset(c) for c in extra_closures if len(frozenset(c)) >= 2}
    for r in range(1, len(bags) + 1):
        for chosen in combinations(range(len(bags)), r):
            inter = frozenset.intersection(*(bags[i] for i in chosen))
            if len(inter) >= 2:
                pool.add(inter)
    ordered_pool = sorted(pool, key=lambda c: (len(c), sorted(c)))

    best = sum(len(b) for b in bags)
    for r in range(1, min(max_concepts, len(ordered_pool)) + 1):
        for concepts in combinations(ordered_pool, r):
            total = 0
            for c in concepts:
                total += _encoding_cost(c, [d for d in concepts if d != c], False)
            for bag in bags:
                total += _encoding_cost(bag, concepts, True)
            if total < best:
                best = total
    return best


# ---------------------------------------------------------------------------
# Evaluation protocol


@dataclass(frozen=True)
class EvalParams:
    num_windows: int = 100
    window_size: int = 20
    theta: float = 0.5
    seed: int = 42
    k: int = 3

    def build_params(self, trial_seed: int) -> BuildParams:
        return BuildParams(
            num_windows=self.num_windows,
            window_size=self.window_size,
            theta=self.theta,
            seed=trial_seed,
        )


@dataclass(frozen=True)
class StoryEval:
    name: str
    comparisons: int
    window_comparisons: int
    retrieved_count: int
    hits: dict[int, int]
    totals: dict[int, int]


@dataclass(frozen=True)
class TrialReport:
    index: int
    trial_seed: int
    accuracy: float
    accuracy_by_k: dict[int, float]
    mean_comparisons: float
    mean_window_comparisons: float
    baseline_comparisons: float
    stories: tuple[StoryEval, ...]


@dataclass(frozen=True)
class EvalReport:
    params: EvalParams
    train_count: int
    test_count: int
    trials: tuple[TrialReport, ...]
    accuracy_mean: float
    accuracy_stderr: float | None
    comparisons_mean: float
    comparisons_stderr: float | None
    baseline_comparisons_mean: float
    baseline_comparisons_stderr: float | None
    accuracy_by_k_mean: dict[int, float]


def pooled_recall(retrieved: frozenset[str], baseline_top: Sequence[str]) -> tuple[int, int]:
    hits = sum(1 for name in baseline_top if name in retrieved)
    return hits, len(baseline_top)


def run_trial(
    corpus: Corpus,
    train_count: int,
    test_count: int,
    params: EvalParams,
    index: int,
) -> TrialReport:
    names = sorted(s.name for s in corpus.stories)
    rng = derive_rng(params.seed, "split", index)
    shuffled = rng.sample(names, len(names))
    train_names = shuffled[:train_count]
    test_names = shuffled[train_count : train_count + test_count]

    by_name = {s.name: s for s in corpus.stories}
    train_corpus = Corpus(tuple(by_name[n] for n in train_names))
    trial_seed = derive_seed(params.seed, "trial", index)
    result = build(train_corpus, params.build_params(trial_seed))
    store = build_store(result.story_bags)

    ks = sorted(set(REPORT_KS) | {params.k})
    stories: list[StoryEval] = []
    for name in test_names:
        ir = retrieve_instances(by_name[name], result.model)
        lin = linear_retrieve(ir.story_bag, store, k=max(ks))
        assert lin.comparisons == train_count
        hits: dict[int, int] = {}
        totals: dict[int, int] = {}
        for k in ks:
            top = [n for n, _ in lin.ranked[:k]]
            hits[k], totals[k] = pooled_recall(ir.stories, top)
        stories.append(
            StoryEval(
                name=name,
                comparisons=ir.comparisons,
                window_comparisons=ir.window_comparisons,
                retrieved_count=len(ir.stories),
                hits=hits,
                totals=totals,
            )
        )

    accuracy_by_k = {}
    for k in ks:
        total = sum(s.totals[k] for s in stories)
        accuracy_by_k[k] = (
            sum(s.hits[k] for s in stories) / total if total else 1.0
        )
    return TrialReport(
        index=index,
        trial_seed=trial_seed,
        accuracy=accuracy_by_k[params.k],
        accuracy_by_k=accuracy_by_k,
        mean_comparisons=statistics.fmean(s.comparisons for s in stories),
        mean_window_comparisons=statistics.fmean(s.window_comparisons for s in stories),
        baseline_comparisons=float(train_count),
        stories=tuple(stories),
    )


def _trial_worker(args) -> TrialReport:
    return run_trial(*args)


def run_eval(
    corpus: Corpus,
    train_count: int,
    test_count: int,
    trials: int,
    params: EvalParams | None = None,
    threads: int = 1,
) -> EvalReport:
    """The split/build/retrieve protocol, aggregated over independent trials."""
    params = params or EvalParams()
    if train_count + test_count > len(corpus.stories):
        raise ValueError(
            f"split {train_count}+{test_count} exceeds corpus size {len(corpus.stories)}"
        )
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if test_count < 1 or train_count < 1:
        raise ValueError("train and test counts must be >= 1")

    args = [(corpus, train_count, test_count, params, i) for i in range(trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_trial_worker, args))
    else:
        reports = [run_trial(*a) for a in args]
    reports.sort(key=lambda r: r.index)

    def agg(values: list[float]) -> tuple[float, float | None]:
        mean = statistics.fmean(values)
        if len(values) < 2:
            return mean, None
        return mean, statistics.stdev(values) / math.sqrt(len(values))

    acc_mean, acc_err = agg([r.accuracy for r in reports])
    cmp_mean, cmp_err = agg([r.mean_comparisons for r in reports])
    base_mean, base_err = agg([r.baseline_comparisons for r in reports])
    ks = sorted(set(REPORT_KS) | {params.k})
    return EvalReport(
        params=params,
        train_count=train_count,
        test_count=test_count,
        trials=tuple(reports),
        accuracy_mean=acc_mean,
        accuracy_stderr=acc_err,
        comparisons_mean=cmp_mean,
        comparisons_stderr=cmp_err,
        baseline_comparisons_mean=base_mean,
        baseline_comparisons_stderr=base_err,
        accuracy_by_k_mean={
            k: statistics.fmean(r.accuracy_by_k[k] for r in reports) for k in ks
        },
    )


# ---------------------------------------------------------------------------
# Report files


def _fmt(value: float | None, digits: int = 4) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def trials_csv(report: EvalReport) -> str:
    header = (
        "trial,seed,accuracy,accuracy_k1,accuracy_k3,accuracy_k5,"
        "spontol_comparisons,baseline_comparisons,window_comparisons"
    )
    lines = [header]
    for t in report.trials:
        lines.append(
            ",".join(
                [
                    str(t.index),
                    str(t.trial_seed),
                    _fmt(t.accuracy),
                    _fmt(t.accuracy_by_k.get(1)),
                    _fmt(t.accuracy_by_k.get(3)),
                    _fmt(t.accuracy_by_k.get(5)),
                    _fmt(t.mean_comparisons),
                    _fmt(t.baseline_comparisons),
                    _fmt(t.mean_window_comparisons),
                ]
            )
        )
    lines.append(
        ",".join(
            [
                "mean",
                "",
                _fmt(report.accuracy_mean),
                _fmt(report.accuracy_by_k_mean.get(1)),
                _fmt(report.accuracy_by_k_mean.get(3)),
                _fmt(report.accuracy_by_k_mean.get(5)),
                _fmt(report.comparisons_mean),
                _fmt(report.baseline_comparisons_mean),
                _fmt(statistics.fmean(t.mean_window_comparisons for t in report.trials)),
            ]
        )
    )
    lines.append(
        ",".join(
            [
                "stderr",
                "",
                _fmt(report.accuracy_stderr),
                "",
                "",
                "",
                _fmt(report.comparisons_stderr),
                _fmt(report.baseline_comparisons_stderr),
                "",
            ]
        )
    )
    return "\n".join(lines) + "\n"


def stories_csv(report: EvalReport) -> str:
    lines = [
        "trial,story,comparisons,window_comparisons,retrieved_count,"
        "recall_k1,recall_k3,recall_k5"
    ]
    for t in report.trials:
        for s in t.stories:
            def recall(k: int) -> str:
                total = s.totals.get(k, 0)
                return _fmt(s.hits[k] / total if total else 1.0)

            lines.append(
                ",".join(
                    [
                        str(t.index),
                        s.name,
                        str(s.comparisons),
                        str(s.window_comparisons),
                        str(s.retrieved_count),
                        recall(1),
                        recall(3),
                        recall(5),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def summary_text(report: EvalReport) -> str:
    def pct(value: float) -> str:
        return f"{100 * value:.2f}%"

    def err_pct(value: float | None) -> str:
        return "n/a" if value is None else pct(value)

    def err(value: float | None) -> str:
        return "n/a" if value is None else f"{value:.2f}"

    lines = [
        f"trials={len(report.trials)} train={report.train_count} "
        f"test={report.test_count} k={report.params.k} "
        f"numWindows={report.params.num_windows} windowSize={report.params.window_size}",
        "",
        f"{'system':<10} {'accuracy':>20} {'avg comparisons':>22}",
        f"{'baseline':<10} {'100.00% +/- 0.00%':>20} "
        f"{_fmt(report.baseline_comparisons_mean, 2) + ' +/- ' + err(report.baseline_comparisons_stderr):>22}",
        f"{'spontol':<10} "
        f"{pct(report.accuracy_mean) + ' +/- ' + err_pct(report.accuracy_stderr):>20} "
        f"{_fmt(report.comparisons_mean, 2) + ' +/- ' + err(report.comparisons_stderr):>22}",
        "",
        "accuracy by baseline k: "
        + "  ".join(f"k={k}: {pct(v)}" for k, v in sorted(report.accuracy_by_k_mean.items())),
    ]
    return "\n".join(lines) + "\n"


def write_reports(report: EvalReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, text in [
        ("eval_trials.csv", trials_csv(report)),
        ("eval_stories.csv", stories_csv(report)),
        ("eval_summary.txt", summary_text(report)),
    ]:
        target = out / name
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(text)
        tmp.replace(target)
        files.append(target)
    return files
