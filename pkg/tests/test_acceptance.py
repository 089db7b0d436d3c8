"""Acceptance suite: one test per criterion, each printing its headline numbers.

Run with ``pytest tests/test_acceptance.py -v`` for the per-criterion
pass/fail lines. Criterion 5 is the long one (a 126-story corpus evaluated
over 20 train/test trials at numWindows=100, windowSize=20); everything else
finishes in seconds.
"""

from __future__ import annotations

import random
import time

import pytest

from spontol import (
    GeneratorParams,
    chunk,
    generate_synthetic,
    oracle_optimal_chunk,
    oracle_optimal_parse,
    parse,
    parse_corpus,
    reconstruct,
    serialize_corpus,
    transform,
)
from spontol.cli import main
from spontol.evalharness import EvalParams, run_eval, run_trial

from test_transform import (
    BLAME_ATOMS,
    BLAME_WINDOW,
    DECIDE_ATOMS,
    DECIDE_WINDOW,
    _random_window,
    _rename,
    window_of,
)

TABLE1_CORPUS = GeneratorParams(
    num_stories=126,
    min_statements=5,
    max_statements=124,
    num_schemas=16,
    schema_size=5,
    placements_per_schema=20,
    noise_relation_vocab=600,
)


def test_criterion_1_golden_transform():
    blame = transform(window_of(BLAME_WINDOW))
    decide = transform(window_of(DECIDE_WINDOW))
    assert blame == frozenset(BLAME_ATOMS), "6-statement window must yield the 11 atoms"
    assert decide == frozenset(DECIDE_ATOMS), "5-statement fragment must yield the 5 atoms"
    print("criterion 1: golden transform bags reproduced exactly (11 + 5 atoms)")


def test_criterion_2_isomorphism_invariance():
    hits = 0
    for seed in range(200):
        rng = random.Random(seed)
        window = _random_window(rng)
        base = transform(window)
        symbols = sorted({a for s in window for a in s.symbols()})
        renamed = {
            sym: f"iso{idx}x" for idx, sym in enumerate(rng.sample(symbols, len(symbols)))
        }
        shuffled = window[:]
        rng.shuffle(shuffled)
        if transform(_rename(shuffled, renamed)) == base:
            hits += 1
    assert hits == 200, f"invariance held in {hits}/200 windows"
    print("criterion 2: isomorphism invariance 200/200")


def test_criterion_3_goldfish_compression():
    ontology = chunk(
        [
            frozenset({"noBreathe", "hasFins", "noFeathers", "t1"}),
            frozenset({"noBreathe", "hasFins", "noFeathers", "t2"}),
            frozenset({"noBreathe", "hasFins", "noFeathers", "t3"}),
        ]
    )
    goldfish = frozenset({"noBreathe", "hasFins", "noFeathers", "domestic"})
    result = parse(goldfish, ontology)
    assert len(goldfish) == 4
    assert result.dl == 2, f"expected dl 2, got {result.dl}"
    assert reconstruct(result, ontology) == goldfish
    print("criterion 3: goldfish instance compressed 4 -> 2 elements")


def test_criterion_4_oracle_equivalence():
    started = time.time()
    rng = random.Random(2024)
    tokens = "abcdefgh"
    lossless = 0
    checked = 0

    for case in range(250):  # chunking cases
        bags = [
            frozenset(rng.sample(tokens, rng.randint(2, 6)))
            for _ in range(rng.randint(2, 5))
        ]
        raw = sum(len(b) for b in bags)
        ontology = chunk(bags)
        greedy_dl = ontology.description_length()
        optimum = oracle_optimal_chunk(
            bags,
            max_concepts=max(3, len(ontology.concepts)),
            extra_closures=[ontology.closure(c) for c in ontology.concepts],
        )
        assert optimum <= greedy_dl <= raw, (optimum, greedy_dl, raw)
        assert all(a > b for a, b in zip(ontology.dl_trace, ontology.dl_trace[1:]))
        unfolded = [ontology.expand(bag) for bag in ontology.instances.values()]
        if sorted(unfolded, key=sorted) == sorted(set(bags), key=sorted):
            lossless += 1
        checked += 1

    for case in range(250):  # parsing cases
        training = [
            frozenset(rng.sample(tokens, rng.randint(2, 6)))
            for _ in range(rng.randint(2, 5))
        ]
        ontology = chunk(training)
        if len(ontology.concepts) > 6:
            continue
        bag = frozenset(rng.sample(tokens, rng.randint(0, 8)))
        result = parse(bag, ontology)
        optimum = oracle_optimal_parse(bag, ontology)
        assert optimum <= result.dl <= len(bag) or (not bag and result.dl == 0)
        if reconstruct(result, ontology) == bag:
            lossless += 1
        checked += 1

    elapsed = time.time() - started
    assert lossless == checked, f"losslessness {lossless}/{checked}"
    assert elapsed < 60, f"criterion 4 took {elapsed:.1f}s"
    print(f"criterion 4: {checked} oracle-sized instances within bounds, "
          f"lossless {lossless}/{checked}, {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_table1_analog():
    started = time.time()
    corpus, _ = generate_synthetic(TABLE1_CORPUS, seed=7)
    sizes = [len(s.statements) for s in corpus.stories]
    assert min(sizes) >= 5 and max(sizes) <= 124
    report = run_eval(
        corpus,
        train_count=100,
        test_count=26,
        trials=20,
        params=EvalParams(num_windows=100, window_size=20, theta=0.5, seed=123, k=3),
        threads=2,
    )
    elapsed = time.time() - started
    comparisons = report.comparisons_mean
    accuracy = report.accuracy_mean
    assert comparisons <= 0.30 * 100, f"mean comparisons {comparisons:.2f} > 30"
    assert accuracy >= 0.85, f"recall of baseline {accuracy:.3f} < 0.85"
    assert all(t.baseline_comparisons == 100 for t in report.trials)
    assert elapsed <= 600, f"criterion 5 took {elapsed:.0f}s > 10 minutes"
    print(
        f"criterion 5: accuracy {100 * accuracy:.2f}% "
        f"(stderr {report.accuracy_stderr and round(100 * report.accuracy_stderr, 2)}), "
        f"comparisons {comparisons:.2f} vs baseline 100.00, {elapsed:.0f}s"
    )


@pytest.mark.slow
def test_criterion_6_sublinear_comparisons():
    def corpus_for(n_train: int) -> object:
        n = n_train + 15
        return generate_synthetic(
            GeneratorParams(
                num_stories=n,
                min_statements=5,
                max_statements=60,
                num_schemas=max(4, round(n / 8)),
                schema_size=5,
                placements_per_schema=20,
                noise_relation_vocab=400,
            ),
            seed=21,
        )[0]

    params = EvalParams(num_windows=40, window_size=12, seed=99)
    means = {}
    for n_train in (50, 100, 200):
        corpus = corpus_for(n_train)
        trials = [run_trial(corpus, n_train, 15, params, i) for i in range(3)]
        means[n_train] = sum(t.mean_comparisons for t in trials) / len(trials)
        assert all(t.baseline_comparisons == n_train for t in trials)

    r1 = means[100] / means[50]
    r2 = means[200] / means[100]
    assert r1 < 1.5, f"50->100 ratio {r1:.2f}"
    assert r2 < 1.5, f"100->200 ratio {r2:.2f}"
    assert 100 / 50 == 200 / 100 == 2.0  # the baseline's ratio, by construction
    print(
        "criterion 6: comparisons "
        + ", ".join(f"{n}: {means[n]:.1f}" for n in (50, 100, 200))
        + f"; ratios {r1:.2f}, {r2:.2f} (baseline 2.00)"
    )


def test_criterion_7_reproducibility(tmp_path):
    corpus_file = tmp_path / "stories.txt"
    corpus, _ = generate_synthetic(
        GeneratorParams(
            num_stories=16,
            min_statements=6,
            max_statements=18,
            num_schemas=2,
            schema_size=5,
            placements_per_schema=6,
            noise_relation_vocab=60,
        ),
        seed=13,
    )
    corpus_file.write_text(serialize_corpus(corpus))

    model_files = ("model.json", "window_ontology.txt", "schema_ontology.txt", "instance_index.txt")
    report_files = ("eval_trials.csv", "eval_stories.csv", "eval_summary.txt")
    digests = []
    for run in ("one", "two"):
        model_dir = tmp_path / f"model-{run}"
        report_dir = tmp_path / f"report-{run}"
        assert main(
            ["build", "--corpus", str(corpus_file), "--out", str(model_dir),
             "--num-windows", "20", "--window-size", "6", "--seed", "5"]
        ) == 0
        assert main(
            ["eval", "--corpus", str(corpus_file), "--out", str(report_dir),
             "--train", "11", "--test", "5", "--trials", "3",
             "--num-windows", "20", "--window-size", "6", "--seed", "5", "--no-figures"]
        ) == 0
        digests.append(
            tuple((model_dir / f).read_bytes() for f in model_files)
            + tuple((report_dir / f).read_bytes() for f in report_files)
        )
    assert digests[0] == digests[1]
    print("criterion 7: build+eval byte-identical across two seeded runs")


def test_criterion_8_corpus_round_trip(sour_grapes, sour_grapes_text):
    reparsed = parse_corpus(serialize_corpus(sour_grapes))
    assert reparsed.stories[0].statements == sour_grapes.stories[0].statements
    assert len(reparsed.stories[0].statements) == 18

    ok = 0
    for seed in range(100):
        params = GeneratorParams(
            num_stories=4,
            min_statements=3,
            max_statements=10,
            num_schemas=1,
            schema_size=3,
            placements_per_schema=2,
            noise_relation_vocab=20,
            labeled_noise_prob=0.3,
        )
        corpus, _ = generate_synthetic(params, seed)
        if parse_corpus(serialize_corpus(corpus)) == corpus:
            ok += 1
    assert ok == 100
    print("criterion 8: round-trip on the 18-statement fixture and 100/100 synthetic corpora")
