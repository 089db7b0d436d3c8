"""Command-line front end.

Subcommands: ``build``, ``retrieve``, ``eval``, ``gen``, ``export-dot``,
``validate``. Defaults mirror the demonstration parameters (100 windows of 20
statements, theta 0.5, seed 42) so ``build`` + ``eval`` reproduce the
protocol with no flags. The ``SPONTOL_SEED`` environment variable overrides
the default seed; an explicit ``--seed`` flag wins over both.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .corpus import (
    CorpusError,
    GenerationError,
    GeneratorParams,
    generate_synthetic,
    parse_corpus,
    serialize_corpus,
    serialize_ground_truth,
)
from .evalharness import EvalParams, run_eval, summary_text, write_reports
from .pipeline import (
    BuildParams,
    PipelineError,
    build,
    load_model,
    retrieve_instances,
    save_model,
)
from .windows import WindowError


def _default_seed() -> int:
    return int(os.environ.get("SPONTOL_SEED", "42"))


def _add_build_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--num-windows", type=int, default=100)
    p.add_argument("--window-size", type=int, default=20)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None)


def _read_corpus(path: str, strict: bool = False):
    target = Path(path)
    if not target.exists():
        raise CorpusError(f"corpus file {path} does not exist")
    return parse_corpus(target.read_text(), strict=strict)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def cmd_build(args: argparse.Namespace) -> int:
    corpus = _read_corpus(args.corpus, strict=args.strict)
    params = BuildParams(
        num_windows=args.num_windows,
        window_size=args.window_size,
        theta=args.theta,
        seed=args.seed if args.seed is not None else _default_seed(),
    )
    result = build(corpus, params)
    save_model(result.model, args.out, overwrite=args.force)
    s = result.stats
    print(f"stories              {s.stories}")
    print(f"windows sampled      {s.sampled_windows} ({s.skipped_windows} skipped)")
    print(f"unique window bags   {s.unique_window_bags}")
    print(f"window ontology      {s.window_concepts} concepts, DL {s.window_dl_raw} -> {s.window_dl}")
    print(f"schema ontology      {s.schema_concepts} concepts, DL {s.schema_dl_raw} -> {s.schema_dl}")
    print(f"model written to     {args.out}")
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if args.story_file:
        probe_corpus = parse_corpus(Path(args.story_file).read_text())
        if len(probe_corpus.stories) != 1:
            raise CorpusError("story file must contain exactly one story")
        story = probe_corpus.stories[0]
    elif args.story and args.corpus:
        story = _read_corpus(args.corpus).story(args.story)
    else:
        raise CorpusError("need --story-file, or --story together with --corpus")
    if not story.statements:
        raise CorpusError(f"story {story.name!r} is empty")

    result = retrieve_instances(story, model)
    if args.format == "records":
        print(f"story {story.name}")
        print(f"comparisons {result.comparisons}")
        print(f"window-comparisons {result.window_comparisons}")
        for cid in sorted(result.schemas):
            print(f"schema {cid}")
        for name in sorted(result.stories):
            print(f"retrieved {name}")
    else:
        print(f"probe story: {story.name}")
        print(
            f"schema-level comparisons: {result.comparisons} "
            f"(window-level: {result.window_comparisons})"
        )
        print(f"matched schemas ({len(result.schemas)}):")
        for cid in sorted(result.schemas):
            members = ", ".join(model.instance_index.get(cid, ()))
            print(f"  {cid}  [{members}]")
        print(f"retrieved stories ({len(result.stories)}):")
        for name in sorted(result.stories):
            print(f"  {name}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = _read_corpus(args.corpus)
    params = EvalParams(
        num_windows=args.num_windows,
        window_size=args.window_size,
        theta=args.theta,
        seed=args.seed if args.seed is not None else _default_seed(),
        k=args.k,
    )
    report = run_eval(
        corpus,
        train_count=args.train,
        test_count=args.test,
        trials=args.trials,
        params=params,
        threads=args.threads,
    )
    out = Path(args.out)
    files = write_reports(report, out)
    if args.figures:
        from .figures import render_eval_figures

        files += render_eval_figures(report, out)
    print(summary_text(report), end="")
    for f in files:
        print(f"wrote {f}")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    params = GeneratorParams(
        num_stories=args.num_stories,
        min_statements=args.min_statements,
        max_statements=args.max_statements,
        num_schemas=args.num_schemas,
        schema_size=args.schema_size,
        placements_per_schema=args.placements_per_schema,
        noise_relation_vocab=args.noise_vocab,
        labeled_noise_prob=args.labeled_noise_prob,
    )
    seed = args.seed if args.seed is not None else _default_seed()
    corpus, gt = generate_synthetic(params, seed)
    _write_atomic(Path(args.out), serialize_corpus(corpus))
    print(f"wrote {args.out} ({len(corpus.stories)} stories)")
    if args.ground_truth:
        _write_atomic(Path(args.ground_truth), serialize_ground_truth(gt))
        print(f"wrote {args.ground_truth}")
    return 0


def cmd_export_dot(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if args.level == "schema":
        ontology = model.schema_ontology
    elif args.level == "window":
        ontology = model.window_ontology
    else:
        raise PipelineError(f"unknown ontology level {args.level!r}")
    _write_atomic(Path(args.out), ontology.to_dot(include_instances=not args.no_instances))
    print(f"wrote {args.out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    corpus = _read_corpus(args.corpus)
    conflicts = corpus.arity_conflicts()
    print(f"{len(corpus.stories)} stories, {len(corpus.relation_arities)} relations")
    for c in conflicts:
        print(f"warning: relation {c.relation!r} used at arities {list(c.arities)}:")
        for story_name, line in c.offenders:
            print(f"  {story_name}: {line}")
    if conflicts and args.strict:
        print("strict mode: arity conflicts are errors", file=sys.stderr)
        return 1
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spontol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a model from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true", help="overwrite an existing model")
    p.add_argument("--strict", action="store_true")
    _add_build_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("retrieve", help="retrieve schemas and analog stories")
    p.add_argument("--model", required=True)
    p.add_argument("--story", help="story name inside --corpus")
    p.add_argument("--corpus")
    p.add_argument("--story-file", help="file holding a single probe story")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("eval", help="train/test comparison against the linear baseline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train", type=int, default=100)
    p.add_argument("--test", type=int, default=26)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    figures = p.add_mutually_exclusive_group()
    figures.add_argument("--figures", dest="figures", action="store_true", default=True)
    figures.add_argument("--no-figures", dest="figures", action="store_false")
    _add_build_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate a synthetic corpus with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--ground-truth")
    p.add_argument("--num-stories", type=int, default=126)
    p.add_argument("--min-statements", type=int, default=5)
    p.add_argument("--max-statements", type=int, default=124)
    p.add_argument("--num-schemas", type=int, default=8)
    p.add_argument("--schema-size", type=int, default=5)
    p.add_argument("--placements-per-schema", type=int, default=20)
    p.add_argument("--noise-vocab", type=int, default=120)
    p.add_argument("--labeled-noise-prob", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-dot", help="export an ontology level as DOT")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--level", choices=("schema", "window"), default="schema")
    p.add_argument("--no-instances", action="store_true")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("validate", help="check a corpus for arity consistency")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, GenerationError, PipelineError, WindowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
