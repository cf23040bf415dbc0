"""Command-line entry point wiring the toolkit's modules into workflows."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus, cost, generation, metrics, schedule, translate
from .config import ConfigValidationError, RunConfig, write_manifest
from .endpoint import (
    EndpointError,
    GenerationConfig,
    HttpChatEndpoint,
    MockChatEndpoint,
)
from .records import CLASSES, read_records, write_records

log = logging.getLogger("cmaug")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmaug",
        description="Code-mixed sentiment data augmentation toolkit",
    )
    parser.add_argument("--config", type=Path, default=None, help="YAML run config")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="clean, filter, and resplit a corpus")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", choices=["canonical-jsonl", "delimited-text"],
                   default="canonical-jsonl")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--allowed-labels", nargs="*", default=None,
                   help="raw labels to keep; others are filtered out")
    p.add_argument("--drop-hashtag-tokens", action="store_true")
    p.add_argument("--skip-bad-rows", action="store_true")
    p.add_argument("--resplit", nargs=3, type=int, metavar=("TRAIN", "VAL", "TEST"),
                   default=None)

    p = sub.add_parser("stats", help="corpus summary statistics")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("generate", help="LLM few-shot synthetic data generation")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--mock", action="store_true")
    p.add_argument("--mock-malformed-rate", type=float, default=None)

    p = sub.add_parser("translate", help="random-translation augmentation")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--word-map", type=Path, default=None,
                   help="word-map file for the mock translator")
    p.add_argument("--mt-url", default=None, help="HTTP MT endpoint")
    p.add_argument("--ratio-range", nargs=2, type=float, default=[0.2, 0.8])
    p.add_argument("--per-token", action="store_true")
    p.add_argument("--src", default="en")
    p.add_argument("--dst", default="es")

    p = sub.add_parser("plan", help="build a gradual fine-tuning plan")
    p.add_argument("--natural-n", type=int, default=None)
    p.add_argument("--synthetic-pool", type=int, required=True)
    p.add_argument("--synth-sizes", nargs="*", type=int, default=None)
    p.add_argument("--lrs", nargs="*", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--one-stage", action="store_true",
                   help="single stage at the base learning rate")
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("train", help="run a plan through the trainer protocol")
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--natural", type=Path, required=True)
    p.add_argument("--synthetic", type=Path, required=True)
    p.add_argument("--val", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--trainer", default="mock",
                   help="'mock' or an external trainer command")

    p = sub.add_parser("evaluate", help="score predictions against a dataset")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--predictions", type=Path, required=True,
                   help="one predicted label per line, dataset order")
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("zero-shot", help="zero-shot prediction via the endpoint")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--mock", action="store_true")

    p = sub.add_parser("compare", help="percent change between two report files")
    p.add_argument("baseline", type=Path)
    p.add_argument("augmented", type=Path)

    p = sub.add_parser("cm-stats", help="code-mixing pattern statistics")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--lexicon", nargs=2, action="append", metavar=("LANG", "FILE"),
                   required=True, help="language tag and word-list file")

    he = sub.add_parser("humaneval", help="human-evaluation sessions")
    he_sub = he.add_subparsers(dest="he_command", required=True)
    p = he_sub.add_parser("create")
    p.add_argument("--natural", type=Path, required=True)
    p.add_argument("--synthetic", type=Path, required=True)
    p.add_argument("--n-each", type=int, default=None)
    p.add_argument("--annotators", nargs="+", default=None)
    p.add_argument("--output", type=Path, required=True)
    p = he_sub.add_parser("serve")
    p.add_argument("--session-dir", type=Path, required=True, nargs="+")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static-dir", type=Path, default=None)
    p = he_sub.add_parser("export")
    p.add_argument("--session-dir", type=Path, required=True)
    p.add_argument("--output", type=Path, default=None)
    p = he_sub.add_parser("report")
    p.add_argument("--session-dir", type=Path, required=True)
    p.add_argument("--output", type=Path, default=None)

    co = sub.add_parser("cost", help="annotation vs generation cost models")
    co_sub = co.add_subparsers(dest="cost_command", required=True)
    p = co_sub.add_parser("mturk")
    p.add_argument("--sentences", type=int, required=True)
    p.add_argument("--rejection-rate", type=float, default=0.0)
    p.add_argument("--annotators-per-item", type=int, default=1)
    p.add_argument("--output", type=Path, default=None)
    p = co_sub.add_parser("llm")
    p.add_argument("--requests", type=int, required=True)
    p.add_argument("--instruction-tokens", type=float, default=330)
    p.add_argument("--demos", type=int, default=15)
    p.add_argument("--demo-tokens-avg", type=float, default=20.8)
    p.add_argument("--out-examples", type=int, default=50)
    p.add_argument("--out-tokens-avg", type=float, default=21)
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("pipeline", help="preprocess -> generate -> plan -> train "
                                        "-> evaluate -> compare, under mocks")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--target", type=int, default=300)
    p.add_argument("--sizes", nargs=3, type=int, default=[200, 50, 50])

    return parser


def _endpoint(cfg: RunConfig, mock: bool, malformed: float | None):
    if mock or cfg.endpoint.mock:
        return MockChatEndpoint(
            seed=cfg.seed,
            malformed_rate=(
                malformed if malformed is not None else cfg.endpoint.mock_malformed_rate
            ),
        )
    return HttpChatEndpoint(cfg.endpoint.url, cfg.endpoint.api_key_env)


def _generation_config(cfg: RunConfig) -> GenerationConfig:
    g = cfg.generation
    return GenerationConfig(
        model_id=g.model_id,
        temperature=g.temperature,
        max_retries=g.max_retries,
        parallelism=g.parallelism,
    )


def cmd_preprocess(args, cfg: RunConfig) -> int:
    records = corpus.load_dataset(args.input, args.format, args.skip_bad_rows)
    options = corpus.PreprocessOptions(drop_hashtag_tokens=args.drop_hashtag_tokens)
    cleaned, dropped = corpus.preprocess_corpus(records, options)
    print(f"loaded {len(records)}, dropped {dropped} empty after cleaning",
          file=sys.stderr)
    if args.allowed_labels is not None:
        cleaned, removed = corpus.filter_labels(cleaned, set(args.allowed_labels))
        for raw, n in sorted(removed.items()):
            print(f"filtered {n} records with raw label {raw!r}", file=sys.stderr)
    if args.resplit:
        split = corpus.resplit(cleaned, tuple(args.resplit), cfg.seed)
        out_dir = args.output
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, part in (("train", split.train), ("val", split.val),
                           ("test", split.test)):
            write_records(part, out_dir / f"{name}.jsonl")
        write_manifest(out_dir, "preprocess", cfg,
                       {"sizes": args.resplit, "input": str(args.input)})
    else:
        write_records(cleaned, args.output)
        write_manifest(args.output.parent, "preprocess", cfg,
                       {"input": str(args.input)})
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    records = read_records(args.input)
    report = corpus.stats(records)
    text = report.render()
    print(text)
    if args.output:
        args.output.write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_generate(args, cfg: RunConfig) -> int:
    train = read_records(args.train)
    target = args.target if args.target is not None else cfg.generation.target
    spec = generation.PromptSpec(
        shots=cfg.generation.shots,
        batch_size=cfg.generation.batch_size,
        lang_pair=cfg.generation.lang_pair,
    )
    job = generation.GenerationJob(target_size=target, seed=cfg.seed)
    endpoint = _endpoint(cfg, args.mock, args.mock_malformed_rate)
    out_dir = args.output
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        records = generation.run_generation(
            job, spec, _generation_config(cfg), train, endpoint
        )
    except generation.GenerationAborted as exc:
        write_records(exc.partial, out_dir / "synthetic.partial.jsonl")
        log.error("%s; %d partial records persisted", exc, len(exc.partial))
        return EXIT_RUNTIME
    write_records(records, out_dir / "synthetic.jsonl")
    write_manifest(out_dir, "generate", cfg, {
        "target": target,
        "requests_sent": job.requests_sent,
        "rejected_lines": job.rejected_lines,
        "token_usage": list(job.token_usage),
    })
    print(f"produced {job.produced} records in {job.requests_sent} requests "
          f"({job.rejected_lines} rejected lines)", file=sys.stderr)
    return EXIT_OK


def cmd_translate(args, cfg: RunConfig) -> int:
    if (args.word_map is None) == (args.mt_url is None):
        log.error("provide exactly one of --word-map or --mt-url")
        return EXIT_VALIDATION
    mt = (translate.WordMapTranslator.from_file(args.word_map)
          if args.word_map else translate.HttpTranslator(args.mt_url))
    records = read_records(args.input)
    converted, skipped = translate.convert_corpus(
        records, cfg.seed, mt, ratio_range=tuple(args.ratio_range),
        src=args.src, dst=args.dst, per_token=args.per_token,
    )
    args.output.mkdir(parents=True, exist_ok=True)
    write_records(converted, args.output / "synthetic_mt.jsonl")
    summary = corpus.stats(converted)
    print(summary.render())
    print(f"converted {len(converted)}, skipped {skipped}", file=sys.stderr)
    write_manifest(args.output, "translate", cfg,
                   {"skipped": skipped, "input": str(args.input)})
    return EXIT_OK


def cmd_plan(args, cfg: RunConfig) -> int:
    natural_n = args.natural_n if args.natural_n is not None else cfg.plan.natural_n
    epochs = args.epochs if args.epochs is not None else cfg.plan.epochs
    if args.one_stage:
        synth = args.synth_sizes[0] if args.synth_sizes else 15_000
        lr = args.lrs[0] if args.lrs else schedule.BaseHparams().base_lr
        plan = schedule.one_stage_plan(
            natural_n, synth, lr=lr, epochs=epochs, clamp=args.clamp,
            natural_seed=cfg.seed, synthetic_seed=cfg.seed,
            model_id=cfg.plan.model_id,
        )
        if args.synthetic_pool < synth and not args.clamp:
            raise schedule.InsufficientSynthetic(
                f"pool {args.synthetic_pool} < {synth}"
            )
    else:
        plan = schedule.gradual_plan(
            natural_n,
            args.synthetic_pool,
            synth_sizes=args.synth_sizes or cfg.plan.synth_sizes,
            lrs=args.lrs or cfg.plan.lrs,
            epochs=epochs,
            clamp=args.clamp,
            natural_seed=cfg.seed,
            synthetic_seed=cfg.seed,
            model_id=cfg.plan.model_id,
        )
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(
        json.dumps(plan.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote {len(plan.stages)}-stage plan to {args.output}", file=sys.stderr)
    return EXIT_OK


def _load_plan(path: Path) -> schedule.TrainingPlan:
    obj = json.loads(path.read_text(encoding="utf-8"))
    return schedule.TrainingPlan(
        stages=[schedule.TrainingStage(**s) for s in obj["stages"]],
        base_hparams=schedule.BaseHparams(**obj["base_hparams"]),
        natural_seed=obj["natural_seed"],
        synthetic_seed=obj["synthetic_seed"],
        model_id=obj["model_id"],
    )


def cmd_train(args, cfg: RunConfig) -> int:
    plan = _load_plan(args.plan)
    natural = read_records(args.natural)
    synthetic = read_records(args.synthetic)
    trainer = (schedule.MockTrainer() if args.trainer == "mock"
               else schedule.CommandTrainer(args.trainer.split()))
    try:
        result = schedule.run_plan(
            plan, trainer, natural, synthetic, args.val, args.output
        )
    except schedule.StageFailed as exc:
        log.error("%s (%d stage results persisted)", exc, len(exc.partial))
        return EXIT_RUNTIME
    (args.output / "result.json").write_text(
        json.dumps(
            {
                "per_stage": result.per_stage,
                "final": result.final,
                "wall_time": result.wall_time,
                "trainer_id": result.trainer_id,
            },
            indent=2, sort_keys=True,
        ),
        encoding="utf-8",
    )
    write_manifest(args.output, "train", cfg, {"plan": str(args.plan)})
    print(f"final val_weighted_f1 {result.final['val_weighted_f1']:.4f}",
          file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    records = read_records(args.dataset)
    preds = [
        line.strip()
        for line in args.predictions.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    report = metrics.classification_report([r.label for r in records], preds)
    print(report.render())
    if args.output:
        args.output.write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


def cmd_zero_shot(args, cfg: RunConfig) -> int:
    records = read_records(args.dataset)
    endpoint = _endpoint(cfg, args.mock, None)
    preds = generation.zero_shot_predict(records, _generation_config(cfg), endpoint)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text("\n".join(preds) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    reports = []
    for path in (args.baseline, args.augmented):
        obj = json.loads(path.read_text(encoding="utf-8"))
        # accept either an EvalReport file or a train result file
        if "weighted_f1" in obj:
            reports.append(obj["weighted_f1"])
        elif "final" in obj:
            reports.append(obj["final"]["val_weighted_f1"])
        else:
            log.error("%s: no weighted_f1 found", path)
            return EXIT_VALIDATION
    change = metrics.percent_change(reports[0], reports[1])
    print(f"baseline  {reports[0]:.4f}")
    print(f"augmented {reports[1]:.4f}")
    print(f"change    {change:+.2f}%")
    return EXIT_OK


def cmd_cm_stats(args, cfg: RunConfig) -> int:
    records = read_records(args.input)
    lexicons = {}
    for lang, path in args.lexicon:
        words = {
            w.strip().lower()
            for w in Path(path).read_text(encoding="utf-8").splitlines()
            if w.strip()
        }
        lexicons[lang] = words
    print(metrics.cm_stats(records, lexicons).render())
    return EXIT_OK


def cmd_humaneval(args, cfg: RunConfig) -> int:
    from . import humaneval

    if args.he_command == "create":
        natural = read_records(args.natural)
        synthetic = read_records(args.synthetic)
        n_each = args.n_each if args.n_each is not None else cfg.humaneval.n_each
        annotators = args.annotators or cfg.humaneval.annotators
        session = humaneval.build_session(
            natural, synthetic, n_each, cfg.seed, annotators
        )
        humaneval.save_session(session, args.output)
        print(f"session {session.session_id}: {len(session.items)} items",
              file=sys.stderr)
        print(f"admin token: {session.admin_token}", file=sys.stderr)
        for annotator, token in session.annotator_tokens.items():
            print(f"annotator token [{annotator}]: {token}", file=sys.stderr)
        return EXIT_OK
    if args.he_command == "serve":
        import uvicorn

        from .humaneval_api import SessionStore, create_app

        store = SessionStore(args.session_dir[0].parent)
        for directory in args.session_dir:
            store.add(humaneval.load_session(directory))
        app = create_app(store, static_dir=args.static_dir)
        uvicorn.run(
            app,
            host=args.host or cfg.humaneval.host,
            port=args.port or cfg.humaneval.port,
        )
        return EXIT_OK
    session = humaneval.load_session(args.session_dir)
    if args.he_command == "export":
        lines = "\n".join(humaneval.export_judgments(session))
        if args.output:
            args.output.write_text(lines + "\n", encoding="utf-8")
        else:
            print(lines)
        return EXIT_OK
    if args.he_command == "report":
        report = humaneval.aggregate(session)
        print(report.render())
        if args.output:
            args.output.write_text(
                json.dumps(report.to_dict(), indent=2, sort_keys=True),
                encoding="utf-8",
            )
        return EXIT_OK
    return EXIT_VALIDATION


def cmd_cost(args, cfg: RunConfig) -> int:
    if args.cost_command == "mturk":
        model = cost.AnnotationCostModel(
            n_sentences=args.sentences,
            per_hit=cfg.cost.per_hit,
            annotated_per_hit=cfg.cost.annotated_per_hit,
            price_per_hit=cfg.cost.price_per_hit,
            rejection_rate=args.rejection_rate,
            annotators_per_item=args.annotators_per_item,
        )
        total = cost.mturk_cost(model)
        text = (f"sentences        {model.n_sentences:,}\n"
                f"HITs             {-(-model.n_sentences // model.annotated_per_hit):,}\n"
                f"rejection rate   {model.rejection_rate:.0%}\n"
                f"total cost       ${total:,.0f}")
        result = {"total": total}
    else:
        model = cost.LLMCostModel(
            requests=args.requests,
            instruction_tokens=args.instruction_tokens,
            demos=args.demos,
            demo_tokens_avg=args.demo_tokens_avg,
            out_examples=args.out_examples,
            out_tokens_avg=args.out_tokens_avg,
            price_in_per_m=cfg.cost.price_in_per_m,
            price_out_per_m=cfg.cost.price_out_per_m,
        )
        breakdown = cost.llm_cost(model)
        text = breakdown.render()
        result = {
            "input_cost": round(breakdown.input_cost, 2),
            "output_cost": round(breakdown.output_cost, 2),
            "total": round(breakdown.total, 2),
            "tokens_per_request": breakdown.tokens_per_request,
            "total_tokens": breakdown.total_tokens,
        }
    print(text)
    if args.output:
        args.output.write_text(
            json.dumps(result, indent=2, sort_keys=True), encoding="utf-8"
        )
    return EXIT_OK


def cmd_pipeline(args, cfg: RunConfig) -> int:
    """End-to-end smoke workflow under mocks on a small fixture corpus."""
    out = args.output
    out.mkdir(parents=True, exist_ok=True)

    records = corpus.load_dataset(args.input, "canonical-jsonl")
    cleaned, dropped = corpus.preprocess_corpus(records)
    split = corpus.resplit(cleaned, tuple(args.sizes), cfg.seed)
    for name, part in (("train", split.train), ("val", split.val),
                       ("test", split.test)):
        write_records(part, out / f"{name}.jsonl")

    endpoint = MockChatEndpoint(seed=cfg.seed,
                                malformed_rate=cfg.endpoint.mock_malformed_rate)
    spec = generation.PromptSpec(
        shots=min(cfg.generation.shots, 9),
        batch_size=min(cfg.generation.batch_size, 50),
        lang_pair=cfg.generation.lang_pair,
    )
    job = generation.GenerationJob(target_size=args.target, seed=cfg.seed)
    synthetic = generation.run_generation(
        job, spec, _generation_config(cfg), split.train, endpoint
    )
    write_records(synthetic, out / "synthetic.jsonl")

    synth_sizes = [args.target, args.target // 2, 0]
    lrs = [1e-6, 2e-6, 2e-6]
    plan = schedule.gradual_plan(
        len(split.train), len(synthetic), synth_sizes=synth_sizes, lrs=lrs,
        epochs=cfg.plan.epochs, natural_seed=cfg.seed, synthetic_seed=cfg.seed,
    )
    baseline_plan = schedule.one_stage_plan(
        len(split.train), 0, natural_seed=cfg.seed, synthetic_seed=cfg.seed
    )
    trainer = schedule.MockTrainer()
    val_path = out / "val.jsonl"
    baseline = schedule.run_plan(
        baseline_plan, trainer, split.train, [], val_path, out / "train_baseline"
    )
    augmented = schedule.run_plan(
        plan, trainer, split.train, synthetic, val_path, out / "train_augmented"
    )

    preds = generation.zero_shot_predict(
        split.test, _generation_config(cfg), endpoint
    )
    (out / "zero_shot_predictions.txt").write_text(
        "\n".join(preds) + "\n", encoding="utf-8"
    )
    eval_report = metrics.classification_report(
        [r.label for r in split.test], preds
    )
    (out / "evaluate_report.json").write_text(eval_report.to_json(), encoding="utf-8")

    change = metrics.percent_change(
        baseline.final["val_weighted_f1"], augmented.final["val_weighted_f1"]
    )
    comparison = {
        "baseline_weighted_f1": baseline.final["val_weighted_f1"],
        "augmented_weighted_f1": augmented.final["val_weighted_f1"],
        "percent_change": change,
    }
    (out / "comparison.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True), encoding="utf-8"
    )
    write_manifest(out, "pipeline", cfg, {
        "input": str(args.input),
        "dropped": dropped,
        "generation": {
            "requests_sent": job.requests_sent,
            "rejected_lines": job.rejected_lines,
        },
    })
    print(f"pipeline complete: change {change:+.2f}% "
          f"(zero-shot weighted F1 {eval_report.weighted_f1:.3f})")
    return EXIT_OK


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "stats": cmd_stats,
    "generate": cmd_generate,
    "translate": cmd_translate,
    "plan": cmd_plan,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "zero-shot": cmd_zero_shot,
    "compare": cmd_compare,
    "cm-stats": cmd_cm_stats,
    "humaneval": cmd_humaneval,
    "cost": cmd_cost,
    "pipeline": cmd_pipeline,
}

_VALIDATION_ERRORS = (
    ConfigValidationError,
    corpus.InsufficientData,
    corpus.EmptyCorpus,
    schedule.ConfigError,
    schedule.InsufficientSynthetic,
    cost.ConfigError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        return _COMMANDS[args.command](args, cfg)
    except _VALIDATION_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (EndpointError, generation.GenerationAborted,
            generation.DegenerateOutput, schedule.StageFailed, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
