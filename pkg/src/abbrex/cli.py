"""Command-line entry point.

Subcommands drive the whole pipeline: corpus ingestion, n-gram training,
simulation runs and option-count sweeps, fine-tuning data synthesis,
top-k evaluation, and the HTTP service. Exit codes: 0 success, 1 usage,
2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import datagen as datagen_mod
from . import lm as lm_mod
from . import synthcorpus
from .corpus import CorpusError, make_tasks
from .expand import NgramPredictor, PredictorError, ScriptedPredictor
from .lm import LmError, NgramModel
from .simulate import (
    AeVersion,
    SimConfig,
    Strategy,
    simulate_baseline_corpus,
    simulate_corpus,
    sweep_options,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class DataError(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")


def _load_dialogues(path: str):
    try:
        text = _read_text(path)
        if path.endswith(".jsonl"):
            return corpus_mod.dialogues_from_jsonl(text)
        return corpus_mod.parse_turk_dialogues(text).dialogues
    except (CorpusError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot parse dialogues from {path}: {exc}")


def _load_model(path: str) -> NgramModel:
    try:
        return NgramModel.load(path)
    except (OSError, LmError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model from {path}: {exc}")


def _tasks_for(args) -> list:
    dialogues = _load_dialogues(args.dialogues)
    role = None if args.role_filter is None else int(args.role_filter)
    return make_tasks(dialogues, role_filter=role, max_len=args.max_len)


def _predictor_for(args):
    if args.predictor == "ngram":
        if not args.model:
            raise DataError("--model is required with the ngram predictor")
        return NgramPredictor(_load_model(args.model))
    if args.predictor == "remote":
        from .remote import RemotePredictor, load_remote_config

        try:
            config = load_remote_config(args.remote_config)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad remote config: {exc}")
        return RemotePredictor(config)
    if args.predictor == "scripted":
        if not args.fixtures:
            raise DataError("--fixtures is required with the scripted predictor")
        try:
            obj = json.loads(_read_text(args.fixtures))
        except json.JSONDecodeError as exc:
            raise DataError(f"bad fixtures file: {exc}")
        fm = {(k.rsplit("|", 1)[0], int(k.rsplit("|", 1)[1])): v for k, v in obj.get("fm", {}).items()}
        return ScriptedPredictor(obj.get("ae", {}), fm)
    raise DataError(f"unknown predictor {args.predictor!r}")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    raw = _read_text(args.input)
    try:
        parsed = corpus_mod.parse_turk_dialogues(raw, expected_turns=args.expected_turns)
    except CorpusError as exc:
        raise DataError(str(exc))
    for warning in parsed.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _write(args.out, corpus_mod.dialogues_to_jsonl(parsed.dialogues))
    if args.tasks_out:
        tasks = make_tasks(parsed.dialogues, max_len=args.max_len)
        _write(args.tasks_out, corpus_mod.tasks_to_jsonl(tasks))
    print(f"ingested {len(parsed.dialogues)} dialogues", file=sys.stderr)
    return EXIT_OK


def cmd_make_corpus(args) -> int:
    dialogues = synthcorpus.synth_corpus(args.dialogues, seed=args.seed)
    _write(args.out, corpus_mod.dialogues_to_jsonl(dialogues))
    return EXIT_OK


def cmd_train_lm(args) -> int:
    dialogues = _load_dialogues(args.dialogues)
    sentences = []
    for dialogue in dialogues:
        for turn in dialogue.turns:
            try:
                tokens = corpus_mod.tokenize_phrase(turn.text)
            except CorpusError:
                continue
            sentences.append([t.surface for t in tokens])
    try:
        model = lm_mod.train(sentences, order=args.order, backoff=args.backoff)
    except LmError as exc:
        raise DataError(str(exc))
    model.save(args.out)
    print(
        f"trained order-{model.order} model: {len(model.vocab)} words, "
        f"{model.total_tokens} tokens",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    tasks = _tasks_for(args)
    if args.strategy == "baseline":
        if not args.model:
            raise DataError("--model is required for the baseline")
        report = simulate_baseline_corpus(
            tasks, _load_model(args.model), k=args.k, max_len=args.max_len, workers=args.workers
        )
    else:
        cfg = SimConfig(
            strategy=Strategy(args.strategy),
            ae_version=AeVersion(args.ae_version),
            k=args.k,
            use_context=args.context,
            max_len=args.max_len,
        )
        report = simulate_corpus(tasks, cfg, _predictor_for(args), workers=args.workers)
    _emit_report(report, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    tasks = _tasks_for(args)
    k_values = _parse_k_range(args.k_range)
    cfg = SimConfig(
        strategy=Strategy(args.strategy),
        ae_version=AeVersion(args.ae_version),
        k=k_values[0],
        use_context=args.context,
        max_len=args.max_len,
    )
    report = sweep_options(
        tasks, cfg, _predictor_for(args), k_values=k_values, workers=args.workers
    )
    _emit_report(report, args)
    return EXIT_OK


def _parse_k_range(spec: str) -> list[int]:
    try:
        if ".." in spec:
            low, high = spec.split("..", 1)
            values = list(range(int(low), int(high) + 1))
        else:
            values = [int(part) for part in spec.split(",")]
    except ValueError:
        raise DataError(f"bad k range {spec!r} (use e.g. 1..10 or 1,3,5)")
    if not values or any(v < 1 for v in values):
        raise DataError(f"bad k range {spec!r}")
    return values


def _emit_report(report, args) -> None:
    if args.format == "csv":
        _write(args.out, report.to_csv())
    else:
        _write(args.out, report.to_json() + "\n")
    if args.traces:
        Path(args.traces).write_text(report.traces_jsonl(), encoding="utf-8")
    for row in report.aggregates:
        print(
            f"strategy={row.strategy} v={row.ae_version} k={row.k} context={row.use_context} "
            f"turns={row.turns} mean_ksr={row.mean_ksr:.4f} single_call={row.single_call_fraction:.4f}",
            file=sys.stderr,
        )


def cmd_datagen(args) -> int:
    dialogues = _load_dialogues(args.dialogues)
    cfg = datagen_mod.DatagenConfig(seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts: dict[str, int] = {}
    schemes = (
        [args.scheme]
        if args.scheme != "all"
        else [datagen_mod.SCHEME_INITIALS, datagen_mod.SCHEME_COMPLETE, datagen_mod.SCHEME_INCOMPLETE, "fillmask"]
    )
    for scheme in schemes:
        if scheme == "fillmask":
            records = datagen_mod.synth_fillmask(dialogues, cfg)
        else:
            records = datagen_mod.synth_ae(dialogues, scheme, cfg)
        datagen_mod.write_jsonl(records, out_dir / f"{scheme}.jsonl")
        if args.tsv:
            datagen_mod.write_tsv(records, out_dir / f"{scheme}.tsv")
        counts[scheme] = len(records)
    (out_dir / "manifest.json").write_text(
        datagen_mod.manifest({args.corpus_name: counts}), encoding="utf-8"
    )
    print(f"wrote {counts} to {out_dir}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    tasks = _tasks_for(args)
    predictor = _predictor_for(args)
    try:
        if args.curves:
            rows = datagen_mod.eval_curves(predictor, tasks, k=args.topk)
            _write(args.out, json.dumps(rows, indent=2, sort_keys=True) + "\n")
        else:
            accuracy = datagen_mod.eval_topk(predictor, tasks, k=args.topk)
            print(f"top-{args.topk} exact-match accuracy: {accuracy:.4f}")
            for name, value in datagen_mod.REFERENCE_TOPK.items():
                print(f"reference ({name}): {value:.3f}")
    except PredictorError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        _predictor_for(args),
        max_context_turns=args.context_turns,
        persist_path=args.persist,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="abbrex", description=__doc__)
    parser.add_argument("--config", help="JSON config file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_io(p) -> None:
        p.add_argument("--dialogues", required=True, help="dialogue corpus (.jsonl or raw)")
        p.add_argument("--max-len", type=int, default=10, dest="max_len")
        p.add_argument("--role-filter", choices=["0", "1"], default=None, dest="role_filter")

    def add_predictor(p) -> None:
        p.add_argument("--predictor", choices=["ngram", "remote", "scripted"], default="ngram")
        p.add_argument("--model", help="n-gram model file")
        p.add_argument("--remote-config", dest="remote_config", help="remote backend JSON config")
        p.add_argument("--fixtures", help="scripted predictor fixtures JSON")

    def add_report(p) -> None:
        p.add_argument("--out", default="-", help="report path (- for stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--traces", help="optional JSONL action-trace dump path")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("ingest", help="parse a raw dialogue corpus into canonical JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--expected-turns", type=int, default=6, dest="expected_turns")
    p.add_argument("--tasks-out", dest="tasks_out", help="also write simulation tasks JSONL")
    p.add_argument("--max-len", type=int, default=10, dest="max_len")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("make-corpus", help="generate the synthetic dialogue corpus")
    p.add_argument("--dialogues", type=int, default=280)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train-lm", help="train the n-gram model from a corpus")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--backoff", type=float, default=0.4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("simulate", help="run the ideal-user simulation")
    add_common_io(p)
    add_predictor(p)
    add_report(p)
    p.add_argument("--strategy", choices=["1", "2", "2a", "baseline"], default="1")
    p.add_argument("--ae-version", choices=["1", "2"], default="2", dest="ae_version")
    p.add_argument("--k", type=int, default=5)
    ctx = p.add_mutually_exclusive_group()
    ctx.add_argument("--context", dest="context", action="store_true", default=True)
    ctx.add_argument("--no-context", dest="context", action="store_false")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the option count k")
    add_common_io(p)
    add_predictor(p)
    add_report(p)
    p.add_argument("--strategy", choices=["1", "2", "2a"], default="2")
    p.add_argument("--ae-version", choices=["1", "2"], default="2", dest="ae_version")
    p.add_argument("--k", default="1..10", dest="k_range", help="e.g. 1..10 or 1,3,5")
    ctx = p.add_mutually_exclusive_group()
    ctx.add_argument("--context", dest="context", action="store_true", default=True)
    ctx.add_argument("--no-context", dest="context", action="store_false")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("datagen", help="synthesize fine-tuning triplets")
    p.add_argument("--dialogues", required=True)
    p.add_argument(
        "--scheme",
        choices=["initials", "complete", "incomplete", "fillmask", "all"],
        default="all",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--corpus-name", default="corpus", dest="corpus_name")
    p.add_argument("--tsv", action="store_true", help="also write TSV alongside JSONL")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("eval", help="top-k exact-match evaluation")
    add_common_io(p)
    add_predictor(p)
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--curves", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP typing service")
    add_predictor(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--context-turns", type=int, default=5, dest="context_turns")
    p.add_argument("--persist", help="JSONL append log for sessions and events")
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config_file(parser: _Parser, argv: list[str]) -> list[str]:
    # Flags override file values, file values override built-in defaults.
    if "--config" not in argv:
        return argv
    index = argv.index("--config")
    try:
        path = argv[index + 1]
    except IndexError:
        return argv
    values = json.loads(Path(path).read_text(encoding="utf-8"))
    for action_parser in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        defaults = {
            key.replace("-", "_"): value
            for key, value in values.items()
            if any(key.replace("-", "_") == a.dest for a in action_parser._actions)
        }
        action_parser.set_defaults(**defaults)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"abbrex: bad config file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"abbrex: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PredictorError as exc:
        print(f"abbrex: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
