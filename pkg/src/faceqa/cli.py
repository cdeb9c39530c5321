"""``faceqa`` command line: one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation or usage error, 2 endpoint failure.
Settings resolve as flags > environment (FACEQA_*) > config file (--config, JSON or TOML).
Logs go to stderr; data goes only to the paths named on the command line.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import urllib.parse
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import annotator, datasets, evaluation, manifest, mix, qaforge, vocab
from .batch import BatchAborted, BatchLimits
from .endpoint import DEFAULT_CREDENTIAL_ENV, EndpointError, FunctionEndpoint, HttpEndpoint
from .schema import (
    AttributeSchema,
    DEFAULT_ATTRIBUTE_SCHEMA,
    RecordError,
    SchemaError,
    dumps_record,
    iter_records,
    read_records,
    write_records,
)
from .synthetic import mock_annotation_text

log = logging.getLogger("faceqa")

ENV_PREFIX = "FACEQA_"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    endpoint: str | None = None
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    seed: int | None = None
    concurrency: int = 4
    retries: int = 3
    qps: float | None = None
    strict: bool = True
    timeout: float = 60.0

    def __post_init__(self):
        if self.concurrency < 1:
            raise UsageError("concurrency must be >= 1")
        if self.retries < 0:
            raise UsageError("retries must be >= 0")

    def limits(self) -> BatchLimits:
        return BatchLimits(max_concurrency=self.concurrency, max_retries=self.retries,
                           qps_cap=self.qps)

    def require_seed(self, command: str) -> int:
        if self.seed is None:
            raise UsageError(f"{command} generates data and needs --seed (or {ENV_PREFIX}SEED)")
        return self.seed


_CASTS = {"seed": int, "concurrency": int, "retries": int, "qps": float, "timeout": float,
          "strict": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")}


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    if p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(p, "rb") as f:
            return tomllib.load(f)
    return json.loads(p.read_text(encoding="utf-8"))


def resolve_config(args: argparse.Namespace, env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    values: dict = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for f in fields(RunConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in env:
            values[f.name] = env[key]
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    unknown = set(values) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        cast = {k: (_CASTS[k](v) if k in _CASTS and v is not None else v) for k, v in values.items()}
    except ValueError as e:
        raise UsageError(f"bad config value: {e}") from e
    return RunConfig(**cast)


def _need_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def make_endpoint(url: str | None, cfg: RunConfig, qa_pairs=None):
    """``mock://annotate``, ``mock://gold``, ``mock://constant?text=...``, ``mock://empty`` or an HTTP URL."""
    if not url:
        raise UsageError(f"no endpoint given (--endpoint or {ENV_PREFIX}ENDPOINT)")
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme == "mock":
        query = dict(urllib.parse.parse_qsl(parsed.query))
        name = parsed.netloc or parsed.path
        if name == "annotate":
            seed = int(query.get("seed", 0))
            return FunctionEndpoint(lambda image, prompt: mock_annotation_text(image, seed),
                                    "mock-annotate")
        if name == "gold":
            if qa_pairs is None:
                raise UsageError("mock://gold only works for eval")
            return evaluation.GoldEchoEndpoint(qa_pairs)
        if name == "constant":
            text = query.get("text", "")
            return FunctionEndpoint(lambda image, prompt: text, f"mock-constant-{text}")
        if name == "empty":
            return FunctionEndpoint(lambda image, prompt: "", "mock-empty")
        raise UsageError(f"unknown mock endpoint {url!r}")
    if parsed.scheme not in ("http", "https"):
        raise UsageError(f"unsupported endpoint {url!r}")
    return HttpEndpoint(url, cfg.credential_env, cfg.timeout)


def _schema(args) -> AttributeSchema:
    if getattr(args, "schema", None):
        return AttributeSchema.load(_need_file(args.schema))
    return DEFAULT_ATTRIBUTE_SCHEMA


# ── subcommands ─────────────────────────────────────────────────────────────


def cmd_annotate(args, cfg: RunConfig) -> int:
    images = read_records(_need_file(args.input), "image", cfg.strict)
    client = make_endpoint(args.endpoint or cfg.endpoint, cfg)
    clean_cfg = annotator.CleaningConfig(schema=_schema(args))
    n_ok = n_fail = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as out, \
            open(args.failures, "w", encoding="utf-8", newline="\n") as fail:
        raw = open(args.raw, "w", encoding="utf-8", newline="\n") if args.raw else None
        drops = open(args.drops, "w", encoding="utf-8", newline="\n") if args.drops else None
        try:
            for oc in annotator.annotate_batch(images, client, cfg.limits(), clean_cfg):
                for p in oc.kept:
                    p.validate(clean_cfg.schema)
                    out.write(dumps_record(p) + "\n")
                if oc.failure is not None:
                    fail.write(dumps_record(oc.failure) + "\n")
                    n_fail += 1
                else:
                    n_ok += 1
                if raw is not None and oc.raw is not None:
                    raw.write(dumps_record(oc.raw) + "\n")
                if drops is not None:
                    for d in oc.drops:
                        drops.write(dumps_record(d) + "\n")
        finally:
            for f in (raw, drops):
                if f is not None:
                    f.close()
    log.info("annotated %d images, %d failures", n_ok, n_fail)
    return 0


def cmd_clean(args, cfg: RunConfig) -> int:
    clean_cfg = annotator.CleaningConfig(schema=_schema(args))
    kept_n = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as out, \
            open(args.report, "w", encoding="utf-8", newline="\n") as report:
        fail = open(args.failures, "w", encoding="utf-8", newline="\n") if args.failures else None
        try:
            for raw in iter_records(_need_file(args.input), "raw", cfg.strict):
                kept, failure, drops = annotator.process_response(raw.image, raw.response_text,
                                                                  clean_cfg)
                for p in kept:
                    out.write(dumps_record(p) + "\n")
                kept_n += len(kept)
                for d in drops:
                    report.write(dumps_record(d) + "\n")
                if failure is not None and fail is not None:
                    fail.write(dumps_record(failure) + "\n")
        finally:
            if fail is not None:
                fail.close()
    log.info("kept %d persons", kept_n)
    return 0


def cmd_genqa(args, cfg: RunConfig) -> int:
    seed = cfg.require_seed("genqa")
    schema = _schema(args)
    annos = read_records(_need_file(args.annos), "person", cfg.strict)
    mf = {"auto": "auto", "on": True, "off": False}[args.multi_face]
    pairs = qaforge.gen_stage2_qa(annos, seed, mf, schema)
    n = write_records(pairs, args.out)
    if args.captions:
        captions, skipped = qaforge.gen_caption_pairs(annos, seed)
        write_records(captions, args.captions)
        for image_id in skipped:
            log.warning("no caption for %s; skipped", image_id)
    log.info("wrote %d QA pairs", n)
    return 0


def cmd_reformulate(args, cfg: RunConfig) -> int:
    seed = cfg.require_seed("reformulate")
    options = {}
    if args.no_descriptions:
        options["descriptions"] = False
    result = datasets.reformulate_file(args.dataset, _need_file(args.labels), seed,
                                       args.images_root, **options)
    n = write_records(result.pairs, args.out)
    if args.skips:
        with open(args.skips, "w", encoding="utf-8", newline="\n") as f:
            for lineno, reason in result.skips:
                f.write(json.dumps({"line": lineno, "reason": reason}) + "\n")
    log.info("wrote %d pairs, %d skips", n, len(result.skips))
    return 0


def cmd_zeroshot(args, cfg: RunConfig) -> int:
    seed = cfg.require_seed("zeroshot")
    annos = read_records(_need_file(args.annos), "zeroshot", cfg.strict)
    desc = vocab.load_feature_descriptions(_need_file(args.descriptions) if args.descriptions else None)
    pairs = qaforge.build_zeroshot_suite(annos, seed, desc, args.questions)
    n = write_records(pairs, args.out)
    log.info("wrote %d zero-shot questions for %d images", n, len(annos))
    return 0


def _parse_scale(text: str) -> Fraction:
    try:
        scale = Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad scale {text!r}") from e
    if scale <= 0:
        raise UsageError("scale must be positive")
    return scale


def cmd_mix(args, cfg: RunConfig) -> int:
    seed_override = cfg.seed
    spec = mix.MixSpec.load(_need_file(args.spec))
    if seed_override is not None:
        spec = mix.MixSpec(spec.name, spec.sources, seed_override, spec.total)
    inventories = {}
    for item in args.inventory or ():
        role, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--inventory expects role=path, got {item!r}")
        inventories[role] = path
    man = mix.assemble_mix(spec, inventories, args.out, _parse_scale(args.scale), args.balance_key)
    man["output"] = args.out
    Path(args.manifest).write_text(json.dumps(man, indent=2) + "\n", encoding="utf-8")
    log.info("mixed %d records", man["total"])
    return 0


def cmd_manifest(args, cfg: RunConfig) -> int:
    spec = manifest.default_stage_spec(args.stage, _parse_scale(args.scale), cfg.seed or 0)
    if args.out:
        write_records([spec], args.out)
    else:
        sys.stdout.write(dumps_record(spec) + "\n")
    return 0


def cmd_eval(args, cfg: RunConfig) -> int:
    pairs = read_records(_need_file(args.qa), "qa", cfg.strict)
    client = make_endpoint(args.endpoint or cfg.endpoint, cfg, qa_pairs=pairs)
    n = write_records(evaluation.run_benchmark(pairs, client, cfg.limits(), args.system), args.out)
    log.info("evaluated %d pairs", n)
    return 0


def cmd_score(args, cfg: RunConfig) -> int:
    records = iter_records(_need_file(args.input), "eval", cfg.strict)
    meta = {"seed": cfg.seed, "timestamp": args.timestamp}
    if args.model:
        meta["model"] = args.model
    report = evaluation.score(records, meta)
    Path(args.out).write_text(report.dumps(), encoding="utf-8")
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    reports = []
    for path in args.input:
        try:
            reports.append(evaluation.MetricsReport.from_dict(
                json.loads(_need_file(path).read_text(encoding="utf-8"))))
        except (KeyError, json.JSONDecodeError) as e:
            raise UsageError(f"{path}: not a metrics report ({e})") from e
    text, summary = evaluation.emit_report(reports, args.layout)
    sys.stdout.write(text)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return 0


# ── parser ──────────────────────────────────────────────────────────────────


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON or TOML config file")
    g.add_argument("--strict", dest="strict", action="store_true", default=argparse.SUPPRESS,
                   help="reject unknown record fields (default)")
    g.add_argument("--lenient", dest="strict", action="store_false", default=argparse.SUPPRESS,
                   help="keep unknown record fields instead of rejecting them")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def _batch_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--endpoint", help="HTTP URL or mock://...")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--qps", type=float)
    p.add_argument("--credential-env", dest="credential_env",
                   help=f"env var holding the bearer token (default {DEFAULT_CREDENTIAL_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faceqa", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p)
        p.set_defaults(func=fn)
        return p

    p = add("annotate", cmd_annotate, "re-annotate images through an annotation endpoint")
    p.add_argument("--in", dest="input", required=True, help="image records")
    p.add_argument("--out", required=True, help="cleaned person annotations")
    p.add_argument("--failures", required=True)
    p.add_argument("--raw", help="also keep raw responses here")
    p.add_argument("--drops", help="also keep cleaning decisions here")
    p.add_argument("--schema", help="attribute schema JSON overriding the built-in one")
    _batch_flags(p)

    p = add("clean", cmd_clean, "parse and clean raw annotation responses")
    p.add_argument("--in", dest="input", required=True, help="raw response records")
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True, help="drop records")
    p.add_argument("--failures")
    p.add_argument("--schema")

    p = add("genqa", cmd_genqa, "attribute QA pairs from cleaned annotations")
    p.add_argument("--annos", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--multi-face", dest="multi_face", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--captions", help="also write stage-1 caption records here")
    p.add_argument("--schema")

    p = add("reformulate", cmd_reformulate, "turn a labelled face dataset into QA pairs")
    p.add_argument("--dataset", required=True, choices=datasets.DATASETS)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--images-root", dest="images_root")
    p.add_argument("--no-descriptions", dest="no_descriptions", action="store_true",
                   help="omit attribute explanations (lfwa/celeba)")
    p.add_argument("--skips", help="write skipped label lines here")

    p = add("zeroshot", cmd_zeroshot, "build the zero-shot attribute question suite")
    p.add_argument("--annos", required=True)
    p.add_argument("--descriptions", help="TOML overriding feature descriptions")
    p.add_argument("--questions", type=int, help="total questions (default keeps the 760/300 ratio)")
    p.add_argument("--out", required=True)

    p = add("mix", cmd_mix, "sample and interleave a training data mix")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--scale", default="1")
    p.add_argument("--inventory", action="append", metavar="ROLE=PATH")
    p.add_argument("--balance-key", dest="balance_key",
                   help="record field to balance the draw across")

    p = add("manifest", cmd_manifest, "emit a default training-stage manifest")
    p.add_argument("--stage", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--scale", default="1")
    p.add_argument("--out")

    p = add("eval", cmd_eval, "run a QA benchmark against an inference endpoint")
    p.add_argument("--qa", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--system", help="system prompt (none by default)")
    _batch_flags(p)

    p = add("score", cmd_score, "compute Acc / MAE / F1 / parse rate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="model name for reports")
    p.add_argument("--timestamp", help="run timestamp to record (omitted by default)")

    p = add("report", cmd_report, "render score reports as tables")
    p.add_argument("--in", dest="input", required=True, nargs="+")
    p.add_argument("--layout", choices=evaluation.LAYOUTS, default="table2")
    p.add_argument("--summary", help="machine-readable summary path")
    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except (BatchAborted, EndpointError) as e:
        log.error("endpoint failure: %s", e)
        return 2
    except (UsageError, RecordError, SchemaError, ValueError, OSError) as e:
        log.error("%s", e)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
