"""Command-line interface: one subcommand per pipeline stage or report."""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import batch as batch_mod
from . import langid as langid_mod
from . import segment as segment_mod
from .align import AlignParams, align_document, emit_bitext, estimate_length_ratio, read_bitext_tsv, write_bitext_tsv
from .annotation import Session, create_session, serve
from .corpus import compute_stats, parse_tagged_corpus, read_canonical, write_canonical
from .errors import PivotforgeError, UsageError
from .evalstats import aggregate_item_scores, krippendorff_alpha_interval, read_matrix_tsv, spearman, zscored_alpha
from .metrics import ChrfParams, ScoreFileSchema, bin_scores, bitext_item_id, chrf, chrf_signature, corpus_chrf, cumulative_subset, ingest_external_scores, write_bin_report
from .pipeline import PipelineConfig, atomic_write, load_corpus, run_pipeline, segment_documents
from .pivoting import (
    BeadGraph,
    beads_from_id_lists,
    build_multiway,
    enumerate_new_pairs,
    project_pair,
    read_alignment_tsv,
    write_multiway_tsv,
)

log = logging.getLogger(__name__)

CONFIG_ENV_VAR = "PIVOTFORGE_CONFIG"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for usage problems, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _write_output(path: str | None, write_fn) -> None:
    if path is None or path == "-":
        write_fn(sys.stdout)
    else:
        atomic_write(Path(path), write_fn)


def _lang_file_pairs(values: list[str]) -> list[tuple[str, str]]:
    pairs = []
    for value in values:
        lang, _, path = value.partition("=")
        if not lang or not path:
            raise UsageError(f"expected lang=path, got {value!r}")
        pairs.append((lang, path))
    return pairs


# -- subcommand implementations ----------------------------------------------


def cmd_parse(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    docs = parse_tagged_corpus(text, args.lang)
    _write_output(args.output, lambda fh: write_canonical(docs, fh))
    log.info("parsed %d document(s)", len(docs))
    return 0


def cmd_batch_build(args) -> int:
    docs = load_corpus(args.corpus, args.source_lang)
    name = args.target_name or args.target_lang
    script = args.script or "Latn"
    requests = batch_mod.build_batch(docs, name, script)
    _write_output(args.output, lambda fh: batch_mod.write_batch_file(requests, fh))
    if args.manifest:
        _write_output(args.manifest, lambda fh: batch_mod.write_manifest(requests, fh))
    log.info("built %d request(s)", len(requests))
    return 0


def cmd_batch_ingest(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = batch_mod.read_manifest(fh)
    with open(args.responses, encoding="utf-8") as fh:
        report = batch_mod.ingest_batch(batch_mod.read_responses(fh), manifest, lenient=args.lenient)

    def write_translations(fh):
        for custom_id in manifest:
            if custom_id in report.ok:
                fh.write(json.dumps({"custom_id": custom_id, "text": report.ok[custom_id]}, ensure_ascii=False))
                fh.write("\n")

    _write_output(args.output, write_translations)
    summary = {
        "ok": len(report.ok),
        "missing": report.missing,
        "refused": report.refused,
        "errors": report.errors,
    }
    if args.report:
        _write_output(args.report, lambda fh: json.dump(summary, fh, ensure_ascii=False, indent=1))
    else:
        print(json.dumps(summary, ensure_ascii=False))
    return 0


def cmd_segment(args) -> int:
    registry = segment_mod.load_registry(args.registry)
    with open(args.input, encoding="utf-8") as fh:
        docs = read_canonical(fh)
    docs = segment_documents(docs, registry, args.lang)
    _write_output(args.output, lambda fh: write_canonical(docs, fh))
    return 0


def cmd_langid_train(args) -> int:
    corpus = []
    for lang, path in _lang_file_pairs(args.corpus):
        corpus.append((lang, Path(path).read_text(encoding="utf-8")))
    profiles = langid_mod.train_langid(corpus, max_order=args.max_order, penalty=args.penalty)
    paths = langid_mod.save_profiles(profiles, args.output)
    log.info("wrote %d profile(s) under %s", len(paths), args.output)
    return 0


def cmd_langid_filter(args) -> int:
    profiles = langid_mod.load_profiles(args.profiles)
    with open(args.input, encoding="utf-8") as fh:
        docs = read_canonical(fh)
    from .pipeline import apply_langid_filter

    docs, dropped = apply_langid_filter(docs, args.expected, profiles, args.min_margin)
    _write_output(args.output, lambda fh: write_canonical(docs, fh))
    if args.dropped:
        _write_output(
            args.dropped,
            lambda fh: [fh.write(json.dumps(d, ensure_ascii=False) + "\n") for d in dropped],
        )
    log.info("dropped %d sentence(s)", len(dropped))
    return 0


def cmd_align(args) -> int:
    with open(args.src, encoding="utf-8") as fh:
        src_docs = read_canonical(fh)
    with open(args.tgt, encoding="utf-8") as fh:
        tgt_docs = read_canonical(fh)
    c = args.c
    if args.estimate_ratio:
        c = estimate_length_ratio(src_docs, tgt_docs)
        log.info("estimated length ratio c=%.4f", c)
    params = AlignParams(c=c, s2=args.s2, max_penalty=args.max_penalty)
    src_by_id = {d.doc_id: d for d in src_docs}
    records = []
    for tgt_doc in tgt_docs:
        if tgt_doc.doc_id not in src_by_id:
            raise UsageError(f"target document {tgt_doc.doc_id} missing from the source corpus")
        src_doc = src_by_id[tgt_doc.doc_id]
        result = align_document(src_doc, tgt_doc, params)
        records.extend(emit_bitext(result.alignments, src_doc, tgt_doc, drop_empty=not args.keep_empty))
    _write_output(args.output, lambda fh: write_bitext_tsv(records, fh))
    log.info("emitted %d record(s)", len(records))
    return 0


def _grouped_beads(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_alignment_tsv(fh)


def _spans_for_group(id_beads):
    """Reconstruct sentence orders from monotone bead files, then ordinal beads."""
    pivot_order: list[str] = []
    foreign_order: list[str] = []
    for pivot_ids, foreign_ids in id_beads:
        pivot_order.extend(pivot_ids)
        foreign_order.extend(foreign_ids)
    return beads_from_id_lists(id_beads, pivot_order, foreign_order), pivot_order, foreign_order


def cmd_pivot_project(args) -> int:
    grouped_a = _grouped_beads(args.a)
    grouped_b = _grouped_beads(args.b)

    def write(fh):
        for key in [k for k in grouped_a if k in grouped_b]:
            beads_a, pivot_a, order_a = _spans_for_group(grouped_a[key])
            beads_b, pivot_b, order_b = _spans_for_group(grouped_b[key])
            if pivot_a != pivot_b:
                raise UsageError(
                    f"{key[0]}/{key[1]}: the two alignments cover different pivot sentences"
                )
            for x_span, y_span, pivot_span in project_pair(beads_a, beads_b, len(pivot_a)):
                row = [
                    key[0],
                    key[1],
                    ",".join(order_a[x_span[0] : x_span[1]]),
                    ",".join(order_b[y_span[0] : y_span[1]]),
                ]
                if args.with_pivot:
                    row.append(",".join(pivot_a[pivot_span[0] : pivot_span[1]]))
                fh.write("\t".join(row) + "\n")

    _write_output(args.output, write)
    return 0


def cmd_pivot_multiway(args) -> int:
    per_lang = {lang: _grouped_beads(path) for lang, path in _lang_file_pairs(args.alignments)}
    langs = sorted(per_lang)
    common = None
    for lang in langs:
        keys = set(per_lang[lang])
        common = keys if common is None else common & keys

    def write(fh):
        first = True
        for key in sorted(common or set()):
            graph = BeadGraph(pivot_len=0, doc_id=key[0], para_id=key[1])
            pivot_order = None
            orders = {}
            for lang in langs:
                beads, pivot, order = _spans_for_group(per_lang[lang][key])
                if pivot_order is None:
                    pivot_order = pivot
                elif pivot != pivot_order:
                    raise UsageError(f"{key[0]}/{key[1]}: pivot sentence mismatch for {lang}")
                graph.pivot_len = len(pivot)
                graph.add(lang, beads)
                orders[lang] = order
            units = build_multiway(graph)
            if first:
                fh.write("\t".join(["unit_id", "pivot"] + langs) + "\n")
                first = False
            for unit in units:
                row = [unit.unit_id, ",".join((pivot_order or [])[unit.pivot_span[0] : unit.pivot_span[1]])]
                for lang in langs:
                    span = unit.spans[lang]
                    row.append(",".join(orders[lang][span[0] : span[1]]))
                fh.write("\t".join(row) + "\n")

    _write_output(args.output, write)
    return 0


def _lang_set(value: str, prefix: str) -> set[str]:
    if value.isdigit():
        return {f"{prefix}{i:03d}" for i in range(int(value))}
    return {code.strip() for code in value.split(",") if code.strip()}


def cmd_pivot_enumerate(args) -> int:
    existing = _lang_set(args.existing, "existing")
    new = _lang_set(args.new, "new")
    pairs = enumerate_new_pairs(existing, new)
    if args.list_pairs:
        for a, b in pairs:
            print(f"{a}-{b}")
    print(len(pairs))
    return 0


def _chrf_params(args) -> ChrfParams:
    return ChrfParams(
        max_char_order=args.char_order,
        word_order=args.word_order,
        beta=args.beta,
        remove_whitespace=not args.keep_whitespace,
        effective_order=not args.all_orders,
        lowercase=args.lowercase,
    )


def cmd_chrf(args) -> int:
    params = _chrf_params(args)
    hyps = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    refs = Path(args.ref).read_text(encoding="utf-8").splitlines()
    if len(hyps) != len(refs):
        raise UsageError(f"line count mismatch: {len(hyps)} hypotheses vs {len(refs)} references")
    if args.sentence:
        for hyp, ref in zip(hyps, refs):
            print(f"{chrf(hyp, ref, params):.4f}")
    else:
        score = corpus_chrf(list(zip(hyps, refs)), params)
        print(f"{score:.4f}")
    print(f"signature: {chrf_signature(params)}", file=sys.stderr)
    return 0


def cmd_quality_report(args) -> int:
    schema = ScoreFileSchema(
        id_column=args.id_column,
        score_column=args.score_column,
        scale=tuple(float(x) for x in args.scale.split(":")),
    )
    known = None
    if args.bitext:
        with open(args.bitext, encoding="utf-8") as fh:
            known = [bitext_item_id(r) for r in read_bitext_tsv(fh)]
    with open(args.scores, encoding="utf-8") as fh:
        records = ingest_external_scores(fh, schema, known_ids=known, scorer=args.scorer)
    edges = [float(x) for x in args.edges.split(",")]
    report = bin_scores([r.score for r in records], edges)
    _write_output(args.output, lambda fh: write_bin_report(report, fh))
    return 0


def cmd_subset(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    subset = cumulative_subset(lines, args.fraction)
    _write_output(args.output, lambda fh: fh.writelines(subset))
    log.info("kept %d of %d record(s)", len(subset), len(lines))
    return 0


def cmd_iaa(args) -> int:
    with open(args.matrix, encoding="utf-8") as fh:
        matrix = read_matrix_tsv(fh)
    alpha = krippendorff_alpha_interval(matrix)
    z_alpha = zscored_alpha(matrix)
    print(f"alpha\t{alpha:.6f}")
    print(f"zscored_alpha\t{z_alpha:.6f}")
    return 0


def cmd_spearman(args) -> int:
    with open(args.matrix, encoding="utf-8") as fh:
        matrix = read_matrix_tsv(fh)
    human = dict(zip(matrix.items, aggregate_item_scores(matrix)))
    schema = ScoreFileSchema(
        id_column=args.id_column,
        score_column=args.score_column,
        scale=tuple(float(x) for x in args.scale.split(":")),
    )
    with open(args.scores, encoding="utf-8") as fh:
        records = ingest_external_scores(fh, schema, known_ids=matrix.items)
    auto = {r.item_id: r.score for r in records}
    shared = [item for item in matrix.items if item in auto]
    if len(shared) < 2:
        raise UsageError("need at least two items shared between matrix and score file")
    result = spearman([human[i] for i in shared], [auto[i] for i in shared])
    print(f"rho\t{result.rho:.6f}")
    print(f"n\t{result.n}")
    return 0


def cmd_annotate_serve(args) -> int:
    session_dir = Path(args.session_dir)
    session_dir.mkdir(parents=True, exist_ok=True)
    tasks_path = session_dir / "tasks.json"
    ledger_path = session_dir / "ledger.jsonl"
    guidelines = None
    if args.guidelines:
        guidelines = Path(args.guidelines).read_text(encoding="utf-8")

    if tasks_path.exists():
        session = Session.load(tasks_path, ledger_path, guidelines_text=guidelines)
        log.info("resumed session with %d task(s)", len(session.tasks))
    else:
        if not args.bitext:
            raise UsageError("--bitext is required to create a new session")
        with open(args.bitext, encoding="utf-8") as fh:
            records = read_bitext_tsv(fh)
        tasks = create_session(records, args.sample_size, args.seed, lang_pair=args.lang_pair)
        session = Session(tasks, ledger_path, lang_pair=args.lang_pair, guidelines_text=guidelines)
        session.save_tasks(tasks_path)
        log.info("created session with %d task(s)", len(tasks))

    print(f"serving on http://{args.host}:{args.port}/", file=sys.stderr)
    serve(session, host=args.host, port=args.port, static_dir=args.static_dir)
    return 0


def cmd_stats(args) -> int:
    stats = compute_stats(args.segmented, args.langid, args.aligned)
    print(
        json.dumps(
            {
                "n_after_segmentation": stats.n_after_segmentation,
                "n_after_langid": stats.n_after_langid,
                "n_aligned": stats.n_aligned,
            }
        )
    )
    return 0


def cmd_pipeline(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        raise UsageError(f"--config or ${CONFIG_ENV_VAR} is required")
    overrides = {
        "output_dir": args.output_dir,
        "target_lang": args.target_lang,
    }
    config = PipelineConfig.from_file(config_path, overrides)
    stats, artifacts = run_pipeline(config)
    print(
        json.dumps(
            {
                "n_after_segmentation": stats.n_after_segmentation,
                "n_after_langid": stats.n_after_langid,
                "n_aligned": stats.n_aligned,
                "artifacts": {k: str(v) for k, v in sorted(artifacts.items())},
            },
            indent=1,
        )
    )
    return 0


# -- argument wiring ----------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="pivotforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("parse", help="tagged source corpus to canonical JSONL")
    p.add_argument("input")
    p.add_argument("--lang", default="en")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("batch-build", help="build a translation request batch")
    p.add_argument("corpus")
    p.add_argument("--source-lang", default="en")
    p.add_argument("--target-lang", required=True)
    p.add_argument("--target-name", default="")
    p.add_argument("--script", default="")
    p.add_argument("-o", "--output")
    p.add_argument("--manifest")
    p.set_defaults(fn=cmd_batch_build)

    p = sub.add_parser("batch-ingest", help="collect translations from a response file")
    p.add_argument("--responses", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--lenient", action="store_true", help="keep the first of duplicate responses")
    p.add_argument("-o", "--output")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_batch_ingest)

    p = sub.add_parser("segment", help="split paragraphs into sentences")
    p.add_argument("input")
    p.add_argument("--lang", required=True)
    p.add_argument("--registry", help="directory of nonbreaking_prefix.<lang> files")
    p.set_defaults(fn=cmd_segment)
    p.add_argument("-o", "--output")

    p = sub.add_parser("langid-train", help="train character n-gram language profiles")
    p.add_argument("--corpus", nargs="+", required=True, metavar="LANG=FILE")
    p.add_argument("--max-order", type=int, default=langid_mod.DEFAULT_MAX_ORDER)
    p.add_argument("--penalty", type=float, default=langid_mod.DEFAULT_PENALTY)
    p.add_argument("-o", "--output", required=True, help="profile output directory")
    p.set_defaults(fn=cmd_langid_train)

    p = sub.add_parser("langid-filter", help="drop sentences in the wrong language")
    p.add_argument("input")
    p.add_argument("--expected", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--min-margin", type=float, default=0.0)
    p.add_argument("-o", "--output")
    p.add_argument("--dropped", help="write dropped sentences with verdicts here")
    p.set_defaults(fn=cmd_langid_filter)

    p = sub.add_parser("align", help="sentence-align two canonical corpora")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--s2", type=float, default=6.8)
    p.add_argument("--max-penalty", type=float, default=25.0)
    p.add_argument("--estimate-ratio", action="store_true")
    p.add_argument("--keep-empty", action="store_true", help="keep 1-0/0-1 beads in the output")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_align)

    p = sub.add_parser("pivot", help="project alignments through the pivot language")
    pivot_sub = p.add_subparsers(dest="pivot_command", metavar="ACTION")

    pp = pivot_sub.add_parser("project", help="join two alignments into one language pair")
    pp.add_argument("--a", required=True, help="pivot-to-X alignment TSV")
    pp.add_argument("--b", required=True, help="pivot-to-Y alignment TSV")
    pp.add_argument("--with-pivot", action="store_true")
    pp.add_argument("-o", "--output")
    pp.set_defaults(fn=cmd_pivot_project)

    pm = pivot_sub.add_parser("multiway", help="build multi-way units over many languages")
    pm.add_argument("--alignments", nargs="+", required=True, metavar="LANG=FILE")
    pm.add_argument("-o", "--output")
    pm.set_defaults(fn=cmd_pivot_multiway)

    pe = pivot_sub.add_parser("enumerate", help="count the new language pairs")
    pe.add_argument("--existing", required=True, help="count or comma-joined codes")
    pe.add_argument("--new", required=True, help="count or comma-joined codes")
    pe.add_argument("--list-pairs", action="store_true")
    pe.set_defaults(fn=cmd_pivot_enumerate)

    p = sub.add_parser("chrf", help="character n-gram F-score")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--sentence", action="store_true", help="one score per line instead of corpus level")
    p.add_argument("--char-order", type=int, default=6)
    p.add_argument("--word-order", type=int, default=0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--keep-whitespace", action="store_true")
    p.add_argument("--all-orders", action="store_true", help="disable effective-order averaging")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(fn=cmd_chrf)

    p = sub.add_parser("quality-report", help="bin external quality scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--id-column", default="id")
    p.add_argument("--score-column", default="score")
    p.add_argument("--scale", default="0:1", help="lo:hi of the declared score scale")
    p.add_argument("--edges", default="0,0.2,0.4,0.6,0.8,1", help="comma-joined bin edges")
    p.add_argument("--scorer", default="")
    p.add_argument("--bitext", help="validate score ids against this bitext TSV")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_quality_report)

    p = sub.add_parser("subset", help="cumulative prefix subset of a record file")
    p.add_argument("--input", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_subset)

    p = sub.add_parser("iaa", help="inter-annotator agreement for a score matrix")
    p.add_argument("--matrix", required=True)
    p.set_defaults(fn=cmd_iaa)

    p = sub.add_parser("spearman", help="rank correlation of human and automatic scores")
    p.add_argument("--matrix", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--id-column", default="id")
    p.add_argument("--score-column", default="score")
    p.add_argument("--scale", default="0:1")
    p.set_defaults(fn=cmd_spearman)

    p = sub.add_parser("annotate-serve", help="serve an annotation session over HTTP")
    p.add_argument("--session-dir", required=True)
    p.add_argument("--bitext", help="bitext TSV to sample a new session from")
    p.add_argument("--sample-size", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--lang-pair", default="")
    p.add_argument("--guidelines", help="file served verbatim as the annotation guidelines")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--static-dir", help="serve the annotation UI from this directory")
    p.set_defaults(fn=cmd_annotate_serve)

    p = sub.add_parser("stats", help="validate per-stage corpus counts")
    p.add_argument("segmented", type=int)
    p.add_argument("langid", type=int)
    p.add_argument("aligned", type=int)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("pipeline", help="run all stages from a config file")
    p.add_argument("--config", help=f"JSON config (default ${CONFIG_ENV_VAR})")
    p.add_argument("--output-dir")
    p.add_argument("--target-lang")
    p.set_defaults(fn=cmd_pipeline)

    return parser


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.fn(args)
    except PivotforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
