"""End-to-end pipeline: ingest responses, filter refusals, segment, filter by
language, align, emit bitext, and keep per-stage counts.

Stages run in a fixed order and write their outputs atomically: each file is
assembled under a ``.partial`` suffix and renamed into place only when its
stage finishes, so an interrupted run never leaves a truncated file under a
final name.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from . import batch as batch_mod
from . import langid as langid_mod
from . import segment as segment_mod
from .align import DEFAULT_PRIORS, AlignParams, align_document, emit_bitext, write_bitext_tsv
from .corpus import CorpusStats, Document, Paragraph, Sentence, compute_stats, parse_tagged_corpus, read_canonical, write_canonical
from .errors import UsageError
from .metrics import ChrfParams

log = logging.getLogger(__name__)

LANGUAGE_NAMES = {
    "eu": ("Basque", "Latn"),
    "gd": ("Scottish Gaelic", "Latn"),
    "is": ("Icelandic", "Latn"),
    "ka": ("Georgian", "Geor"),
    "mk": ("Macedonian", "Cyrl"),
    "so": ("Somali", "Latn"),
    "uk": ("Ukrainian", "Cyrl"),
    "en": ("English", "Latn"),
}


@dataclass
class PipelineConfig:
    source_corpus: Path
    output_dir: Path
    target_lang: str
    responses: Optional[Path] = None
    manifest: Optional[Path] = None
    source_lang: str = "en"
    target_lang_name: str = ""
    script: str = ""
    segmenter_registry: Optional[Path] = None
    langid_profiles: Optional[Path] = None
    langid_min_margin: float = 0.0
    refusal_patterns: tuple[str, ...] = batch_mod.DEFAULT_REFUSAL_PATTERNS
    aligner: AlignParams = field(default_factory=AlignParams)
    chrf: ChrfParams = field(default_factory=ChrfParams)

    def __post_init__(self):
        if not self.target_lang:
            raise UsageError("config: target_lang is required")
        name, script = LANGUAGE_NAMES.get(self.target_lang, ("", ""))
        if not self.target_lang_name:
            self.target_lang_name = name or self.target_lang
        if not self.script:
            self.script = script or "Latn"
        for label, path in (
            ("source_corpus", self.source_corpus),
            ("responses", self.responses),
            ("manifest", self.manifest),
            ("segmenter_registry", self.segmenter_registry),
            ("langid_profiles", self.langid_profiles),
        ):
            if path is not None and not Path(path).exists():
                raise UsageError(f"config: {label} path does not exist: {path}")

    @classmethod
    def from_file(cls, path: str | Path, overrides: Optional[dict] = None) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        base = Path(path).parent

        def as_path(key):
            value = raw.get(key)
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        aligner_raw = raw.get("aligner", {})
        priors = {
            tuple(int(x) for x in shape.split("-")): p
            for shape, p in aligner_raw.get("priors", {}).items()
        }
        aligner = AlignParams(
            c=aligner_raw.get("c", 1.0),
            s2=aligner_raw.get("s2", 6.8),
            priors=priors if priors else dict(DEFAULT_PRIORS),
            max_penalty=aligner_raw.get("max_penalty", 25.0),
        )
        chrf = ChrfParams(**raw.get("chrf", {}))
        return cls(
            source_corpus=as_path("source_corpus"),
            output_dir=as_path("output_dir") or base / "out",
            target_lang=raw.get("target_lang", ""),
            responses=as_path("responses"),
            manifest=as_path("manifest"),
            source_lang=raw.get("source_lang", "en"),
            target_lang_name=raw.get("target_lang_name", ""),
            script=raw.get("script", ""),
            segmenter_registry=as_path("segmenter_registry"),
            langid_profiles=as_path("langid_profiles"),
            langid_min_margin=raw.get("langid_min_margin", 0.0),
            refusal_patterns=tuple(raw.get("refusal_patterns", batch_mod.DEFAULT_REFUSAL_PATTERNS)),
            aligner=aligner,
            chrf=chrf,
        )


def atomic_write(path: Path, write_fn: Callable) -> Path:
    """Run ``write_fn`` against a .partial file, rename into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", encoding="utf-8") as fh:
        write_fn(fh)
    os.replace(partial, path)
    return path


def load_corpus(path: str | Path, lang: str) -> list[Document]:
    """Tagged plaintext or canonical JSONL, sniffed from the first character."""
    text = Path(path).read_text(encoding="utf-8")
    head = text.lstrip()[:1]
    if head == "{":
        import io

        return read_canonical(io.StringIO(text))
    return parse_tagged_corpus(text, lang)


def segment_documents(
    docs: list[Document],
    registry: segment_mod.SegmenterRegistry,
    lang: Optional[str] = None,
) -> list[Document]:
    """Attach sentences with ids "<para_id>.<ordinal>"; already-segmented docs pass through."""
    out = []
    for doc in docs:
        profile = segment_mod.resolve_profile(lang or doc.lang, registry)
        paragraphs = []
        for para in doc.paragraphs:
            if para.sentences:
                paragraphs.append(para)
                continue
            texts = segment_mod.segment(para.raw_text, profile)
            sentences = tuple(
                Sentence(sent_id=f"{para.para_id}.{i}", text=t)
                for i, t in enumerate(texts, start=1)
            )
            paragraphs.append(para.with_sentences(sentences))
        out.append(replace(doc, paragraphs=tuple(paragraphs)))
    return out


def documents_from_translations(
    source_docs: list[Document],
    translations: dict[str, str],
    target_lang: str,
) -> list[Document]:
    """Mirror the source document structure over the translated paragraphs."""
    out = []
    for doc in source_docs:
        paragraphs = []
        for para in doc.paragraphs:
            text = translations.get(f"{doc.doc_id}/{para.para_id}")
            if text is None or not text.strip():
                continue
            paragraphs.append(Paragraph(para_id=para.para_id, raw_text=text, speaker=para.speaker))
        if paragraphs:
            out.append(Document(doc_id=doc.doc_id, lang=target_lang, paragraphs=tuple(paragraphs)))
    return out


def apply_refusal_filter(
    translations: dict[str, str], patterns: tuple[str, ...]
) -> tuple[dict[str, str], int]:
    """Drop hallucinated lines from every translation; returns total lines dropped."""
    if not patterns:
        return dict(translations), 0
    filtered: dict[str, str] = {}
    total_dropped = 0
    for custom_id, text in translations.items():
        kept, dropped = batch_mod.filter_refusal_lines(text, patterns)
        total_dropped += dropped
        if dropped:
            log.info("refusal filter dropped %d line(s) from %s", dropped, custom_id)
        filtered[custom_id] = kept
    return filtered, total_dropped


def apply_langid_filter(
    docs: list[Document],
    expected: str,
    profiles: list[langid_mod.LangProfile],
    min_margin: float = 0.0,
) -> tuple[list[Document], list[dict]]:
    """Drop sentences whose identified language is not the expected one.

    Sentence ids are preserved; a dropped sentence leaves a gap in the sequence.
    """
    dropped_log: list[dict] = []
    out = []
    for doc in docs:
        paragraphs = []
        for para in doc.paragraphs:
            kept = []
            for sent in para.sentences:
                verdict = langid_mod.identify(sent.text, profiles)
                if verdict.lang == expected and verdict.margin >= min_margin:
                    kept.append(sent)
                else:
                    dropped_log.append(
                        {
                            "doc_id": doc.doc_id,
                            "para_id": para.para_id,
                            "sent_id": sent.sent_id,
                            "identified": verdict.lang,
                            "score": verdict.score,
                            "margin": verdict.margin,
                        }
                    )
            paragraphs.append(para.with_sentences(kept))
        out.append(replace(doc, paragraphs=tuple(paragraphs)))
    return out, dropped_log


def count_sentences(docs: list[Document]) -> int:
    return sum(len(p.sentences) for d in docs for p in d.paragraphs)


def run_pipeline(config: PipelineConfig) -> tuple[CorpusStats, dict[str, Path]]:
    """Execute every stage in order and write the stage artifacts."""
    if config.responses is None:
        raise UsageError("config: responses path is required to run the pipeline")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    source_docs = load_corpus(config.source_corpus, config.source_lang)

    # ingest
    if config.manifest is not None:
        with open(config.manifest, encoding="utf-8") as fh:
            manifest = batch_mod.read_manifest(fh)
    else:
        manifest = [
            f"{d.doc_id}/{p.para_id}"
            for d in source_docs
            for p in d.paragraphs
            if p.raw_text.strip()
        ]
    with open(config.responses, encoding="utf-8") as fh:
        report = batch_mod.ingest_batch(batch_mod.read_responses(fh), manifest)
    artifacts["ingest_report"] = atomic_write(
        out_dir / "ingest_report.json",
        lambda fh: json.dump(
            {
                "ok": len(report.ok),
                "missing": report.missing,
                "refused": report.refused,
                "errors": report.errors,
            },
            fh,
            ensure_ascii=False,
            indent=1,
        ),
    )

    # refusal filter
    translations, dropped_lines = apply_refusal_filter(report.ok, config.refusal_patterns)

    # segmentation
    registry = segment_mod.load_registry(config.segmenter_registry)
    source_docs = segment_documents(source_docs, registry, config.source_lang)
    target_docs = documents_from_translations(source_docs, translations, config.target_lang)
    target_docs = segment_documents(target_docs, registry, config.target_lang)
    n_seg = count_sentences(target_docs)
    artifacts["source_segmented"] = atomic_write(
        out_dir / "source_segmented.jsonl", lambda fh: write_canonical(source_docs, fh)
    )
    artifacts["target_segmented"] = atomic_write(
        out_dir / "target_segmented.jsonl", lambda fh: write_canonical(target_docs, fh)
    )

    # language-id filter
    if config.langid_profiles is not None:
        profiles = langid_mod.load_profiles(config.langid_profiles)
        target_docs, dropped = apply_langid_filter(
            target_docs, config.target_lang, profiles, config.langid_min_margin
        )
        artifacts["langid_dropped"] = atomic_write(
            out_dir / "langid_dropped.jsonl",
            lambda fh: [fh.write(json.dumps(d, ensure_ascii=False) + "\n") for d in dropped],
        )
    else:
        log.warning("no language-id profiles configured, skipping the filter stage")
    n_langid = count_sentences(target_docs)
    artifacts["target_filtered"] = atomic_write(
        out_dir / "target_filtered.jsonl", lambda fh: write_canonical(target_docs, fh)
    )

    # alignment
    source_by_id = {d.doc_id: d for d in source_docs}
    records = []
    for tgt_doc in target_docs:
        src_doc = source_by_id[tgt_doc.doc_id]
        doc_alignment = align_document(src_doc, tgt_doc, config.aligner)
        records.extend(emit_bitext(doc_alignment.alignments, src_doc, tgt_doc, drop_empty=True))
    n_aligned = len(records)
    artifacts["bitext"] = atomic_write(
        out_dir / "bitext.tsv", lambda fh: write_bitext_tsv(records, fh)
    )

    stats = compute_stats(n_seg, n_langid, n_aligned)
    artifacts["stats"] = atomic_write(
        out_dir / "stats.json",
        lambda fh: json.dump(
            {
                "n_after_segmentation": stats.n_after_segmentation,
                "n_after_langid": stats.n_after_langid,
                "n_aligned": stats.n_aligned,
                "refusal_lines_dropped": dropped_lines,
            },
            fh,
            indent=1,
        ),
    )
    return stats, artifacts
