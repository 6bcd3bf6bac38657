"""Document data model, tagged-corpus parsing and the canonical JSONL interchange format.

The document hierarchy keeps stable IDs at every level so that sentences can be
joined back to their exact source across all later pipeline stages. Paragraph
IDs are ordinals within a document ("1", "2", ...), sentence IDs are
"<para_id>.<ordinal>". IDs assigned at segmentation time are never renumbered:
a sentence removed by filtering leaves a gap.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import IO, Iterable, Optional

from .errors import FormatError, IntegrityError

__all__ = [
    "Sentence",
    "Paragraph",
    "Document",
    "CorpusStats",
    "parse_tagged_corpus",
    "write_canonical",
    "read_canonical",
    "compute_stats",
]


def visible_len(text: str) -> int:
    """Number of non-whitespace characters in ``text``."""
    return sum(1 for ch in text if not ch.isspace())


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    text: str
    char_len: int = -1

    def __post_init__(self):
        n = visible_len(self.text)
        if self.char_len < 0:
            object.__setattr__(self, "char_len", n)
        elif self.char_len != n:
            raise IntegrityError(
                f"sentence {self.sent_id}: char_len {self.char_len} does not match text ({n})"
            )


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    raw_text: str
    sentences: tuple[Sentence, ...] = ()
    speaker: Optional[str] = None

    def with_sentences(self, sentences: Iterable[Sentence]) -> "Paragraph":
        return replace(self, sentences=tuple(sentences))


@dataclass(frozen=True)
class Document:
    doc_id: str
    lang: str
    paragraphs: tuple[Paragraph, ...] = ()

    def __post_init__(self):
        if not self.doc_id:
            raise IntegrityError("document with empty doc_id")
        seen = set()
        for para in self.paragraphs:
            if para.para_id in seen:
                raise IntegrityError(
                    f"document {self.doc_id}: duplicate paragraph id {para.para_id!r}"
                )
            seen.add(para.para_id)


@dataclass(frozen=True)
class CorpusStats:
    n_after_segmentation: int
    n_after_langid: int
    n_aligned: int


# Tagged source format: marker lines open a new document / paragraph context,
# every other line is text of the current paragraph.
_MARKER_RE = re.compile(r"^<(?P<tag>[A-Za-z][\w.-]*)(?P<attrs>[^>]*)>\s*$")
_ID_ATTR_RE = re.compile(
    r'\bid\s*=\s*"(?P<id>[^"]*)"|\bid\s*=\s*(?P<bare>[^\s">]+)', re.IGNORECASE
)


def _marker_id(attrs: str) -> Optional[str]:
    m = _ID_ATTR_RE.search(attrs)
    if not m:
        return None
    return m.group("id") if m.group("id") is not None else m.group("bare")


class _DocBuilder:
    """Accumulates one document while scanning the tagged stream."""

    def __init__(self, doc_id: str, lang: str):
        self.doc_id = doc_id
        self.lang = lang
        self.paragraphs: list[Paragraph] = []
        self.speaker: Optional[str] = None
        self.lines: list[str] = []

    def flush_paragraph(self) -> None:
        text = "\n".join(self.lines).strip()
        self.lines = []
        if not text:
            return
        para_id = str(len(self.paragraphs) + 1)
        self.paragraphs.append(Paragraph(para_id=para_id, raw_text=text, speaker=self.speaker))

    def finish(self) -> Document:
        self.flush_paragraph()
        return Document(doc_id=self.doc_id, lang=self.lang, paragraphs=tuple(self.paragraphs))


def parse_tagged_corpus(text: str, lang: str) -> list[Document]:
    """Parse the CHAPTER/SPEAKER/P marker format into documents.

    One document per CHAPTER, identified by the chapter id. SPEAKER markers
    open a new paragraph and attach their id as speaker metadata for the
    paragraphs that follow; P and unrecognized markers open a new paragraph
    without touching metadata. Paragraphs that receive no text are skipped,
    so paragraph ordinals count non-empty paragraphs only.
    """
    docs: list[Document] = []
    seen_doc_ids: set[str] = set()
    current: Optional[_DocBuilder] = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = _MARKER_RE.match(stripped)
        if m is None:
            if stripped.upper().startswith("<CHAPTER"):
                raise FormatError(f"line {lineno}: nested or malformed CHAPTER marker")
            if stripped.upper().startswith("<SPEAKER"):
                raise FormatError(f"line {lineno}: malformed SPEAKER marker")
            if stripped and current is None:
                raise FormatError(f"line {lineno}: text before any CHAPTER marker")
            if current is not None:
                current.lines.append(line)
            continue

        tag = m.group("tag").upper()
        if tag == "CHAPTER":
            chapter_id = _marker_id(m.group("attrs"))
            if chapter_id is None:
                raise FormatError(f"line {lineno}: CHAPTER marker without id attribute")
            if chapter_id in seen_doc_ids:
                raise FormatError(f"line {lineno}: nested CHAPTER markers (id {chapter_id!r} reopened)")
            if current is not None:
                docs.append(current.finish())
            seen_doc_ids.add(chapter_id)
            current = _DocBuilder(doc_id=chapter_id, lang=lang)
        elif tag == "SPEAKER":
            speaker_id = _marker_id(m.group("attrs"))
            if speaker_id is None:
                raise FormatError(f"line {lineno}: SPEAKER marker without id attribute")
            if current is None:
                raise FormatError(f"line {lineno}: SPEAKER marker before any CHAPTER marker")
            current.flush_paragraph()
            current.speaker = speaker_id
        else:
            # Unknown tags (P included) are paragraph boundaries without metadata.
            if current is None:
                raise FormatError(f"line {lineno}: {tag} marker before any CHAPTER marker")
            current.flush_paragraph()

    if current is not None:
        docs.append(current.finish())
    return docs


def _doc_to_record(doc: Document) -> dict:
    paragraphs = []
    for para in doc.paragraphs:
        rec: dict = {"para_id": para.para_id}
        if para.speaker is not None:
            rec["speaker"] = para.speaker
        rec["raw_text"] = para.raw_text
        rec["sentences"] = [{"sent_id": s.sent_id, "text": s.text} for s in para.sentences]
        paragraphs.append(rec)
    return {"doc_id": doc.doc_id, "lang": doc.lang, "paragraphs": paragraphs}


def write_canonical(docs: Iterable[Document], stream: IO[str]) -> None:
    """Write one JSON record per document, byte-stable across runs."""
    for doc in docs:
        stream.write(json.dumps(_doc_to_record(doc), ensure_ascii=False, separators=(",", ":")))
        stream.write("\n")


def dumps_canonical(docs: Iterable[Document]) -> str:
    import io

    buf = io.StringIO()
    write_canonical(docs, buf)
    return buf.getvalue()


_DOC_FIELDS = {"doc_id", "lang", "paragraphs"}
_PARA_FIELDS = {"para_id", "speaker", "raw_text", "sentences"}
_SENT_FIELDS = {"sent_id", "text"}


def _require(record: dict, key: str, index: int):
    if key not in record:
        raise FormatError(f"record {index}: missing field {key!r}")
    return record[key]


def read_canonical(stream: IO[str], strict: bool = True) -> list[Document]:
    """Inverse of write_canonical. Unknown fields are errors unless strict is off."""
    docs: list[Document] = []
    for index, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"record {index}: truncated or invalid record ({exc})") from exc
        if not isinstance(record, dict):
            raise FormatError(f"record {index}: expected an object")
        if strict:
            unknown = set(record) - _DOC_FIELDS
            if unknown:
                raise FormatError(f"record {index}: unknown fields {sorted(unknown)}")
        paragraphs = []
        for p in _require(record, "paragraphs", index):
            if strict:
                unknown = set(p) - _PARA_FIELDS
                if unknown:
                    raise FormatError(f"record {index}: unknown paragraph fields {sorted(unknown)}")
            sentences = []
            for s in _require(p, "sentences", index):
                if strict:
                    unknown = set(s) - _SENT_FIELDS
                    if unknown:
                        raise FormatError(f"record {index}: unknown sentence fields {sorted(unknown)}")
                sentences.append(Sentence(sent_id=_require(s, "sent_id", index), text=_require(s, "text", index)))
            paragraphs.append(
                Paragraph(
                    para_id=_require(p, "para_id", index),
                    raw_text=_require(p, "raw_text", index),
                    sentences=tuple(sentences),
                    speaker=p.get("speaker"),
                )
            )
        docs.append(
            Document(
                doc_id=_require(record, "doc_id", index),
                lang=_require(record, "lang", index),
                paragraphs=tuple(paragraphs),
            )
        )
    return docs


def compute_stats(n_after_segmentation: int, n_after_langid: int, n_aligned: int) -> CorpusStats:
    """Validate the per-stage counts against the pipeline's monotone order."""
    counts = (n_after_segmentation, n_after_langid, n_aligned)
    if any(c < 0 for c in counts):
        raise IntegrityError(f"negative stage count: {counts}")
    if not (n_after_segmentation >= n_after_langid >= n_aligned):
        raise IntegrityError(
            "stage counts out of order: "
            f"segmented={n_after_segmentation} langid={n_after_langid} aligned={n_aligned}"
        )
    return CorpusStats(*counts)
