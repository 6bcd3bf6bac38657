"""Transitive projection of paragraph alignments through the pivot language.

All languages are aligned to the same pivot paragraph, but their beads carve
its sentence range differently. Merging adjacent pivot positions that share a
bead, across every language, yields the finest common coarsening of all the
pivot-side partitions; each resulting block becomes one multi-way unit whose
per-language spans are the union of the bead spans attached to the block. A
block grows no further than it must, and in the worst case covers the whole
paragraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence

from .align import BitextRecord, ParagraphAlignment
from .corpus import Sentence
from .errors import IntegrityError

Span = tuple[int, int]  # half-open range of sentence ordinals; empty when start == stop


@dataclass(frozen=True)
class Bead:
    """One alignment link between a pivot span and a foreign-language span."""

    pivot_span: Span
    foreign_span: Span


@dataclass
class BeadGraph:
    """Per-language beads over one pivot paragraph."""

    pivot_len: int
    edges: dict[str, list[Bead]] = field(default_factory=dict)
    doc_id: str = ""
    para_id: str = ""

    def add(self, lang: str, beads: Iterable[Bead]) -> None:
        self.edges[lang] = list(beads)


@dataclass(frozen=True)
class MultiWayUnit:
    unit_id: str
    pivot_span: Span
    spans: dict[str, Span]


def _check_partition(beads: Sequence[Bead], pivot_len: int, label: str) -> None:
    """Non-empty pivot spans must tile [0, pivot_len) in order."""
    covered = 0
    for bead in beads:
        a, b = bead.pivot_span
        if a == b:
            continue
        if a != covered or b < a:
            raise IntegrityError(
                f"{label}: beads do not partition the pivot range "
                f"(expected span starting at {covered}, got {bead.pivot_span})"
            )
        covered = b
    if covered != pivot_len:
        raise IntegrityError(
            f"{label}: beads cover pivot range [0,{covered}) instead of [0,{pivot_len})"
        )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _blocks(pivot_len: int, bead_lists: Iterable[Sequence[Bead]]) -> list[Span]:
    """Contiguous pivot blocks after merging positions that co-occur in any bead."""
    if pivot_len == 0:
        return []
    uf = _UnionFind(pivot_len)
    for beads in bead_lists:
        for bead in beads:
            a, b = bead.pivot_span
            for pos in range(a + 1, b):
                uf.union(pos - 1, pos)
    blocks: list[Span] = []
    start = 0
    for pos in range(1, pivot_len):
        if uf.find(pos) != uf.find(start):
            blocks.append((start, pos))
            start = pos
    blocks.append((start, pivot_len))
    return blocks


def _span_over_block(beads: Sequence[Bead], block: Span) -> Span:
    """Union of foreign spans of beads whose pivot span lies inside the block."""
    lo, hi = None, None
    for bead in beads:
        a, b = bead.pivot_span
        if a == b:
            continue  # pivot-side insertions never attach to a block
        if a >= block[0] and b <= block[1]:
            fa, fb = bead.foreign_span
            if fa == fb:
                continue
            lo = fa if lo is None else min(lo, fa)
            hi = fb if hi is None else max(hi, fb)
    if lo is None:
        return (0, 0)
    return (lo, hi)


def project_pair(
    beads_x: Sequence[Bead],
    beads_y: Sequence[Bead],
    pivot_len: int,
) -> list[tuple[Span, Span, Span]]:
    """Units (x_span, y_span, pivot_span) with both foreign sides non-empty."""
    _check_partition(beads_x, pivot_len, "first language")
    _check_partition(beads_y, pivot_len, "second language")
    units = []
    for block in _blocks(pivot_len, (beads_x, beads_y)):
        x_span = _span_over_block(beads_x, block)
        y_span = _span_over_block(beads_y, block)
        if x_span[0] != x_span[1] and y_span[0] != y_span[1]:
            units.append((x_span, y_span, block))
    return units


def build_multiway(graph: BeadGraph) -> list[MultiWayUnit]:
    """One unit per pivot block of the finest common coarsening over all languages."""
    for lang, beads in graph.edges.items():
        _check_partition(beads, graph.pivot_len, f"language {lang}")
    prefix = f"{graph.doc_id}/{graph.para_id}/" if graph.doc_id or graph.para_id else ""
    units = []
    for index, block in enumerate(_blocks(graph.pivot_len, graph.edges.values())):
        spans = {lang: _span_over_block(beads, block) for lang, beads in graph.edges.items()}
        units.append(MultiWayUnit(unit_id=f"{prefix}{index}", pivot_span=block, spans=spans))
    return units


def enumerate_new_pairs(existing_langs: Iterable[str], new_langs: Iterable[str]) -> list[tuple[str, str]]:
    """Every (existing, new) combination as an unordered pair."""
    existing = sorted(set(existing_langs))
    new = sorted(set(new_langs))
    overlap = set(existing) & set(new)
    if overlap:
        raise IntegrityError(f"language sets overlap: {sorted(overlap)}")
    return [(e, n) for e in existing for n in new]


def beads_from_alignment(alignment: ParagraphAlignment, pivot_is_source: bool = True) -> list[Bead]:
    """Reinterpret aligner output as pivot beads (the pivot is the source side)."""
    if pivot_is_source:
        return [Bead(pivot_span=b.src_span, foreign_span=b.tgt_span) for b in alignment.beads]
    return [Bead(pivot_span=b.tgt_span, foreign_span=b.src_span) for b in alignment.beads]


def emit_pair_corpus(
    units: Sequence[MultiWayUnit],
    lang_x: str,
    lang_y: str,
    texts: Mapping[str, Sequence[Sentence]],
    doc_id: str = "",
    para_id: str = "",
    pivot_lang: Optional[str] = None,
) -> list[BitextRecord]:
    """Bitext records for one language pair out of multi-way units.

    ``texts`` maps each language to the paragraph's sentences in order. Units
    whose span on either requested language is empty are skipped. A span
    reaching past the known sentences is a broken join and an error.
    """

    def resolve(lang: str, span: Span) -> list[Sentence]:
        sents = texts.get(lang)
        if sents is None:
            raise IntegrityError(f"no sentence texts for language {lang!r}")
        if span[1] > len(sents):
            raise IntegrityError(
                f"dangling sentence reference {lang}:{para_id}.{span[1]} "
                f"(paragraph has {len(sents)} sentences)"
            )
        return list(sents[span[0] : span[1]])

    records = []
    for unit in units:
        span_x = unit.spans.get(lang_x, (0, 0))
        span_y = unit.spans.get(lang_y, (0, 0))
        if span_x[0] == span_x[1] or span_y[0] == span_y[1]:
            continue
        sents_x = resolve(lang_x, span_x)
        sents_y = resolve(lang_y, span_y)
        records.append(
            BitextRecord(
                doc_id=doc_id,
                para_id=para_id,
                src_sent_ids=tuple(s.sent_id for s in sents_x),
                tgt_sent_ids=tuple(s.sent_id for s in sents_y),
                src_text=" ".join(" ".join(s.text.split()) for s in sents_x),
                tgt_text=" ".join(" ".join(s.text.split()) for s in sents_y),
            )
        )
    return records


def write_multiway_tsv(
    units: Sequence[MultiWayUnit],
    langs: Sequence[str],
    id_orders: Mapping[str, Sequence[str]],
    pivot_ids: Sequence[str],
    stream: IO[str],
) -> None:
    """One unit per line: unit_id, comma-joined pivot ids, then one id column per language."""
    stream.write("\t".join(["unit_id", "pivot"] + list(langs)) + "\n")
    for unit in units:
        row = [unit.unit_id, ",".join(pivot_ids[unit.pivot_span[0] : unit.pivot_span[1]])]
        for lang in langs:
            span = unit.spans.get(lang, (0, 0))
            order = id_orders.get(lang, ())
            row.append(",".join(order[span[0] : span[1]]))
        stream.write("\t".join(row) + "\n")


def write_alignment_tsv(
    doc_id: str,
    para_id: str,
    beads: Sequence[Bead],
    pivot_ids: Sequence[str],
    foreign_ids: Sequence[str],
    stream: IO[str],
) -> None:
    """One bead per line: doc_id, para_id, comma-joined pivot ids, comma-joined foreign ids."""
    for bead in beads:
        pa, pb = bead.pivot_span
        fa, fb = bead.foreign_span
        stream.write(
            "\t".join(
                (
                    doc_id,
                    para_id,
                    ",".join(pivot_ids[pa:pb]),
                    ",".join(foreign_ids[fa:fb]),
                )
            )
        )
        stream.write("\n")


def read_alignment_tsv(stream: IO[str]) -> dict[tuple[str, str], list[tuple[list[str], list[str]]]]:
    """Beads grouped by (doc_id, para_id), as (pivot id list, foreign id list) pairs."""
    grouped: dict[tuple[str, str], list[tuple[list[str], list[str]]]] = {}
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise IntegrityError(f"alignment line {lineno}: expected 4 columns, got {len(parts)}")
        doc_id, para_id, pivot_ids, foreign_ids = parts
        grouped.setdefault((doc_id, para_id), []).append(
            (
                pivot_ids.split(",") if pivot_ids else [],
                foreign_ids.split(",") if foreign_ids else [],
            )
        )
    return grouped


def beads_from_id_lists(
    id_beads: Sequence[tuple[list[str], list[str]]],
    pivot_order: Sequence[str],
    foreign_order: Sequence[str],
) -> list[Bead]:
    """Convert id-listed beads to ordinal spans against known sentence orders."""
    pivot_index = {sid: i for i, sid in enumerate(pivot_order)}
    foreign_index = {sid: i for i, sid in enumerate(foreign_order)}

    def to_span(ids: list[str], index: dict[str, int], side: str) -> Span:
        if not ids:
            return (0, 0)
        try:
            positions = sorted(index[sid] for sid in ids)
        except KeyError as exc:
            raise IntegrityError(f"unknown {side} sentence id {exc.args[0]!r}") from exc
        if positions != list(range(positions[0], positions[-1] + 1)):
            raise IntegrityError(f"non-contiguous {side} span: {ids}")
        return (positions[0], positions[-1] + 1)

    return [
        Bead(
            pivot_span=to_span(pivot_ids, pivot_index, "pivot"),
            foreign_span=to_span(foreign_ids, foreign_index, "foreign"),
        )
        for pivot_ids, foreign_ids in id_beads
    ]
