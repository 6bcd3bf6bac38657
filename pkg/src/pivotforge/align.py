"""Length-based sentence alignment within paragraph boundaries.

Dynamic programming over six bead shapes (1-1, 1-0, 0-1, 1-2, 2-1, 2-2) finds
the minimum-cost monotone cover of both sentence sequences. A bead costs the
negative log of its shape prior plus a length penalty: the two-sided normal
tail probability of the standardized length difference
delta = (Lt - c * Ls) / sqrt(Ls * s2), negated in log space. Beads with an
empty source side have no defined delta and pay the configured penalty cap,
which also bounds the penalty when the tail probability underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .corpus import Document
from .errors import IntegrityError

BEAD_SHAPES = ((1, 1), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2))

DEFAULT_PRIORS = {
    (1, 1): 0.89,
    (1, 0): 0.0099,
    (0, 1): 0.0099,
    (2, 1): 0.0445,
    (1, 2): 0.0445,
    (2, 2): 0.011,
}


@dataclass(frozen=True)
class AlignParams:
    c: float = 1.0
    s2: float = 6.8
    priors: dict[tuple[int, int], float] = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    max_penalty: float = 25.0


@dataclass(frozen=True)
class AlignmentBead:
    src_span: tuple[int, int]  # half-open ordinal range
    tgt_span: tuple[int, int]
    bead_type: str
    cost: float

    def __post_init__(self):
        ns = self.src_span[1] - self.src_span[0]
        nt = self.tgt_span[1] - self.tgt_span[0]
        if self.bead_type != f"{ns}-{nt}":
            raise IntegrityError(f"bead type {self.bead_type} does not match spans {self.src_span}/{self.tgt_span}")
        if not math.isfinite(self.cost) or self.cost < 0:
            raise IntegrityError(f"bead cost must be finite and non-negative, got {self.cost}")


@dataclass(frozen=True)
class ParagraphAlignment:
    doc_id: str
    para_id: str
    beads: tuple[AlignmentBead, ...]

    @property
    def total_cost(self) -> float:
        return sum(b.cost for b in self.beads)


@dataclass(frozen=True)
class BitextRecord:
    doc_id: str
    para_id: str
    src_sent_ids: tuple[str, ...]
    tgt_sent_ids: tuple[str, ...]
    src_text: str
    tgt_text: str


def length_penalty(src_len: int, tgt_len: int, params: AlignParams) -> float:
    """Negative log of the two-sided normal tail for the bead's length mismatch."""
    if src_len <= 0:
        return params.max_penalty
    delta = (tgt_len - params.c * src_len) / math.sqrt(src_len * params.s2)
    tail = math.erfc(abs(delta) / math.sqrt(2.0))
    if tail <= 0.0:
        return params.max_penalty
    return min(-math.log(tail), params.max_penalty)


def bead_cost(src_lens: Sequence[int], tgt_lens: Sequence[int], params: AlignParams) -> float:
    """Cost of one bead given the char lengths of its source and target sentences."""
    shape = (len(src_lens), len(tgt_lens))
    prior = params.priors.get(shape)
    if prior is None or prior <= 0:
        raise IntegrityError(f"no prior for bead shape {shape[0]}-{shape[1]}")
    return -math.log(prior) + length_penalty(sum(src_lens), sum(tgt_lens), params)


def align_paragraph(
    src_lens: Sequence[int],
    tgt_lens: Sequence[int],
    params: Optional[AlignParams] = None,
    doc_id: str = "",
    para_id: str = "",
) -> ParagraphAlignment:
    """Minimum-cost monotone bead cover of two sentence-length sequences."""
    params = params or AlignParams()
    n, m = len(src_lens), len(tgt_lens)
    inf = math.inf

    # best[i][j]: minimal cost covering the first i source / j target sentences
    best = [[inf] * (m + 1) for _ in range(n + 1)]
    back: list[list[Optional[tuple[int, int]]]] = [[None] * (m + 1) for _ in range(n + 1)]
    best[0][0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            for ds, dt in BEAD_SHAPES:
                pi, pj = i - ds, j - dt
                if pi < 0 or pj < 0 or best[pi][pj] == inf:
                    continue
                cost = best[pi][pj] + bead_cost(src_lens[pi:i], tgt_lens[pj:j], params)
                if cost < best[i][j]:
                    best[i][j] = cost
                    back[i][j] = (ds, dt)

    beads: list[AlignmentBead] = []
    i, j = n, m
    while i > 0 or j > 0:
        step = back[i][j]
        if step is None:
            raise IntegrityError(f"alignment has no path to ({i},{j})")
        ds, dt = step
        beads.append(
            AlignmentBead(
                src_span=(i - ds, i),
                tgt_span=(j - dt, j),
                bead_type=f"{ds}-{dt}",
                cost=bead_cost(src_lens[i - ds : i], tgt_lens[j - dt : j], params),
            )
        )
        i, j = i - ds, j - dt
    beads.reverse()
    return ParagraphAlignment(doc_id=doc_id, para_id=para_id, beads=tuple(beads))


@dataclass
class DocumentAlignment:
    alignments: list[ParagraphAlignment]
    unpaired_src: list[str]  # source para_ids with no target counterpart


def align_document(
    src_doc: Document,
    tgt_doc: Document,
    params: Optional[AlignParams] = None,
) -> DocumentAlignment:
    """Align paragraph pairs matched by para_id; never across paragraph boundaries."""
    src_paras = {p.para_id: p for p in src_doc.paragraphs}
    alignments: list[ParagraphAlignment] = []
    unpaired = []

    for tgt_para in tgt_doc.paragraphs:
        if tgt_para.para_id not in src_paras:
            raise IntegrityError(
                f"target paragraph {tgt_doc.doc_id}/{tgt_para.para_id} has no source counterpart"
            )
    tgt_paras = {p.para_id: p for p in tgt_doc.paragraphs}

    for src_para in src_doc.paragraphs:
        tgt_para = tgt_paras.get(src_para.para_id)
        if tgt_para is None:
            unpaired.append(src_para.para_id)
            continue
        alignments.append(
            align_paragraph(
                [s.char_len for s in src_para.sentences],
                [s.char_len for s in tgt_para.sentences],
                params,
                doc_id=src_doc.doc_id,
                para_id=src_para.para_id,
            )
        )
    return DocumentAlignment(alignments=alignments, unpaired_src=unpaired)


def _clean_text(text: str) -> str:
    return " ".join(text.split())


def emit_bitext(
    alignments: Iterable[ParagraphAlignment],
    src_doc: Document,
    tgt_doc: Document,
    drop_empty: bool = True,
) -> list[BitextRecord]:
    """One record per bead; beads missing a side are dropped when drop_empty is set."""
    src_paras = {p.para_id: p for p in src_doc.paragraphs}
    tgt_paras = {p.para_id: p for p in tgt_doc.paragraphs}
    records: list[BitextRecord] = []
    for alignment in alignments:
        src_sents = src_paras[alignment.para_id].sentences
        tgt_sents = tgt_paras[alignment.para_id].sentences
        for bead in alignment.beads:
            src = src_sents[bead.src_span[0] : bead.src_span[1]]
            tgt = tgt_sents[bead.tgt_span[0] : bead.tgt_span[1]]
            if drop_empty and (not src or not tgt):
                continue
            records.append(
                BitextRecord(
                    doc_id=alignment.doc_id,
                    para_id=alignment.para_id,
                    src_sent_ids=tuple(s.sent_id for s in src),
                    tgt_sent_ids=tuple(s.sent_id for s in tgt),
                    src_text=_clean_text(" ".join(s.text for s in src)),
                    tgt_text=_clean_text(" ".join(s.text for s in tgt)),
                )
            )
    return records


def write_bitext_tsv(records: Iterable[BitextRecord], stream) -> None:
    """TSV columns: doc_id, para_id, src_sent_ids, tgt_sent_ids, src_text, tgt_text."""
    for rec in records:
        stream.write(
            "\t".join(
                (
                    rec.doc_id,
                    rec.para_id,
                    ",".join(rec.src_sent_ids),
                    ",".join(rec.tgt_sent_ids),
                    rec.src_text,
                    rec.tgt_text,
                )
            )
        )
        stream.write("\n")


def read_bitext_tsv(stream) -> list[BitextRecord]:
    records = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise IntegrityError(f"bitext line {lineno}: expected 6 columns, got {len(parts)}")
        doc_id, para_id, src_ids, tgt_ids, src_text, tgt_text = parts
        records.append(
            BitextRecord(
                doc_id=doc_id,
                para_id=para_id,
                src_sent_ids=tuple(src_ids.split(",")) if src_ids else (),
                tgt_sent_ids=tuple(tgt_ids.split(",")) if tgt_ids else (),
                src_text=src_text,
                tgt_text=tgt_text,
            )
        )
    return records


def estimate_length_ratio(src_docs: Iterable[Document], tgt_docs: Iterable[Document]) -> float:
    """Corpus-level expected target/source character ratio for AlignParams.c."""
    src_total = sum(s.char_len for d in src_docs for p in d.paragraphs for s in p.sentences)
    tgt_total = sum(s.char_len for d in tgt_docs for p in d.paragraphs for s in p.sentences)
    if src_total == 0:
        raise IntegrityError("cannot estimate a length ratio from an empty source corpus")
    return tgt_total / src_total
