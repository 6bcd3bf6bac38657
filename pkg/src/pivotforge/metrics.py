"""Translation quality metrics and score reporting.

The character n-gram F-score follows the signature
nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no: whitespace is deleted from both
sides, case is left untouched, six character orders are averaged, and orders
for which the reference has no n-grams are excluded from the mean. Word
n-grams (nw > 0) are supported and enter the same average, computed on the
whitespace-tokenized strings before whitespace removal.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .align import BitextRecord
from .errors import FormatError, IntegrityError, UsageError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChrfParams:
    max_char_order: int = 6
    word_order: int = 0
    beta: float = 2.0
    remove_whitespace: bool = True
    effective_order: bool = True
    lowercase: bool = False

    def __post_init__(self):
        if self.max_char_order < 1:
            raise UsageError("max_char_order must be >= 1")
        if self.word_order < 0:
            raise UsageError("word_order must be >= 0")
        if self.beta <= 0:
            raise UsageError("beta must be positive")


@dataclass(frozen=True)
class BinReport:
    edges: tuple[float, ...]
    proportions: tuple[float, ...]
    counts: tuple[int, ...]


@dataclass(frozen=True)
class ScoreRecord:
    item_id: str
    score: float  # normalized to [0, 1]
    scorer: str = ""


def _strip_whitespace(text: str) -> str:
    return "".join(ch for ch in text if not ch.isspace())


def _char_ngrams(text: str, order: int) -> Counter:
    return Counter(text[i : i + order] for i in range(len(text) - order + 1))


def _word_ngrams(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


@dataclass
class _OrderStats:
    hyp_total: int = 0
    ref_total: int = 0
    matched: int = 0

    def add(self, hyp: Counter, ref: Counter) -> None:
        self.hyp_total += sum(hyp.values())
        self.ref_total += sum(ref.values())
        self.matched += sum((hyp & ref).values())

    def f_score(self, beta: float) -> float:
        precision = self.matched / self.hyp_total if self.hyp_total else 0.0
        recall = self.matched / self.ref_total if self.ref_total else 0.0
        denom = beta * beta * precision + recall
        if denom == 0.0:
            return 0.0
        return (1 + beta * beta) * precision * recall / denom


def _pair_stats(hypothesis: str, reference: str, params: ChrfParams) -> list[_OrderStats]:
    """Per-order clipped n-gram counts for one pair, char orders then word orders."""
    if params.lowercase:
        hypothesis, reference = hypothesis.lower(), reference.lower()
    hyp_tokens, ref_tokens = hypothesis.split(), reference.split()
    if params.remove_whitespace:
        hyp_chars, ref_chars = _strip_whitespace(hypothesis), _strip_whitespace(reference)
    else:
        hyp_chars, ref_chars = hypothesis, reference

    stats = []
    for order in range(1, params.max_char_order + 1):
        s = _OrderStats()
        s.add(_char_ngrams(hyp_chars, order), _char_ngrams(ref_chars, order))
        stats.append(s)
    for order in range(1, params.word_order + 1):
        s = _OrderStats()
        s.add(_word_ngrams(hyp_tokens, order), _word_ngrams(ref_tokens, order))
        stats.append(s)
    return stats


def _score_from_stats(stats: Sequence[_OrderStats], params: ChrfParams) -> float:
    f_scores = []
    for s in stats:
        if params.effective_order and s.ref_total == 0:
            continue
        f_scores.append(s.f_score(params.beta))
    if not f_scores:
        return 0.0
    return 100.0 * sum(f_scores) / len(f_scores)


def chrf(hypothesis: str, reference: str, params: ChrfParams | None = None) -> float:
    """Sentence-level character F-score in [0, 100]."""
    params = params or ChrfParams()
    if not hypothesis and not reference:
        log.info("chrf over two empty strings, defined as 0")
        return 0.0
    return _score_from_stats(_pair_stats(hypothesis, reference, params), params)


def corpus_chrf(pairs: Sequence[tuple[str, str]], params: ChrfParams | None = None) -> float:
    """Corpus-level score from summed n-gram counts (not a mean of sentence scores)."""
    params = params or ChrfParams()
    if not pairs:
        raise UsageError("corpus_chrf requires at least one pair")
    totals: list[_OrderStats] | None = None
    for hyp, ref in pairs:
        stats = _pair_stats(hyp, ref, params)
        if totals is None:
            totals = stats
        else:
            for agg, s in zip(totals, stats):
                agg.hyp_total += s.hyp_total
                agg.ref_total += s.ref_total
                agg.matched += s.matched
    assert totals is not None
    return _score_from_stats(totals, params)


def chrf_signature(params: ChrfParams, nrefs: int = 1) -> str:
    return "|".join(
        (
            f"nrefs:{nrefs}",
            f"case:{'lc' if params.lowercase else 'mixed'}",
            f"eff:{'yes' if params.effective_order else 'no'}",
            f"nc:{params.max_char_order}",
            f"nw:{params.word_order}",
            f"space:{'no' if params.remove_whitespace else 'yes'}",
        )
    )


def bin_scores(scores: Sequence[float], edges: Sequence[float]) -> BinReport:
    """Half-open bins [e_i, e_i+1), last bin closed at the top edge."""
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise UsageError(f"bin edges must be ascending with at least two entries: {edges}")
    if not scores:
        raise UsageError("cannot bin an empty score list")
    counts = [0] * (len(edges) - 1)
    lo, hi = edges[0], edges[-1]
    for index, score in enumerate(scores):
        if not lo <= score <= hi:
            raise UsageError(f"score at index {index} out of range [{lo}, {hi}]: {score}")
        if score == hi:
            counts[-1] += 1
            continue
        # edges are few; linear scan keeps this obvious
        for b in range(len(counts)):
            if edges[b] <= score < edges[b + 1]:
                counts[b] += 1
                break
    total = len(scores)
    return BinReport(
        edges=tuple(float(e) for e in edges),
        proportions=tuple(c / total for c in counts),
        counts=tuple(counts),
    )


def write_bin_report(report: BinReport, stream: IO[str]) -> None:
    stream.write("bin_start\tbin_end\tcount\tproportion\n")
    for i, (count, prop) in enumerate(zip(report.counts, report.proportions)):
        stream.write(f"{report.edges[i]!r}\t{report.edges[i + 1]!r}\t{count}\t{prop!r}\n")


def cumulative_subset(records: Sequence, fraction: float) -> list:
    """First ceil(fraction * N) records; prefixes nest as the fraction grows."""
    if not 0.0 < fraction <= 1.0:
        raise UsageError(f"fraction must be in (0, 1], got {fraction}")
    n = math.ceil(fraction * len(records))
    return list(records[:n])


@dataclass(frozen=True)
class ScoreFileSchema:
    id_column: str
    score_column: str
    scale: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.scale[1] <= self.scale[0]:
            raise UsageError(f"score scale must be increasing: {self.scale}")


def ingest_external_scores(
    stream: IO[str],
    schema: ScoreFileSchema,
    known_ids: Iterable[str] | None = None,
    scorer: str = "",
) -> list[ScoreRecord]:
    """Read a header-first TSV of per-item scores, normalized onto [0, 1]."""
    header = stream.readline().rstrip("\n")
    columns = header.split("\t")
    try:
        id_at = columns.index(schema.id_column)
        score_at = columns.index(schema.score_column)
    except ValueError:
        raise FormatError(
            f"score file is missing column {schema.id_column!r} or {schema.score_column!r}; "
            f"header has {columns}"
        ) from None

    known = set(known_ids) if known_ids is not None else None
    lo, hi = schema.scale
    records = []
    for lineno, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) <= max(id_at, score_at):
            raise FormatError(f"score line {lineno}: too few columns")
        item_id = parts[id_at]
        try:
            raw = float(parts[score_at])
        except ValueError as exc:
            raise FormatError(f"score line {lineno}: bad score {parts[score_at]!r}") from exc
        if raw < lo or raw > hi:
            raise FormatError(
                f"score line {lineno}: {raw} outside the declared scale [{lo}, {hi}]"
            )
        if known is not None and item_id not in known:
            raise IntegrityError(f"score line {lineno}: unknown item id {item_id!r}")
        records.append(ScoreRecord(item_id=item_id, score=(raw - lo) / (hi - lo), scorer=scorer))
    return records


def bitext_item_id(record: BitextRecord) -> str:
    """Join key for score files: doc/para/src-ids/tgt-ids."""
    return "/".join(
        (record.doc_id, record.para_id, ",".join(record.src_sent_ids), ",".join(record.tgt_sent_ids))
    )
