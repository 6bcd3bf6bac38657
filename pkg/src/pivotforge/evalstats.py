"""Agreement and correlation statistics for human evaluation campaigns.

Krippendorff's alpha is computed at the interval level: squared score
differences, observed disagreement from pairable values inside each item
(weighted by m-1 pairs per item), expected disagreement from the pooled value
distribution. Values from items rated only once cannot be paired and add
nothing to the observed term, but they do enter the pooled distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Optional, Sequence

from .errors import FormatError, UsageError


@dataclass(frozen=True)
class AnnotationMatrix:
    annotators: tuple[str, ...]
    items: tuple[str, ...]
    values: tuple[tuple[Optional[float], ...], ...]  # rows: annotators, cols: items

    def __post_init__(self):
        if len(self.values) != len(self.annotators):
            raise UsageError("one value row per annotator required")
        for row in self.values:
            if len(row) != len(self.items):
                raise UsageError("every value row must cover all items")

    def column(self, j: int) -> list[float]:
        return [row[j] for row in self.values if row[j] is not None]


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int


def krippendorff_alpha_interval(matrix: AnnotationMatrix) -> float:
    """Chance-corrected interval-level agreement, 1 - observed/expected disagreement."""
    if len(matrix.annotators) < 2:
        raise UsageError("alpha undefined: need at least two annotators")

    pairable_columns = []
    pooled: list[float] = []
    for j in range(len(matrix.items)):
        col = matrix.column(j)
        pooled.extend(col)
        if len(col) >= 2:
            pairable_columns.append(col)
    if not pairable_columns:
        raise UsageError("alpha undefined: no item was rated by two or more annotators")

    n_pairable = sum(len(col) for col in pairable_columns)
    observed = 0.0
    for col in pairable_columns:
        within = sum((v - w) ** 2 for v in col for w in col)
        observed += within / (len(col) - 1)
    observed /= n_pairable

    n_pooled = len(pooled)
    expected = sum((v - w) ** 2 for v in pooled for w in pooled)
    expected /= n_pooled * (n_pooled - 1)

    if expected == 0.0:
        return 1.0
    return 1.0 - observed / expected


def zscore_by_annotator(matrix: AnnotationMatrix) -> AnnotationMatrix:
    """Center and scale each annotator's scores by their own mean and population stdev."""
    rows = []
    for annotator, row in zip(matrix.annotators, matrix.values):
        scored = [v for v in row if v is not None]
        if len(scored) < 2:
            raise UsageError(f"annotator {annotator!r} has fewer than two scores")
        mean = sum(scored) / len(scored)
        var = sum((v - mean) ** 2 for v in scored) / len(scored)
        if var == 0.0:
            raise UsageError(f"annotator {annotator!r} has zero score variance")
        std = math.sqrt(var)
        rows.append(tuple(None if v is None else (v - mean) / std for v in row))
    return AnnotationMatrix(annotators=matrix.annotators, items=matrix.items, values=tuple(rows))


def zscored_alpha(matrix: AnnotationMatrix) -> float:
    return krippendorff_alpha_interval(zscore_by_annotator(matrix))


def _average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing the mean of their rank positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Rank correlation: Pearson over average ranks, ties get mean rank."""
    if len(x) != len(y):
        raise UsageError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise UsageError("need at least two pairs")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise UsageError("correlation undefined for a constant vector")

    rx, ry = _average_ranks(x), _average_ranks(y)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return CorrelationResult(rho=cov / math.sqrt(vx * vy), n=n)


def aggregate_item_scores(matrix: AnnotationMatrix, method: str = "mean") -> list[float]:
    """Per-item score over available annotators, in item order."""
    if method != "mean":
        raise UsageError(f"unknown aggregation method {method!r}")
    out = []
    for j, item in enumerate(matrix.items):
        col = matrix.column(j)
        if not col:
            raise UsageError(f"item {item!r} has no scores")
        out.append(sum(col) / len(col))
    return out


def read_matrix_tsv(stream: IO[str]) -> AnnotationMatrix:
    """First column item_id, one column per annotator, empty cell = missing."""
    header = stream.readline().rstrip("\n")
    if not header:
        raise FormatError("annotation matrix file is empty")
    columns = header.split("\t")
    if len(columns) < 2:
        raise FormatError("annotation matrix needs an item column and at least one annotator")
    annotators = tuple(columns[1:])

    items: list[str] = []
    by_annotator: list[list[Optional[float]]] = [[] for _ in annotators]
    for lineno, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != len(columns):
            raise FormatError(
                f"matrix line {lineno}: expected {len(columns)} columns, got {len(parts)}"
            )
        items.append(parts[0])
        for a, cell in enumerate(parts[1:]):
            by_annotator[a].append(float(cell) if cell != "" else None)
    return AnnotationMatrix(
        annotators=annotators,
        items=tuple(items),
        values=tuple(tuple(row) for row in by_annotator),
    )


def write_matrix_tsv(matrix: AnnotationMatrix, stream: IO[str]) -> None:
    stream.write("\t".join(("item_id",) + matrix.annotators) + "\n")
    for j, item in enumerate(matrix.items):
        cells = [item]
        for row in matrix.values:
            v = row[j]
            cells.append("" if v is None else format(v, "g"))
        stream.write("\t".join(cells) + "\n")


def write_summary_tsv(
    rows: Sequence[dict],
    scorer_names: Sequence[str],
    stream: IO[str],
) -> None:
    """Per-pair summary: annotator count, z-scored agreement, one rho column per scorer."""
    header = ["pair", "annotators", "z_alpha"] + [f"rho_{name}" for name in scorer_names]
    stream.write("\t".join(header) + "\n")
    for row in rows:
        cells = [str(row.get("pair", "")), str(row.get("annotators", ""))]
        z = row.get("z_alpha")
        cells.append("" if z is None else f"{z:.4f}")
        for name in scorer_names:
            rho = row.get(f"rho_{name}")
            cells.append("" if rho is None else f"{rho:.4f}")
        stream.write("\t".join(cells) + "\n")
