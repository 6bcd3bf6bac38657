"""Independent brute-force reference implementations used to check the package.

Everything here is written with plain loops and dicts, no reuse of the
package's counting or search code, so a bug in the implementation cannot hide
in its own oracle. Cost models that are part of an operation's definition
(bead costs) are taken from the package; only the search is re-done by force.
"""

from __future__ import annotations

import math
from itertools import product

from pivotforge.align import AlignParams, bead_cost

# -- character F-score --------------------------------------------------------


def _ngram_counts(text: str, order: int) -> dict:
    counts: dict = {}
    for i in range(len(text) - order + 1):
        g = text[i : i + order]
        counts[g] = counts.get(g, 0) + 1
    return counts


def _word_ngram_counts(tokens: list, order: int) -> dict:
    counts: dict = {}
    for i in range(len(tokens) - order + 1):
        g = tuple(tokens[i : i + order])
        counts[g] = counts.get(g, 0) + 1
    return counts


def _clipped_overlap(a: dict, b: dict) -> int:
    total = 0
    for g, n in a.items():
        if g in b:
            total += min(n, b[g])
    return total


def chrf_oracle(
    hypothesis: str,
    reference: str,
    max_char_order: int = 6,
    word_order: int = 0,
    beta: float = 2.0,
    remove_whitespace: bool = True,
    effective_order: bool = True,
    lowercase: bool = False,
) -> float:
    if not hypothesis and not reference:
        return 0.0
    if lowercase:
        hypothesis = hypothesis.lower()
        reference = reference.lower()
    hyp_tokens = hypothesis.split()
    ref_tokens = reference.split()
    if remove_whitespace:
        hyp = "".join(ch for ch in hypothesis if not ch.isspace())
        ref = "".join(ch for ch in reference if not ch.isspace())
    else:
        hyp, ref = hypothesis, reference

    layers = []
    for order in range(1, max_char_order + 1):
        layers.append((_ngram_counts(hyp, order), _ngram_counts(ref, order)))
    for order in range(1, word_order + 1):
        layers.append((_word_ngram_counts(hyp_tokens, order), _word_ngram_counts(ref_tokens, order)))

    f_values = []
    for hyp_counts, ref_counts in layers:
        hyp_total = sum(hyp_counts.values())
        ref_total = sum(ref_counts.values())
        if effective_order and ref_total == 0:
            continue
        overlap = _clipped_overlap(hyp_counts, ref_counts)
        p = overlap / hyp_total if hyp_total > 0 else 0.0
        r = overlap / ref_total if ref_total > 0 else 0.0
        if p == 0.0 and r == 0.0:
            f_values.append(0.0)
        else:
            f_values.append((1 + beta**2) * p * r / (beta**2 * p + r))
    if not f_values:
        return 0.0
    return 100.0 * sum(f_values) / len(f_values)


def corpus_chrf_oracle(pairs, **kwargs) -> float:
    """Aggregate counts over all pairs, then one F computation per order."""
    max_char_order = kwargs.get("max_char_order", 6)
    word_order = kwargs.get("word_order", 0)
    beta = kwargs.get("beta", 2.0)
    remove_whitespace = kwargs.get("remove_whitespace", True)
    effective_order = kwargs.get("effective_order", True)
    lowercase = kwargs.get("lowercase", False)

    n_layers = max_char_order + word_order
    agg = [[0, 0, 0] for _ in range(n_layers)]  # hyp_total, ref_total, overlap
    for hypothesis, reference in pairs:
        if lowercase:
            hypothesis = hypothesis.lower()
            reference = reference.lower()
        hyp_tokens = hypothesis.split()
        ref_tokens = reference.split()
        if remove_whitespace:
            hyp = "".join(ch for ch in hypothesis if not ch.isspace())
            ref = "".join(ch for ch in reference if not ch.isspace())
        else:
            hyp, ref = hypothesis, reference
        layer = 0
        for order in range(1, max_char_order + 1):
            h, r = _ngram_counts(hyp, order), _ngram_counts(ref, order)
            agg[layer][0] += sum(h.values())
            agg[layer][1] += sum(r.values())
            agg[layer][2] += _clipped_overlap(h, r)
            layer += 1
        for order in range(1, word_order + 1):
            h, r = _word_ngram_counts(hyp_tokens, order), _word_ngram_counts(ref_tokens, order)
            agg[layer][0] += sum(h.values())
            agg[layer][1] += sum(r.values())
            agg[layer][2] += _clipped_overlap(h, r)
            layer += 1

    f_values = []
    for hyp_total, ref_total, overlap in agg:
        if effective_order and ref_total == 0:
            continue
        p = overlap / hyp_total if hyp_total > 0 else 0.0
        r = overlap / ref_total if ref_total > 0 else 0.0
        if p == 0.0 and r == 0.0:
            f_values.append(0.0)
        else:
            f_values.append((1 + beta**2) * p * r / (beta**2 * p + r))
    if not f_values:
        return 0.0
    return 100.0 * sum(f_values) / len(f_values)


# -- alignment ----------------------------------------------------------------

BEAD_SHAPES = ((1, 1), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2))


def enumerate_covers(n: int, m: int):
    """Every monotone bead cover of n source and m target sentences."""
    if n == 0 and m == 0:
        yield []
        return
    for ds, dt in BEAD_SHAPES:
        if ds <= n and dt <= m:
            for rest in enumerate_covers(n - ds, m - dt):
                yield [(ds, dt)] + rest


def min_cover_cost(src_lens, tgt_lens, params: AlignParams) -> float:
    """Brute-force minimum over all monotone covers, same per-bead cost model."""
    best = math.inf
    for cover in enumerate_covers(len(src_lens), len(tgt_lens)):
        cost = 0.0
        i = j = 0
        for ds, dt in cover:
            cost += bead_cost(src_lens[i : i + ds], tgt_lens[j : j + dt], params)
            i += ds
            j += dt
        if cost < best:
            best = cost
    return best


# -- pivot coarsening ----------------------------------------------------------


def coarsen_fixpoint(pivot_len: int, span_lists) -> list:
    """Finest common coarsening by repeated merging of adjacent singleton blocks.

    ``span_lists`` is an iterable of per-language lists of half-open pivot
    spans. Returns the block list as (start, stop) pairs.
    """
    boundaries = set(range(pivot_len + 1))  # cut points between positions
    changed = True
    while changed:
        changed = False
        for spans in span_lists:
            for a, b in spans:
                for cut in range(a + 1, b):
                    if cut in boundaries:
                        boundaries.remove(cut)
                        changed = True
    cuts = sorted(boundaries)
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


# -- interval-level agreement ---------------------------------------------------


def alpha_oracle(rows) -> float:
    """Double summation over pairable value pairs; rows are per-annotator lists
    with None for missing cells."""
    n_items = len(rows[0])
    columns = [[row[j] for row in rows if row[j] is not None] for j in range(n_items)]
    pairable = [col for col in columns if len(col) >= 2]
    if not pairable:
        raise ValueError("alpha undefined")

    n_pairable = 0
    observed_sum = 0.0
    for col in pairable:
        m = len(col)
        n_pairable += m
        unit_sum = 0.0
        for v in col:
            for w in col:
                unit_sum += (v - w) ** 2
        observed_sum += unit_sum / (m - 1)
    d_observed = observed_sum / n_pairable

    pooled = [v for col in columns for v in col]
    n = len(pooled)
    expected_sum = 0.0
    for v in pooled:
        for w in pooled:
            expected_sum += (v - w) ** 2
    d_expected = expected_sum / (n * (n - 1))

    if d_expected == 0.0:
        return 1.0
    return 1.0 - d_observed / d_expected


# -- helpers for random bead generation -----------------------------------------


def random_bead_partition(rng, pivot_len: int, max_insertions: int = 2):
    """Monotone beads (pivot_span, foreign_span) partitioning [0, pivot_len)."""
    beads = []
    covered = 0
    foreign = 0
    insertions = 0
    while covered < pivot_len:
        shapes = [(1, 1), (1, 0), (2, 1), (1, 2), (2, 2)]
        if insertions < max_insertions:
            shapes.append((0, 1))
        ds, dt = shapes[rng.randrange(len(shapes))]
        if ds > pivot_len - covered:
            continue
        if ds == 0:
            insertions += 1
        beads.append(((covered, covered + ds), (foreign, foreign + dt)))
        covered += ds
        foreign += dt
    return beads


def units_from_blocks(blocks, bead_lists):
    """Per-language spans over each block, unioned by force over the beads."""
    out = []
    for block in blocks:
        spans = []
        for beads in bead_lists:
            lo, hi = None, None
            for (pa, pb), (fa, fb) in beads:
                if pa == pb or fa == fb:
                    continue
                if pa >= block[0] and pb <= block[1]:
                    lo = fa if lo is None else min(lo, fa)
                    hi = fb if hi is None else max(hi, fb)
            spans.append((lo, hi) if lo is not None else (0, 0))
        out.append((block, spans))
    return out


def all_pairs_count(existing: int, new: int) -> int:
    return sum(1 for _ in product(range(existing), range(new)))
