"""Character n-gram language identification for post-generation filtering.

Profiles store log relative frequencies of character n-grams (orders 1 up to
max_order) over lowercased text with whitespace runs collapsed to a single
space. Scoring walks every window at the highest usable order and backs off
per n-gram to shorter prefixes, paying a fixed penalty for n-grams unseen even
at order 1; the language with the lowest mean negative log frequency wins.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import FormatError, UsageError

DEFAULT_MAX_ORDER = 6
DEFAULT_PENALTY = 7.0

_WS_RE = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase and collapse whitespace runs to one marker character."""
    return _WS_RE.sub(" ", text.strip()).lower()


@dataclass(frozen=True)
class LangProfile:
    lang: str
    ngram_logfreq: dict[str, float]
    max_order: int = DEFAULT_MAX_ORDER
    penalty: float = DEFAULT_PENALTY

    def __post_init__(self):
        if self.max_order < 1:
            raise UsageError(f"profile {self.lang}: max_order must be >= 1")
        if self.penalty <= 0:
            raise UsageError(f"profile {self.lang}: penalty must be positive")


@dataclass(frozen=True)
class LangVerdict:
    lang: str
    score: float
    margin: float


def train_langid(
    corpus: Sequence[tuple[str, str]],
    max_order: int = DEFAULT_MAX_ORDER,
    penalty: float = DEFAULT_PENALTY,
) -> list[LangProfile]:
    """Build one profile per language from (lang, text) training pairs."""
    langs = [lang for lang, _ in corpus]
    if len(set(langs)) < 2:
        raise UsageError("language identification needs at least two languages")

    texts: dict[str, list[str]] = {}
    for lang, text in corpus:
        texts.setdefault(lang, []).append(text)

    profiles = []
    for lang in sorted(texts):
        joined = normalize(" ".join(texts[lang]))
        if not joined:
            raise UsageError(f"empty training text for language {lang!r}")
        counts: dict[str, int] = {}
        totals = [0] * (max_order + 1)
        for order in range(1, max_order + 1):
            for i in range(len(joined) - order + 1):
                gram = joined[i : i + order]
                counts[gram] = counts.get(gram, 0) + 1
                totals[order] += 1
        logfreq = {
            gram: math.log(count / totals[len(gram)])
            for gram, count in counts.items()
        }
        profiles.append(
            LangProfile(lang=lang, ngram_logfreq=logfreq, max_order=max_order, penalty=penalty)
        )
    return profiles


def score_profile(sentence: str, profile: LangProfile) -> float:
    """Mean negative log frequency over the sentence's n-grams with back-off."""
    text = normalize(sentence)
    if not text:
        raise UsageError("cannot identify the language of an empty sentence")
    top = min(profile.max_order, len(text))
    table = profile.ngram_logfreq
    total = 0.0
    n_terms = 0
    for i in range(len(text) - top + 1):
        term = profile.penalty
        for order in range(top, 0, -1):
            logfreq = table.get(text[i : i + order])
            if logfreq is not None:
                term = -logfreq
                break
        total += term
        n_terms += 1
    return total / n_terms


def identify(sentence: str, profiles: Sequence[LangProfile]) -> LangVerdict:
    """Lowest-scoring profile wins; ties break on language code."""
    if len(profiles) < 2:
        raise UsageError("identification needs at least two profiles")
    scored = sorted(
        ((score_profile(sentence, p), p.lang) for p in profiles),
        key=lambda pair: (pair[0], pair[1]),
    )
    best_score, best_lang = scored[0]
    margin = scored[1][0] - best_score
    return LangVerdict(lang=best_lang, score=best_score, margin=margin)


def filter_by_language(
    sentences: Iterable[str],
    expected: str,
    profiles: Sequence[LangProfile],
    min_margin: float = 0.0,
) -> tuple[list[str], list[tuple[str, LangVerdict]]]:
    """Partition sentences into (kept, dropped-with-verdict) by identified language."""
    if expected not in {p.lang for p in profiles}:
        raise UsageError(f"no profile for the expected language {expected!r}")
    kept: list[str] = []
    dropped: list[tuple[str, LangVerdict]] = []
    for sentence in sentences:
        verdict = identify(sentence, profiles)
        if verdict.lang == expected and verdict.margin >= min_margin:
            kept.append(sentence)
        else:
            dropped.append((sentence, verdict))
    return kept, dropped


def save_profile(profile: LangProfile, stream: IO[str]) -> None:
    """Header line ``lang<TAB>max_order<TAB>penalty``, then ``ngram<TAB>logfreq`` lines."""
    stream.write(f"{profile.lang}\t{profile.max_order}\t{profile.penalty!r}\n")
    for gram in sorted(profile.ngram_logfreq):
        stream.write(f"{gram}\t{profile.ngram_logfreq[gram]!r}\n")


def load_profile(stream: IO[str]) -> LangProfile:
    header = stream.readline().rstrip("\n")
    parts = header.split("\t")
    if len(parts) != 3:
        raise FormatError(f"bad language profile header: {header!r}")
    lang, max_order, penalty = parts[0], int(parts[1]), float(parts[2])
    logfreq: dict[str, float] = {}
    for lineno, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        gram, _, value = line.rpartition("\t")
        if not gram:
            raise FormatError(f"profile line {lineno}: expected ngram<TAB>logfreq")
        logfreq[gram] = float(value)
    return LangProfile(lang=lang, ngram_logfreq=logfreq, max_order=max_order, penalty=penalty)


def save_profiles(profiles: Iterable[LangProfile], directory: str | Path) -> list[Path]:
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    paths = []
    for profile in profiles:
        path = base / f"{profile.lang}.langid"
        with open(path, "w", encoding="utf-8") as fh:
            save_profile(profile, fh)
        paths.append(path)
    return paths


def load_profiles(directory: str | Path) -> list[LangProfile]:
    base = Path(directory)
    profiles = []
    for path in sorted(base.glob("*.langid")):
        with open(path, encoding="utf-8") as fh:
            profiles.append(load_profile(fh))
    if not profiles:
        raise UsageError(f"no .langid profiles found under {base}")
    return profiles
