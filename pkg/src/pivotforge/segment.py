"""Rule-based sentence segmentation with per-language non-breaking prefixes.

A break happens after sentence-final punctuation (. ! ? or the ellipsis char)
followed by whitespace and an uppercase letter or an opening quote/bracket.
Breaks after "." are suppressed when the preceding token is a known
non-breaking prefix; prefixes marked numeric-only suppress a break only when
a digit follows. Profiles for caseless scripts (Georgian) accept any letter
as a sentence starter, since the uppercase test can never fire there.

Prefix files follow the established one-prefix-per-line convention with an
optional ``#NUMERIC_ONLY#`` suffix; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import FormatError, UsageError

TERMINATORS = ".!?…"
OPENERS = "\"'‘“«([{¿¡"

_CANDIDATE_RE = re.compile(r"[.!?…]")


@dataclass(frozen=True)
class SegmenterProfile:
    lang: str
    nonbreaking_prefixes: frozenset[str] = frozenset()
    numeric_prefixes: frozenset[str] = frozenset()
    caseless: bool = False
    fallback_of: Optional[str] = None


@dataclass
class SegmenterRegistry:
    profiles: dict[str, SegmenterProfile] = field(default_factory=dict)
    fallbacks: dict[str, str] = field(default_factory=dict)

    def add(self, profile: SegmenterProfile) -> None:
        self.profiles[profile.lang] = profile


def parse_prefix_file(text: str, lang: str, caseless: bool = False) -> SegmenterProfile:
    plain: set[str] = set()
    numeric: set[str] = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "#NUMERIC_ONLY#" in line:
            prefix = line.split("#NUMERIC_ONLY#")[0].strip()
            if prefix:
                numeric.add(prefix.rstrip("."))
            continue
        # inline comments after the prefix
        prefix = line.split("#")[0].strip()
        if prefix:
            plain.add(prefix.rstrip("."))
    return SegmenterProfile(
        lang=lang,
        nonbreaking_prefixes=frozenset(plain),
        numeric_prefixes=frozenset(numeric),
        caseless=caseless,
    )


CASELESS_LANGS = {"ka"}


def load_registry(path: Optional[str | Path] = None) -> SegmenterRegistry:
    """Load prefix files named ``nonbreaking_prefix.<lang>`` plus an optional
    ``fallbacks.json`` map. With no path, the bundled registry is used."""
    import json

    registry = SegmenterRegistry()
    if path is None:
        pkg = resources.files("pivotforge")
        prefix_dir = pkg / "data" / "nonbreaking_prefixes"
        for entry in prefix_dir.iterdir():
            name = entry.name
            if not name.startswith("nonbreaking_prefix."):
                continue
            lang = name.split(".", 1)[1]
            registry.add(parse_prefix_file(entry.read_text(encoding="utf-8"), lang, lang in CASELESS_LANGS))
        registry.fallbacks = json.loads((pkg / "data" / "fallbacks.json").read_text(encoding="utf-8"))
    else:
        base = Path(path)
        if not base.is_dir():
            raise UsageError(f"segmenter registry path {base} is not a directory")
        for entry in sorted(base.glob("nonbreaking_prefix.*")):
            lang = entry.name.split(".", 1)[1]
            registry.add(parse_prefix_file(entry.read_text(encoding="utf-8"), lang, lang in CASELESS_LANGS))
        fb = base / "fallbacks.json"
        if fb.exists():
            registry.fallbacks = json.loads(fb.read_text(encoding="utf-8"))
    if "en" not in registry.profiles:
        raise FormatError("segmenter registry must provide an English profile")
    return registry


def resolve_profile(lang: str, registry: SegmenterRegistry) -> SegmenterProfile:
    """Exact profile, else first hit along the fallback chain, else English."""
    seen: set[str] = set()
    code = lang
    while code not in seen:
        seen.add(code)
        if code in registry.profiles:
            return registry.profiles[code]
        code = registry.fallbacks.get(code, "en")
    return registry.profiles["en"]


def _preceding_token(text: str, dot_index: int) -> str:
    """The token directly before a period, stripped of leading punctuation."""
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start:dot_index]
    return token.lstrip("\"'‘“«([{¿¡-")


def _is_starter(ch: str, caseless: bool) -> bool:
    if ch in OPENERS:
        return True
    if caseless:
        return ch.isalpha()
    return ch.isupper()


def segment(paragraph_text: str, profile: SegmenterProfile) -> list[str]:
    """Split one paragraph into sentence strings.

    Joining the output with single spaces and collapsing whitespace reproduces
    the whitespace-collapsed input; no characters are added or lost.
    """
    text = paragraph_text
    if not text.strip():
        return []

    breaks: list[int] = []
    for m in _CANDIDATE_RE.finditer(text):
        i = m.start()
        term = text[i]
        # position after the terminator run (don't break inside "?!" or "...")
        j = i + 1
        if j < len(text) and text[j] in TERMINATORS:
            continue
        k = j
        while k < len(text) and text[k].isspace():
            k += 1
        if k == j or k == len(text):
            continue  # no whitespace after terminator, or end of text
        nxt = text[k]
        if term == ".":
            token = _preceding_token(text, i)
            if token in profile.nonbreaking_prefixes:
                continue
            if token in profile.numeric_prefixes and nxt.isdigit():
                continue
        if not _is_starter(nxt, profile.caseless):
            continue
        breaks.append(j)

    pieces: list[str] = []
    prev = 0
    for b in breaks:
        pieces.append(text[prev:b])
        prev = b
    pieces.append(text[prev:])
    return [p.strip() for p in pieces if p.strip()]
