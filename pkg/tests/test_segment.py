import random
import re

import pytest

from pivotforge.errors import FormatError
from pivotforge.segment import (
    SegmenterProfile,
    SegmenterRegistry,
    load_registry,
    parse_prefix_file,
    resolve_profile,
    segment,
)

EN = SegmenterProfile(
    lang="en",
    nonbreaking_prefixes=frozenset({"Dr", "Mr", "Prof"}),
    numeric_prefixes=frozenset({"No", "Art"}),
)


def test_empty_input():
    assert segment("", EN) == []
    assert segment("   \n\t ", EN) == []


def test_prefix_suppresses_break():
    assert segment("Dr. Smith arrived. He sat.", EN) == ["Dr. Smith arrived.", "He sat."]


def test_all_three_terminators():
    assert segment("One! Two? Three.", EN) == ["One!", "Two?", "Three."]


def test_ellipsis_terminator():
    assert segment("Wait… Then go.", EN) == ["Wait…", "Then go."]


def test_no_break_before_lowercase():
    assert segment("This is e.g. an example. And more.", EN) == [
        "This is e.g. an example.",
        "And more.",
    ]


def test_break_before_opening_quote():
    out = segment('He left. "Why?" she asked.', EN)
    assert out[0] == "He left."
    assert out[1].startswith('"Why?"')


def test_numeric_prefix_only_protects_digits():
    # digit follows: no break possible anyway; uppercase follows: break happens
    assert segment("See No. 5 for details. Fine.", EN) == ["See No. 5 for details.", "Fine."]
    assert segment("There is no No. Anywhere here.", EN) == ["There is no No.", "Anywhere here."]


def test_plain_prefix_protects_before_uppercase():
    assert segment("Mr. Brown spoke.", EN) == ["Mr. Brown spoke."]


def test_multi_dot_runs_break_once():
    out = segment("Hold on... Now go.", EN)
    assert out == ["Hold on...", "Now go."]


def test_caseless_profile_breaks_on_any_letter():
    ka = SegmenterProfile(lang="ka", caseless=True)
    out = segment("გამარჯობა. კიდევ.", ka)
    assert len(out) == 2


def test_cased_profile_does_not_break_before_caseless_letter():
    out = segment("გამარჯობა. კიდევ.", EN)
    assert len(out) == 1


WORDS = ["alpha", "beta", "Gamma", "delta", "Epsilon", "zeta42", "Dr", "No"]


def _random_paragraph(rng):
    parts = []
    for _ in range(rng.randint(1, 6)):
        n = rng.randint(1, 7)
        words = [rng.choice(WORDS) for _ in range(n)]
        parts.append(" ".join(words) + rng.choice([".", "!", "?"]))
    return " ".join(parts)


def test_partition_property_randomized():
    rng = random.Random(99)
    collapse = lambda s: re.sub(r"\s+", " ", s).strip()
    for _ in range(200):
        text = _random_paragraph(rng)
        out = segment(text, EN)
        assert collapse(" ".join(out)) == collapse(text)


def test_never_breaks_after_prefix_randomized():
    rng = random.Random(100)
    for _ in range(200):
        head = rng.choice(["Dr", "Mr", "Prof"])
        tail = rng.choice(["Smith stays.", "Jones waits. He nods."])
        text = f"Intro words. {head}. {tail}"
        for sentence in segment(text, EN):
            assert not sentence.endswith(f"{head}.")


def test_parse_prefix_file():
    profile = parse_prefix_file(
        "# comment\nDr\nMr.\n\nNo #NUMERIC_ONLY#\n", "en"
    )
    assert profile.nonbreaking_prefixes == frozenset({"Dr", "Mr"})
    assert profile.numeric_prefixes == frozenset({"No"})


def test_bundled_registry_loads():
    registry = load_registry()
    assert "en" in registry.profiles
    assert registry.profiles["ka"].caseless
    assert not registry.profiles["en"].caseless


def test_resolve_exact_profile():
    registry = load_registry()
    assert resolve_profile("is", registry).lang == "is"


def test_resolve_somali_falls_back_to_english():
    registry = load_registry()
    assert resolve_profile("so", registry).lang == "en"


def test_resolve_unknown_code_falls_back_to_english():
    registry = load_registry()
    assert resolve_profile("zz", registry).lang == "en"


def test_resolve_follows_chain():
    registry = SegmenterRegistry(
        profiles={"en": EN, "pt": SegmenterProfile(lang="pt")},
        fallbacks={"gl": "pt"},
    )
    assert resolve_profile("gl", registry).lang == "pt"


def test_registry_requires_english(tmp_path):
    (tmp_path / "nonbreaking_prefix.fr").write_text("M\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_registry(tmp_path)
