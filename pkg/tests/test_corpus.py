import io
import random

import pytest

from pivotforge.corpus import (
    CorpusStats,
    Document,
    Paragraph,
    Sentence,
    compute_stats,
    dumps_canonical,
    parse_tagged_corpus,
    read_canonical,
    write_canonical,
)
from pivotforge.errors import FormatError, IntegrityError

TAGGED = """<CHAPTER id="1">
<P>
First paragraph line.
<P>
Second paragraph line.
"""

TAGGED_SPEAKER = """<CHAPTER id="7">
<SPEAKER id="42" NAME="Someone">
Opening remarks here.
<P>
Further text.
"""


def test_empty_input():
    assert parse_tagged_corpus("", "en") == []


def test_two_paragraphs_get_ordinal_ids():
    docs = parse_tagged_corpus(TAGGED, "en")
    assert len(docs) == 1
    doc = docs[0]
    assert doc.doc_id == "1"
    assert [p.para_id for p in doc.paragraphs] == ["1", "2"]
    assert doc.paragraphs[0].raw_text == "First paragraph line."
    assert doc.paragraphs[1].raw_text == "Second paragraph line."


def test_speaker_metadata_attaches_to_following_paragraph():
    docs = parse_tagged_corpus(TAGGED_SPEAKER, "en")
    (doc,) = docs
    assert doc.paragraphs[0].speaker == "42"
    assert doc.paragraphs[0].raw_text == "Opening remarks here."
    # speaker context persists across a plain P boundary
    assert doc.paragraphs[1].speaker == "42"


def test_marker_without_id_is_an_error_with_line_number():
    bad = '<CHAPTER id="1">\n<SPEAKER>\ntext\n'
    with pytest.raises(FormatError, match="line 2"):
        parse_tagged_corpus(bad, "en")
    with pytest.raises(FormatError, match="line 1"):
        parse_tagged_corpus("<CHAPTER>\n", "en")


def test_reopened_chapter_id_is_an_error():
    bad = '<CHAPTER id="1">\n<P>\ntext\n<CHAPTER id="1">\n<P>\nmore\n'
    with pytest.raises(FormatError, match="nested"):
        parse_tagged_corpus(bad, "en")


def test_multiple_markers_on_one_line_rejected():
    with pytest.raises(FormatError, match="nested|malformed"):
        parse_tagged_corpus('<CHAPTER id="1"><CHAPTER id="2">\n', "en")


def test_unknown_tags_open_plain_paragraphs():
    text = '<CHAPTER id="3">\n<WEIRD attr="x">\nSome text.\n'
    (doc,) = parse_tagged_corpus(text, "en")
    assert doc.paragraphs[0].raw_text == "Some text."
    assert doc.paragraphs[0].speaker is None


def test_markup_lines_never_become_text():
    docs = parse_tagged_corpus(TAGGED, "en")
    for doc in docs:
        for para in doc.paragraphs:
            assert "<" not in para.raw_text


def test_text_before_chapter_rejected():
    with pytest.raises(FormatError, match="line 1"):
        parse_tagged_corpus("stray text\n", "en")


def _random_docs(rng, n_docs=4):
    docs = []
    for d in range(n_docs):
        paragraphs = []
        for p in range(rng.randint(1, 4)):
            para_id = str(p + 1)
            n_sents = rng.randint(0, 3)
            sentences = tuple(
                Sentence(sent_id=f"{para_id}.{i + 1}", text=f"Sentence {d} {p} {i} éα.")
                for i in range(n_sents)
            )
            raw = " ".join(s.text for s in sentences) or f"raw text {d}/{p}"
            paragraphs.append(
                Paragraph(
                    para_id=para_id,
                    raw_text=raw,
                    sentences=sentences,
                    speaker=str(rng.randint(1, 9)) if rng.random() < 0.5 else None,
                )
            )
        docs.append(Document(doc_id=f"doc{d}", lang="xx", paragraphs=tuple(paragraphs)))
    return docs


def test_round_trip_randomized():
    rng = random.Random(20240501)
    for _ in range(25):
        docs = _random_docs(rng)
        text = dumps_canonical(docs)
        assert read_canonical(io.StringIO(text)) == docs


def test_write_is_byte_stable():
    rng = random.Random(7)
    docs = _random_docs(rng)
    assert dumps_canonical(docs) == dumps_canonical(docs)


def test_empty_round_trip():
    assert dumps_canonical([]) == ""
    assert read_canonical(io.StringIO("")) == []


def test_one_document_one_line():
    doc = Document(doc_id="d", lang="en", paragraphs=(Paragraph(para_id="1", raw_text="x"),))
    out = dumps_canonical([doc])
    assert out.endswith("\n")
    assert out.count("\n") == 1


def test_missing_doc_id_errors_at_record_index():
    with pytest.raises(FormatError, match="record 1"):
        read_canonical(io.StringIO('{"lang":"en","paragraphs":[]}\n'))


def test_truncated_record_errors_with_index():
    good = dumps_canonical(_random_docs(random.Random(1), n_docs=1)).rstrip("\n")
    with pytest.raises(FormatError, match="record 2"):
        read_canonical(io.StringIO(good + "\n" + good[: len(good) // 2] + "\n"))


def test_unknown_fields_strict_vs_lenient():
    line = '{"doc_id":"d","lang":"en","paragraphs":[],"extra":1}\n'
    with pytest.raises(FormatError, match="unknown"):
        read_canonical(io.StringIO(line))
    docs = read_canonical(io.StringIO(line), strict=False)
    assert docs[0].doc_id == "d"


def test_sentence_char_len_counts_non_whitespace():
    s = Sentence(sent_id="1.1", text="a b\tc\nd")
    assert s.char_len == 4
    with pytest.raises(IntegrityError):
        Sentence(sent_id="1.1", text="ab", char_len=5)


def test_duplicate_paragraph_ids_rejected():
    with pytest.raises(IntegrityError):
        Document(
            doc_id="d",
            lang="en",
            paragraphs=(Paragraph(para_id="1", raw_text="a"), Paragraph(para_id="1", raw_text="b")),
        )


def test_stats_accepts_basque_table_counts():
    stats = compute_stats(2167164, 2160061, 2138713)
    assert stats == CorpusStats(2167164, 2160061, 2138713)


def test_stats_zero_ok_and_order_enforced():
    assert compute_stats(0, 0, 0) == CorpusStats(0, 0, 0)
    with pytest.raises(IntegrityError):
        compute_stats(100, 120, 90)
    with pytest.raises(IntegrityError):
        compute_stats(100, 90, 95)
