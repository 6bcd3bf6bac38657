import io
import json

import pytest

from pivotforge.batch import (
    TranslationResponse,
    build_batch,
    filter_refusal_lines,
    ingest_batch,
    read_manifest,
    read_responses,
    render_prompt,
    write_batch_file,
    write_manifest,
)
from pivotforge.corpus import Document, Paragraph
from pivotforge.errors import FormatError, IntegrityError, UsageError


def _doc(doc_id, texts):
    return Document(
        doc_id=doc_id,
        lang="en",
        paragraphs=tuple(Paragraph(para_id=str(i + 1), raw_text=t) for i, t in enumerate(texts)),
    )


def test_prompt_names_language_and_script():
    prompt = render_prompt("Ukrainian", "Cyrl", "Hello.")
    assert "English to Ukrainian translation" in prompt
    assert "in Cyrl script" in prompt
    assert prompt.endswith("Hello.")


def test_prompt_contains_source_verbatim():
    source = "Multi line\nparagraph — with punctuation."
    assert source in render_prompt("Georgian", "Geor", source)


def test_prompt_is_deterministic():
    a = render_prompt("Icelandic", "Latn", "x")
    assert a == render_prompt("Icelandic", "Latn", "x")


def test_empty_source_rejected():
    with pytest.raises(UsageError):
        render_prompt("Somali", "Latn", "")
    with pytest.raises(UsageError):
        render_prompt("Somali", "Latn", "   \n ")
    with pytest.raises(UsageError):
        render_prompt("", "Latn", "text")


def test_build_batch_one_request_per_paragraph():
    reqs = build_batch([_doc("d1", ["a", "b", "c"])], "Basque", "Latn")
    assert [r.custom_id for r in reqs] == ["d1/1", "d1/2", "d1/3"]
    assert len({r.custom_id for r in reqs}) == 3


def test_build_batch_empty_corpus():
    assert build_batch([], "Basque", "Latn") == []


def test_build_batch_skips_whitespace_paragraphs():
    reqs = build_batch([_doc("d1", ["a", "   \n ", "c"])], "Basque", "Latn")
    assert [r.custom_id for r in reqs] == ["d1/1", "d1/3"]


def test_build_batch_duplicate_key_rejected():
    doc1 = _doc("d", ["x"])
    with pytest.raises(IntegrityError):
        build_batch([doc1, doc1], "Basque", "Latn")


def test_batch_file_format():
    reqs = build_batch([_doc("d1", ["hello"])], "Macedonian", "Cyrl")
    buf = io.StringIO()
    write_batch_file(reqs, buf)
    record = json.loads(buf.getvalue())
    assert record["custom_id"] == "d1/1"
    assert record["body"]["messages"][0]["role"] == "user"
    assert "hello" in record["body"]["messages"][0]["content"]


def _responses(*triples):
    lines = [
        json.dumps({"custom_id": cid, "response": {"status": status, "output_text": text}})
        for cid, status, text in triples
    ]
    return read_responses(io.StringIO("\n".join(lines) + "\n"))


def test_ingest_all_ok():
    report = ingest_batch(_responses(("a", "ok", "x"), ("b", "ok", "y")), ["a", "b"])
    assert report.ok == {"a": "x", "b": "y"}
    assert report.missing == [] and report.refused == [] and report.errors == []
    assert report.complete


def test_ingest_missing_one_of_three():
    report = ingest_batch(_responses(("a", "ok", "x"), ("c", "ok", "z")), ["a", "b", "c"])
    assert len(report.ok) == 2
    assert report.missing == ["b"]


def test_ingest_accounting_partitions_manifest():
    report = ingest_batch(
        _responses(("a", "ok", "x"), ("b", "refused", ""), ("c", "error", "")),
        ["a", "b", "c", "d"],
    )
    assert len(report.ok) + len(report.missing) + len(report.refused) + len(report.errors) == 4


def test_ingest_unknown_id_rejected():
    with pytest.raises(IntegrityError, match="unknown"):
        ingest_batch(_responses(("zz", "ok", "x")), ["a"])


def test_ingest_duplicate_strict_and_lenient():
    with pytest.raises(IntegrityError, match="a"):
        ingest_batch(_responses(("a", "ok", "x"), ("a", "ok", "y")), ["a"])
    report = ingest_batch(_responses(("a", "ok", "x"), ("a", "ok", "y")), ["a"], lenient=True)
    assert report.ok == {"a": "x"}


def test_ok_with_empty_output_rejected():
    with pytest.raises(FormatError):
        TranslationResponse(custom_id="a", output_text="", status="ok")


def test_refusal_line_removed():
    text = "first line\nYou were trained on data up to 2023\nlast line"
    kept, dropped = filter_refusal_lines(text, ["2023"])
    assert kept == "first line\nlast line"
    assert dropped == 1


def test_refusal_no_match_is_identity():
    text = "alpha\nbeta\n"
    kept, dropped = filter_refusal_lines(text, ["2023"])
    assert kept == text
    assert dropped == 0


def test_refusal_all_lines_match():
    text = "2023\nyear 2023 again"
    kept, dropped = filter_refusal_lines(text, ["2023"])
    assert kept == ""
    assert dropped == 2


def test_refusal_kept_lines_are_untouched():
    text = "a é line\r\nkeep me\nx 2023 y\nlast"
    kept, _ = filter_refusal_lines(text, ["2023"])
    for line in kept.splitlines():
        assert line in text.splitlines()


def test_refusal_requires_patterns():
    with pytest.raises(UsageError):
        filter_refusal_lines("text", [])


def test_manifest_round_trip():
    reqs = build_batch([_doc("d1", ["a", "b"])], "Basque", "Latn")
    buf = io.StringIO()
    write_manifest(reqs, buf)
    buf.seek(0)
    assert read_manifest(buf) == ["d1/1", "d1/2"]


def test_manifest_duplicates_rejected():
    with pytest.raises(FormatError):
        read_manifest(io.StringIO("a\na\n"))
