"""Bulk translation-request batches: build request files, ingest response files,
drop hallucinated refusal lines.

Request and response files are UTF-8 JSONL shaped like a generic chat-completions
batch, keyed by a custom_id of the form "<doc_id>/<para_id>" so every response
can be joined back to its source paragraph.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import IO, Iterable

from .corpus import Document
from .errors import FormatError, IntegrityError, UsageError

log = logging.getLogger(__name__)

PROMPT_TEMPLATE = (
    "This is an English to {target} translation, please provide the {target} "
    "translation to this sentence in {script} script. Do not provide any "
    "explanation or text apart from the translation."
)

DEFAULT_REFUSAL_PATTERNS = ("2023",)

RESPONSE_STATUSES = ("ok", "refused", "error")


@dataclass(frozen=True)
class TranslationRequest:
    custom_id: str
    target_lang: str
    script: str
    source_text: str
    prompt: str


@dataclass(frozen=True)
class TranslationResponse:
    custom_id: str
    output_text: str
    status: str

    def __post_init__(self):
        if self.status not in RESPONSE_STATUSES:
            raise FormatError(f"response {self.custom_id}: unknown status {self.status!r}")
        if self.status == "ok" and not self.output_text:
            raise FormatError(f"response {self.custom_id}: ok status with empty output")


@dataclass
class IngestReport:
    """Completeness accounting for one batch: every manifest id lands in one bucket."""

    ok: dict[str, str]
    missing: list[str]
    refused: list[str]
    errors: list[str]

    @property
    def complete(self) -> bool:
        return not (self.missing or self.refused or self.errors)


def render_prompt(target_lang: str, script: str, source_text: str) -> str:
    """Instruction header with the target language and script filled in, then the text."""
    if not target_lang or not script:
        raise UsageError("target language and script must be non-empty")
    if not source_text.strip():
        raise UsageError("refusing to render a prompt for empty source text")
    header = PROMPT_TEMPLATE.format(target=target_lang, script=script)
    return f"{header}\n\n{source_text}"


def build_batch(docs: Iterable[Document], target_lang: str, script: str) -> list[TranslationRequest]:
    """One request per non-empty paragraph, in corpus order."""
    requests: list[TranslationRequest] = []
    seen: set[str] = set()
    for doc in docs:
        for para in doc.paragraphs:
            custom_id = f"{doc.doc_id}/{para.para_id}"
            if custom_id in seen:
                raise IntegrityError(f"duplicate paragraph key {custom_id}")
            seen.add(custom_id)
            if not para.raw_text.strip():
                log.info("skipping whitespace-only paragraph %s", custom_id)
                continue
            requests.append(
                TranslationRequest(
                    custom_id=custom_id,
                    target_lang=target_lang,
                    script=script,
                    source_text=para.raw_text,
                    prompt=render_prompt(target_lang, script, para.raw_text),
                )
            )
    return requests


def write_batch_file(requests: Iterable[TranslationRequest], stream: IO[str]) -> None:
    for req in requests:
        record = {
            "custom_id": req.custom_id,
            "body": {"messages": [{"role": "user", "content": req.prompt}]},
        }
        stream.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
        stream.write("\n")


def write_manifest(requests: Iterable[TranslationRequest], stream: IO[str]) -> None:
    for req in requests:
        stream.write(req.custom_id + "\n")


def read_manifest(stream: IO[str]) -> list[str]:
    ids = [line.strip() for line in stream if line.strip()]
    if len(ids) != len(set(ids)):
        raise FormatError("manifest contains duplicate custom_ids")
    return ids


def read_responses(stream: IO[str]) -> Iterable[TranslationResponse]:
    """Parse a response JSONL stream: {custom_id, response:{status, output_text}}."""
    for index, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"response record {index}: invalid JSON ({exc})") from exc
        try:
            body = record["response"]
            yield TranslationResponse(
                custom_id=record["custom_id"],
                output_text=body.get("output_text", ""),
                status=body["status"],
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"response record {index}: missing field ({exc})") from exc


def ingest_batch(
    responses: Iterable[TranslationResponse],
    manifest: Iterable[str],
    lenient: bool = False,
) -> IngestReport:
    """Collect ok translations keyed by custom_id and account for the rest.

    Duplicate custom_ids are an error; under ``lenient`` the first response wins.
    """
    expected = list(manifest)
    expected_set = set(expected)
    ok: dict[str, str] = {}
    refused: list[str] = []
    errors: list[str] = []
    seen: set[str] = set()

    for resp in responses:
        if resp.custom_id not in expected_set:
            raise IntegrityError(f"response for unknown custom_id {resp.custom_id}")
        if resp.custom_id in seen:
            if lenient:
                log.warning("duplicate response for %s: keeping first", resp.custom_id)
                continue
            raise IntegrityError(f"duplicate response for custom_id {resp.custom_id}")
        seen.add(resp.custom_id)
        if resp.status == "ok":
            ok[resp.custom_id] = resp.output_text
        elif resp.status == "refused":
            refused.append(resp.custom_id)
        else:
            errors.append(resp.custom_id)

    missing = [cid for cid in expected if cid not in seen]
    return IngestReport(ok=ok, missing=missing, refused=refused, errors=errors)


def filter_refusal_lines(paragraph_text: str, patterns: Iterable[str]) -> tuple[str, int]:
    """Remove every line containing any pattern as a substring.

    Kept lines are passed through byte-identical, re-joined with their original
    separators (a dropped line takes its own separator with it).
    """
    patterns = [p for p in patterns if p]
    if not patterns:
        raise UsageError("refusal filtering requires at least one non-empty pattern")
    kept: list[str] = []
    dropped = 0
    for line in paragraph_text.splitlines(keepends=True):
        bare = line.rstrip("\r\n")
        if any(p in bare for p in patterns):
            dropped += 1
        else:
            kept.append(line)
    return "".join(kept), dropped
