"""Direct-assessment annotation sessions: task sampling, score ledger, HTTP API.

Scores are persisted as an append-only JSONL ledger, one submission per line.
Resubmitting an item replaces the exported value but the history stays in the
file, so replaying the ledger after a crash reproduces the exported matrix
exactly. The HTTP layer serializes ledger appends behind a lock; reads are
lock-free.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from pathlib import Path
from random import Random
from typing import IO, Optional, Sequence
from urllib.parse import parse_qs, urlparse

from .align import BitextRecord
from .errors import FormatError, UsageError
from .evalstats import AnnotationMatrix

MIN_SCORE, MAX_SCORE = 0, 100


@dataclass(frozen=True)
class AnnotationTask:
    item_id: str
    source_text: str
    translation_text: str
    lang_pair: str

    def __post_init__(self):
        if not self.source_text or not self.translation_text:
            raise UsageError(f"task {self.item_id}: both texts must be non-empty")


@dataclass(frozen=True)
class ScoreSubmission:
    annotator_id: str
    item_id: str
    score: int
    submitted_at: float

    def __post_init__(self):
        if not isinstance(self.score, int) or isinstance(self.score, bool):
            raise UsageError(f"score must be an integer, got {self.score!r}")
        if not MIN_SCORE <= self.score <= MAX_SCORE:
            raise UsageError(f"score {self.score} outside [{MIN_SCORE}, {MAX_SCORE}]")
        if not self.annotator_id.strip():
            raise UsageError("annotator_id must be non-empty")


def create_session(
    records: Sequence[BitextRecord],
    sample_size: int,
    seed: int,
    lang_pair: str = "",
) -> list[AnnotationTask]:
    """Seeded sample without replacement; the sampled order is the presentation order."""
    if sample_size > len(records):
        raise UsageError(f"cannot sample {sample_size} items from {len(records)} records")
    if sample_size < 1:
        raise UsageError("sample_size must be at least 1")
    rng = Random(seed)
    sampled = rng.sample(list(records), sample_size)
    tasks = []
    for rec in sampled:
        item_id = "/".join((rec.doc_id, rec.para_id, ",".join(rec.src_sent_ids), ",".join(rec.tgt_sent_ids)))
        tasks.append(
            AnnotationTask(
                item_id=item_id,
                source_text=rec.src_text,
                translation_text=rec.tgt_text,
                lang_pair=lang_pair,
            )
        )
    ids = [t.item_id for t in tasks]
    if len(ids) != len(set(ids)):
        raise UsageError("sampled records produced duplicate item ids")
    return tasks


def default_guidelines() -> str:
    return (resources.files("pivotforge") / "data" / "guidelines.txt").read_text(encoding="utf-8")


class Session:
    """One annotation campaign: a fixed task list plus a submission ledger on disk."""

    def __init__(
        self,
        tasks: Sequence[AnnotationTask],
        ledger_path: str | Path,
        lang_pair: str = "",
        guidelines_text: Optional[str] = None,
    ):
        if not tasks:
            raise UsageError("a session needs at least one task")
        self.tasks = list(tasks)
        self.by_item = {t.item_id: t for t in self.tasks}
        self.lang_pair = lang_pair or self.tasks[0].lang_pair
        self.guidelines_text = guidelines_text if guidelines_text is not None else default_guidelines()
        self.ledger_path = Path(ledger_path)
        self._write_lock = threading.Lock()
        self._ledger: list[ScoreSubmission] = []
        if self.ledger_path.exists():
            self._ledger = read_ledger(self.ledger_path)
            for sub in self._ledger:
                if sub.item_id not in self.by_item:
                    raise FormatError(f"ledger references unknown item {sub.item_id!r}")

    # -- persistence ------------------------------------------------------

    def save_tasks(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"lang_pair": self.lang_pair, "tasks": [asdict(t) for t in self.tasks]},
                fh,
                ensure_ascii=False,
                indent=1,
            )
            fh.write("\n")

    @classmethod
    def load(
        cls,
        tasks_path: str | Path,
        ledger_path: str | Path,
        guidelines_text: Optional[str] = None,
    ) -> "Session":
        with open(tasks_path, encoding="utf-8") as fh:
            data = json.load(fh)
        tasks = [AnnotationTask(**t) for t in data["tasks"]]
        return cls(tasks, ledger_path, lang_pair=data.get("lang_pair", ""), guidelines_text=guidelines_text)

    # -- core operations ---------------------------------------------------

    def next_task(self, annotator_id: str) -> Optional[AnnotationTask]:
        scored = {sub.item_id for sub in self._ledger if sub.annotator_id == annotator_id}
        for task in self.tasks:
            if task.item_id not in scored:
                return task
        return None

    def progress(self, annotator_id: str) -> tuple[int, int]:
        scored = {sub.item_id for sub in self._ledger if sub.annotator_id == annotator_id}
        return len(scored), len(self.tasks)

    def submit(self, submission: ScoreSubmission) -> None:
        if submission.item_id not in self.by_item:
            raise UsageError(f"unknown item {submission.item_id!r}")
        with self._write_lock:
            line = json.dumps(asdict(submission), ensure_ascii=False, separators=(",", ":"))
            with open(self.ledger_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self._ledger.append(submission)

    def export_matrix(self) -> AnnotationMatrix:
        """Latest score per (annotator, item) over all session items."""
        annotators = sorted({sub.annotator_id for sub in self._ledger})
        latest: dict[tuple[str, str], int] = {}
        for sub in self._ledger:  # later lines win
            latest[(sub.annotator_id, sub.item_id)] = sub.score
        items = tuple(t.item_id for t in self.tasks)
        values = tuple(
            tuple(latest.get((a, item)) for item in items) for a in annotators
        )
        return AnnotationMatrix(
            annotators=tuple(annotators),
            items=items,
            values=tuple(tuple(None if v is None else float(v) for v in row) for row in values),
        )


def read_ledger(path: str | Path) -> list[ScoreSubmission]:
    submissions = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                submissions.append(
                    ScoreSubmission(
                        annotator_id=data["annotator_id"],
                        item_id=data["item_id"],
                        score=data["score"],
                        submitted_at=data["submitted_at"],
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise FormatError(f"ledger line {lineno}: {exc}") from exc
    return submissions


# -- HTTP API ---------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    session: Session
    static_dir: Optional[Path] = None

    # silence per-request log lines (tests spin many requests)
    def log_message(self, fmt, *args):  # noqa: A002
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, text: str, content_type: str, status: int = 200) -> None:
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", f"{content_type}; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802
        url = urlparse(self.path)
        if url.path == "/api/session":
            session = self.session
            self._send_json(
                {
                    "lang_pair": session.lang_pair,
                    "n_items": len(session.tasks),
                    "guidelines_text": session.guidelines_text,
                }
            )
        elif url.path == "/api/next":
            params = parse_qs(url.query)
            annotator = (params.get("annotator") or [""])[0].strip()
            if not annotator:
                self._send_json({"error": "annotator query parameter required"}, status=400)
                return
            task = self.session.next_task(annotator)
            if task is None:
                self.send_response(204)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            done, total = self.session.progress(annotator)
            payload = asdict(task)
            payload["position"] = done + 1
            payload["total"] = total
            self._send_json(payload)
        elif url.path == "/api/export":
            import io

            from .evalstats import write_matrix_tsv

            buf = io.StringIO()
            write_matrix_tsv(self.session.export_matrix(), buf)
            self._send_text(buf.getvalue(), "text/tab-separated-values")
        elif self.static_dir is not None:
            self._serve_static(url.path)
        else:
            self._send_json({"error": "not found"}, status=404)

    def do_POST(self):  # noqa: N802
        url = urlparse(self.path)
        if url.path != "/api/score":
            self._send_json({"error": "not found"}, status=404)
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            data = json.loads(self.rfile.read(length).decode("utf-8"))
            submission = ScoreSubmission(
                annotator_id=str(data["annotator_id"]),
                item_id=str(data["item_id"]),
                score=data["score"],
                submitted_at=time.time(),
            )
            self.session.submit(submission)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            self._send_json({"error": f"bad request: {exc}"}, status=400)
            return
        except UsageError as exc:
            self._send_json({"error": str(exc)}, status=400)
            return
        self._send_json({"ok": True})

    def _serve_static(self, path: str) -> None:
        name = path.lstrip("/") or "index.html"
        target = (self.static_dir / name).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json({"error": "not found"}, status=404)
            return
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css"}
        ctype = types.get(target.suffix, "application/octet-stream")
        self._send_text(target.read_text(encoding="utf-8"), ctype)


def make_server(
    session: Session,
    host: str = "127.0.0.1",
    port: int = 8765,
    static_dir: Optional[str | Path] = None,
) -> ThreadingHTTPServer:
    handler = type("SessionHandler", (_Handler,), {
        "session": session,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve(
    session: Session,
    host: str = "127.0.0.1",
    port: int = 8765,
    static_dir: Optional[str | Path] = None,
) -> None:
    server = make_server(session, host, port, static_dir)
    try:
        server.serve_forever()
    finally:
        server.server_close()
