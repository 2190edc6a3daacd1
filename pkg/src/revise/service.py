"""HTTP service binding the suggestion workflow to the browser portal.

Sessions are held server-side: current document, per-document timing,
suggestion triggers, and the pending suggestion set. Every state change is
appended to the study log before the response is sent. Draft summaries are
produced once per document at corpus load by a whole-summary generation call
and cached.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from revise import study
from revise.backends import (
    Backend,
    BackendError,
    BackendTimeoutError,
    EchoBackend,
    GenerationRequest,
    HeuristicBackend,
    RandomTokenBackend,
    RemoteBackend,
    ScriptedBackend,
)
from revise.datagen import DatasetRecord, read_corpus
from revise.editregion import EditEvent, NoEditError
from revise.fim import FimMode
from revise.suggest import SuggestionEngine, SuggestionFailure, apply_choice
from revise.tokenization import TokenSeq, Vocabulary, detokenize, tokenize

logger = logging.getLogger(__name__)

ENV_PREFIX = "REVISE_"

CONFIG_FIELDS = (
    "listen",
    "corpus",
    "backend",
    "k",
    "gamma",
    "backend_timeout_ms",
    "log",
    "static_dir",
    "max_new_tokens",
)


class ConfigError(ValueError):
    pass


@dataclass
class ServiceConfig:
    """Runtime configuration; JSON file keys and REVISE_* env vars match."""

    listen: str = "127.0.0.1:8000"
    corpus: str = ""
    backend: str = "heuristic"
    k: int = 3
    gamma: float = 0.5
    backend_timeout_ms: int = 10_000
    log: str = "events.jsonl"
    static_dir: Optional[str] = None
    max_new_tokens: int = 64

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def validate(self) -> "ServiceConfig":
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must be in [0, 1]")
        if self.backend_timeout_ms < 1:
            raise ConfigError("backend_timeout_ms must be positive")
        if not self.corpus:
            raise ConfigError("corpus path is required")
        if not os.path.exists(self.corpus):
            raise ConfigError(f"corpus path does not exist: {self.corpus}")
        if self.static_dir and not os.path.isdir(self.static_dir):
            raise ConfigError(f"static_dir does not exist: {self.static_dir}")
        try:
            self.port
        except (IndexError, ValueError):
            raise ConfigError(f"listen must be host:port, got {self.listen!r}") from None
        return self

    @classmethod
    def from_obj(cls, obj: dict) -> "ServiceConfig":
        unknown = set(obj) - set(CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj)
        return cfg._apply_env()

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_obj(obj)

    def _apply_env(self) -> "ServiceConfig":
        casts = {
            "k": int,
            "gamma": float,
            "backend_timeout_ms": int,
            "max_new_tokens": int,
        }
        for name in CONFIG_FIELDS:
            value = os.environ.get(ENV_PREFIX + name.upper())
            if value is not None:
                setattr(self, name, casts.get(name, str)(value))
        return self


def backend_from_spec(spec: str, vocab: Vocabulary, timeout_s: float = 10.0) -> Backend:
    """Build a backend from its CLI/config spec string.

    Grammar: ``heuristic`` | ``random[:seed]`` | ``scripted:echo`` |
    ``scripted:<replies.json>`` | ``remote:<url>``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "heuristic":
        return HeuristicBackend(vocab)
    if kind == "random":
        return RandomTokenBackend(seed=int(arg) if arg else 0, vocab=vocab)
    if kind == "scripted":
        if arg == "echo" or not arg:
            return EchoBackend()
        with open(arg, encoding="utf-8") as fh:
            texts = json.load(fh)
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise ConfigError(f"scripted replies file {arg} must hold a JSON list of strings")
        return ScriptedBackend([tokenize(t, vocab) for t in texts])
    if kind == "remote":
        if not arg:
            raise ConfigError("remote backend needs a URL: remote:http://host:port")
        return RemoteBackend(arg, vocab, timeout_s=timeout_s)
    raise ConfigError(f"unknown backend spec {spec!r}")


@dataclass
class DocState:
    served_at: Optional[float] = None
    current_summary: Optional[str] = None
    triggers: int = 0
    choices: list = field(default_factory=list)
    pending: Optional[object] = None
    pending_trigger: int = -1
    offered: dict = field(default_factory=dict)  # blinded key -> (variant, text)


@dataclass
class ServerSession:
    id: str
    annotator_id: str
    task: str
    doc_ids: list
    cursor: int = -1
    saved: dict = field(default_factory=dict)
    evaluated: dict = field(default_factory=dict)  # doc_id -> set of keys
    docs: dict = field(default_factory=dict)  # doc_id -> DocState
    lock: threading.Lock = field(default_factory=threading.Lock)

    def doc_state(self, doc_id: str) -> DocState:
        return self.docs.setdefault(doc_id, DocState())


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class CreateSessionBody(BaseModel):
    annotator_id: str
    task: str
    document_ids: Optional[list[str]] = None


class SuggestBody(BaseModel):
    old_summary: str
    new_summary: str
    regenerate: bool = False


class ChooseBody(BaseModel):
    index: int


class SaveBody(BaseModel):
    final_summary: str
    client_active_ms: Optional[int] = None


class EvaluateBody(BaseModel):
    document_id: Optional[str] = None
    key: Optional[str] = None
    variant: Optional[str] = None
    rating: int
    issues: list[bool]
    verdict: str


class ServiceState:
    """Everything the handlers share: corpus, drafts, store, engine, sessions."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.vocab = Vocabulary()
        self.records: list[DatasetRecord] = read_corpus(config.corpus)
        self.by_id = {r.id: r for r in self.records}
        self.doc_tokens: dict[str, TokenSeq] = {
            r.id: tokenize(r.document, self.vocab) for r in self.records
        }
        self.store = study.EventLog(config.log)
        self.backend = backend_from_spec(
            config.backend, self.vocab, timeout_s=config.backend_timeout_ms / 1000.0
        )
        self.engine = SuggestionEngine(
            self.backend, k=config.k, max_new_tokens=config.max_new_tokens
        )
        self.sessions: dict[str, ServerSession] = {}
        self.drafts: dict[str, str] = {}
        self._generate_drafts()

    def _generate_drafts(self) -> None:
        for record in self.records:
            request = GenerationRequest(
                mode=FimMode.MIDDLE,
                prefix=(),
                suffix=(),
                document=self.doc_tokens[record.id],
                num_suggestions=1,
                max_new_tokens=self.config.max_new_tokens,
            )
            try:
                suggestions = self.backend.generate(request)
            except BackendError as exc:
                logger.warning("draft generation failed for %s: %s", record.id, exc)
                suggestions = []
            self.drafts[record.id] = (
                detokenize(suggestions[0].tokens, self.vocab) if suggestions else ""
            )

    def session(self, session_id: str) -> ServerSession:
        sess = self.sessions.get(session_id)
        if sess is None:
            raise ApiError(404, f"unknown session {session_id!r}")
        return sess

    def current_doc(self, sess: ServerSession) -> str:
        if sess.cursor < 0 or sess.cursor >= len(sess.doc_ids):
            raise ApiError(409, "no document is being served for this session")
        return sess.doc_ids[sess.cursor]

    def latest_annotations_by_variant(self, doc_id: str) -> dict:
        """Latest human summary per variant for ``doc_id`` across all sessions."""
        mat = study.materialize(self.store.records())
        out: dict[str, str] = {}
        for (session_id, rec_doc), annotation in mat.annotations.items():
            if rec_doc != doc_id:
                continue
            session = mat.sessions.get(session_id)
            if session is None:
                continue
            if session.task == study.TASK_WITH:
                out[study.VARIANT_WITH_INTERACTION] = annotation.final_summary
            elif session.task == study.TASK_WITHOUT:
                out[study.VARIANT_NO_INTERACTION] = annotation.final_summary
        return out


def create_app(config: ServiceConfig) -> FastAPI:
    config.validate()
    state = ServiceState(config)
    app = FastAPI(title="revise", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        message = f"{loc}: {first.get('msg', 'invalid')}" if loc else "invalid request body"
        return JSONResponse(status_code=400, content={"error": message})

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        if body.task not in study.TASKS:
            raise ApiError(400, f"task: must be one of {study.TASKS}")
        if not body.annotator_id:
            raise ApiError(400, "annotator_id: must be non-empty")
        doc_ids = body.document_ids or [r.id for r in state.records]
        unknown = [d for d in doc_ids if d not in state.by_id]
        if unknown:
            raise ApiError(404, f"unknown document ids: {unknown[:5]}")
        session_id = uuid.uuid4().hex[:12]
        record = study.Session(
            id=session_id,
            annotator_id=body.annotator_id,
            task=body.task,
            document_ids=tuple(doc_ids),
        )
        try:
            state.store.append(record)
        except study.RecordValidationError as exc:
            raise ApiError(400, str(exc)) from exc
        state.sessions[session_id] = ServerSession(
            id=session_id,
            annotator_id=body.annotator_id,
            task=body.task,
            doc_ids=list(doc_ids),
        )
        return {"session_id": session_id, "document_ids": doc_ids}

    def _serve_document(sess: ServerSession, index: int) -> dict:
        sess.cursor = index
        doc_id = sess.doc_ids[index]
        doc_state = sess.doc_state(doc_id)
        doc_state.served_at = time.monotonic()
        if doc_state.current_summary is None:
            doc_state.current_summary = sess.saved.get(doc_id, state.drafts[doc_id])
        payload = {
            "document_id": doc_id,
            "document": state.by_id[doc_id].document,
            "draft_summary": doc_state.current_summary,
            "position": index,
            "total": len(sess.doc_ids),
        }
        if sess.task == study.TASK_EVALUATION:
            variants = {study.VARIANT_DRAFT: state.drafts[doc_id]}
            variants.update(state.latest_annotations_by_variant(doc_id))
            order = sorted(variants)
            random.Random(f"blind/{sess.id}/{doc_id}").shuffle(order)
            doc_state.offered = {
                f"s{pos + 1}": (variant, variants[variant])
                for pos, variant in enumerate(order)
            }
            payload["summaries"] = [
                {"key": key, "text": text}
                for key, (_, text) in doc_state.offered.items()
            ]
        return payload

    def _is_done(sess: ServerSession, doc_id: str) -> bool:
        if sess.task == study.TASK_EVALUATION:
            keys = sess.evaluated.get(doc_id, set())
            offered = sess.doc_state(doc_id).offered
            # Unserved documents have no offer yet; they are pending.
            return bool(offered) and keys >= set(offered)
        return doc_id in sess.saved

    @app.get("/api/sessions/{session_id}/next")
    def next_document(session_id: str):
        sess = state.session(session_id)
        with sess.lock:
            for index in range(sess.cursor + 1, len(sess.doc_ids)):
                if not _is_done(sess, sess.doc_ids[index]):
                    return _serve_document(sess, index)
            raise ApiError(404, "no unannotated documents remain")

    @app.get("/api/sessions/{session_id}/prev")
    def previous_document(session_id: str):
        sess = state.session(session_id)
        with sess.lock:
            if sess.cursor <= 0:
                raise ApiError(404, "no previous document")
            return _serve_document(sess, sess.cursor - 1)

    @app.post("/api/sessions/{session_id}/suggest")
    def suggest_endpoint(session_id: str, body: SuggestBody):
        sess = state.session(session_id)
        with sess.lock:
            doc_id = state.current_doc(sess)
            doc_state = sess.doc_state(doc_id)
            old_tokens = tokenize(body.old_summary, state.vocab)
            new_tokens = tokenize(body.new_summary, state.vocab)
            event = EditEvent(old_summary=old_tokens, new_summary=new_tokens)
            try:
                result = state.engine.suggest(
                    event,
                    state.doc_tokens[doc_id],
                    doc_key=f"{session_id}/{doc_id}",
                    regenerate=body.regenerate,
                )
            except NoEditError as exc:
                raise ApiError(409, str(exc)) from exc
            except SuggestionFailure as exc:
                status = 504 if isinstance(exc.cause, BackendTimeoutError) else 502
                raise ApiError(status, f"backend failure: {exc.cause}") from exc
            doc_state.triggers += 1
            trigger_index = doc_state.triggers - 1
            doc_state.pending = result
            doc_state.pending_trigger = trigger_index
            response = {
                "mode": result.region.mode.value,
                "region": {
                    "prefix": detokenize(result.region.prefix, state.vocab),
                    "human_start": detokenize(result.region.human_start, state.vocab),
                    "suffix": detokenize(result.region.suffix, state.vocab),
                    "replaced": detokenize(result.region.replaced, state.vocab),
                },
                "suggestions": [
                    {
                        "text": detokenize(s.tokens, state.vocab),
                        "score": s.score,
                        "terminated": s.terminated,
                    }
                    for s in result.suggestions
                ],
                "previews": [detokenize(p, state.vocab) for p in result.previews],
                "latency_ms": result.latency_ms,
                "trigger_index": trigger_index,
            }
            state.store.append(
                study.EditEventRecord(
                    session_id=session_id,
                    document_id=doc_id,
                    kind="suggest",
                    data={
                        "old_summary": body.old_summary,
                        "new_summary": body.new_summary,
                        "mode": result.region.mode.value,
                        "n_suggestions": len(result.suggestions),
                        "latency_ms": result.latency_ms,
                        "trigger_index": trigger_index,
                    },
                )
            )
            return response

    @app.post("/api/sessions/{session_id}/choose")
    def choose_endpoint(session_id: str, body: ChooseBody):
        sess = state.session(session_id)
        with sess.lock:
            doc_id = state.current_doc(sess)
            doc_state = sess.doc_state(doc_id)
            if doc_state.pending is None:
                raise ApiError(409, "no pending suggestion set")
            try:
                summary_tokens = apply_choice(doc_state.pending, body.index)
            except IndexError as exc:
                raise ApiError(400, f"index: {exc}") from exc
            text = detokenize(summary_tokens, state.vocab)
            doc_state.choices.append([doc_state.pending_trigger, body.index])
            doc_state.current_summary = text
            doc_state.pending = None
            state.store.append(
                study.EditEventRecord(
                    session_id=session_id,
                    document_id=doc_id,
                    kind="choice",
                    data={"trigger_index": doc_state.pending_trigger, "choice_index": body.index},
                )
            )
            return {"summary": text}

    @app.post("/api/sessions/{session_id}/save")
    def save_endpoint(session_id: str, body: SaveBody):
        sess = state.session(session_id)
        with sess.lock:
            doc_id = state.current_doc(sess)
            doc_state = sess.doc_state(doc_id)
            served_at = doc_state.served_at or time.monotonic()
            elapsed_ms = int((time.monotonic() - served_at) * 1000)
            record = study.AnnotationRecord(
                session_id=session_id,
                document_id=doc_id,
                draft_summary=state.drafts[doc_id],
                final_summary=body.final_summary,
                elapsed_ms=elapsed_ms,
                suggestion_triggers=doc_state.triggers,
                choices_taken=tuple(tuple(c) for c in doc_state.choices),
                client_active_ms=body.client_active_ms,
            )
            try:
                state.store.append(record)
            except study.RecordValidationError as exc:
                raise ApiError(400, str(exc)) from exc
            sess.saved[doc_id] = body.final_summary
            doc_state.current_summary = body.final_summary
            doc_state.pending = None
            return {"ok": True, "document_id": doc_id, "elapsed_ms": elapsed_ms}

    @app.post("/api/sessions/{session_id}/evaluate")
    def evaluate_endpoint(session_id: str, body: EvaluateBody):
        sess = state.session(session_id)
        with sess.lock:
            if sess.task != study.TASK_EVALUATION:
                raise ApiError(400, "task: session is not an evaluation session")
            doc_id = body.document_id or state.current_doc(sess)
            if doc_id not in state.by_id:
                raise ApiError(404, f"unknown document {doc_id!r}")
            doc_state = sess.doc_state(doc_id)
            if body.key is not None:
                if body.key not in doc_state.offered:
                    raise ApiError(400, f"key: unknown summary key {body.key!r}")
                variant = doc_state.offered[body.key][0]
            elif body.variant is not None:
                variant = body.variant
            else:
                raise ApiError(400, "key: provide either 'key' or 'variant'")
            record = study.EvaluationRecord(
                session_id=session_id,
                document_id=doc_id,
                summary_variant=variant,
                rating=body.rating,
                issues=tuple(body.issues),
                verdict=body.verdict,
            )
            try:
                record.validate()
                state.store.append(record)
            except study.RecordValidationError as exc:
                raise ApiError(400, str(exc)) from exc
            sess.evaluated.setdefault(doc_id, set()).add(body.key or variant)
            return {"ok": True, "summary_variant": variant}

    @app.get("/api/stats")
    def stats_endpoint():
        return study.aggregate(state.store).to_obj()

    @app.get("/api/config")
    def config_endpoint():
        return {
            "k": config.k,
            "backend": config.backend,
            "issue_questions": list(study.DEFAULT_ISSUE_QUESTIONS),
            "tasks": list(study.TASKS),
            "verdicts": list(study.VERDICTS),
        }

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="portal")

    return app


def run_service(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config)
    logger.info("serving on http://%s:%d", config.host, config.port)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
