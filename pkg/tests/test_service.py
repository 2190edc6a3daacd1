from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from revise import study
from revise.backends import BackendError, BackendTimeoutError
from revise.service import ServiceConfig, create_app

DOCS = [
    {"id": "d1", "document": "alpha beta gamma . delta epsilon .", "summary": "alpha beta ."},
    {"id": "d2", "document": "one two three . four five .", "summary": "one two ."},
    {"id": "d3", "document": "red green blue . cyan magenta .", "summary": "red green ."},
]

REPLIES = ["primary suggestion text", "second option words", "third possible thing"]


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        "".join(json.dumps(d) + "\n" for d in DOCS), encoding="utf-8"
    )
    return path


@pytest.fixture
def replies_path(tmp_path):
    path = tmp_path / "replies.json"
    path.write_text(json.dumps(REPLIES), encoding="utf-8")
    return path


@pytest.fixture
def app_config(tmp_path, corpus_path, replies_path):
    return ServiceConfig(
        listen="127.0.0.1:0",
        corpus=str(corpus_path),
        backend=f"scripted:{replies_path}",
        log=str(tmp_path / "events.jsonl"),
        k=3,
    )


@pytest.fixture
def client(app_config):
    app = create_app(app_config)
    with TestClient(app) as c:
        yield c


def _create_session(client, task=study.TASK_WITH, annotator="ann-1", **extra):
    response = client.post(
        "/api/sessions", json={"annotator_id": annotator, "task": task, **extra}
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_session_creation_echoes_documents(client):
    body = _create_session(client)
    assert body["document_ids"] == ["d1", "d2", "d3"]
    assert body["session_id"]


def test_unknown_session_404(client):
    assert client.get("/api/sessions/nope/next").status_code == 404


def test_bad_task_400(client):
    response = client.post(
        "/api/sessions", json={"annotator_id": "a", "task": "sideways"}
    )
    assert response.status_code == 400
    assert "task" in response.json()["error"]


def test_missing_field_400_names_field(client):
    response = client.post("/api/sessions", json={"task": study.TASK_WITH})
    assert response.status_code == 400
    assert "annotator_id" in response.json()["error"]


def test_full_walkthrough(client, app_config):
    sid = _create_session(client)["session_id"]

    served = client.get(f"/api/sessions/{sid}/next").json()
    assert served["document_id"] == "d1"
    assert served["draft_summary"] == REPLIES[0]

    draft = served["draft_summary"]
    response = client.post(
        f"/api/sessions/{sid}/suggest",
        json={"old_summary": draft, "new_summary": draft + " more"},
    )
    assert response.status_code == 200, response.text
    body = response.json()
    assert len(body["suggestions"]) == 3
    assert len(body["previews"]) == 3
    assert body["latency_ms"] >= 0
    texts = [s["text"] for s in body["suggestions"]]
    assert len(set(texts)) == 3

    chosen = client.post(f"/api/sessions/{sid}/choose", json={"index": 1})
    assert chosen.status_code == 200
    assert chosen.json()["summary"] == body["previews"][1]

    saved = client.post(
        f"/api/sessions/{sid}/save", json={"final_summary": chosen.json()["summary"]}
    )
    assert saved.status_code == 200
    assert saved.json()["document_id"] == "d1"

    stats = client.get("/api/stats").json()
    variant = stats["variants"][study.VARIANT_WITH_INTERACTION]
    assert variant["n_annotations"] == 1
    assert variant["avg_triggers"] == 1.0

    # durability: the log already holds session + edit events + annotation
    lines = [
        json.loads(line)
        for line in open(app_config.log, encoding="utf-8")
        if line.strip()
    ]
    assert [l["type"] for l in lines].count("annotation") == 1
    assert any(l["type"] == "edit_event" and l["kind"] == "suggest" for l in lines)


def test_suggest_no_edit_409(client):
    sid = _create_session(client)["session_id"]
    draft = client.get(f"/api/sessions/{sid}/next").json()["draft_summary"]
    response = client.post(
        f"/api/sessions/{sid}/suggest",
        json={"old_summary": draft, "new_summary": draft},
    )
    assert response.status_code == 409
    assert "no edit" in response.json()["error"]


def test_suggest_without_serving_409(client):
    sid = _create_session(client)["session_id"]
    response = client.post(
        f"/api/sessions/{sid}/suggest", json={"old_summary": "a", "new_summary": "b"}
    )
    assert response.status_code == 409


def test_human_start_two_spaces(client):
    sid = _create_session(client)["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    old = "alpha beta gamma delta"
    new = "alpha Business practice  delta"
    body = client.post(
        f"/api/sessions/{sid}/suggest", json={"old_summary": old, "new_summary": new}
    ).json()
    assert body["region"]["human_start"] == "Business practice"
    for s in body["suggestions"]:
        assert s["text"].startswith("Business practice")
    for preview in body["previews"]:
        assert preview.startswith("alpha Business practice")
        assert preview.endswith("delta")


def test_regenerate_flag_allows_identical(client):
    sid = _create_session(client)["session_id"]
    draft = client.get(f"/api/sessions/{sid}/next").json()["draft_summary"]
    response = client.post(
        f"/api/sessions/{sid}/suggest",
        json={"old_summary": draft, "new_summary": draft, "regenerate": True},
    )
    assert response.status_code == 200
    assert response.json()["mode"] == "middle"


def test_choose_without_pending_409(client):
    sid = _create_session(client)["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    assert client.post(f"/api/sessions/{sid}/choose", json={"index": 0}).status_code == 409


def test_choose_out_of_range_400(client):
    sid = _create_session(client)["session_id"]
    draft = client.get(f"/api/sessions/{sid}/next").json()["draft_summary"]
    client.post(
        f"/api/sessions/{sid}/suggest",
        json={"old_summary": draft, "new_summary": draft + " x"},
    )
    response = client.post(f"/api/sessions/{sid}/choose", json={"index": 7})
    assert response.status_code == 400
    assert "index" in response.json()["error"]


def test_navigation_and_latest_wins(client):
    sid = _create_session(client)["session_id"]
    first = client.get(f"/api/sessions/{sid}/next").json()
    client.post(f"/api/sessions/{sid}/save", json={"final_summary": "first version"})
    second = client.get(f"/api/sessions/{sid}/next").json()
    assert second["document_id"] == "d2"
    back = client.get(f"/api/sessions/{sid}/prev").json()
    assert back["document_id"] == first["document_id"]
    assert back["draft_summary"] == "first version"
    client.post(f"/api/sessions/{sid}/save", json={"final_summary": "second version"})
    stats = client.get("/api/stats").json()
    assert stats["variants"][study.VARIANT_WITH_INTERACTION]["n_annotations"] == 1
    mat = study.materialize(study.EventLog(client.app.state.service.config.log).records())
    assert mat.annotations[(sid, "d1")].final_summary == "second version"


def test_next_exhaustion_404(client):
    sid = _create_session(client, document_ids=["d1"])["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    client.post(f"/api/sessions/{sid}/save", json={"final_summary": "done"})
    assert client.get(f"/api/sessions/{sid}/next").status_code == 404


def test_prev_at_start_404(client):
    sid = _create_session(client)["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    assert client.get(f"/api/sessions/{sid}/prev").status_code == 404


def test_evaluation_flow(client):
    with_sid = _create_session(client, task=study.TASK_WITH, annotator="ann-1")["session_id"]
    client.get(f"/api/sessions/{with_sid}/next")
    client.post(f"/api/sessions/{with_sid}/save", json={"final_summary": "with-int summary"})

    without_sid = _create_session(client, task=study.TASK_WITHOUT, annotator="ann-2")["session_id"]
    client.get(f"/api/sessions/{without_sid}/next")
    client.post(f"/api/sessions/{without_sid}/save", json={"final_summary": "control summary"})

    eval_sid = _create_session(client, task=study.TASK_EVALUATION, annotator="ann-3")["session_id"]
    served = client.get(f"/api/sessions/{eval_sid}/next").json()
    assert served["document_id"] == "d1"
    summaries = served["summaries"]
    assert len(summaries) == 3
    texts = {s["text"] for s in summaries}
    assert {"with-int summary", "control summary", REPLIES[0]} == texts

    for item in summaries:
        response = client.post(
            f"/api/sessions/{eval_sid}/evaluate",
            json={
                "key": item["key"],
                "rating": 6,
                "issues": [False] * 7,
                "verdict": "accept",
            },
        )
        assert response.status_code == 200, response.text
    stats = client.get("/api/stats").json()
    for variant in (
        study.VARIANT_DRAFT,
        study.VARIANT_NO_INTERACTION,
        study.VARIANT_WITH_INTERACTION,
    ):
        assert stats["variants"][variant]["n_evaluations"] == 1
        assert stats["variants"][variant]["avg_rating"] == 6.0
    # d1 fully evaluated: next moves on
    assert client.get(f"/api/sessions/{eval_sid}/next").json()["document_id"] == "d2"


def test_evaluate_validation_names_field(client):
    sid = _create_session(client, task=study.TASK_EVALUATION)["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    response = client.post(
        f"/api/sessions/{sid}/evaluate",
        json={"variant": "draft", "rating": 8, "issues": [False] * 7, "verdict": "accept"},
    )
    assert response.status_code == 400
    assert "rating" in response.json()["error"]


def test_evaluate_requires_evaluation_task(client):
    sid = _create_session(client, task=study.TASK_WITH)["session_id"]
    client.get(f"/api/sessions/{sid}/next")
    response = client.post(
        f"/api/sessions/{sid}/evaluate",
        json={"variant": "draft", "rating": 5, "issues": [False] * 7, "verdict": "accept"},
    )
    assert response.status_code == 400


def test_backend_failure_502_and_timeout_504(client):
    sid = _create_session(client)["session_id"]
    draft = client.get(f"/api/sessions/{sid}/next").json()["draft_summary"]
    service = client.app.state.service

    class Exploding:
        def generate(self, request):
            raise BackendError("kaboom")

    class TimingOut:
        def generate(self, request):
            raise BackendTimeoutError("too slow")

    original = service.engine.backend
    try:
        service.engine.backend = Exploding()
        response = client.post(
            f"/api/sessions/{sid}/suggest",
            json={"old_summary": draft, "new_summary": draft + " y"},
        )
        assert response.status_code == 502
        service.engine.backend = TimingOut()
        response = client.post(
            f"/api/sessions/{sid}/suggest",
            json={"old_summary": draft, "new_summary": draft + " y"},
        )
        assert response.status_code == 504
    finally:
        service.engine.backend = original


def test_static_portal_serving(tmp_path, corpus_path, replies_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>portal</body></html>")
    config = ServiceConfig(
        corpus=str(corpus_path),
        backend=f"scripted:{replies_path}",
        log=str(tmp_path / "ev.jsonl"),
        static_dir=str(static),
    )
    with TestClient(create_app(config)) as client:
        response = client.get("/")
        assert response.status_code == 200
        assert "portal" in response.text
        # api routes still win
        assert client.get("/api/stats").status_code == 200


def test_config_file_and_env_overrides(tmp_path, corpus_path, monkeypatch):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "corpus": str(corpus_path),
                "backend": "heuristic",
                "log": str(tmp_path / "ev.jsonl"),
                "k": 3,
            }
        )
    )
    monkeypatch.setenv("REVISE_BACKEND", "random:7")
    monkeypatch.setenv("REVISE_K", "5")
    config = ServiceConfig.from_file(cfg_path)
    assert config.backend == "random:7"
    assert config.k == 5
    config.validate()


def test_config_rejects_unknown_keys(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"corpsu": "oops"}))
    from revise.service import ConfigError

    with pytest.raises(ConfigError, match="corpsu"):
        ServiceConfig.from_file(cfg_path)


def test_drafts_cached_per_document(client):
    service = client.app.state.service
    assert set(service.drafts) == {"d1", "d2", "d3"}
    assert all(isinstance(v, str) and v for v in service.drafts.values())
