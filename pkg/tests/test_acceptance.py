"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
with its runtime (run with ``pytest tests/test_acceptance.py -v -s``)."""

from __future__ import annotations

import itertools
import json
import math
import random
import threading
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

import pytest

GOLDEN_TEMPLATES = Path(__file__).parent / "data" / "golden_templates.json"


@contextmanager
def criterion(number: int, description: str, budget_s: float):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - started
        print(f"[FAIL] C{number:02d} {description} ({elapsed:.2f}s)")
        raise
    elapsed = time.perf_counter() - started
    print(f"[PASS] C{number:02d} {description} ({elapsed:.2f}s)")
    assert elapsed < budget_s, f"criterion {number} exceeded {budget_s}s ({elapsed:.2f}s)"


def test_c01_fim_round_trip():
    from revise.fim import splice, split_summary

    with criterion(1, "infill split/splice round trip, 1000 random pairs", 1.0):
        rng = random.Random(101)
        for _ in range(1000):
            summary = tuple(rng.randrange(5, 200) for _ in range(rng.randrange(0, 40)))
            i = rng.randint(0, len(summary))
            j = rng.randint(i, len(summary))
            split = split_summary(summary, i, j)
            assert splice(split.prefix, split.middle, split.suffix) == summary


def test_c02_template_exactness_golden_files():
    from revise.fim import (
        build_begin_example,
        build_end_example,
        build_middle_example,
        split_summary,
    )
    from revise.tokenization import Vocabulary

    with criterion(2, "encoder/decoder templates match hand-written goldens byte-exact", 1.0):
        vocab = Vocabulary()
        ids = {w: vocab.add(w) for w in "pmsdabc"}
        surfaces = lambda seq: [vocab.surface_of(t) for t in seq]
        cases = {
            "middle": build_middle_example(
                split_summary((ids["p"], ids["m"], ids["s"]), 1, 2), (ids["d"],)
            ),
            "middle_empty_context": build_middle_example(
                split_summary((), 0, 0), (ids["d"],)
            ),
            "end": build_end_example((ids["a"], ids["b"]), (ids["c"],), (ids["d"],)),
            "end_empty_prefix": build_end_example((), (ids["c"],), (ids["d"],)),
            "begin": build_begin_example((ids["a"],), (ids["b"], ids["c"]), (ids["d"],)),
            "begin_empty_suffix": build_begin_example((ids["a"],), (), (ids["d"],)),
        }
        produced = {
            name: {
                "encoder": surfaces(example.encoder_input),
                "decoder": surfaces(example.decoder_target),
            }
            for name, example in cases.items()
        }
        rendered = (json.dumps(produced, indent=2, sort_keys=True) + "\n").encode("utf-8")
        assert rendered == GOLDEN_TEMPLATES.read_bytes(), "golden template diff"


def test_c03_gamma_mixture():
    from revise.datagen import GenConfig, record_rng, sample_split
    from revise.fim import FimMode

    with criterion(3, "corner-case mixture at 3-sigma for N=10,000; degenerate gammas exact", 5.0):
        n = 10_000
        corner = sum(
            sample_split(10, GenConfig(gamma=0.5, seed=2024), record_rng(2024, idx)).mode
            is not FimMode.MIDDLE
            for idx in range(n)
        )
        assert 0.485 <= corner / n <= 0.515, corner / n
        for idx in range(2000):
            assert (
                sample_split(10, GenConfig(gamma=0.0, seed=1), record_rng(1, idx)).mode
                is FimMode.MIDDLE
            )
            assert (
                sample_split(10, GenConfig(gamma=1.0, seed=1), record_rng(1, idx)).mode
                is not FimMode.MIDDLE
            )


def test_c04_rouge_oracle_equivalence():
    from revise.metrics import rouge_n
    from revise.tokenization import Vocabulary, tokenize

    with criterion(4, "ROUGE vs brute-force clipped n-gram oracle, 200 pairs", 1.0):
        def oracle(cand, ref, n):
            grams = lambda seq: Counter(
                tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)
            )
            cg, rg = grams(cand), grams(ref)
            match = sum(min(c, rg[g]) for g, c in cg.items())
            ct, rt = max(len(cand) - n + 1, 0), max(len(ref) - n + 1, 0)
            p = match / ct if ct else 0.0
            r = match / rt if rt else 0.0
            return p, r, (2 * p * r / (p + r) if p + r else 0.0)

        rng = random.Random(404)
        for _ in range(200):
            cand = tuple(rng.randrange(5, 10) for _ in range(rng.randrange(0, 21)))
            ref = tuple(rng.randrange(5, 10) for _ in range(rng.randrange(0, 21)))
            for n in (1, 2):
                score = rouge_n(cand, ref, n)
                p, r, f1 = oracle(cand, ref, n)
                assert abs(score.precision - p) < 1e-9
                assert abs(score.recall - r) < 1e-9
                assert abs(score.f1 - f1) < 1e-9

        vocab = Vocabulary()
        score = rouge_n(
            tokenize("the cat sat on the mat", vocab),
            tokenize("the cat lay on the mat", vocab),
            1,
        )
        assert abs(score.f1 - 5 / 6) < 1e-12


def test_c05_likelihood_correctness():
    from revise.metrics import CoherenceConfig, horizon_loglikelihood
    from revise.scorers import NGramScorer, UniformScorer

    with criterion(5, "horizon likelihood: closed form, additivity, trigram hand counts", 1.0):
        for vocab_size in (2, 50, 1000):
            scorer = UniformScorer(vocab_size)
            for horizon, length in ((1, 5), (5, 5), (10, 3), (7, 7)):
                cont = tuple(range(5, 5 + length))
                value = horizon_loglikelihood(
                    (20, 21), cont, scorer, CoherenceConfig(horizon)
                )
                assert abs(value - (-min(horizon, length) * math.log(vocab_size))) < 1e-12

        class SeededScorer:
            def logprob(self, context, token):
                return -random.Random(f"{context}|{token}").uniform(0.01, 4.0)

        scorer = SeededScorer()
        rng = random.Random(55)
        for _ in range(100):
            horizon = 8
            context = tuple(rng.randrange(5, 12) for _ in range(rng.randrange(0, 4)))
            a = tuple(rng.randrange(5, 12) for _ in range(rng.randrange(1, horizon)))
            b = tuple(rng.randrange(5, 12) for _ in range(rng.randrange(1, 6)))
            whole = horizon_loglikelihood(context, a + b, scorer, CoherenceConfig(horizon))
            parts = horizon_loglikelihood(
                context, a, scorer, CoherenceConfig(horizon)
            ) + horizon_loglikelihood(
                context + a, b, scorer, CoherenceConfig(horizon - len(a))
            )
            assert abs(whole - parts) < 1e-12

        # frozen from the independent counting oracle over this 3-sentence corpus
        corpus = [
            ("the", "cat", "sat", "."),
            ("the", "cat", "ran", "."),
            ("the", "dog", "sat", "."),
        ]
        trigram = NGramScorer(corpus)
        assert trigram.vocab_size == 7
        assert abs(trigram.prob(("the", "cat"), "sat") - 0.3267230485078254) < 1e-15
        value = horizon_loglikelihood(
            ("the", "cat"), ("sat", "."), trigram, CoherenceConfig(10)
        )
        assert abs(value - (-1.7050713467451322)) < 1e-12


def test_c06_fill_region_exhaustive_oracle():
    from revise.editregion import EditEvent, NoEditError, detect_fill_region

    with criterion(6, "fill-region detector vs exhaustive oracle, all length<=6 pairs", 30.0):
        def oracle_decompose(old, new):
            best = None
            bound = min(len(old), len(new))
            for p in range(bound + 1):
                if old[:p] != new[:p]:
                    continue
                for s in range(bound - p + 1):
                    if s and old[len(old) - s :] != new[len(new) - s :]:
                        continue
                    if best is None or (p, s) > best:
                        best = (p, s)
            return best

        symbols = (10, 11, 12)
        pool = [
            tuple(p)
            for length in range(7)
            for p in itertools.product(symbols, repeat=length)
        ]
        assert len(pool) == 1093
        checked = 0
        for old in pool:
            n_old = len(old)
            for new in pool:
                if old == new:
                    with pytest.raises(NoEditError):
                        detect_fill_region(EditEvent(old, new))
                    continue
                region = detect_fill_region(EditEvent(old, new))
                p, s = oracle_decompose(old, new)
                assert len(region.prefix) == p and len(region.suffix) == s
                assert region.prefix + region.human_start + region.suffix == new
                assert region.prefix + region.replaced + region.suffix == old
                checked += 1
        assert checked == 1093 * 1093 - 1093


def test_c07_end_to_end_suggestion_cycle():
    from revise.backends import ScriptedBackend
    from revise.editregion import EditEvent
    from revise.fim import splice
    from revise.suggest import apply_choice, suggest
    from revise.tokenization import Vocabulary, tokenize

    with criterion(7, "scripted suggestion cycle: distinct, forced start, previews, choice", 1.0):
        vocab = Vocabulary()
        document = tokenize("alpha beta . gamma delta .", vocab)
        backend = ScriptedBackend(
            [tokenize(t, vocab) for t in ("one fix", "two fix", "three fix")]
        )
        old = tokenize("alpha keeps the start and the end stays", vocab)
        new = tokenize("alpha keeps Business practice  and the end stays", vocab)
        result = suggest(EditEvent(old, new), document, backend, k=3)
        hs = tokenize("Business practice", vocab)
        assert len(result.suggestions) == 3
        assert len({s.tokens for s in result.suggestions}) == 3
        for s in result.suggestions:
            assert s.tokens[: len(hs)] == hs
        for preview, s in zip(result.previews, result.suggestions):
            assert preview == splice(result.region.prefix, s.tokens, result.region.suffix)
        for index in range(3):
            assert apply_choice(result, index) == result.previews[index]


def test_c08_heuristic_beats_random(mini_corpus):
    from revise.metrics import eval_items_from_corpus, evaluate_infill
    from revise.service import backend_from_spec
    from revise.tokenization import Vocabulary

    with criterion(8, "heuristic beats random baseline by >= 0.05 ROUGE-1 F1", 10.0):
        f1 = {}
        for spec in ("heuristic", "random"):
            vocab = Vocabulary()
            backend = backend_from_spec(spec, vocab)
            items = eval_items_from_corpus(mini_corpus, vocab, "middle", 7)
            report = evaluate_infill(items, backend, "middle")
            assert report.n_items == 50 and report.n_failed == 0
            f1[spec] = report.rouge1.f1
        assert f1["heuristic"] > f1["random"]
        assert f1["heuristic"] - f1["random"] >= 0.05, f1


def test_c09_study_aggregates_and_assignment(tmp_path, capsys):
    from revise import study
    from revise.cli import main

    with criterion(9, "study-table aggregates exact; assignment constraints hold", 1.0):
        log = study.EventLog(tmp_path / "table3.jsonl")
        log.append(
            study.Session(
                id="sw", annotator_id="a1", task=study.TASK_WITHOUT, document_ids=()
            )
        )
        log.append(
            study.Session(id="si", annotator_id="a2", task=study.TASK_WITH, document_ids=())
        )
        log.append(
            study.Session(
                id="ev", annotator_id="a3", task=study.TASK_EVALUATION, document_ids=()
            )
        )
        for sid, doc, ms in (
            ("sw", "w1", 900_000),
            ("sw", "w2", 906_000),
            ("si", "i1", 645_000),
            ("si", "i2", 646_000),
        ):
            log.append(
                study.AnnotationRecord(
                    session_id=sid,
                    document_id=doc,
                    draft_summary="",
                    final_summary="done",
                    elapsed_ms=ms,
                )
            )
        plans = (
            (study.VARIANT_DRAFT, [3] * 1 + [4] * 99),
            (study.VARIANT_NO_INTERACTION, [4] * 39 + [5] * 61),
            (study.VARIANT_WITH_INTERACTION, [5] * 48 + [6] * 52),
        )
        for variant, ratings in plans:
            for idx, rating in enumerate(ratings):
                log.append(
                    study.EvaluationRecord(
                        session_id="ev",
                        document_id=f"{variant}-{idx}",
                        summary_variant=variant,
                        rating=rating,
                        issues=(False,) * 7,
                        verdict=study.VERDICT_ACCEPT,
                    )
                )
        capsys.readouterr()
        assert main(["stats", "--log", str(log.path)]) == 0
        report = json.loads(capsys.readouterr().out)
        variants = report["variants"]
        assert variants[study.VARIANT_NO_INTERACTION]["avg_time_s"] == 903.0
        assert variants[study.VARIANT_WITH_INTERACTION]["avg_time_s"] == 645.5
        assert variants[study.VARIANT_DRAFT]["avg_rating"] == 3.99
        assert variants[study.VARIANT_NO_INTERACTION]["avg_rating"] == 4.61
        assert variants[study.VARIANT_WITH_INTERACTION]["avg_rating"] == 5.52

        docs = [f"doc-{i}" for i in range(120)]
        assignment = study.assign_documents(docs, ["a1", "a2", "a3"], 40, seed=11)
        study.check_assignment(assignment)
        for annotator in ("a1", "a2", "a3"):
            tasks = assignment.for_annotator(annotator)
            assert all(len(tasks[task]) == 40 for task in tasks)


def test_c10_service_integration_live(tmp_path):
    import requests
    import uvicorn

    from revise import study
    from revise.service import ServiceConfig, create_app

    with criterion(10, "live-server walkthrough: suggest/choose/save/stats, 409, latest-wins", 5.0):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text(
            json.dumps(
                {
                    "id": "d1",
                    "document": "alpha beta gamma . delta epsilon .",
                    "summary": "alpha beta .",
                }
            )
            + "\n",
            encoding="utf-8",
        )
        replies = tmp_path / "replies.json"
        replies.write_text(json.dumps(["first words here", "second pick", "third fix"]))
        log_path = tmp_path / "events.jsonl"
        config = ServiceConfig(
            corpus=str(corpus),
            backend=f"scripted:{replies}",
            log=str(log_path),
        )
        app = create_app(config)
        server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        )
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.time() + 4
        while not server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = server.servers[0].sockets[0].getsockname()[1]
        base = f"http://127.0.0.1:{port}"
        try:
            sid = requests.post(
                f"{base}/api/sessions",
                json={"annotator_id": "ann-1", "task": study.TASK_WITH},
                timeout=5,
            ).json()["session_id"]
            served = requests.get(f"{base}/api/sessions/{sid}/next", timeout=5).json()
            draft = served["draft_summary"]

            conflict = requests.post(
                f"{base}/api/sessions/{sid}/suggest",
                json={"old_summary": draft, "new_summary": draft},
                timeout=5,
            )
            assert conflict.status_code == 409

            suggestion = requests.post(
                f"{base}/api/sessions/{sid}/suggest",
                json={"old_summary": draft, "new_summary": draft + " tail"},
                timeout=5,
            ).json()
            assert len(suggestion["suggestions"]) == 3

            chosen = requests.post(
                f"{base}/api/sessions/{sid}/choose", json={"index": 1}, timeout=5
            ).json()
            assert chosen["summary"] == suggestion["previews"][1]

            first = requests.post(
                f"{base}/api/sessions/{sid}/save",
                json={"final_summary": "v1"},
                timeout=5,
            )
            assert first.status_code == 200
            second = requests.post(
                f"{base}/api/sessions/{sid}/save",
                json={"final_summary": "v2"},
                timeout=5,
            )
            assert second.status_code == 200

            stats = requests.get(f"{base}/api/stats", timeout=5).json()
            variant = stats["variants"][study.VARIANT_WITH_INTERACTION]
            assert variant["n_annotations"] == 1

            mat = study.materialize(study.EventLog(log_path).records())
            assert mat.annotations[(sid, "d1")].final_summary == "v2"
        finally:
            server.should_exit = True
            thread.join(timeout=5)
