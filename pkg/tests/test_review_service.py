import json
import os
import signal
import socket
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import date
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from conftest import make_dataset, make_record
from reclink.blocking import CandidatePairSet
from reclink.errors import DataError
from reclink.fellegi_sunter import ClassificationThresholds, default_comparators
from reclink.review import ReviewQueue, build_queue_entries, create_app
from reclink.review.service import read_queue_file, write_queue_file

BAND = ClassificationThresholds(0.65, 1.0)


def entry(left_id, right_id, score):
    def rec(record_id):
        return {
            "record_id": record_id, "first_name": "JOHN", "middle_name": None,
            "last_name": "DOE", "birth_date": "1970-01-01", "sex": "M",
            "ssn": None, "address": None,
        }

    return {
        "left": rec(left_id), "right": rec(right_id),
        "overall_score": score,
        "outcomes": {"first_name": "agree", "last_name": "agree"},
    }


def fresh_queue(tmp_path, entries=None, lease_seconds=600.0):
    queue = ReviewQueue(band=BAND, log_path=tmp_path / "decisions.log.jsonl",
                        lease_seconds=lease_seconds)
    if entries is not None:
        queue.load_entries(entries)
    return queue


THREE = [entry("a1", "b1", 0.70), entry("a2", "b2", 0.90),
         entry("a3", "b3", 0.825)]


class TestQueueLoading:
    def test_three_escalated_three_pending(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        assert queue.stats() == {"pending": 3, "decided": 0, "skipped": 0}

    def test_reload_idempotent(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        added = queue.load_entries(THREE)
        assert added == 0
        assert queue.stats()["pending"] == 3

    def test_duplicate_in_one_load_rejected(self, tmp_path):
        queue = fresh_queue(tmp_path)
        with pytest.raises(DataError, match="duplicate"):
            queue.load_entries([entry("a1", "b1", 0.7), entry("a1", "b1", 0.8)])

    def test_serving_order_most_ambiguous_first(self, tmp_path):
        # band (0.65, 1.0) has midpoint 0.825: distances 0, 0.075, 0.125.
        queue = fresh_queue(tmp_path, THREE)
        served = [queue.get_next(f"r{i}").overall_score for i in range(3)]
        assert served == [0.825, 0.90, 0.70]

    def test_build_entries_from_escalated_pairs(self):
        a = make_dataset([make_record("a1", "A", first="ALPHA", middle=None,
                                      ssn=None, address=None)], "A")
        b = make_dataset([make_record("b1", "B", first="OMEGA", middle=None,
                                      ssn=None, address=None)], "B")
        escalated = CandidatePairSet()
        escalated.add("a1", "b1", "exact_birth_date")
        entries = build_queue_entries(escalated, a, b, default_comparators())
        assert len(entries) == 1
        assert entries[0]["outcomes"]["first_name"] == "disagree"
        assert entries[0]["outcomes"]["ssn"] == "missing"
        assert 0.65 < entries[0]["overall_score"] < 1.0
        assert entries[0]["left"]["birth_date"] == "1970-01-01"


class TestGetNext:
    def test_single_item_then_empty(self, tmp_path):
        queue = fresh_queue(tmp_path, [entry("a1", "b1", 0.8)])
        item = queue.get_next("r1")
        assert item.item_id == "a1|b1"
        queue.submit(item.item_id, "Match", "r1")
        assert queue.get_next("r1") is None

    def test_lease_excludes_other_reviewers(self, tmp_path):
        queue = fresh_queue(tmp_path, [entry("a1", "b1", 0.8),
                                       entry("a2", "b2", 0.9)])
        first = queue.get_next("r1")
        second = queue.get_next("r2")
        assert first.item_id != second.item_id

    def test_same_reviewer_gets_same_leased_item(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        assert queue.get_next("r1").item_id == queue.get_next("r1").item_id

    def test_concurrent_reviewers_distinct_items(self, tmp_path):
        queue = fresh_queue(tmp_path, [entry(f"a{i}", f"b{i}", 0.8)
                                       for i in range(8)])
        with ThreadPoolExecutor(max_workers=8) as pool:
            items = list(pool.map(queue.get_next, [f"r{i}" for i in range(8)]))
        ids = [item.item_id for item in items]
        assert len(set(ids)) == 8

    def test_expired_lease_returns_item(self, tmp_path):
        queue = fresh_queue(tmp_path, [entry("a1", "b1", 0.8)],
                            lease_seconds=0.05)
        queue.get_next("r1")
        time.sleep(0.1)
        assert queue.get_next("r2") is not None


class TestSubmit:
    def test_ack_appends_log_line(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        queue.submit("a1|b1", "Match", "r1")
        lines = (tmp_path / "decisions.log.jsonl").read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["verdict"] == "Match"

    def test_last_write_wins_with_history(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        queue.submit("a1|b1", "Match", "r1")
        queue.submit("a1|b1", "NonMatch", "r2")
        lines = (tmp_path / "decisions.log.jsonl").read_text().splitlines()
        assert len(lines) == 2
        item = queue.get_item("a1|b1")
        assert item.verdict == "NonMatch"
        assert len(item.history) == 2

    def test_unsure_requeues_at_tail(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        first = queue.get_next("r1")        # 0.825, most ambiguous
        queue.submit(first.item_id, "Unsure", "r1")
        order = []
        for i in range(3):
            item = queue.get_next(f"other{i}")
            order.append(item.item_id)
        assert order[-1] == first.item_id

    def test_unknown_item(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        with pytest.raises(KeyError):
            queue.submit("nope", "Match", "r1")

    def test_bad_verdict(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        with pytest.raises(ValueError):
            queue.submit("a1|b1", "Perhaps", "r1")

    def test_m_u_n_session_stats(self, tmp_path):
        # Match, Unsure, NonMatch: the Unsure item is requeued, so two are
        # decided and one still pending (sub-counted as skipped).
        queue = fresh_queue(tmp_path, THREE)
        for verdict in ("Match", "Unsure", "NonMatch"):
            item = queue.get_next("r1")
            queue.submit(item.item_id, verdict, "r1")
        stats = queue.stats()
        assert stats["decided"] == 2
        assert stats["pending"] == 1
        assert stats["skipped"] == 1

    def test_conservation(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        queue.submit("a1|b1", "Match", "r1")
        queue.submit("a2|b2", "Unsure", "r1")
        stats = queue.stats()
        assert stats["pending"] + stats["decided"] == 3


class TestReplay:
    def test_replay_reproduces_state(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        queue.submit("a1|b1", "Match", "r1")
        queue.submit("a2|b2", "Unsure", "r1")
        queue.submit("a3|b3", "NonMatch", "r2")
        queue.submit("a2|b2", "Match", "r2")
        queue.close()

        rebuilt = fresh_queue(tmp_path, THREE)
        replayed = rebuilt.replay_log()
        assert replayed == 4
        assert rebuilt.stats() == queue.stats()
        for item_id in ("a1|b1", "a2|b2", "a3|b3"):
            assert rebuilt.get_item(item_id).verdict == \
                queue.get_item(item_id).verdict
        assert rebuilt.export_rows() == queue.export_rows()


class TestHttpApi:
    @pytest.fixture
    def client(self, tmp_path):
        queue = fresh_queue(tmp_path, THREE)
        return TestClient(create_app(queue))

    def test_next_and_decide_flow(self, client):
        item = client.get("/api/queue/next?reviewer=r1").json()["item"]
        assert item["item_id"] == "a3|b3"  # score 0.825 at the midpoint
        resp = client.post("/api/decisions", json={
            "item_id": item["item_id"], "verdict": "Match",
            "reviewer_id": "r1",
        })
        assert resp.status_code == 200
        assert resp.json()["status"] == "Decided"
        stats = client.get("/api/stats").json()
        assert stats == {"pending": 2, "decided": 1, "skipped": 0}

    def test_empty_queue_marker(self, client):
        for _ in range(3):
            item = client.get("/api/queue/next?reviewer=r1").json()["item"]
            client.post("/api/decisions", json={
                "item_id": item["item_id"], "verdict": "NonMatch",
                "reviewer_id": "r1",
            })
        assert client.get("/api/queue/next?reviewer=r1").json()["item"] is None

    def test_unknown_item_404(self, client):
        resp = client.post("/api/decisions", json={
            "item_id": "ghost", "verdict": "Match", "reviewer_id": "r1",
        })
        assert resp.status_code == 404

    def test_bad_verdict_400(self, client):
        resp = client.post("/api/decisions", json={
            "item_id": "a1|b1", "verdict": "Perhaps", "reviewer_id": "r1",
        })
        assert resp.status_code == 400

    def test_get_item(self, client):
        resp = client.get("/api/items/a1|b1")
        assert resp.status_code == 200
        assert resp.json()["overall_score"] == 0.70
        assert client.get("/api/items/none").status_code == 404

    def test_export_csv(self, client):
        client.post("/api/decisions", json={
            "item_id": "a1|b1", "verdict": "Match", "reviewer_id": "r1",
        })
        client.post("/api/decisions", json={
            "item_id": "a2|b2", "verdict": "Unsure", "reviewer_id": "r1",
        })
        body = client.get("/api/export?format=csv").text
        lines = body.strip().splitlines()
        assert lines[0] == "item_id,left_id,right_id,verdict,reviewer_id,timestamp"
        assert len(lines) == 2 and "a1|b1" in lines[1]
        body2 = client.get("/api/export?format=csv&include_unsure=true").text
        assert len(body2.strip().splitlines()) == 3


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def wait_for_server(port, timeout=15.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            httpx.get(f"http://127.0.0.1:{port}/api/stats", timeout=1.0)
            return
        except httpx.HTTPError:
            time.sleep(0.1)
    raise RuntimeError("server did not come up")


def spawn_server(queue_path, log_path, port):
    return subprocess.Popen(
        [sys.executable, "-m", "reclink.cli", "review-serve",
         "--queue", str(queue_path), "--log", str(log_path),
         "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )


@pytest.mark.slow
def test_kill_and_restart_loses_no_acknowledged_decision(tmp_path):
    queue_path = tmp_path / "queue.jsonl"
    log_path = tmp_path / "decisions.log.jsonl"
    write_queue_file(THREE, queue_path)
    assert len(read_queue_file(queue_path)) == 3

    port = free_port()
    proc = spawn_server(queue_path, log_path, port)
    try:
        wait_for_server(port)
        base = f"http://127.0.0.1:{port}"
        resp = httpx.post(f"{base}/api/decisions", json={
            "item_id": "a3|b3", "verdict": "Match", "reviewer_id": "r1",
        }, timeout=5.0)
        assert resp.status_code == 200  # acknowledged
    finally:
        os.kill(proc.pid, signal.SIGKILL)
        proc.wait()

    port2 = free_port()
    proc2 = spawn_server(queue_path, log_path, port2)
    try:
        wait_for_server(port2)
        base = f"http://127.0.0.1:{port2}"
        stats = httpx.get(f"{base}/api/stats", timeout=5.0).json()
        assert stats == {"pending": 2, "decided": 1, "skipped": 0}
        item = httpx.get(f"{base}/api/items/a3|b3", timeout=5.0).json()
        assert item["status"] == "Decided"
    finally:
        proc2.terminate()
        proc2.wait()
