"""HTTP review service for the escalated ambiguity-band queue.

State lives in memory and is rebuilt on startup by loading the queue file
and replaying the append-only JSON Lines decision log; a decision is
fsync'd to the log before it is acknowledged, so an acknowledged decision
survives a process kill. Most-ambiguous pairs (closest to the band
midpoint) are served first. An "Unsure" verdict marks the item skipped and
re-enters it at the queue tail; stats report it as still pending since it
awaits adjudication.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import DataError
from ..fellegi_sunter import ClassificationThresholds, score_pair
from ..records import FIELDS, RecordPair

PENDING = "Pending"
DECIDED = "Decided"
SKIPPED = "Skipped"

VERDICTS = ("Match", "NonMatch", "Unsure")

DEFAULT_LEASE_SECONDS = 600.0


def _record_to_dict(record) -> dict:
    out = {"record_id": record.record_id}
    for name in FIELDS:
        value = record.field(name)
        if isinstance(value, date):
            value = value.isoformat()
        out[name] = value
    return out


def build_queue_entries(escalated, a, b, fs_config) -> list[dict]:
    """Materialize escalated pairs into queue-file entries.

    Each entry carries both records' field values, the overall score and
    the per-field comparator outcomes so the review UI never recomputes
    similarity itself.
    """
    lookup_a = a.by_id()
    lookup_b = b.by_id()
    entries = []
    for cand in escalated:
        pair = RecordPair(lookup_a[cand.left_id], lookup_b[cand.right_id])
        scored = score_pair(pair, fs_config)
        entries.append({
            "left": _record_to_dict(pair.left),
            "right": _record_to_dict(pair.right),
            "overall_score": scored.overall_score,
            "outcomes": {c.field: o for c, o in zip(fs_config, scored.vector)},
        })
    return entries


def write_queue_file(entries, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def read_queue_file(path) -> list[dict]:
    entries = []
    with Path(path).open(encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"invalid queue line: {exc}",
                                    path=str(path), row=i) from None
    return entries


@dataclass
class ReviewItem:
    item_id: str
    left: dict
    right: dict
    overall_score: float
    outcomes: dict
    status: str = PENDING
    verdict: str | None = None
    reviewer_id: str | None = None
    decided_at: str | None = None
    history: list[dict] = field(default_factory=list)


class ReviewQueue:
    """In-memory queue state with a write-ahead JSONL decision log."""

    def __init__(self, band: ClassificationThresholds,
                 log_path: str | Path,
                 lease_seconds: float = DEFAULT_LEASE_SECONDS):
        self.band = band
        self.log_path = Path(log_path)
        self.lease_seconds = lease_seconds
        self._items: dict[str, ReviewItem] = {}
        self._requeued: list[str] = []       # Skipped items, tail order
        self._leases: dict[str, tuple[str, float]] = {}
        self._lock = threading.Lock()
        self._log_fh = None

    # -- loading ---------------------------------------------------------

    def load_entries(self, entries) -> int:
        """Create one Pending item per pair; reloading the same pair id is
        a no-op, a conflicting duplicate within one load is rejected."""
        seen_this_load: set[str] = set()
        added = 0
        for entry in entries:
            item_id = f"{entry['left']['record_id']}|{entry['right']['record_id']}"
            if item_id in seen_this_load:
                raise DataError(f"duplicate pair id {item_id} in queue input")
            seen_this_load.add(item_id)
            if item_id in self._items:
                continue
            self._items[item_id] = ReviewItem(
                item_id=item_id,
                left=entry["left"],
                right=entry["right"],
                overall_score=float(entry["overall_score"]),
                outcomes=dict(entry.get("outcomes", {})),
            )
            added += 1
        return added

    def replay_log(self) -> int:
        """Fold the decision log back into item state (idempotent)."""
        if not self.log_path.exists():
            return 0
        count = 0
        with self.log_path.open(encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"corrupt log line: {exc}",
                                    path=str(self.log_path), row=i) from None
                item = self._items.get(rec["item_id"])
                if item is None:
                    continue
                self._apply(item, rec["verdict"], rec["reviewer_id"],
                            rec["timestamp"])
                count += 1
        return count

    # -- serving ---------------------------------------------------------

    def _priority(self, item: ReviewItem) -> float:
        return abs(item.overall_score - self.band.midpoint)

    def _servable(self) -> list[ReviewItem]:
        pending = sorted(
            (it for it in self._items.values() if it.status == PENDING),
            key=lambda it: (self._priority(it), it.item_id),
        )
        requeued = [self._items[iid] for iid in self._requeued
                    if self._items[iid].status == SKIPPED]
        return pending + requeued

    def get_next(self, reviewer_id: str) -> ReviewItem | None:
        with self._lock:
            now = time.monotonic()
            self._leases = {
                iid: lease for iid, lease in self._leases.items()
                if lease[1] > now
            }
            for item in self._servable():
                lease = self._leases.get(item.item_id)
                if lease is not None and lease[0] != reviewer_id:
                    continue
                self._leases[item.item_id] = (
                    reviewer_id, now + self.lease_seconds
                )
                return item
            return None

    # -- deciding --------------------------------------------------------

    def _apply(self, item: ReviewItem, verdict: str, reviewer_id: str,
               timestamp: str) -> None:
        item.history.append({
            "verdict": verdict, "reviewer_id": reviewer_id,
            "timestamp": timestamp,
        })
        item.verdict = verdict
        item.reviewer_id = reviewer_id
        item.decided_at = timestamp
        if item.item_id in self._requeued:
            self._requeued.remove(item.item_id)
        if verdict == "Unsure":
            item.status = SKIPPED
            self._requeued.append(item.item_id)
        else:
            item.status = DECIDED

    def submit(self, item_id: str, verdict: str, reviewer_id: str) -> ReviewItem:
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        with self._lock:
            item = self._items.get(item_id)
            if item is None:
                raise KeyError(item_id)
            if item.status == DECIDED and verdict == "Unsure":
                raise ValueError("cannot mark a decided item Unsure")
            timestamp = datetime.now(timezone.utc).isoformat()
            # Write-ahead: the log line is durable before state changes or
            # the caller sees an acknowledgment.
            if self._log_fh is None:
                self.log_path.parent.mkdir(parents=True, exist_ok=True)
                self._log_fh = self.log_path.open("a", encoding="utf-8")
            self._log_fh.write(json.dumps({
                "item_id": item_id, "verdict": verdict,
                "reviewer_id": reviewer_id, "timestamp": timestamp,
            }, sort_keys=True) + "\n")
            self._log_fh.flush()
            os.fsync(self._log_fh.fileno())
            self._apply(item, verdict, reviewer_id, timestamp)
            self._leases.pop(item_id, None)
            return item

    # -- reporting -------------------------------------------------------

    def stats(self) -> dict:
        """Counts by state. Skipped items await adjudication, so they are
        included in pending and also sub-counted under skipped."""
        decided = sum(1 for it in self._items.values() if it.status == DECIDED)
        skipped = sum(1 for it in self._items.values() if it.status == SKIPPED)
        return {
            "pending": len(self._items) - decided,
            "decided": decided,
            "skipped": skipped,
        }

    def get_item(self, item_id: str) -> ReviewItem | None:
        return self._items.get(item_id)

    def export_rows(self, include_unsure: bool = False) -> list[dict]:
        rows = []
        for item_id in sorted(self._items):
            item = self._items[item_id]
            if item.verdict is None:
                continue
            if item.verdict == "Unsure" and not include_unsure:
                continue
            rows.append({
                "item_id": item.item_id,
                "left_id": item.left["record_id"],
                "right_id": item.right["record_id"],
                "verdict": item.verdict,
                "reviewer_id": item.reviewer_id,
                "timestamp": item.decided_at,
            })
        return rows

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None


def _item_payload(item: ReviewItem) -> dict:
    return {
        "item_id": item.item_id,
        "left": item.left,
        "right": item.right,
        "overall_score": item.overall_score,
        "outcomes": item.outcomes,
        "status": item.status,
    }


class DecisionIn(BaseModel):
    item_id: str
    verdict: str
    reviewer_id: str


def create_app(queue: ReviewQueue, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="reclink review service")

    @app.get("/api/queue/next")
    def queue_next(reviewer: str = "anonymous"):
        item = queue.get_next(reviewer)
        return {"item": None if item is None else _item_payload(item)}

    @app.post("/api/decisions")
    def post_decision(decision: DecisionIn):
        try:
            item = queue.submit(decision.item_id, decision.verdict,
                                decision.reviewer_id)
        except KeyError:
            return JSONResponse(
                {"error": f"unknown item {decision.item_id}"}, status_code=404
            )
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {"ok": True, "item_id": item.item_id, "status": item.status}

    @app.get("/api/items/{item_id}")
    def get_item(item_id: str):
        item = queue.get_item(item_id)
        if item is None:
            return JSONResponse({"error": f"unknown item {item_id}"},
                                status_code=404)
        payload = _item_payload(item)
        payload["history"] = item.history
        return payload

    @app.get("/api/stats")
    def get_stats():
        return queue.stats()

    @app.get("/api/export")
    def export(format: str = "csv", include_unsure: bool = False):
        rows = queue.export_rows(include_unsure=include_unsure)
        if format == "json":
            return {"decisions": rows}
        if format != "csv":
            return JSONResponse({"error": f"unknown format {format!r}"},
                                status_code=400)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["item_id", "left_id", "right_id", "verdict",
                         "reviewer_id", "timestamp"])
        for row in rows:
            writer.writerow([row["item_id"], row["left_id"], row["right_id"],
                             row["verdict"], row["reviewer_id"],
                             row["timestamp"]])
        return Response(content=buf.getvalue(), media_type="text/csv")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")
    return app
