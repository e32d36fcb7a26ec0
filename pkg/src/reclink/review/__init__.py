"""Clerical-review queue service; see service.py."""

from .service import ReviewQueue, build_queue_entries, create_app

__all__ = ["ReviewQueue", "build_queue_entries", "create_app"]
