"""String-similarity and phonetic primitives used by blocking and scoring.

Two interchangeable backends implement the kernels: a Cython extension
(``_kernels``) and pure Python (``_pure``). The compiled backend is used
when the extension built; set ``RECLINK_PURE=1`` to force pure Python.
``backend()`` reports which one is active.
"""

import os

from . import _pure

if os.environ.get("RECLINK_PURE") == "1":
    _impl = _pure
    _BACKEND = "pure"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        _BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        _BACKEND = "pure"

jaro_winkler = _impl.jaro_winkler
damerau_levenshtein = _impl.damerau_levenshtein
soundex = _impl.soundex
ngram_bucket_counts = _impl.ngram_bucket_counts

__all__ = [
    "jaro_winkler",
    "damerau_levenshtein",
    "soundex",
    "ngram_bucket_counts",
    "backend",
    "available_backends",
]


def backend() -> str:
    """Name of the active kernel backend: "compiled" or "pure"."""
    return _BACKEND


def available_backends() -> dict:
    """All importable backends keyed by name (for tests and benchmarks)."""
    backends = {"pure": _pure}
    try:
        from . import _kernels  # noqa: PLC0415

        backends["compiled"] = _kernels
    except ImportError:
        pass
    return backends
