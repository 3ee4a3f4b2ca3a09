"""Kernel backend selection.

The compiled extension is preferred; the pure-Python fallback is used when
the extension is missing or when COSHARE_PURE_PYTHON=1 is set. Both expose
the same three functions (`prefix_cuts`, `probe_pairs`, `csr_matvec`) with
identical semantics; `benchmarks/bench_kernels.py` compares their speed.
"""

from __future__ import annotations

import importlib
import logging
import os

from . import fallback

log = logging.getLogger(__name__)


def _load_native():
    if os.environ.get("COSHARE_PURE_PYTHON", "") in ("1", "true", "yes"):
        return None
    try:
        return importlib.import_module("coshare.kernels._native")
    except ImportError:
        log.info("compiled kernels unavailable, using pure-Python fallback")
        return None


_native_mod = _load_native()
active = _native_mod if _native_mod is not None else fallback


def backend_name() -> str:
    return active.BACKEND_NAME


def available_backends() -> list[str]:
    names = ["python"]
    if _native_mod is not None:
        names.insert(0, "c")
    return names


def load_backend(name: str):
    """Return a backend module by name ("c" or "python"); for tests/benchmarks."""
    if name == "python":
        return fallback
    if name == "c":
        if _native_mod is None:
            raise RuntimeError("compiled kernel backend is not available")
        return _native_mod
    raise ValueError(f"unknown kernel backend {name!r}")
