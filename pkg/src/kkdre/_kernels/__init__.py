"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. Set KKDRE_FORCE_FALLBACK=1 to skip the extension (used by the
benchmark and by tests that exercise both paths).
"""

import os

BACKEND = "python"
if not os.environ.get("KKDRE_FORCE_FALLBACK"):
    try:
        from ._native import beam_quantize, lms_fse  # noqa: F401

        BACKEND = "native"
    except ImportError:
        pass

if BACKEND == "python":
    from ._fallback import beam_quantize, lms_fse  # noqa: F401


def load_backend(name: str):
    """Return the kernel module for 'native' or 'python' (for benchmarks)."""
    if name == "native":
        from . import _native

        return _native
    if name == "python":
        from . import _fallback

        return _fallback
    raise ValueError(f"unknown backend {name!r}")
