"""Small shared helpers: float formatting, atomic file writes, worker counts."""

from __future__ import annotations

import os
import tempfile

#: Format spec giving 17 significant digits -- enough for bit-exact float64
#: round-trips through text.
FLOAT_FMT = "%.17g"


def fmt_float(x: float) -> str:
    """Render a float with 17 significant digits (round-trip safe)."""
    return FLOAT_FMT % float(x)


def atomic_write_text(path: str, text: str) -> None:
    """Write text to `path` via a temp file in the same directory + rename."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Binary twin of :func:`atomic_write_text`."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count: explicit argument, else GMT_LAB_THREADS, else 1.

    All parallel reductions in this package are deterministic, so the value
    only affects speed, never results.
    """
    if requested is not None and requested > 0:
        return int(requested)
    env = os.environ.get("GMT_LAB_THREADS", "")
    try:
        n = int(env)
        if n > 0:
            return n
    except ValueError:
        pass
    return 1
