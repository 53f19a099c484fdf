"""Thread-count control via the ``DIFFEOFLOW_THREADS`` environment variable."""

from __future__ import annotations

import os
from contextlib import contextmanager

from threadpoolctl import threadpool_limits

ENV_VAR = "DIFFEOFLOW_THREADS"


def thread_setting() -> int:
    """0 (default) = sequential, reproducible mode; N > 0 = up to N BLAS threads."""
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a non-negative integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{ENV_VAR} must be a non-negative integer, got {value}")
    return value


def reproducible() -> bool:
    return thread_setting() == 0


@contextmanager
def thread_limits():
    n = thread_setting()
    with threadpool_limits(limits=max(n, 1)):
        yield n
