"""Bookkeeping for the acceptance suite: one recorded result per criterion."""

from __future__ import annotations

from contextlib import contextmanager

RESULTS: dict[int, tuple[bool, str, str]] = {}


@contextmanager
def criterion(number: int, title: str, details: dict):
    """Record PASS when the block finishes, FAIL (and re-raise) otherwise.

    ``details`` is filled in by the block and printed with the result.
    """
    try:
        yield details
    except BaseException as exc:
        details.setdefault("error", str(exc).splitlines()[0][:160] if str(exc) else type(exc).__name__)
        RESULTS[number] = (False, title, _fmt(details))
        raise
    RESULTS[number] = (True, title, _fmt(details))
    print(f"criterion {number}: PASS  {title}  [{_fmt(details)}]")


def _fmt(details: dict) -> str:
    parts = []
    for k, v in details.items():
        parts.append(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}")
    return ", ".join(parts)
