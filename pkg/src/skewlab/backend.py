"""Kernel backend selection.

Two interchangeable kernel modules exist: ``_ckernels`` (compiled) and
``_pykernels`` (pure Python).  The compiled one is used when importable;
the environment variable ``SKEWLAB_BACKEND`` (``compiled`` / ``python`` /
``auto``) overrides the choice at import time, and :func:`use` or
:func:`forced` switch it at runtime (tests and benchmarks do this).
"""
from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built; pure-Python install
    _ckernels = None

_BY_NAME = {"python": _pykernels}
if _ckernels is not None:
    _BY_NAME["compiled"] = _ckernels


def _initial():
    env = os.environ.get("SKEWLAB_BACKEND", "auto").strip().lower()
    if env in ("", "auto"):
        return _ckernels if _ckernels is not None else _pykernels
    if env not in _BY_NAME:
        raise ImportError(
            f"SKEWLAB_BACKEND={env!r} is not available; "
            f"choices: {sorted(_BY_NAME)} or 'auto'"
        )
    return _BY_NAME[env]


_active = _initial()


def kernels():
    """The currently active kernel module."""
    return _active


def active_name() -> str:
    return _active.BACKEND_NAME


def available() -> list[str]:
    return sorted(_BY_NAME)


def use(name: str) -> None:
    """Switch the active backend ('compiled' or 'python')."""
    global _active
    if name not in _BY_NAME:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BY_NAME)}")
    _active = _BY_NAME[name]


@contextmanager
def forced(name: str):
    """Temporarily switch the active backend."""
    prev = _active.BACKEND_NAME
    use(name)
    try:
        yield _BY_NAME[name]
    finally:
        use(prev)
