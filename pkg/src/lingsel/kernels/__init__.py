"""Kernel backend selection.

Two interchangeable implementations of the hot kernels exist: the compiled
extension `lingsel._ckern` and the pure numpy fallback `pykern`. The active
one is chosen at import: `LINGSEL_BACKEND=auto|compiled|python` (default
auto = compiled when built, else python). Isolation-forest construction and
scoring and the SMO iteration sequence are bit-identical across backends.
"""

import os

from ..errors import UsageError
from . import pykern

try:
    from .. import _ckern
except ImportError:
    _ckern = None

_BACKENDS = {"python": pykern}
if _ckern is not None:
    _BACKENDS["compiled"] = _ckern


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name):
    """Fetch a backend module by name, for explicit cross-backend work."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise UsageError(
            f"backend '{name}' not available; choices: {available_backends()}"
        ) from None


def _select_active():
    choice = os.environ.get("LINGSEL_BACKEND", "auto").strip().lower() or "auto"
    if choice == "auto":
        return _BACKENDS.get("compiled", pykern)
    return get_backend(choice)


active = _select_active()
BACKEND_NAME = active.NAME

iforest_build = active.iforest_build
iforest_path_sums = active.iforest_path_sums
smo_solve = active.smo_solve


def worker_count():
    """Worker-thread cap from LINGSEL_THREADS; default 1, floor 1."""
    raw = os.environ.get("LINGSEL_THREADS", "1").strip()
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"LINGSEL_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)
