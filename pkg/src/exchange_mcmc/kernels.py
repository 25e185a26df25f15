"""Backend selection for the inner loops.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``EXCHANGE_MCMC_BACKEND=python`` is set) the pure-Python
twins in :mod:`exchange_mcmc._fallback` take over with identical results.
"""
import logging
import os

from . import _fallback

logger = logging.getLogger(__name__)


def _load():
    if os.environ.get("EXCHANGE_MCMC_BACKEND", "").lower() == "python":
        return _fallback
    try:
        from . import _kernels
    except ImportError as exc:
        logger.info("compiled kernels unavailable (%s); using pure-Python fallback", exc)
        return _fallback
    return _kernels


backend = _load()
BACKEND = backend.BACKEND


def get_backend(name=None):
    """Return the kernel module called ``name`` ('compiled' or 'python'); default: active one."""
    if name is None:
        return backend
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
