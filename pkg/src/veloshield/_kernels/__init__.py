"""Simulation-kernel backends.

``_native`` is the Cython extension built at install time; ``purepy`` is
the pure-Python mirror. The default backend is the extension when it
imported successfully, overridable with the ``VELOSHIELD_BACKEND``
environment variable ("native", "python", or "auto").
"""
import os

from . import purepy

try:
    from . import _native
except ImportError:
    _native = None


def available_backends():
    names = ["python"]
    if _native is not None:
        names.insert(0, "native")
    return names


def get_backend(name=None):
    """Resolve a backend module by name (None/auto = best available)."""
    if name is None:
        name = os.environ.get("VELOSHIELD_BACKEND", "auto")
    if name == "auto":
        return _native if _native is not None else purepy
    if name == "native":
        if _native is None:
            raise RuntimeError("compiled kernels are not available; rebuild the extension")
        return _native
    if name == "python":
        return purepy
    raise ValueError(f"unknown backend {name!r}")


def default_backend_name():
    return get_backend().BACKEND
