"""Backend selection for the training hot loops.

The Cython extension is used when it was built; otherwise the numpy fallback.
Set ``GROKLAB_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import os

BACKENDS = ("cython", "python")


def load_backend(name):
    """Import a backend module by name (``"cython"`` or ``"python"``)."""
    if name == "cython":
        return importlib.import_module("groklab._kernels")
    if name == "python":
        return importlib.import_module("groklab._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    found = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        found.append(name)
    return found


def _select():
    if os.environ.get("GROKLAB_PURE_PYTHON", "") not in ("", "0"):
        return "python", load_backend("python")
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()

onehot_hidden = _impl.onehot_hidden
onehot_scatter = _impl.onehot_scatter
activate = _impl.activate
