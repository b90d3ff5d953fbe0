"""Hot loops of the time-domain solver.

The compiled extension ``_cn`` is used when it was built; otherwise the numpy
implementation in ``_cn_py`` is selected. Set ``TRANSDUCE_OPT_KERNELS=python``
to force the fallback.
"""

import importlib
import os

from . import _cn_py

BACKENDS = ("cython", "python")


def load_backend(name: str):
    """Return the kernel module for ``name``; raises ImportError if unavailable."""
    if name == "python":
        return _cn_py
    if name == "cython":
        return importlib.import_module(f"{__name__}._cn")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    out = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        out.append(name)
    return out


def _select():
    wanted = os.environ.get("TRANSDUCE_OPT_KERNELS", "").strip().lower()
    if wanted:
        return wanted, load_backend(wanted)
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", _cn_py


BACKEND, _impl = _select()
cn_forward = _impl.cn_forward
cn_adjoint = _impl.cn_adjoint
cn_chain = _impl.cn_chain

__all__ = ["BACKEND", "cn_forward", "cn_adjoint", "cn_chain", "load_backend", "available_backends"]
