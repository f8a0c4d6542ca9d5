"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when it is
not built.  :func:`set_backend` switches at runtime, which the test suite and
the benchmark use to run both paths side by side.
"""

from types import SimpleNamespace

from . import _purepy

try:
    from . import _speedups
except ImportError:  # extension not built
    _speedups = None

_NAMES = ("central_moments", "trend_residual_ss", "scan_splits")

BACKENDS = {"python": _purepy}
if _speedups is not None:
    BACKENDS["cython"] = _speedups

BACKEND = ""


def set_backend(name):
    """Route kernel calls to ``name`` ("cython" or "python")."""
    global BACKEND
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    mod = BACKENDS[name]
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(mod, fn)
    BACKEND = name


def get(name):
    """Kernel namespace for one backend, independent of the active one."""
    mod = BACKENDS[name]
    return SimpleNamespace(**{fn: getattr(mod, fn) for fn in _NAMES})


set_backend("cython" if _speedups is not None else "python")
