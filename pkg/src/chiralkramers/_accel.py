"""Optional numba acceleration.

Set ``CHIRALKRAMERS_BACKEND=numpy`` to force the pure-numpy code paths even when
numba is installed. ``CHIRALKRAMERS_THREADS`` caps the number of worker threads
used by the compiled ensemble kernel.
"""

import os
import types

BACKEND_ENV = "CHIRALKRAMERS_BACKEND"
THREADS_ENV = "CHIRALKRAMERS_THREADS"

try:
    import numba

    # skip the TBB probe, whose version check only produces a warning here
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def backend() -> str:
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


def use_numba() -> bool:
    return backend() == "numba"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return n


def njit(*args, **kwargs):
    """numba.njit when numba is importable, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def set_threads(n: int) -> None:
    if HAVE_NUMBA:
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def jit_variant(func, jit_options: dict | None = None, **global_overrides):
    """Compiled copy of a plain function, with some of its globals swapped.

    Lets numpy-facing code be reused inside compiled kernels: helpers the
    function calls are replaced by their own compiled variants.
    """
    namespace = dict(func.__globals__)
    namespace.update(global_overrides)
    clone = types.FunctionType(func.__code__, namespace, func.__name__, func.__defaults__, func.__closure__)
    return njit(**(jit_options or {}))(clone)
