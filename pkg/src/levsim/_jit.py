"""JIT shim: use numba when present, plain Python otherwise.

The simulator is usable without numba (e.g. NUMBA_DISABLE_JIT=1 or a
stripped environment) at a large speed penalty; results are identical.
"""

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap
