"""
Optional numba acceleration for the event loops.

When numba is missing the kernels run as plain Python with identical results.
"""

try:
    import numba as nb
    HAVE_NUMBA = True
except Exception:
    HAVE_NUMBA = False


if HAVE_NUMBA:
    def njit(*args, **kwargs):
        return nb.njit(*args, cache=True, nogil=True, **kwargs)
else:
    # no-op decorator
    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap
