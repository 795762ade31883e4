"""Hot pointwise kernels with a compiled core and a numpy fallback.

The backend is chosen once at import.  Set ``FRACSPREAD_BACKEND=numpy``
to force the fallback even when the extension is built.
"""
import os

import numpy as np

try:
    from fracspread._ext._reaction import reaction_rk4 as _cython_rk4
except ImportError:  # extension not built
    _cython_rk4 = None


def saturation(s, delta, lam):
    """s**(1+delta) on [0, lam], linear continuation above lam, 0 below 0."""
    s = np.asarray(s, dtype=float)
    inside = np.clip(s, 0.0, lam)
    if delta == 1.0:
        core = inside * inside
    else:
        core = inside ** (1.0 + delta)
    above = np.maximum(s - lam, 0.0)
    return core + (1.0 + delta) * lam**delta * above


def saturation_slope(s, delta, lam):
    s = np.asarray(s, dtype=float)
    inside = np.clip(s, 0.0, lam)
    return np.where(s > 0.0, (1.0 + delta) * inside**delta, 0.0)


def _rhs(u, K_off, r, q, delta, lam):
    return K_off @ u + r[:, None] * u - q[:, None] * saturation(u, delta, lam)


def numpy_reaction_rk4(u, K, r, q, delta, lam, h):
    """One classical RK4 step of size ``h`` for every column of ``u``."""
    u = np.ascontiguousarray(u, dtype=float)
    K_off = np.array(K, dtype=float)
    np.fill_diagonal(K_off, 0.0)
    r = np.asarray(r, dtype=float)
    q = np.asarray(q, dtype=float)
    k1 = _rhs(u, K_off, r, q, delta, lam)
    k2 = _rhs(u + 0.5 * h * k1, K_off, r, q, delta, lam)
    k3 = _rhs(u + 0.5 * h * k2, K_off, r, q, delta, lam)
    k4 = _rhs(u + h * k3, K_off, r, q, delta, lam)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def cython_reaction_rk4(u, K, r, q, delta, lam, h):
    if _cython_rk4 is None:
        raise RuntimeError("compiled reaction kernel is not available")
    K_off = np.array(K, dtype=float)
    np.fill_diagonal(K_off, 0.0)
    return _cython_rk4(
        np.ascontiguousarray(u, dtype=float),
        np.ascontiguousarray(K_off),
        np.ascontiguousarray(r, dtype=float),
        np.ascontiguousarray(q, dtype=float),
        float(delta),
        float(lam),
        float(h),
    )


HAVE_EXTENSION = _cython_rk4 is not None

if HAVE_EXTENSION and os.environ.get("FRACSPREAD_BACKEND", "").lower() != "numpy":
    BACKEND = "cython"
    reaction_rk4 = cython_reaction_rk4
else:
    BACKEND = "numpy"
    reaction_rk4 = numpy_reaction_rk4
