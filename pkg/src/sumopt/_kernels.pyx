# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""In-place stepper kernels, one call per iteration.

Each function advances the optimizer state by a single step and mutates
its array arguments. ``_kernels_py`` holds a numpy implementation with
the same arithmetic order; ``_backend`` picks one at import time. Terms
are kept un-fused (see the build flags) so both backends round alike.
"""


def sum_step(double[::1] x, double[::1] m, double[::1] g,
             double mu, double lam, double lam_tilde, double eta):
    """Single-buffer form: refresh the momentum, then move the iterate."""
    cdef Py_ssize_t n = x.shape[0]
    if m.shape[0] != n or g.shape[0] != n:
        raise ValueError("x, m, g must have equal length")
    cdef double le = lam * eta
    cdef double c = 1.0 - lam_tilde
    cdef double mi, xi
    cdef Py_ssize_t i
    for i in range(n):
        mi = mu * m[i]
        mi = mi - eta * g[i]
        m[i] = mi
        xi = x[i] - le * g[i]
        x[i] = xi + c * mi


def zou_step(double[::1] x, double[::1] m_curr, double[::1] m_prev,
             double[::1] g, double mu, double lam, double eta):
    """Two-buffer form: the displacement mixes the new and old momentum."""
    cdef Py_ssize_t n = x.shape[0]
    if m_curr.shape[0] != n or m_prev.shape[0] != n or g.shape[0] != n:
        raise ValueError("x, m_curr, m_prev, g must have equal length")
    cdef double lm = lam * mu
    cdef double mold, mnew, xi
    cdef Py_ssize_t i
    for i in range(n):
        mold = m_curr[i]
        mnew = mu * mold
        mnew = mnew - eta * g[i]
        m_curr[i] = mnew
        m_prev[i] = mold
        xi = x[i] + mnew
        x[i] = xi + lm * (mnew - mold)


def yan_step(double[::1] x, double[::1] y, double[::1] ytilde,
             double[::1] g, double mu, double lam, double eta):
    """Three-sequence form: a plain step, a scaled step, and their blend."""
    cdef Py_ssize_t n = x.shape[0]
    if y.shape[0] != n or ytilde.shape[0] != n or g.shape[0] != n:
        raise ValueError("x, y, ytilde, g must have equal length")
    cdef double le = lam * eta
    cdef double yn, ytn, xn
    cdef Py_ssize_t i
    for i in range(n):
        yn = x[i] - eta * g[i]
        ytn = x[i] - le * g[i]
        xn = yn + mu * (ytn - ytilde[i])
        y[i] = yn
        ytilde[i] = ytn
        x[i] = xn
