"""Numpy fallback for the stepper kernels.

Mirrors the compiled kernels operation for operation: every add and
multiply happens in the same order, so results agree bit for bit on the
same machine. Keep the two files in sync when touching either.
"""

import numpy as np


def sum_step(x, m, g, mu, lam, lam_tilde, eta):
    if m.shape != x.shape or g.shape != x.shape:
        raise ValueError("x, m, g must have equal length")
    m *= mu
    m -= eta * g
    x -= (lam * eta) * g
    x += (1.0 - lam_tilde) * m


def zou_step(x, m_curr, m_prev, g, mu, lam, eta):
    if m_curr.shape != x.shape or m_prev.shape != x.shape or g.shape != x.shape:
        raise ValueError("x, m_curr, m_prev, g must have equal length")
    np.copyto(m_prev, m_curr)
    m_curr *= mu
    m_curr -= eta * g
    x += m_curr
    x += (lam * mu) * (m_curr - m_prev)


def yan_step(x, y, ytilde, g, mu, lam, eta):
    if y.shape != x.shape or ytilde.shape != x.shape or g.shape != x.shape:
        raise ValueError("x, y, ytilde, g must have equal length")
    y_new = x - eta * g
    yt_new = x - (lam * eta) * g
    x_new = y_new + mu * (yt_new - ytilde)
    np.copyto(y, y_new)
    np.copyto(ytilde, yt_new)
    np.copyto(x, x_new)
