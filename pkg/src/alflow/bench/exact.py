"""Exact Bingham flow between two plates."""
from __future__ import annotations

import numpy as np


def exact_bingham(x, C: float = 2.0, tau_y: float = 1.0, L: float = 4.0):
    """Velocity ``(N, 2)`` and pressure ``(N,)`` of plane Bingham-Poiseuille flow on (0,L) x (-1,1).

    ``C`` is the driving (negative) pressure gradient and ``tau_y`` the yield
    stress in the shear-stress convention of the profile.
    """
    if not tau_y < C:
        raise ValueError("the plug must lie inside the channel: need tau_y < C")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = x[:, 1]
    yp = tau_y / C
    top = C / 2 * (1 - y**2) - tau_y * (1 - y)
    bot = C / 2 * (1 - y**2) - tau_y * (1 + y)
    plug = C / 2 * (1 - yp**2) - tau_y * (1 - yp)
    ux = np.where(y >= yp, top, np.where(y <= -yp, bot, plug))
    u = np.stack([ux, np.zeros_like(ux)], axis=1)
    p = -C * (x[:, 0] - L / 2)
    return u, p
