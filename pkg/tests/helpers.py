"""Shared test helpers."""

import numpy as np

from cutspheres.model import Problem, WeaklyConvexConstraint


def ring(radius=1.0, center=None):
    """``radius^2 - ||x - center||^2 <= 0``: stay outside a ball."""
    def f(x):
        d = x - (0 if center is None else center)
        return radius**2 - float(d @ d)

    def g(x):
        return -2.0 * (x - (0 if center is None else center))

    return WeaklyConvexConstraint.from_smooth(f, g, 1.0, "ring")


def fd_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g
