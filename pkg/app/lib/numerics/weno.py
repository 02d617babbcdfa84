"""Finite-difference kernels for the voltage transport operator."""

from __future__ import annotations

import numpy as np

from app.domain.models import FloatArray

# Linear weights of the three candidate stencils.
_D0, _D1, _D2 = 0.1, 0.6, 0.3
WENO_EPS = 1e-6
GHOST_CELLS = 3


def _reconstruct(f0: FloatArray, f1: FloatArray, f2: FloatArray, f3: FloatArray, f4: FloatArray) -> FloatArray:
    """Left-biased WENO5 value at the interface between f2 and f3."""
    beta0 = 13.0 / 12.0 * (f0 - 2.0 * f1 + f2) ** 2 + 0.25 * (f0 - 4.0 * f1 + 3.0 * f2) ** 2
    beta1 = 13.0 / 12.0 * (f1 - 2.0 * f2 + f3) ** 2 + 0.25 * (f1 - f3) ** 2
    beta2 = 13.0 / 12.0 * (f2 - 2.0 * f3 + f4) ** 2 + 0.25 * (3.0 * f2 - 4.0 * f3 + f4) ** 2

    alpha0 = _D0 / (WENO_EPS + beta0) ** 2
    alpha1 = _D1 / (WENO_EPS + beta1) ** 2
    alpha2 = _D2 / (WENO_EPS + beta2) ** 2
    total = alpha0 + alpha1 + alpha2

    q0 = (2.0 * f0 - 7.0 * f1 + 11.0 * f2) / 6.0
    q1 = (-f1 + 5.0 * f2 + 2.0 * f3) / 6.0
    q2 = (2.0 * f2 + 5.0 * f3 - f4) / 6.0
    return (alpha0 * q0 + alpha1 * q1 + alpha2 * q2) / total


def weno5_flux_derivative(values: FloatArray, speed: FloatArray, dx: float) -> FloatArray:
    """d/dx (speed * values) with global Lax-Friedrichs splitting.

    Values beyond both ends are zero ghost nodes.
    """
    n = values.shape[0]
    alpha = float(np.max(np.abs(speed))) if n else 0.0
    flux = speed * values
    plus = np.zeros(n + 2 * GHOST_CELLS)
    minus = np.zeros(n + 2 * GHOST_CELLS)
    plus[GHOST_CELLS:-GHOST_CELLS] = 0.5 * (flux + alpha * values)
    minus[GHOST_CELLS:-GHOST_CELLS] = 0.5 * (flux - alpha * values)

    # Interfaces k = 0..n sit between original nodes k-1 and k.
    interface = _reconstruct(plus[0 : n + 1], plus[1 : n + 2], plus[2 : n + 3], plus[3 : n + 4], plus[4 : n + 5])
    interface += _reconstruct(
        minus[5 : n + 6], minus[4 : n + 5], minus[3 : n + 4], minus[2 : n + 3], minus[1 : n + 2]
    )
    return (interface[1:] - interface[:-1]) / dx


def second_difference(values: FloatArray, dx: float) -> FloatArray:
    """(p[i+1] - 2 p[i] + p[i-1]) / dx^2 with zero ghost nodes."""
    padded = np.zeros(values.shape[0] + 2)
    padded[1:-1] = values
    return (padded[2:] - 2.0 * padded[1:-1] + padded[:-2]) / (dx * dx)
