"""Swap weights and rates for a forward/backward pair.

``inf_swap_weight`` is the fraction of time the pair at ``(x, y)`` spends with
``x`` in the forward role once swaps happen infinitely fast;
``finite_swap_rate`` is the Metropolis rate used at finite swap intensity.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import ProblemSpec


def swap_weight_from_values(Vx, Vy, temperature: float):
    """``1 / (exp(2 (Vx - Vy) / temperature) + 1)`` without overflow.

    For a positive exponent the equivalent ``e / (1 + e)`` with
    ``e = exp(-z)`` is used, so the exponential never sees a large argument.
    """
    z = 2.0 * (np.asarray(Vx, dtype=float) - np.asarray(Vy, dtype=float)) / temperature
    e = np.exp(-np.abs(z))
    out = np.where(z > 0, e / (1.0 + e), 1.0 / (1.0 + e))
    return out[()] if out.ndim == 0 else out


def inf_swap_weight(x, y, spec: ProblemSpec):
    """Infinite-swapping weight of the pair ``(x, y)`` under ``spec``.

    Points may be single ``(d,)`` vectors or batches ``(m, d)``.
    """
    return swap_weight_from_values(spec.V(x), spec.V(y), spec.temperature)


def finite_swap_rate_from_values(Vx, Vy, temperature: float, K: float):
    z = 2.0 * (np.asarray(Vy, dtype=float) - np.asarray(Vx, dtype=float)) / temperature
    out = K * np.exp(-np.maximum(z, 0.0))
    return out[()] if out.ndim == 0 else out


def finite_swap_rate(x, y, spec: ProblemSpec, K: float):
    """Metropolis swap rate ``K exp(-(2V(y) - 2V(x))^+ / temperature)``."""
    if not K > 0:
        raise ValueError("swap intensity K must be positive")
    return finite_swap_rate_from_values(spec.V(x), spec.V(y), spec.temperature, K)


def _on_grid(field, pts):
    if callable(field):
        return np.asarray(field(pts), dtype=float).reshape(len(pts))
    return np.asarray(field, dtype=float).reshape(len(pts))


def implied_potential(xgrid, ygrid, psi_log, phi_log, epsilon: float) -> np.ndarray:
    """Implied potential of the symmetrized pair on a product grid.

    ``W[i, j] = -epsilon * log(exp(-(Psi(x_i) + Phi(y_j)) / epsilon)
    + exp(-(Psi(y_j) + Phi(x_i)) / epsilon))``, evaluated by log-sum-exp.

    Parameters
    ----------
    xgrid, ygrid : array_like
        Grid points, shape ``(n,)`` for d = 1 or ``(n, d)``.
    psi_log, phi_log : callable or array_like
        ``Psi`` and ``Phi`` with ``psi = exp(-Psi / epsilon)`` and
        ``phi = exp(-Phi / epsilon)``; callables are evaluated on the grid
        points, arrays must be given on ``xgrid`` and ``ygrid`` stacked as a
        pair ``(values_on_x, values_on_y)``.
    epsilon : float

    Returns
    -------
    ndarray, shape (len(xgrid), len(ygrid))
    """
    xs = np.asarray(xgrid, dtype=float)
    ys = np.asarray(ygrid, dtype=float)
    xs2 = xs.reshape(len(xs), -1)
    ys2 = ys.reshape(len(ys), -1)

    def both(field):
        if callable(field):
            return _on_grid(field, xs2), _on_grid(field, ys2)
        fx, fy = field
        return np.asarray(fx, dtype=float).ravel(), np.asarray(fy, dtype=float).ravel()

    psi_x, psi_y = both(psi_log)
    phi_x, phi_y = both(phi_log)
    a = -(psi_x[:, None] + phi_y[None, :]) / epsilon
    b = -(psi_y[None, :] + phi_x[:, None]) / epsilon
    return -epsilon * np.logaddexp(a, b)


def gibbs_log_fields(spec: ProblemSpec) -> tuple[Callable, Callable]:
    """``(Psi, Phi)`` for a problem with ``c = 0``: ``Psi = 2V eps / temperature``, ``Phi = 0``."""
    factor = 2.0 * spec.epsilon / spec.temperature

    def psi(pts):
        return factor * np.atleast_1d(spec.V(pts))

    def phi(pts):
        return np.zeros(len(pts))

    return psi, phi


def uncoupled_potential(xgrid, ygrid, psi_log, phi_log) -> np.ndarray:
    """``Psi(x) + Phi(y)`` on the product grid, the landscape without swapping."""
    xs2 = np.asarray(xgrid, dtype=float).reshape(len(xgrid), -1)
    ys2 = np.asarray(ygrid, dtype=float).reshape(len(ygrid), -1)
    return _on_grid(psi_log, xs2)[:, None] + _on_grid(phi_log, ys2)[None, :]


def write_potential_csv(path, xgrid, ygrid, W) -> None:
    """Write ``(x, y, W)`` rows, x-major, for d = 1 grids."""
    xs = np.asarray(xgrid, dtype=float).ravel()
    ys = np.asarray(ygrid, dtype=float).ravel()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    table = np.column_stack([X.ravel(), Y.ravel(), np.asarray(W).ravel()])
    np.savetxt(path, table, delimiter=",", header="x,y,W", comments="", fmt="%.17g")
