"""Ergodic-control utilities: score-matching loss, feedback control, HJB residual.

With ``Phi = -log phi`` for the positive eigenfunction ``phi`` of the
forward operator, the optimal feedback is ``u = sqrt(eps) D log phi`` and
``Phi`` solves

    -<DV, DPhi> - (a/2)|DPhi|^2 + c + (a/2) lap Phi - lambda = 0,

with ``a = diffusion_scale * eps``. A score model ``s ~ D log phi`` may be
fitted by minimizing ``E[|s|^2 + 2 div s]`` over samples of ``phi``; this
module evaluates that objective but does not train anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .core import InvalidInputError, PeriodicBox, ProblemSpec
from .jump import SmoothFunction


@dataclass
class ScoreField:
    """Vector field ``s: R^d -> R^d`` evaluated on rows of a point array.

    ``divergence`` may be supplied; otherwise central differences with step
    ``fd_step`` are used (default ``1e-4`` times the box period, or ``1e-4``
    without a box).
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    divergence: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float | None = None
    box: PeriodicBox | None = None

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.evaluate(X), dtype=float).reshape(X.shape)

    @property
    def step(self) -> float:
        if self.fd_step is not None:
            return float(self.fd_step)
        if self.box is not None:
            return 1e-4 * float(np.min(self.box.period))
        return 1e-4

    def fd_divergence(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dlt = self.step
        out = np.zeros(X.shape[0])
        for i in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[i] = dlt
            out += (self(X + e)[:, i] - self(X - e)[:, i]) / (2 * dlt)
        return out

    def div(self, X) -> np.ndarray:
        if self.divergence is not None:
            X = np.atleast_2d(np.asarray(X, dtype=float))
            return np.asarray(self.divergence(X), dtype=float).reshape(X.shape[0])
        return self.fd_divergence(X)


def score_matching_loss(s: ScoreField, samples) -> float:
    """Monte Carlo average of ``|s(x)|^2 + 2 div s(x)`` over ``samples``."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise InvalidInputError("need at least one sample")
    S = s(X)
    return float(np.mean(np.sum(S * S, axis=1) + 2.0 * s.div(X)))


def control_from_score(s: ScoreField, epsilon: float) -> ScoreField:
    """Feedback control ``u(x) = sqrt(epsilon) s(x)``."""
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    root = float(np.sqrt(epsilon))
    div = None if s.divergence is None else (lambda X: root * s.div(X))
    return ScoreField(lambda X: root * s(X), div, s.fd_step, s.box)


def hjb_residual(Phi: SmoothFunction, spec: ProblemSpec, lam: float, x) -> np.ndarray | float:
    """Residual of the ergodic HJB equation at ``x`` (a point or rows of points)."""
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    X = np.atleast_2d(X.reshape(1, -1) if single else X)
    _, G, _, C = spec.evaluate(X)
    G = np.atleast_2d(G)
    a = spec.noise_variance
    D = np.atleast_2d(Phi.gradient(X))
    res = (-np.sum(G * D, axis=1) - 0.5 * a * np.sum(D * D, axis=1) + np.atleast_1d(C)
           + 0.5 * a * np.asarray(Phi.laplacian(X)) - lam)
    return float(res[0]) if single else res


def zero_function() -> SmoothFunction:
    return SmoothFunction("zero", lambda X: np.zeros(len(X)), lambda X: np.zeros_like(X),
                          lambda X: np.zeros(len(X)))


def log_potential_from_grid(nodes, values, box: PeriodicBox) -> SmoothFunction:
    """``Phi = -log(values)`` as a periodic cubic spline through 1-d grid nodes."""
    if box.d != 1:
        raise InvalidInputError("grid interpolation is implemented for d = 1")
    z = np.asarray(nodes, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    if np.any(v <= 0):
        raise InvalidInputError("eigenfunction values must be positive")
    order = np.argsort(z)
    z, v = z[order], v[order]
    L = float(box.period[0])
    knots = np.append(z, z[0] + L)
    phi = -np.log(v)
    spl = CubicSpline(knots, np.append(phi, phi[0]), bc_type="periodic")

    def wrap1(X):
        return (np.asarray(X, dtype=float)[:, 0] - z[0]) % L + z[0]

    return SmoothFunction(
        "grid Phi",
        lambda X: spl(wrap1(X)),
        lambda X: spl(wrap1(X), 1)[:, None],
        lambda X: spl(wrap1(X), 2),
    )
