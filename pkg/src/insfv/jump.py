"""Locally consistent pure-jump approximation of the diffusion dynamics.

A particle at ``x`` with drift ``b`` and diagonal diffusion ``a`` jumps to
``x + h e_k`` or ``x - h e_k`` with rates chosen so the chain's generator
matches ``b . Df + (1/2) sum_k a_k D_kk f`` as ``h -> 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import InvalidInputError, PeriodicBox, ProblemSpec, as_generator

SCHEMES = {"auto": K.SCHEME_AUTO, "central": K.SCHEME_CENTRAL, "upwind": K.SCHEME_UPWIND}
_SCHEME_NAMES = {K.SCHEME_CENTRAL: "central", K.SCHEME_UPWIND: "upwind"}


class NoEventError(RuntimeError):
    """A jump was requested from a rate vector with zero total mass."""


@dataclass(frozen=True)
class RateVector:
    """Jump rates ordered ``(+e_1, ..., +e_d, -e_1, ..., -e_d)``.

    Attributes
    ----------
    rates : ndarray, shape (2d,)
    h : float
        Jump size the rates were computed for.
    scheme : str
        ``"central"`` or ``"upwind"``, whichever produced the rates.
    """

    rates: np.ndarray
    h: float
    scheme: str

    @property
    def d(self) -> int:
        return self.rates.shape[0] // 2

    @property
    def total(self) -> float:
        return float(self.rates.sum())

    @property
    def plus(self) -> np.ndarray:
        return self.rates[: self.d]

    @property
    def minus(self) -> np.ndarray:
        return self.rates[self.d :]

    def mean_drift(self) -> np.ndarray:
        return self.h * (self.plus - self.minus)


def transition_rates(x, b, a, h: float, scheme: str = "auto") -> RateVector:
    """Jump rates reproducing drift ``b`` and diagonal diffusion ``a``.

    The central rates ``(+-h b_i + a_i) / (2 h^2)`` are used unless one of
    them is negative, in which case every axis switches to the upwind rates
    ``(h max(+-b_i, 0) + a_i / 2) / h^2``.

    Parameters
    ----------
    x : array_like
        Location; kept for signature compatibility with state-dependent
        diffusions, unused for constant ``a``.
    b, a : array_like, shape (d,)
        Drift and diagonal of the diffusion matrix, ``a >= 0``.
    h : float
        Jump size, ``> 0``.
    scheme : {"auto", "central", "upwind"}
        ``"auto"`` is the central-with-fallback rule; the other two force a
        scheme (forcing central may return negative entries).

    Returns
    -------
    RateVector
    """
    if not h > 0:
        raise InvalidInputError("h must be positive")
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float)) * np.ones_like(b)
    if b.shape != a.shape or b.ndim != 1:
        raise InvalidInputError("b and a must be vectors of the same length")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
        raise InvalidInputError("b and a must be finite")
    if np.any(a < 0):
        raise InvalidInputError("diffusion entries must be non-negative")
    out = np.empty(2 * b.shape[0])
    used = K.transition_rates(b, a, float(h), SCHEMES[scheme], out)
    return RateVector(out, float(h), _SCHEME_NAMES[used])


def one_step(x, r: RateVector, h: float, rng, box: PeriodicBox) -> np.ndarray:
    """Sample one jump ``x -> wrap(x +- h e_k)`` with probability ``r_j / sum r``."""
    rates = np.asarray(r.rates if isinstance(r, RateVector) else r, dtype=float)
    if not np.sum(rates) > 0:
        raise NoEventError("total jump rate is zero")
    y = np.array(np.atleast_1d(x), dtype=float)
    K.one_step_inplace(y, rates, float(h), as_generator(rng), box.lower, box.upper)
    return y


# ---------------------------------------------------------------------------
# local consistency


@dataclass(frozen=True)
class SmoothFunction:
    """Test function with analytic gradient and Laplacian (batched over rows)."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]


def _trig_function(name, amp_freq_phase, period):
    # f(x) = sum_k A_k sin(2 pi n_k x_0 / L + p_k)
    def value(X):
        return sum(A * np.sin(2 * np.pi * n * X[:, 0] / period + p) for A, n, p in amp_freq_phase)

    def gradient(X):
        g = np.zeros_like(X)
        g[:, 0] = sum(A * (2 * np.pi * n / period) * np.cos(2 * np.pi * n * X[:, 0] / period + p)
                      for A, n, p in amp_freq_phase)
        return g

    def laplacian(X):
        return sum(-A * (2 * np.pi * n / period) ** 2 * np.sin(2 * np.pi * n * X[:, 0] / period + p)
                   for A, n, p in amp_freq_phase)

    return SmoothFunction(name, value, gradient, laplacian)


def test_function_basket(box: PeriodicBox) -> list[SmoothFunction]:
    """Five smooth periodic functions of the first coordinate.

    Frequencies stay at or below 3/2 cycles per period so that steps down to
    ``period / 20`` are in the asymptotic regime of the jump-chain error.
    """
    L = float(box.period[0])
    basket = [
        _trig_function("sin(2 pi x)", [(1.0, L, 0.0)], L),
        _trig_function("cos(2 pi x)", [(1.0, L, np.pi / 2)], L),
        _trig_function("sin(pi x) + cos(3 pi x)/2", [(1.0, L / 2, 0.0), (0.5, 1.5 * L, np.pi / 2)], L),
        _trig_function("sin(2 pi x + 1)", [(1.0, L, 1.0)], L),
    ]

    def ev(X):
        return np.exp(np.sin(2 * np.pi * X[:, 0] / L))

    def eg(X):
        g = np.zeros_like(X)
        w = 2 * np.pi / L
        g[:, 0] = w * np.cos(w * X[:, 0]) * ev(X)
        return g

    def el(X):
        w = 2 * np.pi / L
        s = np.sin(w * X[:, 0])
        c = np.cos(w * X[:, 0])
        return w * w * (c * c - s) * ev(X)

    basket.append(SmoothFunction("exp(sin(2 pi x))", ev, eg, el))
    return basket


test_function_basket.__test__ = False  # keep pytest from collecting it when imported


def generator_apply(spec: ProblemSpec, f: SmoothFunction, X) -> np.ndarray:
    """Forward diffusion generator ``-DV . Df + (a/2) lap f`` at rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, G, _, _ = spec.evaluate(X)
    G = np.atleast_2d(G)
    return -np.sum(G * f.gradient(X), axis=1) + 0.5 * spec.noise_variance * f.laplacian(X)


def consistency_report(spec: ProblemSpec, f: SmoothFunction, x, h: float,
                       scheme: str = "auto") -> np.ndarray | float:
    """``|sum_j r_j(x) [f(x + h v_j) - f(x)] - L f(x)|`` for the forward chain.

    ``x`` may be one point or a batch of rows; the return matches. Shifts
    ``x +- h e_k`` are evaluated without wrapping, so ``f`` need not share
    the box period.
    """
    if not h > 0:
        raise InvalidInputError("h must be positive")
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    X = X.reshape(1, -1) if single else X
    d = spec.d
    _, G, _, _ = spec.evaluate(X)
    G = np.atleast_2d(G)
    f0 = f.value(X)
    chain = np.zeros(X.shape[0])
    for n in range(X.shape[0]):
        r = transition_rates(X[n], -G[n], spec.a, h, scheme).rates
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            chain[n] += r[k] * (f.value((X[n] + e)[None])[0] - f0[n])
            chain[n] += r[d + k] * (f.value((X[n] - e)[None])[0] - f0[n])
    err = np.abs(chain - generator_apply(spec, f, X))
    return float(err[0]) if single else err
