"""Problem specification, periodic geometry and random-number provisioning.

A problem is the triple (potential ``V``, zeroth-order rate ``c``, temperature
``epsilon``) on an axis-aligned periodic box. Potentials and rates are held
either as trigonometric series (with analytic derivatives) or as a periodic
array of Gaussian wells, so that the compiled engines can evaluate them
without calling back into Python.

The noise variance of every coordinate is ``diffusion_scale * epsilon``; the
forward dynamics are ``dX = -DV(X) dt + sqrt(diffusion_scale * epsilon) dW``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import _kernels as K


class InvalidInputError(ValueError):
    """Raised for malformed arguments to public operations."""


class ConstructionError(ValueError):
    """Raised when a problem description fails its consistency probes."""


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class PeriodicBox:
    """Axis-aligned periodic box ``[lower, upper)``.

    Parameters
    ----------
    lower, upper : array_like
        Per-axis bounds, ``upper > lower`` componentwise.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("lower and upper must be 1-d and the same length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInputError("box bounds must be finite")
        if np.any(hi <= lo):
            raise InvalidInputError("upper must exceed lower on every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def period(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.period))

    def wrap(self, x):
        return wrap(x, self)

    def uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` uniform points, shape ``(n, d)``."""
        return self.lower + self.period * rng.random((n, self.d))


def wrap(x, box: PeriodicBox) -> np.ndarray:
    """Map ``x`` into ``[lower, upper)`` by integer shifts of the period.

    Accepts a single point of shape ``(d,)`` or a batch ``(..., d)``; a scalar
    is accepted when ``d == 1``.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    if arr.shape[-1] != box.d:
        raise InvalidInputError(f"point dimension {arr.shape[-1]} does not match box dimension {box.d}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite coordinates cannot be wrapped")
    out = np.mod(arr - box.lower, box.period) + box.lower
    # fmod rounding can land exactly on the upper edge
    out = np.where(out >= box.upper, box.lower, out)
    out = np.where(out < box.lower, box.lower, out)
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# grid step policy


@dataclass(frozen=True)
class GridPolicy:
    """Jump size policy for the pure-jump approximation.

    ``kind="fixed"`` uses step ``h``; ``kind="uniform"`` draws a fresh step
    from ``U(h_min, h_max)`` every time a particle's rates are recomputed,
    which happens after each event that particle takes part in.
    """

    kind: str = "fixed"
    h: float | None = 0.05
    h_min: float | None = None
    h_max: float | None = None

    def __post_init__(self):
        kind = {"uniform-random": "uniform", "random": "uniform"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == "fixed":
            if self.h is None or not self.h > 0:
                raise InvalidInputError("fixed grid needs h > 0")
        elif kind == "uniform":
            if self.h_min is None or self.h_max is None or not (0 < self.h_min < self.h_max):
                raise InvalidInputError("uniform grid needs 0 < h_min < h_max")
        else:
            raise InvalidInputError(f"unknown grid kind {self.kind!r}")

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "GridPolicy":
        if cfg is None:
            return cls()
        kind = cfg.get("kind", "fixed")
        if kind == "fixed":
            return cls("fixed", float(cfg["h"]))
        return cls(kind, None, float(cfg["h_min"]), float(cfg["h_max"]))

    def kernel_args(self):
        if self.kind == "fixed":
            return K.GRID_FIXED, float(self.h), float(self.h), float(self.h)
        mid = 0.5 * (self.h_min + self.h_max)
        return K.GRID_UNIFORM, mid, float(self.h_min), float(self.h_max)

    def to_config(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "h": self.h}
        return {"kind": "uniform", "h_min": self.h_min, "h_max": self.h_max}


# ---------------------------------------------------------------------------
# random streams


class RngStream:
    """Seeded PCG64 stream; the only source of randomness for a run.

    Draw order inside the engines is fixed: initial positions, then for
    every recomputed pair the x-slot (step size if random, clock) followed
    by the y-slot, then per event one event-type uniform and the draws of
    the sub-event (direction uniform, or donor index and role uniforms).
    """

    def __init__(self, seed: int, replica: int | None = None):
        self.seed = int(seed)
        self.replica = replica
        entropy = [self.seed] if replica is None else [self.seed, int(replica)]
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def spawn(self, replica: int) -> "RngStream":
        """Independent stream for replica ``replica`` of the same seed."""
        return RngStream(self.seed, replica)

    def random(self, size=None):
        return self.generator.random(size)

    def exponential(self, size=None):
        return self.generator.standard_exponential(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)


def as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, RngStream):
        return seed_or_rng.generator
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return RngStream(int(seed_or_rng)).generator


# ---------------------------------------------------------------------------
# trig series helpers

# term row: (series, amplitude, phase, f_1..f_d) meaning amplitude*cos(2 pi <f,x> + phase)


def _empty_terms(d):
    return np.zeros((0, 3 + d))


def _term(series, amp, phase, freq):
    return np.concatenate([[series, amp, phase], np.asarray(freq, dtype=float)])


def _differentiate(base: np.ndarray, d: int) -> np.ndarray:
    """Gradient (series 1..d) and Laplacian (series d+1) of a series-0 table."""
    rows = []
    for row in base:
        amp, phase, f = row[1], row[2], row[3:]
        for i in range(d):
            if f[i] != 0.0:
                # d/dx_i cos(2 pi f.x + p) = 2 pi f_i cos(2 pi f.x + p + pi/2)
                rows.append(_term(1 + i, amp * 2 * np.pi * f[i], phase + np.pi / 2, f))
        f2 = float(np.dot(f, f))
        if f2 != 0.0:
            rows.append(_term(d + 1, amp * (2 * np.pi) ** 2 * f2, phase + np.pi, f))
    return np.array(rows).reshape(-1, 3 + d)


def _parse_terms(spec_terms, d, series=0) -> np.ndarray:
    rows = []
    for t in spec_terms:
        freq = np.atleast_1d(np.asarray(t.get("frequency", [0.0] * d), dtype=float))
        if freq.shape != (d,):
            raise ConstructionError(f"term frequency must have length {d}")
        rows.append(_term(series, float(t.get("amplitude", 1.0)), float(t.get("phase", 0.0)), freq))
    return np.array(rows).reshape(-1, 3 + d)


def _trig_eval(terms: np.ndarray, X: np.ndarray, nseries: int, offsets=None) -> np.ndarray:
    out = np.zeros((X.shape[0], nseries))
    if offsets is not None:
        out += offsets
    for row in terms:
        out[:, int(row[0])] += row[1] * np.cos(2 * np.pi * X @ row[3:] + row[2])
    return out


# ---------------------------------------------------------------------------
# problem


@dataclass(frozen=True)
class ProblemSpec:
    """Potential, zeroth-order rate and temperature on a periodic box.

    Attributes
    ----------
    box : PeriodicBox
    epsilon : float
        Temperature, > 0.
    diffusion_scale : float
        Multiplier on the noise variance (1 for ``sqrt(eps)`` noise, 2 for
        ``sqrt(2 eps)``).
    grid : GridPolicy
        Default jump size policy for engines run on this problem.

    The fields ``V``, ``DV``, ``laplacianV``, ``c`` and ``cbar`` are
    vectorized methods taking points of shape ``(d,)`` or ``(m, d)``.
    """

    box: PeriodicBox
    epsilon: float
    diffusion_scale: float
    pot_kind: int
    pot_terms: np.ndarray
    pot_offsets: np.ndarray
    centers: np.ndarray
    sigma: float
    c_terms: np.ndarray
    c_offsets: np.ndarray
    grid: GridPolicy = field(default_factory=GridPolicy)
    name: str = "problem"
    config: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def noise_variance(self) -> float:
        """Per-axis diffusion coefficient ``a_ii = diffusion_scale * epsilon``."""
        return self.diffusion_scale * self.epsilon

    @property
    def a(self) -> np.ndarray:
        return np.full(self.d, self.noise_variance)

    @property
    def temperature(self) -> float:
        """Effective temperature in the Gibbs factor ``exp(-2V/temperature)``."""
        return self.noise_variance

    @property
    def fields(self) -> tuple:
        """Field tuple consumed by the compiled kernels."""
        return (self.pot_kind, self.pot_terms, self.pot_offsets, self.centers, float(self.sigma),
                self.c_terms, self.c_offsets, self.box.lower, self.box.upper)

    def _batch(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim <= 1
        X = np.atleast_2d(X.reshape(1, -1) if X.ndim <= 1 else X)
        if X.shape[1] != self.d:
            raise InvalidInputError(f"expected points of dimension {self.d}")
        return np.ascontiguousarray(X), single

    def evaluate(self, x):
        """Return ``(V, DV, laplacianV, c)`` at each point."""
        X, single = self._batch(x)
        V, G, L, C = K.eval_batch(self.fields, X)
        if single:
            return V[0], G[0], L[0], C[0]
        return V, G, L, C

    def V(self, x):
        return self.evaluate(x)[0]

    def DV(self, x):
        return self.evaluate(x)[1]

    def laplacianV(self, x):
        return self.evaluate(x)[2]

    def c(self, x):
        return self.evaluate(x)[3]

    def cbar(self, x):
        """Backward zeroth-order rate ``c - laplacianV``."""
        ev = self.evaluate(x)
        return ev[3] - ev[2]

    def gibbs_log_density(self, x):
        """Unnormalized ``-2V/temperature``, the log of the c = 0 forward QSD."""
        return -2.0 * np.asarray(self.V(x)) / self.temperature

    def with_c(self, c_cfg: Mapping[str, Any]) -> "ProblemSpec":
        cfg = copy.deepcopy(self.config)
        cfg["c"] = dict(c_cfg)
        return make_problem(cfg)


# ---------------------------------------------------------------------------
# builders


def _potential_tables(pcfg: Mapping[str, Any], box: PeriodicBox):
    d = box.d
    kind = pcfg.get("kind")
    params = dict(pcfg.get("params", {}))
    nser = d + 2
    offsets = np.zeros(nser)
    centers = np.zeros((1, d))
    sigma = 1.0
    user_derivs = None

    if kind == "cosine":
        amp = float(params.get("amplitude", 1.0 / (2 * np.pi)))
        freq = float(params.get("frequency", 1.0))
        base = np.array([_term(0, amp, 0.0, np.eye(d)[i] * freq) for i in range(d)])
    elif kind == "double-well":
        # A cos(4 pi x / L) + B sin(2 pi x / L) along every axis; B tilts the wells
        period = box.period
        A = float(params.get("depth", 0.5 / np.pi))
        B = float(params.get("tilt", 0.0))
        rows = []
        for i in range(d):
            e = np.eye(d)[i]
            rows.append(_term(0, A, 0.0, 2.0 * e / period[i]))
            if B != 0.0:
                rows.append(_term(0, B, -np.pi / 2, e / period[i]))
        base = np.array(rows)
    elif kind == "trig":
        base = _parse_terms(params.get("terms", []), d)
        offsets[0] = float(params.get("offset", 0.0))
        if "gradient" in params or "laplacian" in params:
            user_derivs = params
    elif kind == "constant":
        base = _empty_terms(d)
        offsets[0] = float(params.get("value", 0.0))
    elif kind == "gaussian-mixture-array":
        Kc = int(params.get("K", 4))
        sigma = float(params.get("sigma", 0.1))
        spacing = float(params.get("spacing", 1.0))
        start = np.asarray(params.get("offset", [1.0] * d), dtype=float) * np.ones(d)
        if sigma <= 0:
            raise ConstructionError("gaussian-mixture-array: sigma must be positive")
        if sigma > np.min(box.period) / 12.0:
            raise ConstructionError("gaussian-mixture-array: sigma too wide for the periodic box")
        grids = np.meshgrid(*[start[i] + spacing * np.arange(Kc) for i in range(d)], indexing="ij")
        centers = np.stack([g.ravel() for g in grids], axis=1)
        centers = wrap(centers, box)
        return K.POT_GAUSS, _empty_terms(d), offsets, np.ascontiguousarray(centers), sigma
    else:
        raise ConstructionError(f"unknown potential kind {kind!r}")

    derived = _differentiate(base, d)
    if user_derivs is not None:
        rows = [base]
        grad = user_derivs.get("gradient")
        if grad is None:
            rows.append(derived[derived[:, 0] <= d])
        else:
            if len(grad) != d:
                raise ConstructionError("potential gradient: need one term list per axis")
            for i, g in enumerate(grad):
                rows.append(_parse_terms(g, d, series=1 + i))
        lap = user_derivs.get("laplacian")
        if lap is None:
            rows.append(derived[derived[:, 0] == d + 1])
        else:
            rows.append(_parse_terms(lap, d, series=d + 1))
        terms = np.concatenate(rows, axis=0)
    else:
        terms = np.concatenate([base, derived], axis=0)
    return K.POT_TRIG, np.ascontiguousarray(terms), offsets, centers, sigma


def _c_tables(ccfg: Mapping[str, Any] | None, box: PeriodicBox):
    d = box.d
    offsets = np.zeros(1)
    if ccfg is None:
        return _empty_terms(d), offsets
    kind = ccfg.get("kind", "zero")
    params = dict(ccfg.get("params", {}))
    if kind == "zero":
        terms = _empty_terms(d)
    elif kind == "constant":
        offsets[0] = float(params.get("value", 0.0))
        terms = _empty_terms(d)
    elif kind == "sine":
        # offset + amplitude * sin(2 pi frequency x_axis)
        offsets[0] = float(params.get("offset", 0.0))
        axis = int(params.get("axis", 0))
        freq = np.zeros(d)
        freq[axis] = float(params.get("frequency", 1.0))
        terms = np.array([_term(0, float(params.get("amplitude", 1.0)), -np.pi / 2, freq)])
    elif kind == "trig":
        offsets[0] = float(params.get("offset", 0.0))
        terms = _parse_terms(params.get("terms", []), d)
    else:
        raise ConstructionError(f"unknown c kind {kind!r}")
    return np.ascontiguousarray(terms.reshape(-1, 3 + d)), offsets


def _verify(spec: ProblemSpec, n_probe: int = 100, seed: int = 12345):
    """Finite-difference and periodicity probes; raise naming the failing field."""
    rng = np.random.default_rng(seed)
    box = spec.box
    d = box.d
    X = box.uniform(rng, n_probe)
    V, G, L, C = spec.evaluate(X)
    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(G)) and np.all(np.isfinite(L)) and np.all(np.isfinite(C))):
        raise ConstructionError("potential: non-finite values on probe points")
    delta = 1e-5
    fd = np.empty_like(G)
    for i in range(d):
        e = np.zeros(d)
        e[i] = delta
        fd[:, i] = (spec.V(X + e) - spec.V(X - e)) / (2 * delta)
    tol = 10 * delta * (1 + np.abs(G))
    if np.any(np.abs(fd - G) > tol):
        raise ConstructionError("potential gradient DV is inconsistent with V (finite-difference probe)")
    dl = 1e-4
    lap_fd = np.zeros(len(X))
    for i in range(d):
        e = np.zeros(d)
        e[i] = dl
        lap_fd += (spec.V(X + e) - 2 * V + spec.V(X - e)) / dl**2
    if np.any(np.abs(lap_fd - L) > 1e-3 * (1 + np.abs(L))):
        raise ConstructionError("potential Laplacian laplacianV is inconsistent with V (finite-difference probe)")
    for i in range(d):
        shift = np.zeros(d)
        shift[i] = box.period[i]
        V2, G2, L2, C2 = spec.evaluate(X + shift)
        ref = 1e-9 * (1 + np.abs(V))
        if np.any(np.abs(V2 - V) > ref) or np.any(np.abs(C2 - C) > 1e-9 * (1 + np.abs(C))):
            raise ConstructionError("fields are not periodic under the box")


_PROBLEM_KEYS = {"name", "dimension", "box", "potential", "c", "epsilon", "diffusion_scale", "grid"}


def make_problem(config: Mapping[str, Any], verify: bool = True) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from a JSON-style description.

    Parameters
    ----------
    config : mapping
        Keys: ``name``, ``dimension``, ``box`` ``{lower, upper}``,
        ``potential`` ``{kind, params}``, ``c`` ``{kind, params}``,
        ``epsilon``, ``diffusion_scale``, ``grid`` ``{kind, h | h_min, h_max}``.
        Potential kinds: ``cosine``, ``double-well``,
        ``gaussian-mixture-array``, ``trig``, ``constant``. Rate kinds:
        ``zero``, ``constant``, ``sine``, ``trig``.
    verify : bool
        Run finite-difference consistency probes (default True).

    Returns
    -------
    ProblemSpec

    Raises
    ------
    ConstructionError
        If a field is unknown or the supplied derivatives disagree with V.
    """
    cfg = copy.deepcopy(dict(config))
    unknown = set(cfg) - _PROBLEM_KEYS
    if unknown:
        raise ConstructionError(f"unknown problem fields: {sorted(unknown)}")
    box_cfg = cfg.get("box")
    d = int(cfg.get("dimension", len(box_cfg["lower"]) if box_cfg else 1))
    if box_cfg is None:
        box = PeriodicBox(np.zeros(d), np.ones(d))
    else:
        box = PeriodicBox(box_cfg["lower"], box_cfg["upper"])
    if box.d != d:
        raise ConstructionError("dimension does not match the box")
    eps = float(cfg.get("epsilon", 0.1))
    if not eps > 0:
        raise ConstructionError("epsilon must be positive")
    scale = float(cfg.get("diffusion_scale", 1.0))
    if not scale > 0:
        raise ConstructionError("diffusion_scale must be positive")
    kind, terms, offsets, centers, sigma = _potential_tables(cfg.get("potential", {"kind": "constant"}), box)
    c_terms, c_offsets = _c_tables(cfg.get("c"), box)
    spec = ProblemSpec(
        box=box, epsilon=eps, diffusion_scale=scale, pot_kind=kind,
        pot_terms=terms, pot_offsets=offsets, centers=centers, sigma=sigma,
        c_terms=c_terms, c_offsets=c_offsets,
        grid=GridPolicy.from_config(cfg.get("grid")), name=str(cfg.get("name", "problem")),
        config=cfg,
    )
    if verify:
        _verify(spec)
    return spec


def load_problem(path) -> ProblemSpec:
    with open(Path(path)) as fh:
        cfg = json.load(fh)
    return make_problem(cfg.get("problem", cfg))


def cosine_problem(epsilon: float = 0.2, c: Mapping[str, Any] | None = None,
                   h: float = 0.05, name: str = "cosine") -> ProblemSpec:
    """Cosine potential ``cos(2 pi x)/(2 pi)`` on ``[-1, 1)`` with sqrt(2 eps) noise."""
    return make_problem({
        "name": name, "dimension": 1, "box": {"lower": [-1.0], "upper": [1.0]},
        "potential": {"kind": "cosine", "params": {}},
        "c": dict(c) if c is not None else {"kind": "zero"},
        "epsilon": epsilon, "diffusion_scale": 2.0, "grid": {"kind": "fixed", "h": h},
    })


def gaussian_mixture_problem(epsilon: float = 0.4, sigma: float = 0.1, K_per_axis: int = 4,
                             h_min: float = 0.05, h_max: float = 0.15) -> ProblemSpec:
    """``K x K`` array of Gaussian wells centred at ``1..K`` on ``[0, K)^2``."""
    return make_problem({
        "name": "gaussian-mixture", "dimension": 2,
        "box": {"lower": [0.0, 0.0], "upper": [float(K_per_axis)] * 2},
        "potential": {"kind": "gaussian-mixture-array",
                      "params": {"K": K_per_axis, "sigma": sigma, "spacing": 1.0, "offset": [1.0, 1.0]}},
        "c": {"kind": "zero"}, "epsilon": epsilon, "diffusion_scale": 2.0,
        "grid": {"kind": "uniform", "h_min": h_min, "h_max": h_max},
    })
