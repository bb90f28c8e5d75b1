"""Particle engines: standard, finite-swap and infinite-swapping Fleming-Viot.

All three share the event loop of a continuous-time jump process with one
exponential clock per particle slot. When a slot fires, one uniform decides
between a dynamics jump (probability ``sum(dyn) / net``) and a kill/clone
event, and only the slots whose state changed get new rates and clocks.

In the infinite-swapping system each particle's role (forward or backward)
is not tracked; instead a particle at ``x`` paired with ``y`` moves with the
role-averaged drift ``(1 - 2 rho) DV`` and kill/clone rate
``rho c + (1 - rho)(c - laplacianV)``, where ``rho`` is the swap weight.

Rebirth options for the infinite-swapping engine (``rebirth=``):

``"literal"``
    Nested coins: a role coin with probability ``rho``, then a member coin
    whose test is ``u < w`` in the forward branch and ``u < 1 - w`` (taking
    the other member) in the backward branch. Both branches end up taking the
    same-side member of the partner pair with probability equal to that
    member's forward weight ``w``, so the role coin has no effect.
``"weighted"``
    Role drawn with probability ``rho``; donor/victim member drawn with the
    partner's weight for that role.
``"resolved"``
    Forward and backward kill/clone channels get separate rates
    ``rho c`` and ``(1 - rho) cbar``, so the role of the event is known;
    donor/victim member drawn with the partner's weight for that role.
``"pooled"`` (default)
    As ``"resolved"``, but the fired particle's own pair is part of the
    donor/victim pool, so rebirth samples the full role-weighted empirical
    measure. This mirrors standard Fleming-Viot, where a particle may pick
    itself, and lowers the finite-N bias of the backward eigenvalue
    estimate relative to ``"resolved"``.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .core import GridPolicy, InvalidInputError, ProblemSpec, RngStream, as_generator, wrap
from .jump import SCHEMES, RateVector, transition_rates
from .swap import swap_weight_from_values

REBIRTH_MODES = {"literal": K.REBIRTH_LITERAL, "weighted": K.REBIRTH_WEIGHTED,
                 "resolved": K.REBIRTH_RESOLVED, "pooled": K.REBIRTH_POOLED}
EVENT_NAMES = ("dynamics", "kill", "clone", "stay", "swap")
DEFAULT_REBIRTH = "pooled"


# ---------------------------------------------------------------------------
# state types


@dataclass
class ParticlePair:
    x: np.ndarray
    y: np.ndarray
    rho: float


@dataclass(frozen=True)
class EventRates:
    """Rates of one particle slot.

    ``kc`` is the signed kill/clone rate (positive: kill then clone,
    negative: clone then kill); ``kc_forward + kc_backward == kc``.
    """

    dyn: RateVector
    kc: float
    net: float
    kc_forward: float = 0.0
    kc_backward: float = 0.0

    @property
    def total_dynamics(self) -> float:
        return self.dyn.total


def event_rates(p, rho: float, spec: ProblemSpec, h: float, scheme: str = "auto") -> EventRates:
    """Rates of a particle at ``p`` whose forward-role weight is ``rho``.

    ``rho = 1`` gives the forward chain (drift ``-DV``, rate ``c``) and
    ``rho = 0`` the backward one (drift ``+DV``, rate ``c - laplacianV``).
    """
    _, G, L, C = spec.evaluate(np.atleast_1d(p))
    b = (1.0 - 2.0 * rho) * np.atleast_1d(G)
    dyn = transition_rates(p, b, spec.a, h, scheme)
    kf = rho * float(C)
    kb = (1.0 - rho) * float(C - L)
    kc = float(C) - (1.0 - rho) * float(L)
    return EventRates(dyn, kc, dyn.total + abs(kc), kf, kb)


@dataclass
class EnsembleState:
    """Positions of ``N`` pairs with their swap weights and residual clocks.

    Slot ``i < N`` is ``x[i]``; slot ``N + i`` is ``y[i]``.
    """

    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    clocks: np.ndarray
    t_now: float = 0.0
    event_log: dict = field(default_factory=lambda: {k: 0 for k in EVENT_NAMES})

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def pairs(self) -> list[ParticlePair]:
        return [ParticlePair(self.x[i].copy(), self.y[i].copy(), float(self.rho[i])) for i in range(self.N)]

    @classmethod
    def from_positions(cls, x, y, spec: ProblemSpec) -> "EnsembleState":
        x = np.array(x, dtype=float).reshape(-1, spec.d)
        y = np.array(y, dtype=float).reshape(-1, spec.d)
        st = cls(x, y, np.empty(x.shape[0]), np.full(2 * x.shape[0], np.inf))
        st.refresh(range(st.N), spec)
        return st

    def refresh(self, indices, spec: ProblemSpec) -> None:
        for i in indices:
            self.rho[i] = swap_weight_from_values(spec.V(self.x[i]), spec.V(self.y[i]), spec.temperature)


def kill_clone(state: EnsembleState, slot: int, c_symm: float, rng, spec: ProblemSpec,
               mode: str = "literal", role: int | None = None):
    """Apply a kill/clone event fired by ``slot`` to ``state`` in place.

    Parameters
    ----------
    state : EnsembleState
    slot : int
        ``i`` for ``x[i]``, ``N + i`` for ``y[i]``.
    c_symm : float
        Signed rate; ``> 0`` kills the fired particle and copies a donor onto
        it, ``< 0`` copies the fired particle onto a victim.
    rng : RngStream, Generator or int
    mode : {"literal", "weighted", "resolved", "pooled"}
    role : {None, 0, 1}
        Known role of the event (1 forward, 0 backward); ``None`` draws it.

    Returns
    -------
    state, tuple
        The updated state and the pair indices whose rates must be recomputed.
    """
    N = state.N
    if not 0 <= slot < 2 * N:
        raise InvalidInputError("slot out of range")
    if c_symm == 0:
        raise InvalidInputError("kill/clone needs a nonzero rate")
    flip = slot >= N
    i = slot - N if flip else slot
    p1, p2 = (state.y, state.x) if flip else (state.x, state.y)
    ip, outcome = K.kill_clone(p1, p2, state.rho, flip, i, float(c_symm), REBIRTH_MODES[mode],
                               -1 if role is None else int(role), as_generator(rng))
    state.event_log[EVENT_NAMES[outcome]] += 1
    touched = (i, ip) if (outcome == K.EV_CLONE and ip != i) else (i,)
    state.refresh(touched, spec)
    return state, touched


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class WeightedTrajectory:
    """Snapshots of an engine run.

    Record ``k`` holds the state right after event ``event_index[k]``, the
    time ``t[k]`` it was reached and ``dt[k]``, the time until the next record
    (the last one is clipped so the holding times sum to ``T``).

    ``x`` holds forward particles and ``y`` backward ones; a standard
    Fleming-Viot run fills only the side it simulates. ``rho`` is present for
    the infinite-swapping engine only.
    """

    engine: str
    t: np.ndarray
    dt: np.ndarray
    event_index: np.ndarray
    x: np.ndarray | None
    y: np.ndarray | None
    rho: np.ndarray | None
    T: float
    event_counts: dict
    n_events: int
    rate_integral: float
    seed: int | None = None
    stride: int = 1
    lattice_step: float | None = None
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_records(self) -> int:
        return self.t.shape[0]

    @property
    def N(self) -> int:
        arr = self.x if self.x is not None else self.y
        return arr.shape[1]

    @property
    def d(self) -> int:
        arr = self.x if self.x is not None else self.y
        return arr.shape[2]

    def to_csv(self, path) -> None:
        write_trajectory_csv(path, self)


def _trajectory_columns(traj: WeightedTrajectory):
    R, N, d = traj.n_records, traj.N, traj.d
    cols = [np.repeat(traj.event_index, N).astype(float), np.repeat(traj.t, N), np.repeat(traj.dt, N),
            np.tile(np.arange(N), R).astype(float)]
    names = ["event_index", "t", "holding_dt", "pair_id"]
    for side, arr in (("x", traj.x), ("y", traj.y)):
        for k in range(d):
            names.append(f"{side}_{k + 1}")
            cols.append(arr[:, :, k].ravel() if arr is not None else np.full(R * N, np.nan))
    names.append("rho")
    if traj.rho is not None:
        cols.append(traj.rho.ravel())
    elif traj.engine == "finite-swap":
        cols.append(np.ones(R * N))
    else:
        cols.append(np.full(R * N, np.nan))
    return names, np.column_stack(cols)


def write_trajectory_csv(path, traj: WeightedTrajectory) -> None:
    """Columns ``event_index, t, holding_dt, pair_id, x_1..x_d, y_1..y_d, rho``.

    Floats are written with 17 significant digits so the file round-trips
    exactly and identical runs give identical bytes.
    """
    names, table = _trajectory_columns(traj)
    fmt = ["%d", "%.17g", "%.17g", "%d"] + ["%.17g"] * (table.shape[1] - 4)
    with open(Path(path), "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, table, delimiter=",", fmt=fmt)


def read_trajectory_csv(path, engine: str = "ins", T: float | None = None) -> WeightedTrajectory:
    """Inverse of :func:`write_trajectory_csv` (event counts are not stored)."""
    with open(Path(path)) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    col = {n: j for j, n in enumerate(names)}
    pair = data[:, col["pair_id"]].astype(int)
    N = int(pair.max()) + 1
    R = data.shape[0] // N
    d = sum(1 for n in names if n.startswith("x_"))

    def side(s):
        arr = np.stack([data[:, col[f"{s}_{k + 1}"]] for k in range(d)], axis=1).reshape(R, N, d)
        return None if np.all(np.isnan(arr)) else arr

    rho = data[:, col["rho"]].reshape(R, N)
    t = data[::N, col["t"]]
    dt = data[::N, col["holding_dt"]]
    return WeightedTrajectory(
        engine=engine, t=t, dt=dt, event_index=data[::N, col["event_index"]].astype(np.int64),
        x=side("x"), y=side("y"), rho=None if (engine != "ins" or np.all(np.isnan(rho))) else rho,
        T=float(T if T is not None else t[-1] + dt[-1]), event_counts={}, n_events=int(data[-1, 0]),
        rate_integral=np.nan,
    )


# ---------------------------------------------------------------------------
# engines


def _initial(spec: ProblemSpec, N: int, gen, given):
    if given is None:
        return spec.box.uniform(gen, N)
    arr = wrap(np.array(given, dtype=float).reshape(N, spec.d), spec.box)
    return np.ascontiguousarray(arr)


def _counts(arr) -> dict:
    return {name: int(arr[k]) for k, name in enumerate(EVENT_NAMES)}


def _capacity(spec, N, T, grid, stride):
    h = grid.h if grid.kind == "fixed" else grid.h_min
    est = 2 * N * spec.d * spec.noise_variance / h**2 * T / stride
    return int(min(max(1024, est * 1.2), 4_000_000))


def _check_common(N, T, stride):
    if not T > 0:
        raise InvalidInputError("T must be positive")
    if int(stride) < 1:
        raise InvalidInputError("stride must be >= 1")
    if N < 1:
        raise InvalidInputError("N must be at least 1")


def simulate_ins(spec: ProblemSpec, N: int, T: float, grid: GridPolicy | None = None, seed=0, *,
                 rebirth: str = DEFAULT_REBIRTH, stride: int = 1, scheme: str = "auto",
                 x0=None, y0=None) -> WeightedTrajectory:
    """Infinite-swapping Fleming-Viot system of ``N`` forward/backward pairs.

    Parameters
    ----------
    spec : ProblemSpec
    N : int
        Number of pairs, ``>= 2``.
    T : float
        Time horizon.
    grid : GridPolicy, optional
        Defaults to ``spec.grid``.
    seed : int, RngStream or Generator
    rebirth : {"literal", "weighted", "resolved", "pooled"}
        Kill/clone rule, see the module docstring.
    stride : int
        Keep every ``stride``-th event as a record.
    scheme : {"auto", "central", "upwind"}
    x0, y0 : array_like, optional
        Initial positions, uniform on the box by default.

    Returns
    -------
    WeightedTrajectory
    """
    _check_common(N, T, stride)
    if N < 2:
        raise InvalidInputError("the infinite-swapping engine needs N >= 2")
    grid = grid or spec.grid
    gen = as_generator(seed)
    x = _initial(spec, N, gen, x0)
    y = _initial(spec, N, gen, y0)
    gk, h0, hmin, hmax = grid.kernel_args()
    t0 = _time.perf_counter()
    rt, rdt, rk, rx, ry, rr, cnt, n, ri = K.run_ins(
        spec.fields, x, y, float(T), spec.a, spec.temperature, gk, h0, hmin, hmax,
        SCHEMES[scheme], REBIRTH_MODES[rebirth], gen, int(stride), _capacity(spec, N, T, grid, stride))
    return WeightedTrajectory(
        "ins", rt, rdt, rk, rx, ry, rr, float(T), _counts(cnt), int(n), float(ri),
        seed=seed if isinstance(seed, (int, np.integer)) else None, stride=int(stride),
        lattice_step=grid.h if grid.kind == "fixed" else None, wall_time=_time.perf_counter() - t0,
        meta={"rebirth": rebirth, "scheme": scheme, "N": N},
    )


def simulate_standard_fv(spec: ProblemSpec, N: int, T: float, direction: str = "forward",
                         grid: GridPolicy | None = None, seed=0, *, stride: int = 1,
                         scheme: str = "auto", x0=None) -> WeightedTrajectory:
    """Uncoupled Fleming-Viot system of ``N`` particles.

    ``direction="forward"`` uses drift ``-DV`` and rate ``c``;
    ``"backward"`` uses drift ``+DV`` and rate ``c - laplacianV``. A killed
    particle jumps onto a uniformly chosen particle (staying put when it
    picks itself); a cloning particle overwrites a uniformly chosen one.
    With ``N = 1`` every kill/clone event is a stay.
    """
    _check_common(N, T, stride)
    if direction not in ("forward", "backward"):
        raise InvalidInputError(f"unknown direction {direction!r}")
    grid = grid or spec.grid
    gen = as_generator(seed)
    p = _initial(spec, N, gen, x0)
    gk, h0, hmin, hmax = grid.kernel_args()
    sign = 1 if direction == "forward" else -1
    t0 = _time.perf_counter()
    rt, rdt, rk, rp, cnt, n, ri = K.run_standard_fv(
        spec.fields, p, sign, float(T), spec.a, gk, h0, hmin, hmax, SCHEMES[scheme], gen,
        int(stride), _capacity(spec, N / 2, T, grid, stride))
    fwd = direction == "forward"
    return WeightedTrajectory(
        "standard-fv", rt, rdt, rk, rp if fwd else None, None if fwd else rp, None, float(T),
        _counts(cnt), int(n), float(ri), seed=seed if isinstance(seed, (int, np.integer)) else None,
        stride=int(stride), lattice_step=grid.h if grid.kind == "fixed" else None,
        wall_time=_time.perf_counter() - t0, meta={"direction": direction, "scheme": scheme, "N": N},
    )


def simulate_finite_swap(spec: ProblemSpec, N: int, K_swap: float, T: float,
                         grid: GridPolicy | None = None, seed=0, *, stride: int = 1,
                         scheme: str = "auto", x0=None, y0=None) -> WeightedTrajectory:
    """Forward and backward Fleming-Viot systems with pairwise location swaps.

    Pair ``i`` exchanges ``x[i]`` and ``y[i]`` at rate
    ``K_swap * exp(-(2V(y) - 2V(x))^+ / temperature)``. Rebirth stays within
    each side.
    """
    _check_common(N, T, stride)
    if not K_swap > 0:
        raise InvalidInputError("swap intensity must be positive")
    grid = grid or spec.grid
    gen = as_generator(seed)
    x = _initial(spec, N, gen, x0)
    y = _initial(spec, N, gen, y0)
    gk, h0, hmin, hmax = grid.kernel_args()
    t0 = _time.perf_counter()
    rt, rdt, rk, rx, ry, cnt, n, ri = K.run_finite_swap(
        spec.fields, x, y, float(K_swap), float(T), spec.a, spec.temperature, gk, h0, hmin, hmax,
        SCHEMES[scheme], gen, int(stride), _capacity(spec, N, T, grid, stride))
    return WeightedTrajectory(
        "finite-swap", rt, rdt, rk, rx, ry, None, float(T), _counts(cnt), int(n), float(ri),
        seed=seed if isinstance(seed, (int, np.integer)) else None, stride=int(stride),
        lattice_step=grid.h if grid.kind == "fixed" else None, wall_time=_time.perf_counter() - t0,
        meta={"K": K_swap, "scheme": scheme, "N": N},
    )
