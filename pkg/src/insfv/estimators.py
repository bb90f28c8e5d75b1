"""Estimators built from engine trajectories.

The weighted empirical measure of an infinite-swapping run puts, for every
record and pair, mass ``dt * rho`` on ``(x, y)`` and ``dt * (1 - rho)`` on
``(y, x)``. The first coordinate of an atom is read as a forward
(QSD) sample and the second as a backward one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import InvalidInputError, PeriodicBox, ProblemSpec, as_generator
from .engines import WeightedTrajectory

N_BATCHES = 20


@dataclass
class WeightedEmpirical:
    """Weighted atoms ``(first, second, weight)``.

    ``first`` holds forward-role points and ``second`` backward-role points;
    either is ``None`` when the trajectory did not simulate that side.
    ``time`` is the start time of the record each atom came from.
    ``lattice_step`` is the fixed jump size of the run, if any.
    """

    first: np.ndarray | None
    second: np.ndarray | None
    weights: np.ndarray
    time: np.ndarray
    t_start: float
    t_end: float
    normalization: float
    lattice_step: float | None = None
    n_records: int = 0
    n_events: int = 0

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    def points(self, axis: str = "x") -> np.ndarray:
        pts = self.first if axis in ("x", "first", "forward") else self.second
        if pts is None:
            raise InvalidInputError(f"empirical measure has no {axis!r} coordinate")
        return pts


def weighted_empirical(traj: WeightedTrajectory, burn_in: float = 0.1) -> WeightedEmpirical:
    """Time-weighted empirical measure of a trajectory after burn-in.

    Parameters
    ----------
    traj : WeightedTrajectory
    burn_in : float
        Fraction of ``[0, T]`` discarded; a record straddling the cut keeps
        the part of its holding time after it.

    Returns
    -------
    WeightedEmpirical
        Weights sum to 1.
    """
    if traj.n_records == 0:
        raise InvalidInputError("empty trajectory")
    if not 0 <= burn_in < 1:
        raise InvalidInputError("burn_in must be in [0, 1)")
    t0 = burn_in * traj.T
    start = np.maximum(traj.t, t0)
    end = traj.t + traj.dt
    dt = np.clip(end - start, 0.0, None)
    keep = dt > 0
    if not np.any(keep):
        raise InvalidInputError("no holding time left after burn-in")
    dt = dt[keep]
    tt = start[keep]
    N = traj.N
    d = traj.d
    if traj.engine == "ins":
        rho = traj.rho[keep]
        X = traj.x[keep].reshape(-1, d)
        Y = traj.y[keep].reshape(-1, d)
        w1 = (dt[:, None] * rho).ravel()
        w2 = (dt[:, None] * (1.0 - rho)).ravel()
        first = np.concatenate([X, Y])
        second = np.concatenate([Y, X])
        w = np.concatenate([w1, w2])
        times = np.concatenate([np.repeat(tt, N)] * 2)
    else:
        first = traj.x[keep].reshape(-1, d) if traj.x is not None else None
        second = traj.y[keep].reshape(-1, d) if traj.y is not None else None
        w = np.repeat(dt, N)
        times = np.repeat(tt, N)
    total = float(w.sum())
    return WeightedEmpirical(first, second, w / total, times, t0, traj.T, total,
                             traj.lattice_step, int(keep.sum()), traj.n_events)


@dataclass(frozen=True)
class EigenEstimate:
    """Eigenvalue estimate with batch-means standard error (NaN if unavailable)."""

    lambda_hat: float
    std_error: float
    n_events: int
    side: str = "forward"

    def to_dict(self) -> dict:
        se = None if not np.isfinite(self.std_error) else self.std_error
        return {"lambda_hat": self.lambda_hat, "std_error": se, "n_events": self.n_events, "side": self.side}


def batch_means(values: np.ndarray, weights: np.ndarray, times: np.ndarray, t_start: float,
                t_end: float, n_batches: int = N_BATCHES) -> tuple[float, float]:
    """Weighted mean and batch-means standard error over equal time windows."""
    mean = float(np.sum(weights * values) / np.sum(weights))
    edges = np.linspace(t_start, t_end, n_batches + 1)
    idx = np.clip(np.searchsorted(edges, times, side="right") - 1, 0, n_batches - 1)
    wb = np.bincount(idx, weights=weights, minlength=n_batches)
    vb = np.bincount(idx, weights=weights * values, minlength=n_batches)
    ok = wb > 0
    if ok.sum() < n_batches:
        return mean, float("nan")
    means = vb[ok] / wb[ok]
    return mean, float(np.std(means, ddof=1) / np.sqrt(ok.sum()))


def eigenvalue_estimate(emp: WeightedEmpirical, spec: ProblemSpec, side: str = "forward",
                        n_batches: int = N_BATCHES) -> EigenEstimate:
    """Principal eigenvalue from the eigenvalue identity.

    The forward side integrates ``c`` against the first coordinate, the
    backward side ``c - laplacianV`` against the second.
    """
    if side == "forward":
        vals = np.atleast_1d(spec.c(emp.points("first")))
    elif side == "backward":
        vals = np.atleast_1d(spec.cbar(emp.points("second")))
    else:
        raise InvalidInputError(f"unknown side {side!r}")
    lam, se = batch_means(vals, emp.weights, emp.time, emp.t_start, emp.t_end, n_batches)
    if emp.n_records < n_batches:
        se = float("nan")
    if side == "forward" and not np.any(vals):
        lam = 0.0
    return EigenEstimate(lam, se, emp.n_events, side)


# ---------------------------------------------------------------------------
# histograms


@dataclass
class DensityTable:
    """Histogram density on a regular grid over a box.

    ``density`` has shape ``(bins,) * d`` and integrates to 1 against
    ``bin_volume``.
    """

    edges: list
    density: np.ndarray

    @property
    def bin_volume(self) -> float:
        return float(np.prod([e[1] - e[0] for e in self.edges]))

    @property
    def centers(self) -> list:
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]

    @property
    def probabilities(self) -> np.ndarray:
        return self.density * self.bin_volume

    def to_csv(self, path) -> None:
        d = len(self.edges)
        mesh = np.meshgrid(*self.centers, indexing="ij")
        table = np.column_stack([m.ravel() for m in mesh] + [self.density.ravel()])
        header = ",".join([f"x_{i + 1}" for i in range(d)] + ["density"])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def _axis_deposit(z, lo, period, bins, width):
    """Bin indices and overlap fractions of ``[z - width/2, z + width/2)``."""
    bw = period / bins
    if width is None or width <= 0:
        k = np.floor((z - lo) / bw).astype(np.int64) % bins
        return [(k, np.ones_like(z))]
    a = z - 0.5 * width - lo
    k0 = np.floor(a / bw).astype(np.int64)
    pieces = []
    for j in range(int(np.ceil(width / bw)) + 1):
        k = k0 + j
        left = np.maximum(k * bw, a)
        right = np.minimum((k + 1) * bw, a + width)
        frac = np.clip(right - left, 0.0, None) / width
        pieces.append((k % bins, frac))
    return pieces


def histogram_points(points: np.ndarray, weights: np.ndarray, box: PeriodicBox, bins: int = 50,
                     deposit_width: float | None = None) -> DensityTable:
    """Weighted histogram on the box; each point optionally spread over a cell.

    With ``deposit_width`` set, each atom's mass is spread uniformly over
    ``[z - w/2, z + w/2)`` on every axis instead of dropped into one bin.
    """
    if bins < 2:
        raise InvalidInputError("need at least 2 bins")
    pts = np.asarray(points, dtype=float).reshape(len(weights), -1)
    d = pts.shape[1]
    per_axis = [_axis_deposit(pts[:, i], box.lower[i], box.period[i], bins, deposit_width) for i in range(d)]
    flat = np.zeros(bins**d)
    strides = [bins ** (d - 1 - i) for i in range(d)]

    def accumulate(axis, index, frac):
        if axis == d:
            flat[:] += np.bincount(index, weights=weights * frac, minlength=bins**d)
            return
        for k, f in per_axis[axis]:
            accumulate(axis + 1, index + k * strides[axis], frac * f)

    accumulate(0, np.zeros(len(weights), dtype=np.int64), np.ones(len(weights)))
    edges = [np.linspace(box.lower[i], box.upper[i], bins + 1) for i in range(d)]
    prob = flat / flat.sum()
    vol = float(np.prod(box.period / bins))
    return DensityTable(edges, prob.reshape((bins,) * d) / vol)


def marginal_histogram(emp: WeightedEmpirical, box: PeriodicBox, axis: str = "x", bins: int = 50,
                       deposit: str | float | None = "auto") -> DensityTable:
    """Histogram of the forward (``"x"``) or backward (``"y"``) marginal.

    ``deposit="auto"`` spreads each atom over its lattice cell when the run
    used a fixed jump size ``h``: a fixed-``h`` chain only visits points of a
    lattice of spacing ``h``, and binning those points directly aliases
    against bins of a different width. A float sets the cell width, ``None``
    disables spreading.
    """
    width = emp.lattice_step if deposit == "auto" else deposit
    return histogram_points(emp.points(axis), emp.weights, box, bins, width)


def density_table(fn, box: PeriodicBox, bins: int = 50, refine: int = 64) -> DensityTable:
    """Bin-averaged density of an unnormalized callable ``fn`` (d <= 2)."""
    d = box.d
    sub = bins * refine
    axes = [box.lower[i] + (np.arange(sub) + 0.5) * box.period[i] / sub for i in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.asarray(fn(np.stack([m.ravel() for m in mesh], axis=1)), dtype=float).reshape((sub,) * d)
    for i in range(d):
        shape = list(vals.shape)
        shape[i : i + 1] = [bins, refine]
        vals = vals.reshape(shape).sum(axis=i + 1)
    prob = vals / vals.sum()
    edges = [np.linspace(box.lower[i], box.upper[i], bins + 1) for i in range(d)]
    return DensityTable(edges, prob / float(np.prod(box.period / bins)))


def total_variation(h1: DensityTable, h2: DensityTable) -> float:
    """``(1/2) sum |h1 - h2| * bin_volume`` for tables on the same bins."""
    if h1.density.shape != h2.density.shape or not all(
            np.allclose(a, b) for a, b in zip(h1.edges, h2.edges)):
        raise InvalidInputError("density tables must share the bin layout")
    return float(0.5 * np.sum(np.abs(h1.density - h2.density)) * h1.bin_volume)


# ---------------------------------------------------------------------------
# resampling and occupancy


def resample(emp: WeightedEmpirical, m: int, seed=0, axis: str = "x") -> np.ndarray:
    """``m`` iid atoms drawn by weight, returned as points of the chosen side."""
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    gen = as_generator(seed)
    idx = gen.choice(emp.n_atoms, size=m, replace=True, p=emp.weights)
    return emp.points(axis)[idx].copy()


def write_points_csv(path, points: np.ndarray) -> None:
    pts = np.atleast_2d(points)
    header = ",".join(f"x_{i + 1}" for i in range(pts.shape[1]))
    np.savetxt(path, pts, delimiter=",", header=header, comments="", fmt="%.17g")


def read_points_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def modes_covered(points: np.ndarray, centers: np.ndarray, radius: float, box: PeriodicBox) -> int:
    """Number of centers with at least one point within ``radius`` (periodic distance)."""
    pts = np.atleast_2d(points)
    diff = pts[:, None, :] - centers[None, :, :]
    diff -= box.period * np.round(diff / box.period)
    hit = np.sqrt(np.sum(diff**2, axis=2)) <= radius
    return int(np.sum(np.any(hit, axis=0)))


def well_occupancy(traj: WeightedTrajectory, window: float, split: float = 0.0,
                   threshold: float = 0.05) -> dict:
    """Forward-role occupancy of two wells ``{x < split}``, ``{x >= split}``.

    For each window of length ``window`` the time-averaged forward mass in
    each well is computed (particles weighted by ``rho``, partners by
    ``1 - rho``); a well counts as occupied in a window when its mass
    exceeds ``threshold``.

    Returns
    -------
    dict
        ``mass`` (windows x 2), ``occupied_count`` per window,
        ``occupancy_fraction`` per well (share of windows it is occupied) and
        ``time_fraction`` per well (forward mass averaged over the whole run).
    """
    w_edges = np.arange(0.0, traj.T + 1e-12, window)
    if w_edges[-1] < traj.T - 1e-12:
        w_edges = np.append(w_edges, traj.T)
    nw = len(w_edges) - 1
    mass = np.zeros((nw, 2))
    t0 = traj.t
    t1 = traj.t + traj.dt
    if traj.engine == "ins":
        rw = traj.rho
        left = (traj.x[:, :, 0] < split) * rw + (traj.y[:, :, 0] < split) * (1 - rw)
    else:
        pts = traj.x if traj.x is not None else traj.y
        left = (pts[:, :, 0] < split).astype(float)
    frac_left = left.mean(axis=1)
    for k in range(nw):
        a, b = w_edges[k], w_edges[k + 1]
        ov = np.clip(np.minimum(t1, b) - np.maximum(t0, a), 0.0, None)
        tot = ov.sum()
        if tot > 0:
            mass[k, 0] = np.sum(ov * frac_left) / tot
            mass[k, 1] = 1.0 - mass[k, 0]
    occ = mass > threshold
    ov = np.clip(np.minimum(t1, traj.T) - t0, 0.0, None)
    total_left = float(np.sum(ov * frac_left) / ov.sum())
    return {"mass": mass, "occupied_count": occ.sum(axis=1),
            "occupancy_fraction": occ.mean(axis=0), "window_edges": w_edges,
            "time_fraction": np.array([total_left, 1.0 - total_left])}


def write_estimates_json(path, estimates: dict) -> None:
    with open(Path(path), "w") as fh:
        json.dump(estimates, fh, indent=2, sort_keys=True)
