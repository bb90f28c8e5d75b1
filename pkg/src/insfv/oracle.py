"""Grid reference for the principal eigenpair.

The jump chain restricted to a cell-centred periodic grid of spacing
``h = period / n`` is a finite-state chain; together with the killing rate it
gives a sparse generator ``G = Q - diag(out-rate) - diag(killing)``. Its
Perron pair is computed by shifted inverse power iteration.

The backward operator is assembled as the exact transpose of the forward one
(``direction="backward"``), so both share one spectrum. Its killing rate
``c - s_h``, where ``s_h`` is the net inflow of the forward chain into each
node, is the grid version of ``c - laplacianV``. ``backward_mode="direct"``
instead builds the backward chain from its own jump rates, for comparisons
that should agree only up to grid error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import InvalidInputError, ProblemSpec
from .jump import transition_rates


class UnsupportedDimensionError(InvalidInputError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class GeneratorMatrix:
    """Sparse generator on an ``n``-per-axis grid.

    Attributes
    ----------
    n : int
    points : ndarray, shape (n**d, d)
        Grid nodes in C order.
    entries : scipy.sparse.csr_matrix
    killing : ndarray
        Zeroth-order rate at each node so that ``rowsum + killing == 0``.
    direction : str
    h : float
    """

    n: int
    points: np.ndarray
    entries: sp.csr_matrix
    killing: np.ndarray
    direction: str
    h: float
    cell_volume: float

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def grid_points(spec: ProblemSpec, n: int) -> np.ndarray:
    box = spec.box
    axes = [box.lower[i] + (np.arange(n) + 0.5) * box.period[i] / n for i in range(box.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _neighbour_index(n: int, d: int):
    idx = np.arange(n**d).reshape((n,) * d)
    plus = [np.roll(idx, -1, axis=k).ravel() for k in range(d)]
    minus = [np.roll(idx, 1, axis=k).ravel() for k in range(d)]
    return plus, minus


def _assemble(spec: ProblemSpec, n: int, drift_sign: float, killing: np.ndarray,
              scheme: str, points: np.ndarray):
    d = spec.d
    if not np.allclose(spec.box.period, spec.box.period[0]):
        raise InvalidInputError("grid oracle assumes equal periods on all axes")
    h = float(spec.box.period[0]) / n
    _, G, _, _ = spec.evaluate(points)
    G = np.atleast_2d(G)
    m = points.shape[0]
    rates = np.empty((m, 2 * d))
    for j in range(m):
        rates[j] = transition_rates(points[j], drift_sign * G[j], spec.a, h, scheme).rates
    plus, minus = _neighbour_index(n, d)
    rows, cols, vals = [], [], []
    rng_idx = np.arange(m)
    for k in range(d):
        rows += [rng_idx, rng_idx]
        cols += [plus[k], minus[k]]
        vals += [rates[:, k], rates[:, d + k]]
    Q = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
    out = np.asarray(Q.sum(axis=1)).ravel()
    return Q, out, h


def build_generator(spec: ProblemSpec, n: int, direction: str = "forward",
                    scheme: str = "auto", backward_mode: str = "adjoint") -> GeneratorMatrix:
    """Generator of the grid chain with killing.

    Parameters
    ----------
    spec : ProblemSpec
        Problem with ``d <= 2`` and equal periods.
    n : int
        Nodes per axis, ``>= 8``.
    direction : {"forward", "backward"}
        Forward uses drift ``-DV`` and killing ``c``.
    scheme : {"auto", "central", "upwind"}
        Jump-rate rule passed to :func:`insfv.jump.transition_rates`.
    backward_mode : {"adjoint", "direct"}
        How the backward operator is obtained (see module docstring).
    """
    if spec.d > 2:
        raise UnsupportedDimensionError("grid oracle supports d <= 2 only")
    if n < 8:
        raise InvalidInputError("need at least 8 grid points per axis")
    if direction not in ("forward", "backward"):
        raise InvalidInputError(f"unknown direction {direction!r}")
    pts = grid_points(spec, n)
    c = np.atleast_1d(spec.c(pts))
    cell = float(np.prod(spec.box.period / n))
    if direction == "forward" or backward_mode == "adjoint":
        Q, out, h = _assemble(spec, n, -1.0, c, scheme, pts)
        if direction == "forward":
            kill = c
        else:
            Q = Q.T.tocsr()
            kill = c + out - np.asarray(Q.sum(axis=1)).ravel()
    elif backward_mode == "direct":
        Q, out, h = _assemble(spec, n, 1.0, c, scheme, pts)
        kill = np.atleast_1d(spec.cbar(pts))
    else:
        raise InvalidInputError(f"unknown backward_mode {backward_mode!r}")
    out = np.asarray(Q.sum(axis=1)).ravel()
    A = (Q - sp.diags(out + kill)).tocsr()
    return GeneratorMatrix(n, pts, A, kill, direction, h, cell)


@dataclass
class EigenPair:
    """Principal eigenvalue with the left (density) and right eigenvectors.

    Iterating yields ``(lam, vector)``.
    """

    lam: float
    vector: np.ndarray
    right: np.ndarray
    residual: float
    iterations: int

    def __iter__(self):
        yield self.lam
        yield self.vector


def _inverse_iteration(lu, solve_kw, v0, matvec, tol, max_iter):
    v = v0 / v0.sum()
    lam = np.nan
    res = np.inf
    for it in range(1, max_iter + 1):
        w = lu.solve(v, **solve_kw)
        w = np.abs(w)
        v = w / w.sum()
        Av = matvec(v)
        lam = -float(np.dot(Av, np.ones_like(v)))  # v sums to 1
        res = float(np.max(np.abs(-Av - lam * v)))
        if res <= tol:
            return v, lam, res, it
    raise NumericalFailure(f"inverse iteration did not converge in {max_iter} steps (residual {res:.3e})")


def principal_eigenpair(G: GeneratorMatrix, tol: float = 1e-10, max_iter: int = 10_000) -> EigenPair:
    """Perron pair ``(lambda, density)`` with ``density @ (-G) = lambda density``.

    ``lambda`` is the principal eigenvalue of ``-G`` and ``density`` the
    positive left eigenvector normalized to sum 1 (the grid QSD). ``right`` is
    the positive right eigenvector, normalized to mean 1.

    The shift ``mu = -min(killing) + delta`` lies above the Perron value of
    ``G`` so ``mu I - G`` is a nonsingular M-matrix whose inverse has the
    Perron pair as its fastest-growing mode.
    """
    A = G.entries
    m = A.shape[0]
    delta = 1e-6 * (1.0 + float(np.max(np.abs(A.diagonal()))))
    mu = -float(np.min(G.killing)) + delta
    M = (mu * sp.identity(m, format="csc") - A.tocsc()).tocsc()
    lu = splu(M)
    AT = A.T.tocsr()
    v0 = np.ones(m)
    left, lam_l, res_l, it_l = _inverse_iteration(lu, {"trans": "T"}, v0, lambda v: AT @ v, tol, max_iter)
    right, lam_r, res_r, it_r = _inverse_iteration(lu, {}, v0, lambda v: A @ v, tol, max_iter)
    # eigenvalue identity: lambda = sum_j psi_j killing_j for the normalized left vector
    lam = -float(np.dot(left, np.asarray(A.sum(axis=1)).ravel()))
    residual = float(np.max(np.abs(-(AT @ left) - lam * left)))
    if residual > tol:
        raise NumericalFailure(f"eigen-residual {residual:.3e} above tolerance {tol:.1e}")
    return EigenPair(lam, left, right / right.mean(), residual, it_l + it_r)


def density_on_cells(G: GeneratorMatrix, pair: EigenPair) -> np.ndarray:
    """Left eigenvector as a probability density (integrates to 1 over the box)."""
    return pair.vector / G.cell_volume


def write_eigenvector_csv(path, G: GeneratorMatrix, pair: EigenPair) -> None:
    d = G.points.shape[1]
    header = ",".join([f"x_{i + 1}" for i in range(d)] + ["density", "right"])
    table = np.column_stack([G.points, density_on_cells(G, pair), pair.right])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
