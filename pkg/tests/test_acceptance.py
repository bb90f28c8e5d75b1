"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section of the terminal summary. The whole file
takes several minutes on one core.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from insfv import cli
from insfv.control import ScoreField, score_matching_loss
from insfv.core import cosine_problem, gaussian_mixture_problem
from insfv.engines import simulate_ins, simulate_standard_fv
from insfv.estimators import (DensityTable, density_table, eigenvalue_estimate, marginal_histogram,
                              modes_covered, resample, total_variation, weighted_empirical, well_occupancy)
from insfv.jump import consistency_report, test_function_basket
from insfv.oracle import build_generator, principal_eigenpair
from insfv.swap import (finite_swap_rate_from_values, gibbs_log_fields, implied_potential, swap_weight_from_values,
                        uncoupled_potential)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SOFT_KILL = {"kind": "sine", "params": {"offset": 1.0, "amplitude": 0.5, "frequency": 1.0}}


@pytest.fixture(scope="module")
def gibbs_runs():
    """Five seeds of the cosine problem at eps = 0.2, N = 20, T = 500."""
    p = cosine_problem(0.2)
    return p, [weighted_empirical(simulate_ins(p, 20, 500.0, seed=s, stride=20)) for s in range(5)]


def test_criterion_1_gibbs_fidelity(gibbs_runs, acceptance_report):
    p, emps = gibbs_runs
    exact = density_table(lambda X: np.exp(-np.cos(2 * np.pi * X[:, 0]) / (2 * np.pi * p.epsilon)), p.box, 50)
    tv = [total_variation(marginal_histogram(e, p.box, "x", 50), exact) for e in emps]
    med = float(np.median(tv))
    ok = acceptance_report(1, "Gibbs x-marginal TV", med <= 0.05,
                           f"median TV {med:.4f} <= 0.05 (per seed {np.round(tv, 4).tolist()})")
    assert ok


def test_criterion_2_gibbs_eigenvalue(gibbs_runs, acceptance_report):
    p, emps = gibbs_runs
    fwd = [eigenvalue_estimate(e, p, "forward").lambda_hat for e in emps]
    bwd = [eigenvalue_estimate(e, p, "backward") for e in emps]
    ratio = [abs(b.lambda_hat) / b.std_error for b in bwd]
    se = [b.std_error for b in bwd]
    ok = all(f == 0.0 for f in fwd) and np.median(ratio) <= 3 and max(se) <= 0.05
    acceptance_report(2, "Gibbs eigenvalue zero", ok,
                      f"forward {fwd}; backward median |lam|/se {np.median(ratio):.2f} <= 3, "
                      f"max se {max(se):.4f} <= 0.05")
    assert ok


def test_criterion_3_oracle_agreement(acceptance_report):
    p = cosine_problem(0.2, c=SOFT_KILL)
    G = build_generator(p, 400)
    pair = principal_eigenpair(G)
    lam_b = principal_eigenpair(build_generator(p, 400, "backward")).lam
    gap = abs(pair.lam - lam_b)
    emp = weighted_empirical(simulate_ins(p, 50, 1000.0, seed=0, stride=100))
    est = eigenvalue_estimate(emp, p, "forward")
    rel = abs(est.lambda_hat - pair.lam) / pair.lam
    # 400 cells, 8 per histogram bin of width 2/50
    oracle_hist = DensityTable([np.linspace(-1, 1, 51)], pair.vector.reshape(50, 8).sum(axis=1) / (2 / 50))
    tv = total_variation(marginal_histogram(emp, p.box, "x", 50), oracle_hist)
    ok = rel <= 0.05 and tv <= 0.08 and gap <= 1e-8
    acceptance_report(3, "oracle agreement", ok,
                      f"lam_hat {est.lambda_hat:.5f} vs oracle {pair.lam:.5f} (rel {rel:.4f} <= 0.05), "
                      f"TV {tv:.4f} <= 0.08, oracle gap {gap:.2e} <= 1e-8")
    assert ok


def test_criterion_4_local_consistency(acceptance_report):
    p = cosine_problem(0.2)
    x = np.linspace(-1, 1, 101)[:-1, None]
    ratios = {}
    for f in test_function_basket(p.box):
        e = [consistency_report(p, f, x, h, "upwind").max() for h in (0.1, 0.05, 0.025)]
        ratios[f.name] = (e[0] / e[1], e[1] / e[2])
    ok = all(1.5 <= r <= 2.5 for pair in ratios.values() for r in pair)
    acceptance_report(4, "local consistency", ok,
                      "; ".join(f"{k}: {a:.2f}, {b:.2f}" for k, (a, b) in ratios.items()))
    assert ok


def test_criterion_5_swap_algebra(acceptance_report):
    rng = np.random.default_rng(5)
    p = cosine_problem(0.2)
    x, y = rng.uniform(-1, 1, (2, 10_000, 1))
    vx, vy = p.V(x), p.V(y)
    temp = p.a
    comp = np.abs(swap_weight_from_values(vx, vy, temp) + swap_weight_from_values(vy, vx, temp) - 1).max()
    K = 10.0
    lhs = np.exp(-2 * vx / temp) * finite_swap_rate_from_values(vx, vy, temp, K)
    rhs = np.exp(-2 * vy / temp) * finite_swap_rate_from_values(vy, vx, temp, K)
    db = float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))
    wx, wy = rng.uniform(-10, 10, (2, 10_000))
    with np.errstate(over="raise", invalid="raise"):
        r = swap_weight_from_values(wx, wy, 1e-3)
        q = finite_swap_rate_from_values(wx, wy, 1e-3, K)
    finite = bool(np.all(np.isfinite(r)) and np.all(np.isfinite(q)))
    comp_cold = np.abs(r + swap_weight_from_values(wy, wx, 1e-3) - 1).max()
    ok = comp <= 1e-14 and comp_cold <= 1e-14 and db <= 1e-12 and finite
    acceptance_report(5, "swap-weight algebra", ok,
                      f"complement {max(comp, comp_cold):.1e} <= 1e-14, detailed balance {db:.1e} <= 1e-12, "
                      f"finite at eps 1e-3: {finite}")
    assert ok


def _bottleneck(U, src, dst):
    """Lowest level at which ``src`` and ``dst`` cells connect on the periodic grid of ``U``."""
    n, m = U.shape
    idx = np.arange(n * m).reshape(n, m)
    rows = np.concatenate([idx.ravel(), idx.ravel()])
    cols = np.concatenate([np.roll(idx, -1, 0).ravel(), np.roll(idx, -1, 1).ravel()])
    levels = np.unique(U)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        ok = U.ravel() <= levels[mid]
        keep = ok[rows] & ok[cols]
        A = coo_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n * m, n * m))
        _, lab = connected_components(A, directed=False)
        if ok[src] and ok[dst] and lab[src] == lab[dst]:
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo] - max(U.ravel()[src], U.ravel()[dst]))


def test_criterion_6_implied_potential(acceptance_report):
    eps = 0.1
    p = cosine_problem(eps)
    psi, phi = gibbs_log_fields(p)
    g = -1 + (np.arange(100) + 0.5) * 0.02
    W = implied_potential(g, g, psi, phi, eps)
    U = uncoupled_potential(g, g, psi, phi)
    # square through the four minima (+-1/2, +-1/2), sampled along its edges
    s = np.linspace(-0.5, 0.5, 401)
    half = np.full_like(s, 0.5)
    path = np.concatenate([np.stack(e, 1) for e in ((s, -half), (half, s), (-s, half), (-half, -s))])
    gp = np.concatenate([[g[-1] - 2], g, [g[0] + 2]])
    Wp = np.pad(W, 1, mode="wrap")
    W_path = RegularGridInterpolator((gp, gp), Wp)(path)
    W_exact = np.diag(implied_potential(path[:, 0], path[:, 1], psi, phi, eps))
    interp_err = float(np.abs(W_path - W_exact).max())
    variation = float(W_path.max() - W_path.min())
    # uncoupled barrier between the minimum lines x = -1/2 and x = +1/2
    i_lo, i_hi = np.argmin(np.abs(g + 0.5)), np.argmin(np.abs(g - 0.5))
    barrier = _bottleneck(U, i_lo * 100 + i_lo, i_hi * 100 + i_lo)
    cell = 2 * (1 - np.cos(2 * np.pi * 0.01)) / (2 * np.pi)
    ok = variation <= eps * np.log(2) + interp_err and abs(barrier - 1 / np.pi) <= cell
    acceptance_report(6, "implied-potential barrier", ok,
                      f"W variation on square {variation:.5f} <= {eps * np.log(2):.5f} + {interp_err:.1e}; "
                      f"uncoupled barrier {barrier:.5f} vs 1/pi {1 / np.pi:.5f} (grid tol {cell:.1e})")
    assert ok


def _coverage(emp, p, seed):
    return modes_covered(resample(emp, 1000, seed), p.centers, 0.3, p.box)


def test_criterion_7_mode_coverage(acceptance_report):
    p = gaussian_mixture_problem()
    ins = {"literal": [], "pooled": []}
    std = []
    for seed in range(10):
        for mode in ins:
            ins[mode].append(_coverage(weighted_empirical(simulate_ins(p, 5, 100.0, seed=seed, stride=5,
                                                                       rebirth=mode)), p, seed))
        std.append(_coverage(weighted_empirical(simulate_standard_fv(p, 10, 100.0, "forward", seed=seed,
                                                                     stride=5)), p, seed))
    m_lit, m_pool, m_std = np.median(ins["literal"]), np.median(ins["pooled"]), np.median(std)
    ok = m_lit >= 12 and m_lit > m_std
    acceptance_report(7, "mode coverage", ok,
                      f"INS literal median {m_lit:g} >= 12 and > standard FV {m_std:g} "
                      f"(pooled rebirth, informational: {m_pool:g})")
    assert ok


def _herding(N, mode):
    p = cosine_problem(0.05)
    counts, fractions = [], []
    for seed in range(10):
        occ = well_occupancy(simulate_ins(p, N, 100.0, seed=seed, stride=2, rebirth=mode), 5.0,
                             threshold=0.5 / N)
        counts.append(np.median(occ["occupied_count"]))
        fractions.append(occ["occupancy_fraction"].min())
    return float(np.median(counts)), float(np.median(fractions))


def test_criterion_8_herding(acceptance_report):
    count5, _ = _herding(5, "literal")
    _, frac20 = _herding(20, "literal")
    pool5, _ = _herding(5, "pooled")
    _, pool20 = _herding(20, "pooled")
    ok = count5 == 1 and frac20 > 0.2
    acceptance_report(8, "herding phenomenology", ok,
                      f"literal: N=5 median occupied wells {count5:g} == 1, N=20 median min-well fraction "
                      f"{frac20:.2f} > 0.2 (pooled, informational: {pool5:g}, {pool20:.2f})")
    assert ok


def test_criterion_9_determinism(tmp_path, acceptance_report):
    cfg = str(CONFIGS / "gaussian_mixture.json")
    for d in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out-dir", str(tmp_path / d), "--quiet"]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    seed = json.loads((tmp_path / "a" / "summary.json").read_text())["seed"]
    ok = a == b and len(a) > 0
    acceptance_report(9, "determinism", ok, f"two CLI runs, seed {seed}: {len(a)} bytes, identical {a == b}")
    assert ok


def test_criterion_10_score_loss(acceptance_report):
    X = np.random.default_rng(10).normal(size=(10_000, 1))
    true = score_matching_loss(ScoreField(lambda Z: -Z, lambda Z: -np.ones(len(Z))), X)
    zero = score_matching_loss(ScoreField(lambda Z: np.zeros_like(Z)), X)
    ok = -1.05 <= true <= -0.95 and zero == 0.0
    acceptance_report(10, "score loss", ok, f"s = -x: {true:.4f} in [-1.05, -0.95]; s = 0: {zero}")
    assert ok
