import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insfv.core import (ConstructionError, GridPolicy, InvalidInputError, PeriodicBox, RngStream,
                        cosine_problem, gaussian_mixture_problem, load_problem, make_problem, wrap)

UNIT = PeriodicBox([0.0], [1.0])
SYM = PeriodicBox([-1.0], [1.0])


def test_wrap_examples():
    assert wrap(0.3, UNIT) == pytest.approx(0.3, abs=0)
    assert wrap(1.05, UNIT) == pytest.approx(0.05, abs=1e-15)
    assert wrap(-1.2, SYM) == pytest.approx(0.8, abs=1e-15)


def test_wrap_batch_and_dimension_mismatch():
    box = PeriodicBox([0.0, 0.0], [4.0, 4.0])
    out = wrap(np.array([[4.5, -0.5], [1.0, 8.0]]), box)
    np.testing.assert_allclose(out, [[0.5, 3.5], [1.0, 0.0]])
    with pytest.raises(InvalidInputError):
        wrap(np.array([1.0, 2.0, 3.0]), box)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(InvalidInputError):
        wrap(bad, UNIT)


@given(st.floats(-1e6, 1e6, allow_nan=False), st.integers(-50, 50))
def test_wrap_lands_in_box_and_ignores_whole_periods(x, k):
    w = wrap(x, SYM)
    assert -1.0 <= w < 1.0
    shifted = wrap(x + 2.0 * k, SYM)
    # equal modulo the period (the two values may sit on opposite edges)
    gap = abs(w - shifted)
    assert min(gap, 2.0 - gap) <= 1e-9 * (1 + abs(x))


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_wrap_idempotent(x):
    w = wrap(x, SYM)
    assert wrap(w, SYM) == w


def test_box_validation():
    with pytest.raises(InvalidInputError):
        PeriodicBox([0.0], [0.0])
    with pytest.raises(InvalidInputError):
        PeriodicBox([0.0, 1.0], [1.0])
    box = PeriodicBox([0.0, -1.0], [2.0, 1.0])
    assert box.d == 2 and box.volume == 4.0


def test_cosine_fields_at_origin():
    p = cosine_problem(0.2)
    V, G, L, C = p.evaluate(np.array([0.0]))
    assert V == pytest.approx(1 / (2 * np.pi), rel=1e-14)
    assert G[0] == pytest.approx(0.0, abs=1e-14)
    assert L == pytest.approx(-2 * np.pi, rel=1e-14)
    assert C == 0.0


def test_cosine_backward_rate():
    # c - laplacianV with V = cos(2 pi x)/(2 pi) is 2 pi cos(2 pi x)
    p = cosine_problem(0.2)
    x = np.linspace(-1, 1, 17)[:, None]
    np.testing.assert_allclose(p.cbar(x), 2 * np.pi * np.cos(2 * np.pi * x[:, 0]), atol=1e-12)


def test_noise_and_temperature_conventions():
    p = cosine_problem(0.2)
    assert p.noise_variance == pytest.approx(0.4)
    assert p.temperature == pytest.approx(0.4)
    x = np.array([[0.1], [0.3]])
    # Gibbs log density equals -V/eps for sqrt(2 eps) noise
    np.testing.assert_allclose(p.gibbs_log_density(x), -p.V(x) / 0.2)


def _local_minima_count(V, n):
    up = [np.roll(V, s, axis=a) for a in (0, 1) for s in (1, -1)]
    diag = [np.roll(np.roll(V, s, 0), t, 1) for s in (1, -1) for t in (1, -1)]
    return int(np.sum(np.all([V < u for u in up + diag], axis=0)))


def test_gaussian_mixture_has_sixteen_minima_and_is_periodic():
    p = gaussian_mixture_problem()
    n = 200
    g = np.arange(n) * 4.0 / n
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    V = p.V(X).reshape(n, n)
    assert _local_minima_count(V, n) == 16
    np.testing.assert_allclose(p.V(X + [4.0, 0.0]), p.V(X), rtol=1e-12)
    np.testing.assert_allclose(p.V(X + [0.0, -4.0]), p.V(X), rtol=1e-12)
    assert p.centers.shape == (16, 2)


def test_wrong_gradient_is_rejected():
    cfg = {"dimension": 1, "box": {"lower": [0.0], "upper": [1.0]}, "epsilon": 0.1,
           "potential": {"kind": "trig", "params": {
               "terms": [{"amplitude": 1.0, "frequency": [1.0]}],
               "gradient": [[{"amplitude": 1.0, "frequency": [1.0]}]]}}}
    with pytest.raises(ConstructionError, match="gradient"):
        make_problem(cfg)


def test_wrong_laplacian_is_rejected():
    cfg = {"dimension": 1, "box": {"lower": [0.0], "upper": [1.0]}, "epsilon": 0.1,
           "potential": {"kind": "trig", "params": {
               "terms": [{"amplitude": 1.0, "frequency": [1.0]}],
               "laplacian": [{"amplitude": 3.0, "frequency": [1.0]}]}}}
    with pytest.raises(ConstructionError, match="Laplacian"):
        make_problem(cfg)


def test_correct_user_derivatives_accepted():
    two_pi = 2 * np.pi
    cfg = {"dimension": 1, "box": {"lower": [0.0], "upper": [1.0]}, "epsilon": 0.1,
           "potential": {"kind": "trig", "params": {
               "terms": [{"amplitude": 1.0, "frequency": [1.0]}],
               "gradient": [[{"amplitude": two_pi, "frequency": [1.0], "phase": np.pi / 2}]],
               "laplacian": [{"amplitude": two_pi**2, "frequency": [1.0], "phase": np.pi}]}}}
    p = make_problem(cfg)
    assert p.DV(np.array([0.25]))[0] == pytest.approx(-two_pi)


def test_non_periodic_frequency_is_rejected():
    cfg = {"dimension": 1, "box": {"lower": [0.0], "upper": [1.0]}, "epsilon": 0.1,
           "potential": {"kind": "trig", "params": {"terms": [{"amplitude": 1.0, "frequency": [0.5]}]}}}
    with pytest.raises(ConstructionError, match="periodic"):
        make_problem(cfg)


@pytest.mark.parametrize("cfg, msg", [
    ({"potential": {"kind": "nope"}}, "unknown potential"),
    ({"c": {"kind": "nope"}}, "unknown c"),
    ({"epsilon": 0.0}, "epsilon"),
    ({"diffusion_scale": -1.0}, "diffusion_scale"),
])
def test_bad_configs(cfg, msg):
    with pytest.raises(ConstructionError, match=msg):
        make_problem(cfg)


def test_gaussian_mixture_too_wide():
    with pytest.raises(ConstructionError, match="sigma"):
        gaussian_mixture_problem(sigma=0.5)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.integers(-3, 3), st.floats(0, 6.3)), min_size=1, max_size=4),
       st.floats(0.05, 1.0))
def test_random_trig_potentials_pass_probes(terms, eps):
    cfg = {"dimension": 1, "box": {"lower": [-1.0], "upper": [1.0]}, "epsilon": eps,
           "potential": {"kind": "trig", "params": {
               "terms": [{"amplitude": a, "frequency": [f / 2.0], "phase": ph} for a, f, ph in terms]}}}
    p = make_problem(cfg)
    x = np.linspace(-1, 1, 9)[:, None]
    np.testing.assert_allclose(p.V(x + 2.0), p.V(x), atol=1e-9)


def test_double_well_and_constant_c():
    p = make_problem({"dimension": 1, "box": {"lower": [0.0], "upper": [2.0]}, "epsilon": 0.1,
                      "potential": {"kind": "double-well", "params": {"depth": 1.0, "tilt": 0.2}},
                      "c": {"kind": "constant", "params": {"value": 0.7}}})
    assert np.all(p.c(np.linspace(0, 2, 5)[:, None]) == 0.7)


def test_with_c_and_load_problem(tmp_path):
    p = cosine_problem(0.2).with_c({"kind": "constant", "params": {"value": 2.0}})
    assert p.c(np.array([0.3])) == 2.0
    import json
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"problem": p.config}))
    q = load_problem(path)
    assert q.c(np.array([0.1])) == 2.0 and q.epsilon == 0.2


def test_grid_policy():
    assert GridPolicy("fixed", 0.1).kernel_args()[1] == 0.1
    g = GridPolicy.from_config({"kind": "uniform-random", "h_min": 0.05, "h_max": 0.15})
    assert g.kind == "uniform" and g.to_config() == {"kind": "uniform", "h_min": 0.05, "h_max": 0.15}
    with pytest.raises(InvalidInputError):
        GridPolicy("fixed", 0.0)
    with pytest.raises(InvalidInputError):
        GridPolicy("uniform", None, 0.2, 0.1)
    with pytest.raises(InvalidInputError):
        GridPolicy("spiral", 0.1)


def test_rng_stream_determinism_and_replicas():
    a, b = RngStream(7), RngStream(7)
    np.testing.assert_array_equal(a.random(5), b.random(5))
    np.testing.assert_array_equal(a.exponential(3), b.exponential(3))
    r0, r1 = RngStream(7, 0).random(4), RngStream(7, 1).random(4)
    assert not np.array_equal(r0, r1)
    np.testing.assert_array_equal(RngStream(7).spawn(1).random(4), r1)
