import numpy as np
import pytest

from eotransducer.fitting import ModelSpec, least_squares_fit


def lorentz(p, x):
    return p[2] / (1 + 4 * ((x - p[0]) / p[1]) ** 2) + p[3]


LORENTZ = ModelSpec(lorentz, ["x0", "width", "amp", "offset"])
X = np.linspace(-10, 10, 401)
TRUTH = np.array([0.3, 2.0, 1.5, 0.2])


def test_exact_init_is_fixed_point():
    y = lorentz(TRUTH, X)
    r = least_squares_fit(LORENTZ, X, y, TRUTH)
    assert r.converged
    assert r.iterations <= 3
    assert r.residual_norm < 1e-20


def test_linear_model_matches_closed_form():
    rng = np.random.default_rng(0)
    x = np.linspace(0.1, 5, 50)
    y = 2.7 * x + rng.normal(0, 0.1, x.size)
    r = least_squares_fit(ModelSpec(lambda p, t: p[0] * t, ["a"]), x, y, [1.0])
    slope = (x @ y) / (x @ x)
    assert r["a"] == pytest.approx(slope, rel=1e-12)


def test_perturbed_init_recovers_lorentzian():
    rng = np.random.default_rng(1)
    y = lorentz(TRUTH, X)
    for _ in range(100):
        init = TRUTH * rng.uniform(0.7, 1.3, 4)
        r = least_squares_fit(LORENTZ, X, y, init)
        assert r.converged
        np.testing.assert_allclose([r[n] for n in LORENTZ.names], TRUTH, rtol=1e-3)


def test_deterministic():
    rng = np.random.default_rng(2)
    y = lorentz(TRUTH, X) + rng.normal(0, 0.01, X.size)
    a = least_squares_fit(LORENTZ, X, y, TRUTH * 1.2)
    b = least_squares_fit(LORENTZ, X, y, TRUTH * 1.2)
    assert a.params == b.params
    assert a.ci95 == b.ci95
    assert a.history == b.history
    assert np.array_equal(a.covariance, b.covariance)


def test_monotone_descent():
    rng = np.random.default_rng(3)
    y = lorentz(TRUTH, X) + rng.normal(0, 0.02, X.size)
    r = least_squares_fit(LORENTZ, X, y, TRUTH * np.array([1.3, 0.7, 1.3, 0.7]))
    h = np.array(r.history)
    assert h.size >= 2
    assert np.all(np.diff(h) <= 0)


def test_max_iterations_returns_best_so_far():
    y = lorentz(TRUTH, X)
    init = TRUTH * np.array([1.3, 0.7, 1.3, 0.7])
    r = least_squares_fit(LORENTZ, X, y, init, max_iter=1)
    assert not r.converged
    s0 = float(np.sum((y - lorentz(init, X)) ** 2))
    assert r.residual_norm <= s0
    assert r.iterations == 1


def test_rank_deficiency_flagged():
    # only the sum a + b is identifiable
    model = ModelSpec(lambda p, t: (p[0] + p[1]) * t + p[2], ["a", "b", "c"])
    x = np.linspace(0, 1, 20)
    r = least_squares_fit(model, x, 3 * x + 1, [1.0, 1.0, 0.0])
    assert set(r.unidentifiable) == {"a", "b"}
    assert r.ci95["a"] == np.inf and r.ci95["b"] == np.inf
    assert np.isfinite(r.ci95["c"])
    assert r["a"] + r["b"] == pytest.approx(3.0)


def test_full_rank_gives_finite_ci():
    rng = np.random.default_rng(4)
    y = lorentz(TRUTH, X) + rng.normal(0, 0.01, X.size)
    r = least_squares_fit(LORENTZ, X, y, TRUTH)
    assert r.unidentifiable == ()
    assert all(np.isfinite(v) and v > 0 for v in r.ci95.values())


def test_fixed_parameters_stay_fixed():
    model = ModelSpec(lorentz, LORENTZ.names, fixed={"offset": 0.2})
    r = least_squares_fit(model, X, lorentz(TRUTH, X), TRUTH * [1.1, 1.1, 1.1, 5.0])
    assert r["offset"] == 0.2
    assert r.ci95["offset"] == 0.0
    assert "offset" not in r.free_names
    assert r["width"] == pytest.approx(2.0, rel=1e-8)


def test_bounds_respected():
    model = ModelSpec(lorentz, LORENTZ.names, lower=[-1, 0.1, 0, 0.25], upper=[1, 5, 5, 1])
    r = least_squares_fit(model, X, lorentz(TRUTH, X), [0.0, 1.0, 1.0, 0.5])
    assert r["offset"] >= 0.25
    assert r["offset"] == pytest.approx(0.25, abs=1e-12)


def test_validation_errors():
    with pytest.raises(ValueError):
        ModelSpec(lorentz, LORENTZ.names, lower=[0, 0, 0, 0], upper=[0, 1, 1, 1])
    with pytest.raises(ValueError):
        least_squares_fit(ModelSpec(lorentz, LORENTZ.names, lower=[1, 0, 0, 0]), X, X, TRUTH)
    with pytest.raises(ValueError):
        least_squares_fit(LORENTZ, X[:7], X[:7], TRUTH)
    with pytest.raises(ValueError):
        least_squares_fit(LORENTZ, X, np.full(X.size, np.nan), TRUTH)
    with pytest.raises(ValueError):
        least_squares_fit(LORENTZ, X, X, TRUTH[:3])


def test_weights_scale_ci_with_absolute_sigma():
    rng = np.random.default_rng(5)
    sigma = 0.01
    y = lorentz(TRUTH, X) + rng.normal(0, sigma, X.size)
    w = np.full(X.size, 1 / sigma ** 2)
    a = least_squares_fit(LORENTZ, X, y, TRUTH, weights=w, absolute_sigma=True)
    b = least_squares_fit(LORENTZ, X, y, TRUTH)
    # reduced chi-square near one: both intervals agree to within ~15%
    assert a.ci95["width"] == pytest.approx(b.ci95["width"], rel=0.15)


def test_analytic_jacobian_used():
    calls = []

    def jac(p, x):
        calls.append(1)
        return np.column_stack([x, np.ones_like(x)])

    model = ModelSpec(lambda p, x: p[0] * x + p[1], ["m", "c"], jac=jac)
    x = np.linspace(0, 1, 10)
    r = least_squares_fit(model, x, 2 * x + 1, [0.0, 0.0])
    assert calls
    assert r["m"] == pytest.approx(2.0) and r["c"] == pytest.approx(1.0)
