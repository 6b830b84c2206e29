import math

import numpy as np
import pytest

from nqs_scaling.scaling import (
    DataPoint,
    DegenerateData,
    ScalingCurve,
    _objective_and_grad,
    clamp_values,
    compute_scaled_iterations,
    efficient_frontier,
    fit_curve,
    format_curve,
    huber,
    huber_log_residual,
    initial_grid,
    optimal_allocation,
    parse_curve,
    read_curve,
    write_curve,
)

TRUTH = ScalingCurve(1e-6, 0.2, 7e-3, 8.0, 2.4)

# (A0, A1, A2, alpha1, alpha2) -> (a, b) of D' = a N^b
FRONTIER_ROWS = {
    "made-vscore": ((9.37e-11, 2.58e-5, 5.53e-2, 1.459, 2.828), (0.053, 0.516)),
    "retnet-vscore": ((6.71e-7, 0.626, 4.39e-3, 9.370, 2.451), (13.076, 3.823)),
    "transformer-vscore": ((1.34e-6, 0.197, 7.25e-3, 7.952, 2.371), (6.707, 3.354)),
    "made-abserr": ((4.12e-9, 0.033, 0.106, 2.224, 0.757), (0.889, 2.938)),
    "retnet-abserr": ((1.13e-4, 5.26e-4, 0.111, 0.452, 1.179), (0.005, 0.383)),
    "transformer-abserr": ((2.83e-9, 0.720, 0.039, 5.274, 0.637), (2663.825, 8.279)),
}


def synthetic(curve, n_points=60, noise=0.05, seed=0):
    rng = np.random.default_rng(seed)
    N = 10 ** rng.uniform(0, 2, n_points)
    D = 10 ** rng.uniform(0, 2, n_points)
    y = curve.predict(N, D) * np.exp(noise * rng.normal(size=n_points))
    return [DataPoint(*p) for p in zip(N, D, y)]


def objective(curve, pts, metric="vscore"):
    y = clamp_values([p.value for p in pts], metric)
    return float(np.mean([huber_log_residual(curve, DataPoint(p.N, p.D_prime, v)) for p, v in zip(pts, y)]))


def test_scaled_iterations_examples():
    assert compute_scaled_iterations(10000, 441, 14, 10) == (1.0, 10000.0)
    sf, d = compute_scaled_iterations(100, 72, 20, 14)
    assert sf == pytest.approx(72 / 14400) and d == pytest.approx(0.5)
    assert compute_scaled_iterations(37, 6, 8, 2, 1)[1] == pytest.approx(37 * 6 / 16)
    assert compute_scaled_iterations(5, 4, 4, 2)[1] == 5.0


def test_huber_examples():
    assert huber_log_residual(TRUTH, DataPoint(3.0, 4.0, float(TRUTH.predict(3.0, 4.0)))) == pytest.approx(0, abs=1e-20)
    assert float(huber(5e-4)) == pytest.approx(1.25e-7)
    assert float(huber(1.0)) == pytest.approx(9.995e-4)
    assert float(huber(-1.0)) == pytest.approx(9.995e-4)
    with pytest.raises(ValueError):
        huber_log_residual(TRUTH, DataPoint(1.0, 1.0, 0.0))


def test_clamps():
    assert clamp_values([0.0, 1e-9, 0.3], "vscore").tolist() == [1e-8, 1e-8, 0.3]
    assert clamp_values([0.0, 1e-3], "abserr").tolist() == [1e-5, 1e-3]
    with pytest.raises(ValueError):
        clamp_values([1.0], "loss")


def test_objective_gradient_matches_finite_differences():
    pts = synthetic(TRUTH, 20, seed=3)
    logN = np.log([p.N for p in pts])
    logD = np.log([p.D_prime for p in pts])
    logy = np.log([p.value for p in pts])
    theta = np.array([[math.log(math.expm1(1e-6)), math.log(0.3), math.log(5e-3), 6.0, 2.0]])
    # a loose delta keeps every residual in the smooth quadratic zone
    _, g = _objective_and_grad(theta, logN, logD, logy, 10.0)
    for i in range(5):
        e = np.zeros_like(theta)
        e[0, i] = 1e-6
        fp = _objective_and_grad(theta + e, logN, logD, logy, 10.0)[0][0]
        fm = _objective_and_grad(theta - e, logN, logD, logy, 10.0)[0][0]
        assert g[0, i] == pytest.approx((fp - fm) / 2e-6, rel=1e-5, abs=1e-12)


def test_initial_grid_shape():
    g = initial_grid(2e-4)
    assert g.shape == (625, 5)
    assert math.log1p(math.exp(g[0, 0])) == pytest.approx(1e-4)
    assert sorted(set(g[:, 3])) == [0.5, 1.0, 2.0, 4.0, 8.0]


def test_fit_recovers_exponents():
    pts = synthetic(TRUTH, seed=1)
    fit = fit_curve(pts, steps=5000)
    assert fit.alpha1 == pytest.approx(8.0, rel=0.1)
    assert fit.alpha2 == pytest.approx(2.4, rel=0.1)
    assert fit.objective <= objective(TRUTH, pts) + 1e-15
    assert fit.objective == pytest.approx(objective(fit, pts), rel=1e-9)
    assert fit.r2_log > 0.9


def test_noise_free_fit_reaches_zero_objective():
    pts = synthetic(TRUTH, 40, noise=0.0, seed=2)
    assert objective(TRUTH, pts) < 1e-20
    assert fit_curve(pts, steps=5000).objective <= 1e-8


def test_fit_is_deterministic():
    pts = synthetic(TRUTH, 30, seed=4)
    a, b = fit_curve(pts, steps=500, seed=3), fit_curve(pts, steps=500, seed=3)
    assert a == b


def test_fit_scale_consistency():
    curve = ScalingCurve(0.0, 0.5, 0.02, 1.0, 2.0)
    pts = synthetic(curve, 40, noise=0.0, seed=5)
    base = fit_curve(pts, steps=4000)
    scaled = fit_curve([DataPoint(p.N, p.D_prime, 3.0 * p.value) for p in pts], steps=4000)
    assert scaled.alpha1 == pytest.approx(base.alpha1, rel=1e-3)
    assert scaled.alpha2 == pytest.approx(base.alpha2, rel=1e-3)
    assert scaled.A1 == pytest.approx(3 * base.A1, rel=1e-2)
    assert scaled.A2 == pytest.approx(3 * base.A2, rel=1e-2)


def test_zero_absolute_error_treated_as_floor():
    pts = synthetic(ScalingCurve(1e-5, 0.01, 0.05, 1.0, 1.0), 20, noise=0.0, seed=6)
    pts[0] = DataPoint(pts[0].N, pts[0].D_prime, 0.0)
    pts_floor = list(pts)
    pts_floor[0] = DataPoint(pts[0].N, pts[0].D_prime, 1e-5)
    a = fit_curve(pts, metric="abserr", steps=300, polish=False)
    b = fit_curve(pts_floor, metric="abserr", steps=300, polish=False)
    assert a == b


def test_degenerate_inputs():
    flat_N = [DataPoint(10.0, d, 1e-3 * d) for d in (1, 2, 4, 8, 16, 32)]
    with pytest.raises(DegenerateData):
        fit_curve(flat_N, steps=10)
    with pytest.raises(DegenerateData):
        fit_curve(synthetic(TRUTH, 4), steps=10)


def test_sparse_data_warns(caplog):
    with caplog.at_level("WARNING"):
        fit_curve(synthetic(TRUTH, 8, seed=7), steps=10, polish=False)
    assert "poorly conditioned" in caplog.text


@pytest.mark.parametrize(
    "name",
    [
        pytest.param(
            k,
            marks=pytest.mark.xfail(strict=True, reason="reference coefficient is given to one significant digit"),
        )
        if k == "retnet-abserr"
        else k
        for k in FRONTIER_ROWS
    ],
)
def test_frontier_table_rows(name):
    (A0, A1, A2, a1, a2), (a, b) = FRONTIER_ROWS[name]
    f = efficient_frontier(ScalingCurve(A0, A1, A2, a1, a2))
    assert abs(f.b - b) <= 0.002
    assert f.a == pytest.approx(a, rel=0.01)


def test_retnet_abserr_frontier_rounds_to_table():
    (A0, A1, A2, a1, a2), _ = FRONTIER_ROWS["retnet-abserr"]
    assert round(efficient_frontier(ScalingCurve(A0, A1, A2, a1, a2)).a, 3) == 0.005


def test_frontier_errors():
    with pytest.raises(ValueError):
        efficient_frontier(ScalingCurve(0, 1, 0, 1, 1))
    with pytest.raises(ValueError):
        efficient_frontier(ScalingCurve(0, 1, 1, 1, 0))


def test_allocation_identities():
    rng = np.random.default_rng(0)
    for _ in range(100):
        c = ScalingCurve(0.0, *10 ** rng.uniform(-4, 1, 2), *rng.uniform(0.3, 9, 2))
        C, k = 10 ** rng.uniform(5, 15), 10 ** rng.uniform(0, 6)
        for exact in (False, True):
            N, D = optimal_allocation(c, C, k, exact=exact)
            assert k * N * D == pytest.approx(C, rel=1e-12)
            assert D == pytest.approx(float(efficient_frontier(c, exact=exact).D_prime(N)), rel=1e-9)


def test_symmetric_exponents_double_under_four_times_budget():
    c = ScalingCurve(0.0, 0.3, 0.07, 1.7, 1.7)
    N1, D1 = optimal_allocation(c, 1e9, 50.0)
    N4, D4 = optimal_allocation(c, 4e9, 50.0)
    assert N4 / N1 == pytest.approx(2.0) and D4 / D1 == pytest.approx(2.0)


def budget_line_minimum(c, C, k):
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda u: math.log(float(c.predict(math.exp(u), C / (k * math.exp(u))))),
        bounds=(-20, 40),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return math.exp(res.x)


@pytest.mark.parametrize("row", ["retnet-vscore", "made-abserr", "transformer-vscore"])
def test_exact_allocation_matches_numerical_minimum(row):
    c = ScalingCurve(*FRONTIER_ROWS[row][0])
    C, k = 1e8, 1e3
    N, D = optimal_allocation(c, C, k, exact=True)
    assert N == pytest.approx(budget_line_minimum(c, C, k), rel=1e-4)
    best = float(c.predict(N, D))
    for f in np.geomspace(0.5, 2.0, 41):
        assert float(c.predict(N * f, C / (k * N * f))) >= best * (1 - 1e-12)
    assert D == pytest.approx(float(efficient_frontier(c, exact=True).D_prime(N)), rel=1e-9)


@pytest.mark.xfail(strict=True, reason="default closed form is not the loss minimiser on the budget line")
def test_default_allocation_minimises_loss_on_budget_line():
    c = ScalingCurve(*FRONTIER_ROWS["retnet-vscore"][0])
    C, k = 1e8, 1e3
    N, D = optimal_allocation(c, C, k)
    best = float(c.predict(N, D))
    for f in np.geomspace(0.5, 2.0, 41):
        assert float(c.predict(N * f, C / (k * N * f))) >= best * (1 - 1e-12)


def test_exact_and_default_frontiers_share_exponent():
    c = ScalingCurve(*FRONTIER_ROWS["made-vscore"][0])
    p, e = efficient_frontier(c), efficient_frontier(c, exact=True)
    assert p.b == e.b
    assert p.a * e.a == pytest.approx(1.0)


def test_curve_document_round_trip(tmp_path):
    c = ScalingCurve(1.5e-7, 0.2, 7e-3, 8.1, 2.39, "abserr", "retnet", 0.87)
    text = format_curve(c)
    assert text.splitlines()[0] == "ansatz = retnet"
    back = parse_curve(text)
    assert (back.A1, back.alpha2, back.metric, back.r2_log) == (0.2, 2.39, "abserr", 0.87)
    write_curve(tmp_path / "c.txt", c)
    assert read_curve(tmp_path / "c.txt").A0 == c.A0
    with pytest.raises(ValueError):
        parse_curve("ansatz = made\n")
