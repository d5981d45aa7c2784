import math

import numpy as np
import pytest

from logpot.geometry import Polarizer, make_ball, make_rect, quadrature_grid
from logpot.weights import (
    NonPositiveWeightError,
    affine_log,
    check_sqrt_diam_bound,
    constant,
    evaluate,
    from_samples,
    gauss_log,
    is_log_superharmonic,
    log_laplacian_class,
    sample,
    symmetric_under,
    weight_from_json,
    weight_to_json,
)


def test_evaluate_families():
    x = np.array([[0.5, -0.25], [1.0, 2.0]])
    assert evaluate(constant(3.0), x) == pytest.approx([3.0, 3.0])
    w = gauss_log(0.5, 0.1, (0.0, 0.0))
    assert evaluate(w, x[0]) == pytest.approx(math.exp(0.5 * 0.3125 + 0.1))
    v = affine_log((1.0, -2.0), 0.3)
    assert evaluate(v, x[1]) == pytest.approx(math.exp(1.0 - 4.0 + 0.3))


def test_constant_must_be_positive():
    with pytest.raises(NonPositiveWeightError):
        constant(0.0)
    with pytest.raises(NonPositiveWeightError):
        constant(-2.0)


def test_sample_reports_bounds():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    sw = sample(gauss_log(1.0, 0.0, (0.0, 0.0)), quadrature_grid(d))
    assert sw.wmin >= 1.0  # center cell is offset from the origin
    assert sw.wmax == pytest.approx(sw.values.max())
    assert sw.values.shape == (d.cell_count,)


def test_sample_rejects_nonpositive_values():
    d = make_rect((0.0, 0.0), (0.5, 0.25), 1.0 / 8)
    vals = np.ones(d.cell_count)
    vals[3] = 0.0
    with pytest.raises(NonPositiveWeightError):
        sample(from_samples(vals), quadrature_grid(d))


def test_log_laplacian_analytic_families():
    assert log_laplacian_class(constant(2.0)).kind == "harmonic"
    assert log_laplacian_class(affine_log((1.0, 2.0), 0.0)).kind == "harmonic"
    cls = log_laplacian_class(gauss_log(0.5, 0.0, (0.0, 0.0)))
    assert cls.kind == "constant"
    assert cls.constant == pytest.approx(2.0)  # 2 a N with N = 2
    cls3 = log_laplacian_class(gauss_log(0.5, 0.0, (0.0, 0.0, 0.0)))
    assert cls3.constant == pytest.approx(3.0)


def test_log_laplacian_sampled_classification():
    d = make_rect((0.0, 0.0), (0.5, 0.5), 1.0 / 16)
    nodes = d.nodes
    harmonic = from_samples(np.exp(2.0 * nodes[:, 0]))
    assert log_laplacian_class(harmonic, d).kind == "harmonic"
    gauss = from_samples(np.exp(0.5 * ((nodes - 0.25) ** 2).sum(axis=1)))
    cls = log_laplacian_class(gauss, d)
    assert cls.kind == "constant"
    assert cls.constant == pytest.approx(2.0, rel=1e-6)  # 5-point stencil is exact here
    bumpy = from_samples(np.exp(np.sin(40 * nodes[:, 0]) * nodes[:, 1] ** 2))
    assert log_laplacian_class(bumpy, d).kind == "other"


def test_log_laplacian_sampled_needs_domain():
    with pytest.raises(ValueError):
        log_laplacian_class(from_samples(np.ones(4)))


def test_is_log_superharmonic():
    assert is_log_superharmonic(log_laplacian_class(constant(1.0)))
    assert is_log_superharmonic(log_laplacian_class(gauss_log(-0.5, 0.0, (0.0, 0.0))))
    assert not is_log_superharmonic(log_laplacian_class(gauss_log(0.5, 0.0, (0.0, 0.0))))
    d = make_rect((0.0, 0.0), (0.5, 0.5), 1.0 / 16)
    vals = np.exp(-((d.nodes - 0.25) ** 2).sum(axis=1))
    assert is_log_superharmonic(log_laplacian_class(from_samples(vals), d))


def test_sqrt_diam_bound_examples():
    # diam(B_1 raster) is just under 2, so w = 2 clears sqrt(2)
    assert check_sqrt_diam_bound(constant(2.0), make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8))
    # diam(B_2 raster) near 4 needs w >= 2; w = 1 fails
    assert not check_sqrt_diam_bound(constant(1.0), make_ball(2, (0.0, 0.0), 2.0, 1.0 / 8))


def test_symmetric_under_analytic():
    d = make_rect((-0.5, -0.5), (0.5, 0.5), 1.0 / 8)
    grid = quadrature_grid(d)
    p = Polarizer((0.0, 1.0), 0.0)
    assert symmetric_under(gauss_log(0.3, 0.0, (0.2, 0.0)), p, grid)
    assert not symmetric_under(gauss_log(0.3, 0.0, (0.0, 0.2)), p, grid)
    assert symmetric_under(constant(2.0), p, grid)
    assert not symmetric_under(affine_log((0.0, 1.0), 0.0), p, grid)


def test_symmetric_under_samples():
    d = make_rect((-0.5, -0.5), (0.5, 0.5), 1.0 / 8)
    grid = quadrature_grid(d)
    p = Polarizer((0.0, 1.0), 0.0)
    sym = from_samples(np.exp(np.abs(d.nodes[:, 1])))
    assert symmetric_under(sym, p, grid)
    skew = from_samples(np.exp(d.nodes[:, 1]))
    assert not symmetric_under(skew, p, grid)


def test_weight_json_roundtrip():
    cases = [
        constant(2.5),
        gauss_log(-0.25, 1.0, (0.5, -0.5), role="g"),
        affine_log((1.0, 2.0), -0.5),
        from_samples(np.array([1.0, 2.0, 3.0])),
    ]
    for wf in cases:
        back = weight_from_json(weight_to_json(wf))
        assert back.family == wf.family
        assert back.role == wf.role
        x = np.array([0.25, 0.75])
        if wf.family != "samples":
            assert evaluate(back, x) == pytest.approx(evaluate(wf, x))
        else:
            assert back.params["values"] == pytest.approx(wf.params["values"])
    with pytest.raises(ValueError):
        weight_from_json({"family": "mystery", "params": {}})
