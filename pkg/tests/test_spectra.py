import math

import numpy as np
import pytest

from logpot import kernel, spectra
from logpot.geometry import make_ball, make_mask, make_rect
from logpot.weights import constant, gauss_log
from logpot.kernel import apply, assemble, ball_average_diagonal, matrix_free
from logpot.spectra import (
    convergence_study,
    deflated_rayleigh,
    extreme_eigenpairs,
    full_spectrum,
    positivity_check,
    result_to_json,
    tau_plus,
)


def two_cell_system(h=0.25):
    # 2x1 raster: closed-form 2x2 matrix, eigenvalues a +- b
    d = make_rect((0.0, 0.0), (2 * h, h), h)
    return d, assemble(d, constant(1.0), constant(1.0, role="g"))


def test_two_cell_closed_form():
    h = 0.25
    d, sys = two_cell_system(h)
    a = ball_average_diagonal(h, 2)
    b = math.log(1.0 / h) * h * h
    sr = full_spectrum(sys)
    assert sorted(sr.taus) == pytest.approx(sorted([a + b, a - b]), rel=1e-14)
    # eigenfunctions are (1,1)/sqrt(2 h^2) and (1,-1)/sqrt(2 h^2) up to sign
    flat = np.abs(sr.vectors) * math.sqrt(2.0 * h * h)
    assert flat == pytest.approx(np.ones((2, 2)), rel=1e-12)


def test_ordering_and_normalization():
    d = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 8)
    g = gauss_log(0.05, 0.0, (0.0, 0.0), role="g")
    sys = assemble(d, constant(1.0), g)
    sr = full_spectrum(sys)
    mags = np.abs(sr.taus)
    assert (np.diff(mags) <= 1e-12 * sys.scale + mags[:-1] * 1e-15).all()
    hN = sys.h**2
    for j in range(sr.taus.size):
        u = sr.vectors[:, j]
        assert (sys.gvals * u * u).sum() * hN == pytest.approx(1.0, rel=1e-10)
        assert (sys.gvals * u).sum() * hN >= -1e-10  # sign convention


def test_residuals_and_eigen_identity():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    sys = assemble(d, gauss_log(0.2, 0.0, (0.0, 0.0)), constant(2.0, role="g"))
    sr = full_spectrum(sys)
    assert sr.residuals.max() <= 1e-12 * sys.scale
    # L u = tau g u in problem coordinates, via the unsymmetrized apply
    j = 0
    u = sr.vectors[:, j]
    lhs = apply(sys, u * np.sqrt(sys.gvals) * sys.h) / (np.sqrt(sys.gvals) * sys.h)
    assert np.abs(lhs - sr.taus[j] * u).max() < 1e-10 * max(1.0, np.abs(u).max())


def test_tau_plus_and_positivity():
    # w = 2 >= sqrt(diam B_1): entrywise-positive kernel, Perron eigenvector
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    sys = assemble(d, constant(2.0), constant(1.0, role="g"))
    sr = full_spectrum(sys)
    tp, u = tau_plus(sys, result=sr)
    assert tp == sr.taus.max() > 0
    assert positivity_check(sr, 0)
    small = full_spectrum(assemble(d, constant(1.0), constant(1.0, role="g")))
    assert small.tau_minus == 0.0  # B_1 with w = 1: positive operator


def test_tau_minus_negative_on_big_disk():
    d = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 8)
    sr = full_spectrum(assemble(d, constant(1.0), constant(1.0, role="g")))
    assert sr.tau_minus < 0
    assert sr.tau_minus == sr.taus.min()


def test_deflated_rayleigh_matches_lapack():
    d = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 8)
    sys = assemble(d, constant(1.0), gauss_log(0.1, 0.0, (0.0, 0.0), role="g"))
    sr = full_spectrum(sys)
    pos = sr.taus[sr.taus > 0]
    for k in (1, 2, 3):
        val = deflated_rayleigh(sys, k, +1, result=sr)
        assert val == pytest.approx(pos[k - 1], rel=1e-9)
    neg = sr.taus[sr.taus < 0]
    val = deflated_rayleigh(sys, 1, -1, result=sr)
    assert val == pytest.approx(neg[0], rel=1e-9)
    # no second negative eigenvalue on this grid
    if neg.size == 1:
        assert deflated_rayleigh(sys, 2, -1, result=sr) is None


def test_deflated_rayleigh_none_when_no_negatives():
    d = make_ball(2, (0.0, 0.0), 0.5, 1.0 / 8)
    sys = assemble(d, constant(1.0), constant(1.0, role="g"))
    assert deflated_rayleigh(sys, 1, -1) is None


def test_extreme_eigenpairs_dense_vs_matrix_free():
    d = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 8)
    w = gauss_log(0.1, 0.0, (0.2, 0.0))
    g = constant(2.0, role="g")
    dense = assemble(d, w, g)
    sr = full_spectrum(dense)
    for which, ref in (("top", sr.taus.max()), ("bottom", sr.taus.min())):
        lam_d, u_d = extreme_eigenpairs(dense, k=1, which=which)
        lam_m, u_m = extreme_eigenpairs(matrix_free(d, w, g), k=1, which=which)
        assert lam_d[0] == pytest.approx(ref, rel=1e-10)
        assert lam_m[0] == pytest.approx(ref, rel=1e-10)
        assert np.abs(u_d[:, 0] - u_m[:, 0]).max() < 1e-6 * np.abs(u_d).max()


def test_extreme_eigenpairs_multiple():
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 8)
    sys = assemble(d, constant(1.0), constant(1.0, role="g"))
    sr = full_spectrum(sys)
    taus, u = extreme_eigenpairs(sys, k=3, which="top")
    top3 = np.sort(sr.taus)[::-1][:3]
    assert taus == pytest.approx(top3, rel=1e-10)
    hN = sys.h**2
    for j in range(3):
        assert (u[:, j] ** 2).sum() * hN == pytest.approx(1.0, rel=1e-8)


def test_convergence_study_nested_monotone():
    g1 = constant(1.0, role="g")
    doms = [make_ball(2, (0.0, 0.0), r, 1.0 / 16) for r in (0.5, 0.75, 1.0)]
    study = convergence_study(doms, constant(1.0), g1, which="top", labels=[0.5, 0.75, 1.0])
    assert study.nested
    assert study.monotone
    assert (study.gaps > 0).all()
    assert study.ns == [d.cell_count for d in doms]


def test_convergence_study_detects_non_nested():
    g1 = constant(1.0, role="g")
    doms = [
        make_ball(2, (0.0, 0.0), 0.5, 1.0 / 16),
        make_ball(2, (0.5, 0.0), 0.5, 1.0 / 16),  # shifted, not a superset
    ]
    study = convergence_study(doms, constant(1.0), g1, which="top")
    assert not study.nested


def test_convergence_study_bottom_decreasing():
    g1 = constant(1.0, role="g")
    doms = [make_ball(2, (0.0, 0.0), r, 1.0 / 8) for r in (1.5, 1.75, 2.0)]
    study = convergence_study(doms, constant(1.0), g1, which="bottom")
    assert study.nested and study.monotone
    assert (study.gaps < 0).all()


def test_result_to_json_shape():
    d, sys = two_cell_system()
    js = result_to_json(full_spectrum(sys))
    assert set(js) == {"taus", "tau_plus", "tau_minus", "residuals", "grid"}
    assert js["grid"]["n"] == 2
    assert isinstance(js["taus"][0], float)
