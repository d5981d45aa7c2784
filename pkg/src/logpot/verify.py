"""Named verification checks bundling the library's theorem experiments.

Each check runs a pinned desk-scale configuration and returns a CheckResult
with its measured numbers, so failures are diagnosable from the summary
alone.  The same functions back ``logpot verify`` and the acceptance test
module; tolerances live here, in one place.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from . import planar as _planar
from . import spectra as _spectra
from . import transfinite as _transfinite
from .geometry import Polarizer, diameter, make_ball, make_rect, union_domains
from .weights import check_sqrt_diam_bound, constant

__all__ = ["CheckResult", "SUITES", "run_suite", "format_check", "all_checks"]


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0


def _finish(number: int, name: str, passed: bool, details: dict, t0: float) -> CheckResult:
    return CheckResult(number, name, bool(passed), details, round(time.perf_counter() - t0, 2))


def check_disk_potential(seed: int = 0) -> CheckResult:
    """1: potential of u = 1 on the unit disk vs the closed form, h = 1/64."""
    t0 = time.perf_counter()
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 64)
    one = constant(1.0)
    sys = _kernel.assemble(d, one, constant(1.0, role="g"))
    got = _kernel.apply(sys, np.ones(sys.n))
    exact = _planar.disk_potential_constant(1.0, sys.grid.nodes)
    err = float(np.abs(got - exact).max()) / (math.pi / 2)
    elapsed = time.perf_counter() - t0
    passed = err <= 0.01 and elapsed < 30.0
    return _finish(
        1,
        "disk potential closed form",
        passed,
        {"max_rel_err": err, "tol": 0.01, "n": sys.n, "seconds": round(elapsed, 2)},
        t0,
    )


def check_w1_example(seed: int = 0) -> CheckResult:
    """2: L_{c w1} 1 is the constant 2 pi log c on B_1; c = 1 gives eigenvalue 0."""
    t0 = time.perf_counter()
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 64)
    g1 = constant(1.0, role="g")
    devs = {}
    ok = True
    for c in (0.5, 1.0, 2.0):
        sys = _kernel.matrix_free(d, _planar.disk_weight(1.0, c), g1)
        chk = _planar.w1_identity_check(sys, 1.0, c)
        tol = 0.01 * math.pi if c == 1.0 else 0.01 * abs(chk.target)
        devs[str(c)] = {"target": chk.target, "max_dev": chk.max_abs_deviation, "tol": tol}
        ok &= chk.max_abs_deviation <= tol
    # minimal |eigenvalue| for c = 1 must at least halve under grid halving
    min_abs = {}
    for h in (1.0 / 16, 1.0 / 32):
        dd = make_ball(2, (0.0, 0.0), 1.0, h)
        sr = _spectra.full_spectrum(_kernel.assemble(dd, _planar.disk_weight(1.0, 1.0), g1))
        min_abs[str(h)] = float(np.abs(sr.taus).min())
    ratio = min_abs[str(1.0 / 16)] / min_abs[str(1.0 / 32)]
    ok &= ratio >= 2.0
    return _finish(
        2,
        "distinguished disk weight identity",
        ok,
        {"deviations": devs, "min_abs_eig": min_abs, "halving_ratio": ratio},
        t0,
    )


def check_unweighted_capacity(seed: int = 0) -> CheckResult:
    """3: transfinite diameter of B_1 (h=1/32) and B_2 (h=1/16) within 2%."""
    t0 = time.perf_counter()
    details = {}
    ok = True
    for radius, h in ((1.0, 1.0 / 32), (2.0, 1.0 / 16)):
        t = time.perf_counter()
        d = make_ball(2, (0.0, 0.0), radius, h)
        eq = _transfinite.equilibrium(d, None, max_iters=400_000, tol=5e-4)
        dt = time.perf_counter() - t
        rel = abs(eq.tdiam - radius) / radius
        details[f"B_{radius}"] = {
            "tdiam": eq.tdiam,
            "target": radius,
            "rel_err": rel,
            "gap": eq.gap,
            "iters": eq.iters,
            "seconds": round(dt, 2),
        }
        ok &= rel <= 0.02 and dt < 60.0
    return _finish(3, "unweighted transfinite diameter", ok, details, t0)


def check_weighted_capacity(seed: int = 0) -> CheckResult:
    """4: with W = 1/w1 the weighted transfinite diameter of B_R is 1."""
    t0 = time.perf_counter()
    details = {}
    ok = True
    for radius, h in ((1.0, 1.0 / 32), (2.0, 1.0 / 16)):
        d = make_ball(2, (0.0, 0.0), radius, h)
        eq = _transfinite.equilibrium(
            d, _planar.equilibrium_disk_weight(radius), max_iters=400_000, tol=5e-4
        )
        rel = abs(eq.tdiam - 1.0)
        details[f"B_{radius}"] = {"tdiam": eq.tdiam, "rel_err": rel, "gap": eq.gap}
        ok &= rel <= 0.02
    return _finish(4, "weighted transfinite diameter", ok, details, t0)


def check_scaling_law(seed: int = 0) -> CheckResult:
    """5: T(E, cW) = c^2 T(E, W) via the minimizer-shift identity, c = 2."""
    t0 = time.perf_counter()
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 16)
    w1 = constant(1.0)
    w2 = constant(2.0)
    eq = _transfinite.equilibrium(d, w1, max_iters=200_000, tol=1e-3)
    t_base = math.exp(-_transfinite.energy_of(d, w1, eq.nu))
    t_scaled = math.exp(-_transfinite.energy_of(d, w2, eq.nu))
    rel = abs(t_scaled / t_base - 4.0) / 4.0
    return _finish(
        5,
        "weight scaling law",
        rel <= 1e-10,
        {"ratio": t_scaled / t_base, "target": 4.0, "rel_err": rel},
        t0,
    )


def check_negative_certificate(seed: int = 0) -> CheckResult:
    """6: B_2 has a certified negative eigenvalue; B_1/2 is positive."""
    t0 = time.perf_counter()
    one = constant(1.0)
    g1 = constant(1.0, role="g")
    big = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 32)
    lam, _ = _spectra.extreme_eigenpairs(_kernel.matrix_free(big, one, g1), k=1, which="bottom")
    cert = _transfinite.negative_certificate(big, one, nmax=64, seed=seed)
    small = make_ball(2, (0.0, 0.0), 0.5, 1.0 / 32)
    sr = _spectra.full_spectrum(_kernel.assemble(small, one, g1))
    small_ok = sr.taus.min() >= -1e-6 * sr.scale
    cert_small = _transfinite.negative_certificate(small, one, nmax=64, seed=seed)
    ok = (
        lam[0] < 0
        and cert.found_n is not None
        and cert.found_n <= 64
        and small_ok
        and cert_small.found_n is None
    )
    return _finish(
        6,
        "negative eigenvalue certificate",
        ok,
        {
            "lambda_min_B2": float(lam[0]),
            "certificate_n": cert.found_n,
            "certificate_value": cert.found_value,
            "lambda_min_B_half": float(sr.taus.min()),
            "small_certificate_n": cert_small.found_n,
        },
        t0,
    )


def check_monotonicity(seed: int = 0) -> CheckResult:
    """7: tau+ grows with the domain, with w, and with 1/g (strict gaps)."""
    t0 = time.perf_counter()
    h = 1.0 / 32
    g1 = constant(1.0, role="g")
    b_half = make_ball(2, (0.0, 0.0), 0.5, h)
    b_one = make_ball(2, (0.0, 0.0), 1.0, h)

    def tau_top(d, w, g):
        sys = _kernel.matrix_free(d, w, g)
        lam, _ = _spectra.extreme_eigenpairs(sys, k=1, which="top")
        return float(lam[0]), sys.scale

    w2 = constant(2.0)
    hyp = check_sqrt_diam_bound(w2, b_one)
    t_small, _ = tau_top(b_half, w2, constant(2.0, role="g"))
    t_large, scale = tau_top(b_one, w2, constant(2.0, role="g"))
    gap_domain = t_large - t_small

    t_w2, _ = tau_top(b_one, w2, g1)
    t_w3, _ = tau_top(b_one, constant(3.0), g1)
    gap_weight = t_w3 - t_w2
    t_ghalf, _ = tau_top(b_one, w2, constant(0.5, role="g"))
    gap_g = t_ghalf - t_w2

    tol = 1e-6 * scale
    ok = hyp and gap_domain > tol and gap_weight > tol and gap_g > tol
    return _finish(
        7,
        "tau+ monotonicity",
        ok,
        {
            "hypothesis_sqrt_diam": hyp,
            "gap_domain": gap_domain,
            "gap_weight": gap_weight,
            "gap_g": gap_g,
            "tol": tol,
        },
        t0,
    )


def check_polarization(seed: int = 0) -> CheckResult:
    """8: polarization strictly raises tau+ and never lowers Riesz energy."""
    t0 = time.perf_counter()
    h = 1.0 / 16
    # Off-center square straddling the plane, plus a corner flap.  A plain
    # rectangle polarizes exactly to itself or its mirror (gap 0); the flap
    # makes both cell symmetric differences nonzero, the strict case.
    d = union_domains(
        [
            make_rect((-0.375, -0.625), (0.625, 0.375), h),
            make_rect((0.625, 0.375), (0.875, 0.625), h),
        ]
    )
    p = Polarizer(normal=(0.0, 1.0), offset=0.0)
    w2 = constant(2.0)
    rep = _planar.polarization_experiment(d, p, w2, constant(2.0, role="g"))
    scale = _kernel.matrix_free(d, w2, constant(2.0, role="g")).scale
    ok = rep.hypothesis_ok and rep.gap > 1e-8 * scale and rep.equality_case is None

    rng = np.random.default_rng(seed)
    worst = np.inf
    violations = 0
    for _ in range(100):
        f = rng.standard_normal(d.cell_count)
        i_f, i_pf = _planar.riesz_inequality_check(d, f, p, w2)
        margin = i_pf - i_f
        worst = min(worst, margin)
        if margin < -1e-10 * (abs(i_f) + abs(i_pf) + 1.0):
            violations += 1
    ok = ok and violations == 0
    return _finish(
        8,
        "polarization inequalities",
        ok,
        {
            "tau_omega": rep.tau_omega,
            "tau_polarized": rep.tau_polarized,
            "gap": rep.gap,
            "tol": 1e-8 * scale,
            "equality_case": rep.equality_case,
            "riesz_violations": violations,
            "riesz_worst_margin": worst,
        },
        t0,
    )


def check_representation(seed: int = 0) -> CheckResult:
    """9: sphere-mean representation of top-3 eigenpairs at h = 1/128."""
    t0 = time.perf_counter()
    h = 1.0 / 128
    r = 0.25
    one = constant(1.0)
    g1 = constant(1.0, role="g")
    cases = {
        "disk": (
            make_ball(2, (0.0, 0.0), 1.0, h),
            [(0.0, 0.0), (0.35, 0.0), (-0.35, 0.0), (0.0, 0.35), (0.0, -0.35)],
        ),
        "square": (
            make_rect((0.0, 0.0), (1.0, 1.0), h),
            [(0.5, 0.5), (0.3, 0.5), (0.7, 0.5), (0.5, 0.3), (0.5, 0.7)],
        ),
    }
    worst = 0.0
    details = {}
    for label, (d, points) in cases.items():
        sys = _kernel.matrix_free(d, one, g1)
        taus, u = _spectra.extreme_eigenpairs(sys, k=3, which="top")
        residuals = []
        for j in range(3):
            for x in points:
                residuals.append(
                    float(_planar.representation_residual(sys, float(taus[j]), u[:, j], x, r))
                )
        details[label] = {"taus": [float(t) for t in taus], "max_residual": max(residuals)}
        worst = max(worst, max(residuals))
    # mean-value building block, spectrally accurate trapezoid
    mv_err = max(
        abs(_planar.circle_log_integral((0.0, 0.0), r) - 2 * math.pi * math.log(r)),
        abs(_planar.circle_log_integral((r / 2, 0.0), r) - 2 * math.pi * math.log(r)),
        abs(_planar.circle_log_integral((2 * r, 0.0), r) - 2 * math.pi * math.log(2 * r)),
    )
    ok = worst <= 0.01 and mv_err <= 1e-6
    details["mean_value_err"] = mv_err
    return _finish(9, "representation formula", ok, details, t0)


def check_laplacian_identity(seed: int = 0) -> CheckResult:
    """10: Delta_h(L u) = -2 pi u for a smooth bump, error falling with h."""
    t0 = time.perf_counter()
    errs = {}
    for h in (1.0 / 64, 1.0 / 128):
        d = make_ball(2, (0.0, 0.0), 1.0, h)
        u = _planar.smooth_bump(d, radius=0.8)
        errs[str(h)] = _planar.laplacian_identity_check(d, u).rel_l2_error
    ok = errs[str(1.0 / 128)] <= 0.02 and errs[str(1.0 / 128)] < errs[str(1.0 / 64)]
    return _finish(10, "log-Laplacian identity", ok, {"rel_l2_errors": errs}, t0)


def check_extremum_scans(seed: int = 0) -> CheckResult:
    """11: no excluded interior extrema of phi g for either sign of tau."""
    t0 = time.perf_counter()
    one = constant(1.0)
    g1 = constant(1.0, role="g")
    d_pos = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 64)
    sys_pos = _kernel.matrix_free(d_pos, one, g1)
    tau_p, u_p = _spectra.extreme_eigenpairs(sys_pos, k=1, which="top")
    scan_p = _planar.extremum_scan(d_pos, u_p[:, 0] * sys_pos.gvals, float(tau_p[0]))

    d_neg = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 32)
    sys_neg = _kernel.matrix_free(d_neg, one, g1)
    tau_n, u_n = _spectra.extreme_eigenpairs(sys_neg, k=1, which="bottom")
    scan_n = _planar.extremum_scan(d_neg, u_n[:, 0] * sys_neg.gvals, float(tau_n[0]))

    ok = (
        float(tau_n[0]) < 0
        and scan_p.violations.size == 0
        and scan_n.violations.size == 0
        and not scan_p.degenerate
        and not scan_n.degenerate
    )
    return _finish(
        11,
        "interior extremum exclusion",
        ok,
        {
            "tau_plus": float(tau_p[0]),
            "violations_plus": int(scan_p.violations.shape[0]),
            "checked_plus": scan_p.checked,
            "tau_minus": float(tau_n[0]),
            "violations_minus": int(scan_n.violations.shape[0]),
            "checked_minus": scan_n.checked,
        },
        t0,
    )


def check_continuity(seed: int = 0) -> CheckResult:
    """12: tau along expanding ball rasters is monotone and converges."""
    t0 = time.perf_counter()
    one = constant(1.0)
    g1 = constant(1.0, role="g")

    radii_plus = [1.0 - 1.0 / n for n in range(2, 17)] + [1.0]
    doms = [make_ball(2, (0.0, 0.0), r, 1.0 / 64) for r in radii_plus]
    top = _spectra.convergence_study(doms, one, g1, which="top", labels=radii_plus)
    final_gap_plus = abs(top.taus[-1] - top.taus[-2]) / abs(top.taus[-1])

    # the negative branch moves fast near R = 2; a dyadic tail is needed
    # before the raster is close enough for a small final gap
    radii_minus = [2.0 - 1.0 / n for n in list(range(2, 17)) + [32, 64, 128, 256]] + [2.0]
    doms = [make_ball(2, (0.0, 0.0), r, 1.0 / 32) for r in radii_minus]
    bot = _spectra.convergence_study(doms, one, g1, which="bottom", labels=radii_minus)
    final_gap_minus = abs(bot.taus[-1] - bot.taus[-2]) / abs(bot.taus[-1])

    ok = (
        top.nested
        and top.monotone
        and final_gap_plus < 0.01
        and bot.nested
        and bot.monotone
        and bot.taus[-1] < 0
        and final_gap_minus < 0.02
    )
    return _finish(
        12,
        "domain continuity of tau",
        ok,
        {
            "tau_plus_first_last": [float(top.taus[0]), float(top.taus[-1])],
            "monotone_plus": top.monotone,
            "final_gap_plus": float(final_gap_plus),
            "tau_minus_first_last": [float(bot.taus[0]), float(bot.taus[-1])],
            "monotone_minus": bot.monotone,
            "final_gap_minus": float(final_gap_minus),
        },
        t0,
    )


def check_rho_monotone(seed: int = 0) -> CheckResult:
    """13: rho_k on the unit disk is nonincreasing, rho_2 = grid diameter."""
    t0 = time.perf_counter()
    d = make_ball(2, (0.0, 0.0), 1.0, 1.0 / 16)
    seq = _transfinite.rho_sequence(d, constant(1.0), kmax=12, restarts=8, seed=seed)
    diam = diameter(d)
    rho2_exact = abs(seq.rhos[0] - diam) <= 1e-13 * diam
    ok = seq.monotone and rho2_exact
    return _finish(
        13,
        "Fekete rho sequence",
        ok,
        {
            "rhos": [float(r) for r in seq.rhos],
            "diameter": diam,
            "escalations": seq.escalations,
            "monotone": seq.monotone,
        },
        t0,
    )


def check_spectral_hygiene(seed: int = 0) -> CheckResult:
    """14: residuals, g-orthonormality, and deflated Rayleigh cross-checks."""
    t0 = time.perf_counter()
    from .weights import gauss_log

    d = make_ball(2, (0.0, 0.0), 2.0, 1.0 / 16)
    g = gauss_log(0.0625, 0.0, (0.0, 0.0), role="g")  # range [1, e^{1/4}] on B_2
    sys = _kernel.assemble(d, constant(1.0), g)
    sr = _spectra.full_spectrum(sys)
    res_ok = float(sr.residuals.max()) <= 1e-8 * sys.scale
    gram = (sr.vectors * sys.gvals[:, None]).T @ sr.vectors * sys.h**2
    orth_err = float(np.abs(gram - np.eye(sys.n)).max())
    orth_ok = orth_err <= 1e-8

    pos = sr.taus[sr.taus > 0]
    neg = sr.taus[sr.taus < 0]
    defl_errs = {}
    defl_ok = True
    for k in (1, 2, 3):
        val = _spectra.deflated_rayleigh(sys, k, +1, result=sr)
        err = float(abs(val - pos[k - 1]) / abs(pos[k - 1]))
        defl_errs[f"plus_{k}"] = err
        defl_ok &= err <= 1e-8
    val = _spectra.deflated_rayleigh(sys, 1, -1, result=sr)
    err = float(abs(val - neg[0]) / abs(neg[0]))
    defl_errs["minus_1"] = err
    defl_ok &= err <= 1e-8

    ok = res_ok and orth_ok and defl_ok
    return _finish(
        14,
        "spectral hygiene",
        ok,
        {
            "max_residual": float(sr.residuals.max()),
            "residual_tol": 1e-8 * sys.scale,
            "orthonormality_err": orth_err,
            "deflated_rel_errs": defl_errs,
            "tau_minus": sr.tau_minus,
        },
        t0,
    )


ALL_CHECKS = [
    check_disk_potential,
    check_w1_example,
    check_unweighted_capacity,
    check_weighted_capacity,
    check_scaling_law,
    check_negative_certificate,
    check_monotonicity,
    check_polarization,
    check_representation,
    check_laplacian_identity,
    check_extremum_scans,
    check_continuity,
    check_rho_monotone,
    check_spectral_hygiene,
]

SUITES = {
    "monotonicity": [check_monotonicity, check_spectral_hygiene],
    "polarization": [check_polarization],
    "transfinite": [
        check_unweighted_capacity,
        check_weighted_capacity,
        check_scaling_law,
        check_rho_monotone,
    ],
    "planar": [
        check_disk_potential,
        check_w1_example,
        check_representation,
        check_laplacian_identity,
        check_extremum_scans,
    ],
    "certificate": [check_negative_certificate],
    "convergence": [check_continuity],
    "all": ALL_CHECKS,
}


def all_checks():
    return list(ALL_CHECKS)


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [chk(seed=seed) for chk in SUITES[name]]


def format_check(c: CheckResult) -> str:
    status = "PASS" if c.passed else "FAIL"
    return f"{status} [{c.number:2d}] {c.name} ({c.elapsed}s): {c.details}"
