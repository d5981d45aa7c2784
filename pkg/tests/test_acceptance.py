"""One test per verification check, at the pinned desk-scale configurations.

Each test runs the same code path as ``logpot verify all`` and fails with the
check's measured numbers in the message, so a regression is diagnosable from
the pytest output alone.  Budget for the whole module is under a minute on
one core; the slow entries are the dense h = 1/64 disk assemblies.
"""

from logpot import verify


def _run(check):
    result = check()
    print(verify.format_check(result))
    assert result.passed, verify.format_check(result)
    return result


def test_01_disk_potential_closed_form():
    r = _run(verify.check_disk_potential)
    assert r.details["max_rel_err"] <= 0.01


def test_02_weighted_disk_identity():
    r = _run(verify.check_w1_example)
    for c, dev in r.details["deviations"].items():
        assert dev["max_dev"] <= dev["tol"], c
    assert r.details["halving_ratio"] >= 2.0


def test_03_unweighted_capacity():
    r = _run(verify.check_unweighted_capacity)
    for label in ("B_1.0", "B_2.0"):
        assert r.details[label]["rel_err"] <= 0.02
        assert r.details[label]["seconds"] < 60.0


def test_04_weighted_disk_capacity():
    r = _run(verify.check_weighted_capacity)
    for label in ("B_1.0", "B_2.0"):
        assert r.details[label]["rel_err"] <= 0.02


def test_05_scaling_law():
    r = _run(verify.check_scaling_law)
    assert r.details["rel_err"] <= 1e-10


def test_06_negative_certificate():
    r = _run(verify.check_negative_certificate)
    assert r.details["lambda_min_B2"] < 0
    assert r.details["certificate_n"] is not None
    assert r.details["certificate_value"] < 0
    assert r.details["small_certificate_n"] is None


def test_07_domain_monotonicity():
    r = _run(verify.check_monotonicity)
    tol = r.details["tol"]
    for key in ("gap_domain", "gap_weight", "gap_g"):
        assert r.details[key] > tol, key


def test_08_polarization_gap():
    r = _run(verify.check_polarization)
    assert r.details["gap"] > r.details["tol"]
    assert r.details["equality_case"] is None
    assert r.details["riesz_violations"] == 0


def test_09_representation_lemma():
    r = _run(verify.check_representation)
    assert r.details["disk"]["max_residual"] <= 0.01
    assert r.details["square"]["max_residual"] <= 0.01
    assert r.details["mean_value_err"] <= 1e-6


def test_10_laplacian_identity():
    r = _run(verify.check_laplacian_identity)
    errs = r.details["rel_l2_errors"]
    assert errs["0.0078125"] <= 0.02
    assert errs["0.0078125"] < errs["0.015625"]  # refinement helps


def test_11_extremum_exclusion():
    r = _run(verify.check_extremum_scans)
    assert r.details["violations_plus"] == 0
    assert r.details["violations_minus"] == 0
    assert r.details["tau_minus"] < 0


def test_12_continuity_in_the_domain():
    r = _run(verify.check_continuity)
    assert r.details["monotone_plus"] and r.details["monotone_minus"]
    assert r.details["final_gap_plus"] < 0.01
    assert r.details["final_gap_minus"] < 0.02


def test_13_fekete_sequence():
    r = _run(verify.check_rho_monotone)
    assert r.details["monotone"]
    diam = r.details["diameter"]
    assert abs(r.details["rhos"][0] - diam) <= 1e-13 * diam


def test_14_spectral_hygiene():
    r = _run(verify.check_spectral_hygiene)
    assert r.details["max_residual"] <= r.details["residual_tol"]
    assert r.details["orthonormality_err"] <= 1e-8
    assert max(r.details["deflated_rel_errs"].values()) <= 1e-8
