"""Acceptance gate: every criterion at its stated tolerance, one printed
pass/fail line each.  Run with -s to see the lines."""

import time

from bottleneck_lab.acceptance import (
    check_arimoto,
    check_chi2_endpoints,
    check_matched,
    check_mgl,
    check_mr_gerber,
    check_oracle_cross,
    run_property_suite,
)


def report(result, elapsed=None, budget=None):
    suffix = f" [{elapsed:.1f}s of {budget:.0f}s budget]" if budget else ""
    print(result.line() + suffix)
    assert result.passed, result.line()
    if budget is not None:
        assert elapsed < budget


def test_a1_lower_boundary_exactness():
    t0 = time.perf_counter()
    result = check_mgl(resolution=4096, steps=256, probes=101)
    report(result, time.perf_counter() - t0, budget=10.0)


def test_a2_upper_boundary_exactness():
    report(check_mr_gerber(resolution=4096, steps=256, probes=101))


def test_a3_arimoto_k_frame():
    report(check_arimoto(beta=2.0, resolution=4096, steps=256, probes=101))


def test_a4_oracle_cross_validation():
    t0 = time.perf_counter()
    result = check_oracle_cross(seed=7, resolution=512, n_x=21)
    report(result, time.perf_counter() - t0, budget=60.0)


def test_a5_matched_channel_invariance():
    report(check_matched(n_points=10, perturb=0.01))


def test_a6_chi2_endpoints_and_bounds():
    report(check_chi2_endpoints())


def test_a7_property_suites():
    violations = run_property_suite(n_seeds=200)
    line = (
        f"A7 property suites: {'PASS' if not violations else 'FAIL'} "
        f"({len(violations)} violations over 200 seeds)"
    )
    print(line)
    for v in violations[:20]:
        print("  ", v)
    assert not violations
