"""Acceptance checks: exact closed forms and the independent oracle against
the slope-sweep engine, plus the randomized property suite.

Each check returns a CheckResult with the measured deviation so callers (the
verify CLI and the test suite) can print one pass/fail line per criterion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .closed_forms import (
    BscInstance,
    arimoto_mr_gerber,
    arimoto_mrs_gerber,
    mr_gerber,
    mr_gerber_point,
    mrs_gerber,
)
from .core import (
    LN2,
    DivergenceKernel,
    binary_entropy,
    f_information,
    joint_from_marginal_channel,
    resolve_functional,
)
from .envelope import (
    LagrangianGraph,
    SimplexLattice,
    build_lagrangian_graph,
    envelope_general,
)
from .oracle import oracle_exhaustive_binary
from .sweep import (
    BoundaryCurve,
    boundary_point_at_lambda,
    bottleneck_value,
    default_lambda_grid,
    funnel_value,
    matched_channel_invariance_check,
    sweep,
)

_ENTROPY = DivergenceKernel.entropy_functional()
_CHI2 = DivergenceKernel.chi_squared()


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{self.criterion}: {status} (max deviation {self.max_deviation:.3e}, "
            f"tolerance {self.tolerance:.1e}; {self.detail})"
        )


def _quiet(fn, *args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args)


def _entropy_curve(inst: BscInstance, direction: str, resolution: int, steps: int) -> BoundaryCurve:
    return sweep(
        _ENTROPY,
        _ENTROPY,
        inst.channel(),
        inst.marginal(),
        direction,
        steps=steps,
        resolution=resolution,
        problem="pf" if direction == "lower" else "ib",
        frame="entropy",
    )


def check_mgl(resolution: int = 4096, steps: int = 256, probes: int = 101) -> CheckResult:
    """A1: sweep lower entropy curve against the exact lower boundary."""
    inst = BscInstance(q=0.1, delta=0.1)
    curve = _entropy_curve(inst, "lower", resolution, steps)
    xs = np.linspace(0.0, binary_entropy(inst.q), probes)
    dev = max(
        abs(_quiet(funnel_value, curve, float(x) * LN2) / LN2 - mrs_gerber(inst, float(x)))
        for x in xs
    )
    tol = 2e-3
    return CheckResult(
        "A1 lower-boundary exactness (entropy, BSC 0.1/0.1)",
        dev <= tol,
        dev,
        tol,
        f"{probes} probes, N={resolution}, {steps} slopes, bits",
    )


def check_mr_gerber(resolution: int = 4096, steps: int = 256, probes: int = 101) -> CheckResult:
    """A2: sweep upper entropy curve against the exact parametric upper
    boundary, vertical distance after x-interpolation."""
    inst = BscInstance(q=0.1, delta=0.1)
    curve = _entropy_curve(inst, "upper", resolution, steps)
    dev = 0.0
    for alpha in np.linspace(0.0, 1.0, probes):
        point = mr_gerber_point(inst, float(alpha))
        got = _quiet(bottleneck_value, curve, point.x * LN2) / LN2
        dev = max(dev, abs(got - point.y))
    tol = 2e-3
    return CheckResult(
        "A2 upper-boundary exactness (entropy, BSC 0.1/0.1)",
        dev <= tol,
        dev,
        tol,
        f"{probes} parametric probes, N={resolution}, {steps} slopes, bits",
    )


def check_arimoto(
    beta: float = 2.0, resolution: int = 4096, steps: int = 256, probes: int = 101
) -> CheckResult:
    """A3: norm-kernel sweeps against the exact K-frame boundaries."""
    inst = BscInstance(q=0.4, delta=0.2)
    kern = DivergenceKernel.norm_beta(beta)
    lower = sweep(
        kern, kern, inst.channel(), inst.marginal(), "lower",
        steps=steps, resolution=resolution, problem="arimoto", frame="K", beta=beta,
    )
    upper = sweep(
        kern, kern, inst.channel(), inst.marginal(), "upper",
        steps=steps, resolution=resolution, problem="arimoto", frame="K", beta=beta,
    )
    dev = 0.0
    for p in np.linspace(0.0, inst.q, probes):
        x, y = arimoto_mrs_gerber(inst, beta, float(p))
        dev = max(dev, abs(_quiet(funnel_value, lower, x) - y))
    for alpha in np.linspace(0.0, 1.0, probes):
        x, y = arimoto_mr_gerber(inst, beta, float(alpha))
        dev = max(dev, abs(_quiet(bottleneck_value, upper, x) - y))
    tol = 2e-3
    return CheckResult(
        f"A3 K-frame boundaries (norm beta={beta}, BSC 0.4/0.2)",
        dev <= tol,
        dev,
        tol,
        f"both directions, {probes} probes each, N={resolution}",
    )


def check_oracle_cross(
    seed: int = 7, resolution: int = 512, n_x: int = 21, sweep_resolution: int = 4096
) -> CheckResult:
    """A4: exhaustive binary oracle against sweeps (one-sided) and against
    the closed forms (two-sided, entropy case)."""
    inst = BscInstance(q=0.1, delta=0.1)
    tol = 5e-3
    worst = 0.0
    details = []

    lower_h = _entropy_curve(inst, "lower", sweep_resolution, 256)
    upper_h = _entropy_curve(inst, "upper", sweep_resolution, 256)
    xs_nats = np.linspace(0.0, binary_entropy(inst.q) * LN2, n_x)
    funnel = oracle_exhaustive_binary(
        _ENTROPY, _ENTROPY, inst.delta, inst.q, xs_nats, "lower", resolution
    )
    bottleneck = oracle_exhaustive_binary(
        _ENTROPY, _ENTROPY, inst.delta, inst.q, xs_nats, "upper", resolution
    )
    for pt in funnel:
        sweep_y = _quiet(funnel_value, lower_h, pt.x_target)
        worst = max(worst, (sweep_y - pt.best_y) / LN2)  # oracle must not undercut
        worst = max(worst, abs(pt.best_y / LN2 - mrs_gerber(inst, pt.x_target / LN2)))
    for pt in bottleneck:
        sweep_y = _quiet(bottleneck_value, upper_h, pt.x_target)
        worst = max(worst, (pt.best_y - sweep_y) / LN2)  # oracle must not overshoot
        worst = max(worst, abs(pt.best_y / LN2 - mr_gerber(inst, pt.x_target / LN2)))
    details.append("entropy vs sweeps and closed forms")

    lower_c = sweep(
        _CHI2, _CHI2, inst.channel(), inst.marginal(), "lower",
        steps=256, resolution=sweep_resolution, problem="epf",
    )
    upper_c = sweep(
        _CHI2, _CHI2, inst.channel(), inst.marginal(), "upper",
        steps=256, resolution=sweep_resolution, problem="eb",
    )
    xs_chi = np.linspace(0.0, 1.0, n_x)
    for pt in oracle_exhaustive_binary(_CHI2, _CHI2, inst.delta, inst.q, xs_chi, "lower", resolution):
        worst = max(worst, _quiet(funnel_value, lower_c, pt.x_target) - pt.best_y)
    for pt in oracle_exhaustive_binary(_CHI2, _CHI2, inst.delta, inst.q, xs_chi, "upper", resolution):
        worst = max(worst, pt.best_y - _quiet(bottleneck_value, upper_c, pt.x_target))
    details.append("chi2 vs sweeps")

    return CheckResult(
        "A4 oracle cross-validation (BSC 0.1/0.1)",
        worst <= tol,
        worst,
        tol,
        f"{n_x} x-points, oracle grid {resolution}, seed {seed}; " + "; ".join(details),
    )


def check_matched(
    n_points: int = 10, perturb: float = 0.01, resolution: int = 4096, steps: int = 256
) -> CheckResult:
    """A5: matched channels transported to a perturbed marginal agree with a
    fresh sweep at that marginal and keep the same atom set."""
    inst = BscInstance(q=0.1, delta=0.1)
    lattice = SimplexLattice.build(2, resolution)
    curve = sweep(
        _ENTROPY, _ENTROPY, inst.channel(), inst.marginal(), "lower",
        steps=steps, lattice=lattice, problem="pf", frame="entropy",
    )
    q0 = float(curve.marginal.probs[1])
    margin = perturb + 0.005
    candidates = [
        p
        for p in curve.points
        if not p.trivial
        and math.isfinite(p.lam)
        and len(p.witness.atoms) == 2
        and min(a.probs[1] for _, a in p.witness.atoms) < q0 - margin
        and max(a.probs[1] for _, a in p.witness.atoms) > q0 + margin
    ]
    if len(candidates) < n_points:
        return CheckResult(
            "A5 matched-channel invariance", False, math.inf, 5e-3,
            f"only {len(candidates)} usable non-trivial points",
        )
    picks = [candidates[i] for i in np.linspace(0, len(candidates) - 1, n_points).astype(int)]
    tol = 5e-3
    worst = 0.0
    atom_mismatch = 0
    for point in picks:
        for dq in (perturb, -perturb):
            q_new = np.array([1.0 - (q0 + dq), q0 + dq])
            moved = matched_channel_invariance_check(
                point, q_new, _ENTROPY, _ENTROPY, inst.channel(),
                lattice=lattice, verify=False,
            )
            fresh = boundary_point_at_lambda(
                _ENTROPY, _ENTROPY, inst.channel(), q_new, point.lam, "lower",
                lattice=lattice,
            )
            worst = max(worst, abs(moved.x - fresh.x) / LN2, abs(moved.y - fresh.y) / LN2)
            got = sorted(a.probs[1] for _, a in moved.witness.atoms)
            want = sorted(a.probs[1] for _, a in fresh.witness.atoms)
            if len(got) != len(want) or any(abs(u - v) > 0 for u, v in zip(got, want)):
                atom_mismatch += 1
    passed = worst <= tol and atom_mismatch == 0
    return CheckResult(
        "A5 matched-channel invariance (entropy, BSC 0.1/0.1)",
        passed,
        worst,
        tol,
        f"{n_points} points, perturbation +/-{perturb}, atom mismatches {atom_mismatch}, bits",
    )


def check_chi2_endpoints(resolution: int = 4000, steps: int = 256) -> CheckResult:
    """A6: chi-squared curves hit (0, 0) and the exact full-information
    endpoint, and never exceed the m-1 bound."""
    inst = BscInstance(q=0.1, delta=0.1)
    lower = sweep(
        _CHI2, _CHI2, inst.channel(), inst.marginal(), "lower",
        steps=steps, resolution=resolution, problem="epf",
    )
    upper = sweep(
        _CHI2, _CHI2, inst.channel(), inst.marginal(), "upper",
        steps=steps, resolution=resolution, problem="eb",
    )
    m = 2
    joint = joint_from_marginal_channel(lower.marginal, lower.channel)
    chi_xy = f_information(_CHI2, joint)
    worst = 0.0
    worst = max(worst, abs(_quiet(funnel_value, lower, float(m - 1)) - chi_xy))
    worst = max(worst, abs(_quiet(bottleneck_value, upper, float(m - 1)) - chi_xy))
    endpoint_dev = worst
    bound_excess = max(
        max(lower.xs.max(), upper.xs.max()) - (m - 1),
        0.0,
    )
    origin_dev = max(
        abs(lower.xs[0]) + abs(lower.ys[0]),
        abs(upper.xs[0]) + abs(upper.ys[0]),
    )
    passed = endpoint_dev <= 1e-6 and bound_excess <= 1e-9 and origin_dev <= 1e-9
    return CheckResult(
        "A6 chi-squared endpoints and bounds (BSC 0.1/0.1)",
        passed,
        max(endpoint_dev, bound_excess, origin_dev),
        1e-6,
        f"endpoint dev {endpoint_dev:.2e}, bound excess {bound_excess:.2e}, "
        f"origin dev {origin_dev:.2e}",
    )


def _lattice_line_groups(lattice: SimplexLattice) -> list[list[int]]:
    """Index groups forming straight evenly spaced lines across the lattice,
    one family per coordinate pair."""
    m = lattice.m
    counts = np.round(lattice.points * lattice.resolution).astype(int)
    groups: list[list[int]] = []
    for i in range(m):
        for j in range(i + 1, m):
            others = [k for k in range(m) if k not in (i, j)]
            keys: dict[tuple, list[tuple[int, int]]] = {}
            for idx in range(lattice.size):
                key = tuple(counts[idx, k] for k in others)
                keys.setdefault(key, []).append((counts[idx, i], idx))
            for members in keys.values():
                if len(members) >= 3:
                    members.sort()
                    groups.append([idx for _, idx in members])
    return groups


def run_property_suite(n_seeds: int = 200) -> list[str]:
    """A7: randomized envelope/witness/DPI/cardinality/closed-form checks.
    Returns a list of violation descriptions (empty means a clean pass)."""
    violations: list[str] = []
    kernels = [
        DivergenceKernel.entropy_functional(),
        DivergenceKernel.kl(),
        DivergenceKernel.chi_squared(),
    ]
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 4))
        n = int(rng.integers(2, 4))
        T = rng.exponential(size=(n, m)) + 0.05
        T = T / T.sum(axis=0, keepdims=True)
        q = rng.exponential(size=m)
        # Blend toward uniform so the snapped marginal keeps full support.
        q = 0.6 * q / q.sum() + 0.4 / m
        kernel = kernels[int(rng.integers(0, len(kernels)))]
        direction = "lower" if rng.integers(0, 2) == 0 else "upper"
        resolution = 64 if m == 2 else 12
        lattice = SimplexLattice.build(m, resolution)
        q_idx = lattice.snap(q)
        q_tilde = lattice.points[q_idx]
        ref = q_tilde if kernel.is_divergence else None
        g_ref = (T @ q_tilde) if kernel.is_divergence else None
        try:
            graph0 = build_lagrangian_graph(
                kernel, kernel, T, 0.0, lattice, f_reference=ref, g_reference=g_ref
            )
            grid = default_lambda_grid(graph0.x_values, graph0.y_values, steps=16)
            lam = float(grid[int(rng.integers(0, grid.size))])
            graph = build_lagrangian_graph(
                kernel, kernel, T, lam, lattice, f_reference=ref, g_reference=g_ref
            )
            result = envelope_general(graph, direction)
        except Exception as exc:  # any crash is a violation
            violations.append(f"seed {seed}: envelope construction failed: {exc}")
            continue

        sign = 1.0 if direction == "lower" else -1.0
        dom = float(np.max(sign * (result.envelope_values - graph.values)))
        if dom > 1e-12:
            violations.append(f"seed {seed}: envelope dominance violated by {dom:.2e}")

        regraph = LagrangianGraph(
            lattice=lattice,
            lam=0.0,
            values=result.envelope_values,
            x_values=np.zeros(lattice.size),
            y_values=result.envelope_values,
        )
        again = envelope_general(regraph, direction)
        idem = float(np.max(np.abs(again.envelope_values - result.envelope_values)))
        if idem > 1e-9:
            violations.append(f"seed {seed}: envelope not idempotent ({idem:.2e})")

        for line in _lattice_line_groups(lattice):
            vals = result.envelope_values[line]
            second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
            worst = float(np.min(sign * second))
            if worst < -1e-9:
                violations.append(
                    f"seed {seed}: envelope loses {direction} curvature ({worst:.2e})"
                )
                break

        try:
            point = boundary_point_at_lambda(
                kernel, kernel, T, q_tilde, lam, direction, lattice=lattice
            )
        except Exception as exc:
            violations.append(f"seed {seed}: boundary point failed: {exc}")
            continue
        if len(point.witness.atoms) > m + 1:
            violations.append(f"seed {seed}: witness has {len(point.witness.atoms)} atoms")
        f_call = resolve_functional(kernel, ref)
        g_call = resolve_functional(kernel, g_ref)
        x_re = point.witness.expectation(f_call)
        y_re = point.witness.expectation(lambda P: g_call(P @ np.asarray(T).T))
        if abs(x_re - point.x) > 1e-9 or abs(y_re - point.y) > 1e-9:
            violations.append(f"seed {seed}: witness does not reproduce its point")
        support_line = point.y - lam * point.x
        env_at_q = float(result.envelope_values[q_idx])
        if abs(support_line - env_at_q) > 1e-7:
            violations.append(
                f"seed {seed}: supporting line off the envelope by "
                f"{abs(support_line - env_at_q):.2e}"
            )
        if kernel.is_divergence:
            joint = joint_from_marginal_channel(q_tilde, T)
            dpi = f_information(kernel, joint)
            if point.y > dpi + 1e-7:
                violations.append(
                    f"seed {seed}: data-processing bound broken ({point.y} > {dpi})"
                )

        q_b = float(rng.uniform(0.05, 0.5))
        d_b = float(rng.uniform(0.0, 0.5))
        inst = BscInstance(q=q_b, delta=d_b)
        hq = binary_entropy(q_b)
        for x in np.linspace(0.0, hq, 17):
            lo = mrs_gerber(inst, float(x))
            hi = mr_gerber(inst, float(x))
            if lo > hi + 1e-12:
                violations.append(f"seed {seed}: closed-form sandwich broken at x={x}")
                break
        if abs(mrs_gerber(inst, 0.0) - mr_gerber(inst, 0.0)) > 1e-9 or abs(
            mrs_gerber(inst, hq) - mr_gerber(inst, hq)
        ) > 1e-9:
            violations.append(f"seed {seed}: closed forms differ at an endpoint")
    return violations


SUITES = {
    "mgl": check_mgl,
    "mrgl": check_mr_gerber,
    "arimoto": check_arimoto,
    "oracle-cross": check_oracle_cross,
    "matched": check_matched,
}
