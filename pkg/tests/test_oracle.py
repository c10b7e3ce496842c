import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bottleneck_lab import (
    BscInstance,
    DivergenceKernel,
    binary_entropy,
    binary_entropy_inv,
    f_information,
    joint_from_marginal_channel,
    mr_gerber,
    mrs_gerber,
    oracle_boundary,
    oracle_exhaustive_binary,
)
from bottleneck_lab.core import LN2
from bottleneck_lab.oracle import OracleConfig, oracle_csv_rows

ENTROPY = DivergenceKernel.entropy_functional()
KL = DivergenceKernel.kl()
CHI2 = DivergenceKernel.chi_squared()

INST = BscInstance(q=0.1, delta=0.1)


def witness_constraint_holds(point):
    if not point.feasible:
        return True
    if point.direction == "upper":
        return point.x_achieved <= point.x_target + 1e-9
    return point.x_achieved >= point.x_target - 1e-9


class TestExhaustiveBinary:
    def test_zero_target_divergence_frame(self):
        for direction in ("lower", "upper"):
            pt = oracle_exhaustive_binary(KL, KL, 0.1, 0.1, [0.0], direction, 128)[0]
            assert pt.feasible
            assert pt.best_y == pytest.approx(0.0, abs=1e-12)

    def test_recovers_symmetric_witness(self):
        x_bits = 0.2
        pt = oracle_exhaustive_binary(
            ENTROPY, ENTROPY, 0.1, 0.1, [x_bits * LN2], "lower", 512
        )[0]
        r = binary_entropy_inv(x_bits)
        step = 2.0 / 512
        for _, atom in pt.witness.atoms:
            p = atom.probs[1]
            assert min(abs(p - r), abs(p - (1.0 - r))) <= step

    def test_three_atom_refinement_beats_pairs_on_upper(self):
        # In the regime where the exact upper boundary needs a third atom,
        # a pure two-atom search is strictly worse.
        x_t = 0.1 * LN2
        cfg2 = OracleConfig(atom_budget=2, grid_resolution=256, restarts=50, seed=3)
        cfg3 = OracleConfig(atom_budget=3, grid_resolution=256, restarts=50, seed=3)
        two = oracle_boundary(ENTROPY, ENTROPY, INST.channel(), INST.marginal(), x_t, "upper", cfg2)
        three = oracle_boundary(ENTROPY, ENTROPY, INST.channel(), INST.marginal(), x_t, "upper", cfg3)
        assert three.best_y > two.best_y + 1e-3
        assert math.isclose(three.best_y / LN2, mr_gerber(INST, 0.1), abs_tol=1e-4)

    def test_endpoint_has_unique_trivial_witness(self):
        hq = binary_entropy(INST.q) * LN2
        pt = oracle_exhaustive_binary(ENTROPY, ENTROPY, 0.1, 0.1, [hq], "lower", 512)[0]
        assert len(pt.witness.atoms) == 1
        assert_allclose(pt.witness.atoms[0][1].probs, [0.9, 0.1], atol=1e-12)

    def test_tracks_closed_forms(self):
        xs = np.linspace(0.0, binary_entropy(INST.q) * LN2, 15)
        funnel = oracle_exhaustive_binary(ENTROPY, ENTROPY, 0.1, 0.1, xs, "lower", 512)
        for pt in funnel:
            exact = mrs_gerber(INST, pt.x_target / LN2)
            assert pt.best_y / LN2 >= exact - 1e-9  # never below the true minimum
            assert pt.best_y / LN2 <= exact + 2e-3
        bottleneck = oracle_exhaustive_binary(ENTROPY, ENTROPY, 0.1, 0.1, xs, "upper", 512)
        for pt in bottleneck:
            exact = mr_gerber(INST, pt.x_target / LN2)
            assert pt.best_y / LN2 <= exact + 1e-9  # never above the true maximum
            assert pt.best_y / LN2 >= exact - 2e-3

    def test_soundness_of_every_witness(self):
        xs = np.linspace(0.0, 1.0, 11)
        for kernel in (CHI2, KL):
            for direction in ("lower", "upper"):
                grid = xs if kernel is CHI2 else xs * binary_entropy(INST.q) * LN2
                for pt in oracle_exhaustive_binary(kernel, kernel, 0.1, 0.1, grid, direction, 128):
                    assert witness_constraint_holds(pt)
                    assert len(pt.witness.atoms) <= 3

    def test_infeasible_target_reports_trivial(self):
        big = binary_entropy(INST.q) * LN2 + 0.5
        pt = oracle_exhaustive_binary(ENTROPY, ENTROPY, 0.1, 0.1, [big], "lower", 64)[0]
        assert not pt.feasible
        assert len(pt.witness.atoms) == 1

    def test_chi2_region_is_linear(self):
        joint = joint_from_marginal_channel(INST.marginal(), INST.channel())
        kappa = f_information(CHI2, joint)
        for direction in ("lower", "upper"):
            pts = oracle_exhaustive_binary(CHI2, CHI2, 0.1, 0.1, np.linspace(0, 1, 9), direction, 256)
            for pt in pts:
                assert math.isclose(pt.best_y, kappa * pt.x_target, abs_tol=1e-9)


class TestOracleBoundary:
    def test_determinism(self):
        cfg = OracleConfig(atom_budget=3, grid_resolution=64, restarts=40, seed=11)
        a = oracle_boundary(ENTROPY, ENTROPY, INST.channel(), INST.marginal(), 0.15, "lower", cfg)
        b = oracle_boundary(ENTROPY, ENTROPY, INST.channel(), INST.marginal(), 0.15, "lower", cfg)
        assert a.best_y == b.best_y
        assert a.witness.to_json() == b.witness.to_json()

    def test_budget_monotonicity(self):
        for direction in ("lower", "upper"):
            prev = None
            for budget in (1, 2, 3):
                cfg = OracleConfig(atom_budget=budget, grid_resolution=128, restarts=30, seed=5)
                pt = oracle_boundary(
                    ENTROPY, ENTROPY, INST.channel(), INST.marginal(), 0.12, direction, cfg
                )
                if prev is not None and prev.feasible:
                    if direction == "upper":
                        assert pt.best_y >= prev.best_y - 1e-12
                    else:
                        assert pt.best_y <= prev.best_y + 1e-12
                prev = pt

    def test_ternary_alphabet(self):
        rng = np.random.default_rng(0)
        T = rng.exponential(size=(3, 3)) + 0.2
        T = T / T.sum(axis=0, keepdims=True)
        q = np.array([0.5, 0.3, 0.2])
        joint = joint_from_marginal_channel(q, T)
        bound = f_information(KL, joint)
        cfg = OracleConfig(atom_budget=4, grid_resolution=48, restarts=120, seed=9)
        pt = oracle_boundary(KL, KL, T, q, 0.5 * bound, "upper", cfg)
        assert pt.feasible
        assert witness_constraint_holds(pt)
        assert len(pt.witness.atoms) <= 4
        assert -1e-12 <= pt.best_y <= bound + 1e-9

    def test_ternary_sweep_sandwich(self):
        # Restricted search lands inside the region: the oracle maximum can
        # only undershoot the swept upper curve and its minimum can only
        # overshoot the swept lower curve.
        import warnings

        from bottleneck_lab import bottleneck_value, funnel_value, sweep

        rng = np.random.default_rng(2)
        T = rng.exponential(size=(3, 3)) + 0.2
        T = T / T.sum(axis=0, keepdims=True)
        q = np.array([0.5, 0.3, 0.2])
        upper = sweep(KL, KL, T, q, "upper", steps=24, resolution=32)
        lower = sweep(KL, KL, T, q, "lower", steps=24, resolution=32)
        cfg = OracleConfig(atom_budget=4, grid_resolution=32, restarts=100, seed=4)
        for frac in (0.1, 0.4, 0.7):
            x = frac * float(upper.xs[-1])
            ub = oracle_boundary(KL, KL, T, q, x, "upper", cfg)
            lb = oracle_boundary(KL, KL, T, q, x, "lower", cfg)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                assert ub.best_y <= bottleneck_value(upper, x) + 5e-3
                assert lb.best_y >= funnel_value(lower, x) - 5e-3

    def test_rejects_large_alphabet(self):
        q = np.full(4, 0.25)
        T = np.eye(4)
        cfg = OracleConfig()
        with pytest.raises(ValueError):
            oracle_boundary(KL, KL, T, q, 0.1, "lower", cfg)

    def test_infeasible_funnel_flagged(self):
        cfg = OracleConfig(atom_budget=2, grid_resolution=64, restarts=10, seed=1)
        pt = oracle_boundary(
            ENTROPY, ENTROPY, INST.channel(), INST.marginal(), 10.0, "lower", cfg
        )
        assert not pt.feasible


class TestCsv:
    def test_row_schema(self):
        pts = oracle_exhaustive_binary(ENTROPY, ENTROPY, 0.1, 0.1, [0.1, 0.2], "lower", 64)
        rows = oracle_csv_rows(pts, budget=3, resolution=64, seed=None)
        assert all(len(r) == 8 for r in rows)
        assert rows[0][1] == "lower"
        assert rows[0][7] == ""
