import math

import numpy as np
import pytest

from bottleneck_lab import (
    BscInstance,
    arimoto_mr_gerber,
    arimoto_mrs_gerber,
    beta_norm,
    binary_entropy,
    k_frame_to_entropy,
    k_norm,
    mr_gerber,
    mr_gerber_point,
    mrs_gerber,
    star,
)
from bottleneck_lab.core import LN2, resolve_functional, DivergenceKernel

INST = BscInstance(q=0.1, delta=0.1)


class TestBscInstance:
    def test_rejects_large_q(self):
        with pytest.raises(ValueError):
            BscInstance(q=0.6, delta=0.1)

    def test_rejects_large_delta(self):
        with pytest.raises(ValueError):
            BscInstance(q=0.1, delta=0.7)


class TestMrsGerber:
    def test_zero_budget(self):
        assert math.isclose(mrs_gerber(INST, 0.0), binary_entropy(INST.delta), abs_tol=1e-15)

    def test_full_budget(self):
        hq = binary_entropy(INST.q)
        expected = binary_entropy(star(INST.delta, INST.q))
        assert math.isclose(mrs_gerber(INST, hq), expected, abs_tol=1e-12)

    def test_uniform_source_saturates(self):
        inst = BscInstance(q=0.5, delta=0.3)
        assert math.isclose(mrs_gerber(inst, 1.0), 1.0, abs_tol=1e-12)

    def test_convex_and_nondecreasing(self):
        xs = np.linspace(0.0, binary_entropy(INST.q), 101)
        ys = np.array([mrs_gerber(INST, float(x)) for x in xs])
        assert np.all(np.diff(ys) >= -1e-12)
        assert np.all(np.diff(ys, 2) >= -1e-9)

    def test_rejects_out_of_domain(self):
        with pytest.raises(ValueError):
            mrs_gerber(INST, binary_entropy(INST.q) + 0.1)


class TestMrGerberPoint:
    def test_alpha_one_is_trivial_endpoint(self):
        pt = mr_gerber_point(INST, 1.0)
        assert math.isclose(pt.x, binary_entropy(INST.q), abs_tol=1e-15)
        assert math.isclose(pt.y, binary_entropy(star(INST.delta, INST.q)), abs_tol=1e-15)

    def test_alpha_zero_is_deterministic_endpoint(self):
        pt = mr_gerber_point(INST, 0.0)
        assert pt.x == 0.0
        assert math.isclose(pt.y, binary_entropy(INST.delta), abs_tol=1e-15)

    def test_branch_continuity_at_two_q(self):
        # Both weight constructions coincide where the regimes meet.
        alpha = 2.0 * INST.q
        q, delta = INST.q, INST.delta
        z = alpha
        x1 = alpha * binary_entropy(q / z)
        y1 = alpha * binary_entropy(star(delta, q / z)) + (1 - alpha) * binary_entropy(delta)
        pt = mr_gerber_point(INST, alpha)
        assert math.isclose(pt.x, x1, abs_tol=1e-12)
        assert math.isclose(pt.y, y1, abs_tol=1e-12)
        below = mr_gerber_point(INST, alpha - 1e-12)
        assert math.isclose(below.x, pt.x, abs_tol=1e-10)
        assert math.isclose(below.y, pt.y, abs_tol=1e-10)

    def test_witness_reproduces_point(self):
        h_fn = resolve_functional(DivergenceKernel.entropy_functional(), None)
        channel = INST.channel()
        for alpha in np.linspace(0.0, 1.0, 41):
            pt = mr_gerber_point(INST, float(alpha))
            x_re = pt.witness.expectation(h_fn) / LN2
            y_re = pt.witness.expectation(lambda P: h_fn(P @ channel.matrix.T)) / LN2
            assert abs(x_re - pt.x) <= 1e-10
            assert abs(y_re - pt.y) <= 1e-10
            mix = pt.witness.weights() @ pt.witness.conditionals()
            assert np.abs(mix - [1.0 - INST.q, INST.q]).max() <= 1e-12

    def test_case_two_has_three_atoms(self):
        pt = mr_gerber_point(INST, INST.q)  # alpha < 2q
        assert len(pt.witness.atoms) == 3
        seconds = sorted(a.probs[1] for _, a in pt.witness.atoms)
        assert seconds == [0.0, 0.5, 1.0]


class TestMrGerber:
    def test_endpoints(self):
        assert math.isclose(mr_gerber(INST, 0.0), binary_entropy(INST.delta), abs_tol=1e-12)
        hq = binary_entropy(INST.q)
        assert math.isclose(
            mr_gerber(INST, hq), binary_entropy(star(INST.delta, INST.q)), abs_tol=1e-12
        )

    def test_inversion_accuracy(self):
        # mr_gerber solves alpha from x; pushing the result back through the
        # parametrization must recover x to 1e-10.
        for x in np.linspace(0.0, binary_entropy(INST.q), 41):
            y = mr_gerber(INST, float(x))
            # find alpha whose point matches y, then check its x
            from scipy.optimize import brentq

            alpha = brentq(
                lambda a: mr_gerber_point(INST, a).x - float(x), 0.0, 1.0, xtol=1e-14
            )
            pt = mr_gerber_point(INST, alpha)
            assert abs(pt.x - float(x)) <= 1e-10
            assert abs(pt.y - y) <= 1e-9

    def test_dominates_lower_boundary(self):
        xs = np.linspace(0.0, binary_entropy(INST.q), 101)
        for x in xs:
            assert mr_gerber(INST, float(x)) >= mrs_gerber(INST, float(x)) - 1e-12
        assert math.isclose(mr_gerber(INST, 0.0), mrs_gerber(INST, 0.0), abs_tol=1e-9)
        hq = binary_entropy(INST.q)
        assert math.isclose(mr_gerber(INST, hq), mrs_gerber(INST, hq), abs_tol=1e-9)

    def test_concave(self):
        xs = np.linspace(0.0, binary_entropy(INST.q), 101)
        ys = np.array([mr_gerber(INST, float(x)) for x in xs])
        assert np.all(np.diff(ys, 2) <= 1e-9)

    def test_degenerate_channel_half(self):
        inst = BscInstance(q=0.2, delta=0.5)
        for x in np.linspace(0.0, binary_entropy(0.2), 11):
            assert math.isclose(mrs_gerber(inst, float(x)), 1.0, abs_tol=1e-12)
            assert math.isclose(mr_gerber(inst, float(x)), 1.0, abs_tol=1e-12)

    def test_noiseless_channel(self):
        inst = BscInstance(q=0.3, delta=0.0)
        for x in np.linspace(0.0, binary_entropy(0.3), 11):
            assert math.isclose(mrs_gerber(inst, float(x)), float(x), abs_tol=1e-10)


class TestArimotoClosedForms:
    def test_k_norm_matches_general_norm(self):
        for p in np.linspace(0.0, 1.0, 21):
            assert math.isclose(
                k_norm(float(p), 3.0), beta_norm(3.0, [1.0 - p, p]), abs_tol=1e-15
            )

    def test_mrs_point_mass_endpoint(self):
        x, y = arimoto_mrs_gerber(INST, 2.0, 0.0)
        assert x == 1.0
        assert math.isclose(y, k_norm(INST.delta, 2.0), abs_tol=1e-15)

    def test_mrs_trivial_endpoint(self):
        x, y = arimoto_mrs_gerber(INST, 2.0, INST.q)
        assert math.isclose(x, k_norm(INST.q, 2.0), abs_tol=1e-15)
        assert math.isclose(y, k_norm(star(INST.q, INST.delta), 2.0), abs_tol=1e-15)

    def test_mrs_direct_arithmetic(self):
        inst = BscInstance(q=0.4, delta=0.2)
        x, y = arimoto_mrs_gerber(inst, 2.0, 0.2)
        assert math.isclose(x, math.sqrt(0.04 + 0.64), abs_tol=1e-15)
        mixed = star(0.2, 0.2)  # 0.32
        assert math.isclose(y, math.sqrt(mixed**2 + (1 - mixed) ** 2), abs_tol=1e-15)

    def test_mr_endpoints(self):
        x0, y0 = arimoto_mr_gerber(INST, 2.0, 0.0)
        assert x0 == 1.0 and math.isclose(y0, k_norm(INST.delta, 2.0), abs_tol=1e-15)
        x1, y1 = arimoto_mr_gerber(INST, 2.0, 1.0)
        assert math.isclose(x1, k_norm(INST.q, 2.0), abs_tol=1e-15)
        assert math.isclose(y1, k_norm(star(INST.q, INST.delta), 2.0), abs_tol=1e-15)

    def test_mr_branch_continuity(self):
        alpha = 2.0 * INST.q
        above = arimoto_mr_gerber(INST, 2.0, alpha)
        below = arimoto_mr_gerber(INST, 2.0, alpha - 1e-13)
        assert math.isclose(above[0], below[0], abs_tol=1e-12)
        assert math.isclose(above[1], below[1], abs_tol=1e-12)

    def test_rejects_small_beta(self):
        with pytest.raises(ValueError):
            arimoto_mrs_gerber(INST, 1.5, 0.05)
        with pytest.raises(ValueError):
            arimoto_mr_gerber(INST, 1.9, 0.5)

    def test_boundary_sandwich_in_k_frame(self):
        inst = BscInstance(q=0.4, delta=0.2)
        alphas = np.linspace(0.0, 1.0, 101)
        upper = [arimoto_mr_gerber(inst, 2.0, float(a)) for a in alphas]
        xs_u = np.array([u[0] for u in upper])
        ys_u = np.array([u[1] for u in upper])
        for p in np.linspace(0.0, inst.q, 33):
            x, y_low = arimoto_mrs_gerber(inst, 2.0, float(p))
            y_up = float(np.interp(x, xs_u[::-1], ys_u[::-1]))
            assert y_up >= y_low - 1e-9


class TestKFrameMap:
    def test_one_maps_to_zero(self):
        assert k_frame_to_entropy(1.0, 2.0) == 0.0

    def test_matches_renyi_entropy(self):
        q = 0.3
        got = k_frame_to_entropy(k_norm(q, 2.0), 2.0)
        expected = 2.0 / (1.0 - 2.0) * math.log(k_norm(q, 2.0))
        assert math.isclose(got, expected, rel_tol=1e-15)

    def test_round_trip(self):
        for beta in (2.0, 4.0):
            for v in (0.3, 0.8, 1.0):
                h = k_frame_to_entropy(v, beta)
                back = math.exp((1.0 - beta) / beta * h)
                assert math.isclose(back, v, rel_tol=1e-14)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            k_frame_to_entropy(0.0, 2.0)
        with pytest.raises(ValueError):
            k_frame_to_entropy(0.5, 1.0)
