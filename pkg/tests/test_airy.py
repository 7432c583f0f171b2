import math

import numpy as np
import pytest

from tswave import airy
from tswave.errors import SectorViolation, UnsupportedOrder

EXACT_PRIMITIVES = {
    1: -1.0 / 3.0,                 # integral of Ai over the half line is 1/3
    2: -airy.AIP_ZERO,
    3: -airy.AI_ZERO / 2.0,
}


def decay_cone_points(count, rng_seed=3):
    """Annulus points 8 <= |z| <= 19.5 where Ai is exponentially small, so the
    leading-term branch satisfies the absolute ODE-residual tolerance."""
    rng = np.random.default_rng(rng_seed)
    pts = []
    while len(pts) < count:
        r = rng.uniform(8.2, 19.5)
        th = rng.uniform(-math.pi / 2, math.pi / 2)
        if r ** 1.5 * math.cos(1.5 * th) >= 30.0:
            pts.append(r * np.exp(1j * th))
    return np.array(pts)


class TestConstantsAndOracle:
    def test_value_at_zero(self):
        assert airy.ai_k(0, 0.0) == pytest.approx(0.3550280538878172, abs=1e-14)

    def test_contour_oracle_at_zero(self):
        assert airy.ai_contour(0, 0.0) == pytest.approx(airy.AI_ZERO, abs=5e-13)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_primitive_constants_match_closed_forms(self, k):
        consts = airy.primitive_constants()
        assert consts[k] == pytest.approx(EXACT_PRIMITIVES[k], abs=2e-12)

    @pytest.mark.parametrize("z", [1.3 + 0.8j, -2.0 + 1.5j, 4.0 - 1.5j])
    def test_series_vs_contour_oracle(self, z):
        for k in range(4):
            ref = airy.ai_contour(k, z)
            assert airy.ai_k(k, z) == pytest.approx(ref, rel=2e-11)

    def test_real_axis_is_real(self):
        for z in (0.5, 2.0, 6.5):
            assert abs(airy.ai_k(0, z).imag) < 1e-14


class TestAsymptotic:
    def test_leading_term_k0(self):
        expect = 1.0 / (2.0 * math.sqrt(math.pi)) * 25.0 ** -0.25 * math.exp(-250.0 / 3.0)
        assert airy.ai_asymptotic(0, 25.0) == pytest.approx(expect, rel=1e-13)

    def test_sign_flip_k1(self):
        expect = -1.0 / (2.0 * math.sqrt(math.pi)) * 25.0 ** -0.75 * math.exp(-250.0 / 3.0)
        assert airy.ai_asymptotic(1, 25.0) == pytest.approx(expect, rel=1e-13)

    def test_requires_large_modulus(self):
        with pytest.raises(ValueError):
            airy.ai_asymptotic(0, 3.0)

    def test_k2_against_contour_oracle(self):
        # |z| = 12, arg z = -5pi/12: growing direction, the oracle is reliable.
        # The true leading-term gap for the second primitive is
        # (101/48)|z|^{-3/2} + O(|z|^{-3}), so the envelope constant is 3.
        z = 12.0 * np.exp(-5j * math.pi / 12.0)
        ref = airy.ai_contour(2, z)
        rel = abs(airy.ai_asymptotic(2, z) - ref) / abs(ref)
        assert rel <= 3.0 * 12.0 ** -1.5
        assert rel >= 1.5 * 12.0 ** -1.5  # the gap is genuinely first order


class TestSector:
    def test_violation_raises(self):
        with pytest.raises(SectorViolation):
            airy.ai_k(0, -5.0 + 0.1j)
        with pytest.raises(SectorViolation):
            airy.ai_asymptotic(1, 20.0 * np.exp(1j * (5.0 * math.pi / 6.0 + 0.01)))

    def test_near_edge_allowed(self):
        # certification contours at large amplitude approach the edge to
        # within ~1e-2 radians; evaluation must remain available there
        z = 3.0 * np.exp(-1j * (5.0 * math.pi / 6.0 - 0.012))
        assert np.isfinite(airy.ai_k(2, z))

    def test_bad_order(self):
        with pytest.raises(UnsupportedOrder):
            airy.ai_k(4, 1.0)


class TestInvariants:
    def test_ode_residual_series_region(self):
        rng = np.random.default_rng(0)
        r = rng.uniform(0.4, 7.5, 80)
        th = rng.uniform(-5 * math.pi / 6 + 0.05, 5 * math.pi / 6 - 0.05, 80)
        z = r * np.exp(1j * th)
        # trapezoid differentiation on a circle: exact for the truncated
        # Taylor series, no h^-2 roundoff amplification
        rad = 0.3
        ring = np.exp(2j * math.pi * np.arange(32) / 32)
        samples = airy._series(0, z[:, None] + rad * ring[None, :])
        d2 = 2.0 * np.mean(samples * ring[None, :] ** -2, axis=1) / rad**2
        resid = np.abs(d2 - z * airy.ai_k(0, z))
        assert np.all(resid <= 1e-8 * (1.0 + np.abs(z * airy.ai_k(0, z))))

    def test_primitive_chain(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0.3, 4.0, 40)
        th = rng.uniform(-2.3, 2.3, 40)
        z = r * np.exp(1j * th)
        h = 1e-5
        for k in (1, 2, 3):
            fd = (airy._series(k, z + h) - airy._series(k, z - h)) / (2.0 * h)
            assert np.max(np.abs(fd - airy._series(k - 1, z))) <= 1e-7

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_branch_overlap(self, k):
        # growing directions keep the series numerically meaningful across
        # the whole overlap annulus
        rng = np.random.default_rng(2 + k)
        r = rng.uniform(8.0, 16.0, 30)
        th = np.sign(rng.standard_normal(30)) * rng.uniform(1.45, 2.55, 30)
        z = r * np.exp(1j * th)
        series = airy._series(k, z)
        asym = airy._asymptotic(k, z)
        rel = np.abs(series - asym) / np.abs(series)
        assert np.all(rel <= 3.0 * np.abs(z) ** -1.5)

    def test_branch_overlap_k3_envelope(self):
        # the third primitive's first asymptotic correction is (185/48) z^{-3/2},
        # outside the 3 z^{-3/2} envelope of the lower orders
        rng = np.random.default_rng(9)
        r = rng.uniform(9.0, 16.0, 24)
        th = np.sign(rng.standard_normal(24)) * rng.uniform(1.45, 2.55, 24)
        z = r * np.exp(1j * th)
        rel = np.abs(airy._series(3, z) - airy._asymptotic(3, z)) / np.abs(airy._series(3, z))
        assert np.all(rel <= 5.0 * np.abs(z) ** -1.5)
        assert np.median(rel * np.abs(z) ** 1.5) > 3.0

    def test_decay_cone_residual(self):
        z = decay_cone_points(25)
        vals = airy._asymptotic(0, z)
        rad = 0.3
        ring = np.exp(2j * math.pi * np.arange(32) / 32)
        samples = airy._asymptotic(0, z[:, None] + rad * ring[None, :])
        d2 = 2.0 * np.mean(samples * ring[None, :] ** -2, axis=1) / rad**2
        assert np.all(np.abs(d2 - z * vals) <= 1e-8 * (1.0 + np.abs(z * vals)))


def test_ai_value_branch_labels():
    assert airy.ai_value(0, 1.0).branch is airy.AiryBranch.SERIES
    assert airy.ai_value(0, 9.0).branch is airy.AiryBranch.ASYMPTOTIC
