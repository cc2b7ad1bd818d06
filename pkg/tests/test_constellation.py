"""Constellation loading, moments, and coefficient-table checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nli4d import constellation as con


def pm_qpsk():
    pts = [
        (sx * 0.5, sy * 0.5, tx * 0.5, ty * 0.5)
        for sx in (-1, 1)
        for sy in (-1, 1)
        for tx in (-1, 1)
        for ty in (-1, 1)
    ]
    return con.Constellation4D(np.array(pts), np.full(16, 1 / 16), "pm_qpsk")


def product_constellation(points_2d):
    """PM format: the same 2D set independently on each polarization."""
    pts = np.array(
        [(a.real, a.imag, b.real, b.imag) for a in points_2d for b in points_2d]
    )
    m = len(pts)
    c = con.Constellation4D(pts, np.full(m, 1.0 / m), "product")
    return con.normalize(c)


def qam(n_side):
    lv = np.arange(n_side) * 2.0 - (n_side - 1)
    return np.array([x + 1j * y for x in lv for y in lv])


def random_constellation(rng, m=16):
    pts = rng.normal(size=(m, 4))
    pts -= pts.mean(axis=0)
    pr = rng.random(m)
    pr /= pr.sum()
    c = con.Constellation4D(pts, pr, "rand")
    return con.normalize(c)


class TestLoad:
    def test_cube16_file(self, tmp_path):
        lines = ["# the 4D cube"]
        for sx in (-1, 1):
            for sy in (-1, 1):
                for tx in (-1, 1):
                    for ty in (-1, 1):
                        lines.append(f"{sx} {sy} {tx} {ty}")
        f = tmp_path / "cube.txt"
        f.write_text("\n".join(lines))
        c = con.load(f)
        assert c.size == 16
        assert np.allclose(c.probs, 1 / 16)

    def test_single_point_loads_but_fails_validate(self, tmp_path):
        f = tmp_path / "one.txt"
        f.write_text("1 0 0 0\n")
        c = con.load(f)
        assert c.size == 1 and c.probs[0] == 1.0
        with pytest.raises(con.ConstellationError, match="mean"):
            c.validate()

    def test_product_pm8qam_size(self):
        pts8 = qam(2).tolist() + [2 + 0j, -2 + 0j, 2j, -2j]
        c = product_constellation(np.array(pts8))
        assert c.size == 64

    def test_malformed_row_reports_line(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("1 0 0 0\n1 0 zz 0\n")
        with pytest.raises(con.ConstellationError, match="line 2"):
            con.load(f)

    def test_empty_rejected(self, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("# nothing here\n")
        with pytest.raises(con.ConstellationError, match="no points"):
            con.load(f)

    def test_prob_column(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("1 0 0 0 0.25\n-1 0 0 0 0.75\n")
        c = con.load(f, fmt="rows4+prob")
        assert np.allclose(c.probs, [0.25, 0.75])


class TestNormalize:
    def test_uniform_scaling(self):
        pts = np.array([[3.0, 3.0, 3.0, 3.0], [-3.0, -3.0, -3.0, -3.0]])
        c = con.Constellation4D(pts, np.array([0.5, 0.5]), "big")
        n = con.normalize(c)
        assert n.mean_power() == pytest.approx(1.0, abs=1e-14)
        ratio = n.points / pts
        assert np.allclose(ratio, ratio[0, 0])

    def test_idempotent(self):
        c = con.normalize(pm_qpsk())
        c2 = con.normalize(c)
        assert np.allclose(c.points, c2.points, rtol=1e-15, atol=0)

    def test_all_zero_rejected(self):
        c = con.Constellation4D(np.zeros((2, 4)), np.array([0.5, 0.5]))
        with pytest.raises(con.ConstellationError, match="normalize"):
            con.normalize(c)


class TestMoments:
    def test_pm_qpsk_table(self):
        m = con.moments(pm_qpsk())
        assert m.m(1, 1, 0, 0) == pytest.approx(0.5)
        assert m.m(2, 0, 0, 0) == pytest.approx(0.0)
        assert m.m(2, 2, 0, 0) == pytest.approx(0.25)
        assert m.m(1, 0, 0, 1) == pytest.approx(0.0)

    def test_power_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(4):
            c = random_constellation(rng)
            m = con.moments(c)
            assert m.m(1, 1, 0, 0).real + m.m(0, 0, 1, 1).real == pytest.approx(
                1.0, abs=1e-12
            )

    def test_gaussian_surrogate_values(self):
        g = con.gaussian_moments(0.5, 0.5)
        s2 = 0.5
        assert g.m(1, 1, 0, 0) == pytest.approx(s2)
        assert g.m(2, 2, 0, 0) == pytest.approx(2 * s2**2)
        assert g.m(3, 3, 0, 0) == pytest.approx(6 * s2**3)
        assert g.m(2, 0, 0, 0) == 0.0
        assert g.m(1, 0, 0, 1) == 0.0

    def test_conjugate_pair_consistency(self):
        rng = np.random.default_rng(3)
        c = random_constellation(rng)
        m = con.moments(c)
        for (p, q, r, s), v in m.table.items():
            assert m.m(q, p, s, r) == pytest.approx(
                complex(v).conjugate(), abs=1e-12
            )

    def test_magnitude_moments_real_nonnegative(self):
        rng = np.random.default_rng(11)
        c = random_constellation(rng)
        m = con.moments(c)
        for (p, q, r, s), v in m.table.items():
            if p == q and r == s:
                assert np.imag(v) == 0
                assert np.real(v) >= 0

    def test_brute_force_oracle(self):
        # independent re-enumeration of every monomial from the raw points
        rng = np.random.default_rng(2024)
        for _ in range(5):
            c = random_constellation(rng)
            m = con.moments(c)
            ax = c.points[:, 0] + 1j * c.points[:, 1]
            ay = c.points[:, 2] + 1j * c.points[:, 3]
            for (p, q, r, s), v in m.table.items():
                ref = np.sum(
                    c.probs
                    * ax**p
                    * np.conj(ax) ** q
                    * ay**r
                    * np.conj(ay) ** s
                )
                assert complex(v) == pytest.approx(complex(ref), abs=1e-14)

    def test_product_cross_moments_vanish(self):
        c = product_constellation(qam(4))  # PM-16QAM
        m = con.moments(c)
        for (p, q, r, s), v in m.table.items():
            if p != q and r != s:
                assert abs(v) < 1e-12


class TestCoefficients:
    def test_pm_qpsk_phi1(self):
        cs = con.coefficients(con.moments(pm_qpsk()))
        assert cs.phi1 == pytest.approx(3 / 8, abs=1e-14)

    def test_pm_qpsk_phi4(self):
        m = con.moments(pm_qpsk())
        cs = con.xci_coefficients(m, m)
        assert cs.phi4 == pytest.approx(3 / 4, abs=1e-14)

    def test_gaussian_reduction(self):
        g = con.gaussian_moments()
        cs = con.coefficients(g)
        vanish = dict(
            phi2=cs.phi2, phi3=cs.phi3, psi1=cs.psi1, psi2=cs.psi2, psi3=cs.psi3,
            psi4=cs.psi4, lam1=cs.lam1, lam2=cs.lam2, lam3=cs.lam3, lam4=cs.lam4,
            lam5=cs.lam5, lam6=cs.lam6, xi1=cs.xi1, phi5=cs.phi5, phi6=cs.phi6,
            psi6=cs.psi6, psi7=cs.psi7, lam9=cs.lam9,
        )
        for name, val in vanish.items():
            assert abs(val) < 1e-12, f"{name} = {val}"
        # GN-model survivors
        assert cs.phi1 == pytest.approx(2 * 0.125 + 0.125)
        assert cs.phi4 == pytest.approx(3 / 4)
        assert cs.psi5 == pytest.approx(3 / 4)
        assert cs.lam7 == pytest.approx(1 / 4)
        assert cs.lam8 == pytest.approx(1 / 8)

    def test_gaussian_reduction_asymmetric_powers(self):
        # the reduction must hold for unequal per-polarization powers too
        g = con.gaussian_moments(0.7, 0.3)
        cs = con.coefficients(g)
        for name in ("phi2", "phi3", "psi1", "psi4", "lam3", "lam6", "xi1",
                     "phi5", "phi6", "psi6", "psi7", "lam9"):
            assert abs(getattr(cs, name)) < 1e-12, name

    def test_orientation_swap_equals_swapped_constellation(self):
        rng = np.random.default_rng(5)
        c = random_constellation(rng)
        m = con.moments(c)
        ms = con.moments(c.swapped_polarizations())
        a = con.coefficients(m, "y")
        b = con.coefficients(ms, "x")
        for f in ("phi1", "phi2", "phi3", "psi2", "lam1", "lam3", "xi1",
                  "phi4", "psi5", "lam7", "lam9"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-14)

    def test_symmetric_format_orientation_invariant(self):
        m = con.moments(pm_qpsk())
        a = con.coefficients(m, "x")
        b = con.coefficients(m, "y")
        for f in ("phi1", "phi4", "psi5", "lam7", "lam8", "lam9", "xi1"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-14)

    def test_gaussian_interferer_kills_cross_corrections(self):
        m = con.moments(pm_qpsk())
        g = con.gaussian_moments()
        cs = con.xci_coefficients(m, g)
        assert abs(cs.phi5) < 1e-12
        assert abs(cs.phi6) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * math.pi))
    def test_joint_phase_invariance(self, seed, theta):
        rng = np.random.default_rng(seed)
        c = random_constellation(rng, m=8)
        m0 = con.moments(c)
        m1 = con.moments(c.rotated(theta))
        c0 = con.coefficients(m0)
        c1 = con.coefficients(m1)
        for f in ("phi1", "phi2", "phi3", "psi1", "psi2", "psi3", "psi4",
                  "lam1", "lam2", "lam3", "lam4", "lam5", "lam6", "xi1",
                  "phi4", "phi5", "phi6", "psi5", "psi6", "psi7",
                  "lam7", "lam8", "lam9"):
            v0, v1 = getattr(c0, f), getattr(c1, f)
            assert v1 == pytest.approx(v0, rel=1e-10, abs=1e-12), f

    def test_cross_pol_zeroing_noop_for_products(self):
        c = product_constellation(qam(4))
        m = con.moments(c)
        mz = m.cross_pol_zeroed()
        a = con.coefficients(m)
        b = con.coefficients(mz)
        for f in ("phi1", "phi2", "phi3", "psi1", "psi4", "lam3", "lam6",
                  "xi1", "phi4", "phi5", "phi6", "psi5", "psi6", "psi7",
                  "lam7", "lam8", "lam9"):
            va, vb = getattr(a, f), getattr(b, f)
            assert abs(va - vb) <= 1e-10 * max(1.0, abs(va)), f


class TestValidate:
    def test_asymmetric_power_warns(self):
        pts = np.array([[1.0, 0, 0.5, 0], [-1.0, 0, -0.5, 0]])
        c = con.normalize(con.Constellation4D(pts, np.array([0.5, 0.5]), "asym"))
        with pytest.warns(UserWarning, match="powers differ"):
            c.validate()

    def test_pm_qpsk_clean(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            con.normalize(pm_qpsk()).validate()
