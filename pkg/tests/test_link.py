"""Link function and accumulation-parameter checks."""

import math

import numpy as np
import pytest

from nli4d import link as lk


SMF = lk.LinkSpec(
    alpha_db_km=0.2,
    dispersion_ps_nm_km=17.0,
    gamma_w_km=1.3,
    span_length_km=80.0,
    n_spans=1,
    noise_figure_db=5.0,
)


def term_by_term_mu(f1, f2, f, link):
    """Definition oracle: sum the per-span phase-shifted kernels explicitly."""
    u = 4 * math.pi**2 * link.beta2 * (f - f1) * (f2 - f1)
    a, L = link.alpha, link.span_length
    kern = (1 - math.e ** (-a * L) * np.exp(1j * u * L)) / (a - 1j * u)
    return kern * sum(np.exp(1j * u * l * L) for l in range(link.n_spans))


class TestMu:
    def test_unit_conversions(self):
        assert SMF.alpha == pytest.approx(0.2 / 4.343 / 1e3, rel=1e-3)
        assert SMF.beta2 == pytest.approx(-21.68e-27, rel=1e-3)
        ldf = lk.LinkSpec(0.2, -1.8, 2.2, 80.0, 1)
        assert ldf.beta2 > 0

    def test_zero_dispersion_limit(self):
        link = lk.LinkSpec(0.2, 1e-30, 1.3, 80.0, 7)
        val = lk.mu(3e9, -2e9, 1e9, link)
        expect = 7 * (1 - math.exp(-link.alpha * link.span_length)) / link.alpha
        assert val == pytest.approx(expect, rel=1e-9)
        assert abs(val.imag) < 1e-6 * abs(val)

    def test_resonance_line_equals_zero_dispersion_value(self):
        f = 1.7e9
        val = lk.mu(f, -4e9, f, SMF)  # f1 = f kills the mismatch
        expect = (1 - math.exp(-SMF.alpha * SMF.span_length)) / SMF.alpha
        assert val == pytest.approx(expect, rel=1e-12)

    def test_closed_form_vs_term_by_term(self):
        for ns in (1, 2, 5):
            link = SMF.with_spans(ns)
            for f1, f2, f in [(1e9, -1e9, 0.0), (12e9, 7e9, -3e9), (-20e9, 22e9, 5e9)]:
                got = complex(lk.mu(f1, f2, f, link))
                ref = complex(term_by_term_mu(f1, f2, f, link))
                assert got == pytest.approx(ref, rel=1e-12)

    def test_mu_squared_oracle_value(self):
        got = abs(lk.mu(1e9, -1e9, 0.0, SMF)) ** 2
        ref = abs(term_by_term_mu(1e9, -1e9, 0.0, SMF)) ** 2
        assert got == pytest.approx(ref, rel=1e-12)

    def test_mu_squared_of_u_consistent(self):
        link = SMF.with_spans(12)
        f1, f2, f = 9e9, -13e9, 2e9
        u = 4 * math.pi**2 * link.beta2 * (f - f1) * (f2 - f1)
        assert lk.mu_squared_of_u(u, link) == pytest.approx(
            abs(lk.mu(f1, f2, f, link)) ** 2, rel=1e-10
        )

    def test_dirichlet_singularity_filled(self):
        link = SMF.with_spans(10)
        # pick u exactly at a 2 pi / L grating resonance
        u0 = 2 * math.pi / link.span_length
        vals = lk.mu_squared_of_u(np.array([u0, u0 * (1 + 1e-9)]), link)
        assert vals[0] == pytest.approx(vals[1], rel=1e-4)
        env = lk.mu_squared_envelope(u0, link)
        assert vals[0] == pytest.approx(env * 100, rel=1e-9)

    def test_magnitude_peaks_on_resonance_lines(self):
        link = SMF.with_spans(4)
        f = 3e9
        grid = np.linspace(-20e9, 20e9, 141)
        f1g, f2g = np.meshgrid(grid, grid, indexing="ij")
        mag = np.abs(lk.mu(f1g, f2g, f, link))
        peak = mag.max()
        on_line = np.abs(lk.mu(f, grid, f, link))
        assert on_line.max() == pytest.approx(peak, rel=1e-9)

    def test_even_under_global_sign_flip(self):
        link = SMF.with_spans(3)
        a = lk.mu(4e9, -7e9, 2e9, link)
        b = lk.mu(-4e9, 7e9, -2e9, link)
        assert complex(a) == pytest.approx(complex(b), rel=1e-13)


class TestXi:
    def test_single_span(self):
        assert lk.xi(SMF.with_spans(1), 0.3)[0] == 1.0

    def test_arithmetic_series(self):
        exact, _ = lk.xi(SMF.with_spans(20), 0.0)
        assert exact == 210.0

    def test_approximation_close(self):
        exact, approx = lk.xi(SMF.with_spans(20), 0.1)
        assert approx == pytest.approx(exact, rel=0.02)

    def test_exact_dominates(self):
        for eps in (0.0, 0.05, 0.2):
            link = SMF.with_spans(15)
            exact, approx = lk.xi(link, eps)
            assert exact >= link.n_spans
            assert exact >= link.n_spans ** (2 + eps) / (2 + eps)


class TestAse:
    def test_hand_value(self):
        link = lk.LinkSpec(0.2, 17.0, 1.3, 80.0, 1, noise_figure_db=5.0)
        wdm = lk.WdmSpec(symbol_rate_hz=45e9)
        g = math.exp(link.alpha * 80e3)
        expect = (g - 1) * 6.62607015e-34 * 193.41e12 * 10 ** 0.5 * 45e9
        assert lk.ase_power(link, wdm) == pytest.approx(expect, rel=1e-12)
        assert lk.ase_power(link, wdm) == pytest.approx(7.07e-7, rel=0.02)

    def test_ideal_amp_zero(self):
        link = lk.LinkSpec(0.2, 17.0, 1.3, 80.0, 1, amplifier="ideal")
        assert lk.ase_power(link, lk.WdmSpec(symbol_rate_hz=45e9)) == 0.0

    def test_unit_gain_zero(self):
        link = lk.LinkSpec(1e-12, 17.0, 1.3, 1e-9, 1)
        assert lk.ase_power(link, lk.WdmSpec(symbol_rate_hz=45e9)) == pytest.approx(
            0.0, abs=1e-30
        )

    def test_linear_in_bandwidth(self):
        link = lk.LinkSpec(0.2, 17.0, 1.3, 80.0, 1)
        a = lk.ase_power(link, lk.WdmSpec(symbol_rate_hz=45e9))
        b = lk.ase_power(link, lk.WdmSpec(symbol_rate_hz=90e9))
        assert b == pytest.approx(2 * a, rel=1e-14)


class TestSpecValidation:
    def test_overlapping_channels_rejected(self):
        with pytest.raises(ValueError, match="spacing"):
            lk.WdmSpec(symbol_rate_hz=45e9, n_channels=3, spacing_hz=40e9)

    def test_even_channel_count_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            lk.WdmSpec(symbol_rate_hz=45e9, n_channels=2, spacing_hz=50e9)

    def test_interferer_indices(self):
        w = lk.WdmSpec(symbol_rate_hz=45e9, n_channels=5, spacing_hz=50e9)
        assert w.interferer_indices == [-2, -1, 1, 2]
