from gkplab import gkp
from gkplab.errors import ContractViolation, RegimeWarning
from gkplab.errors import UnphysicalEnvelopeError
from gkplab.gkp import ErrorEnvelope1, SQRT_PI
from hypothesis import given, settings, strategies as st
from scipy import integrate

import math
import numpy as np
import unittest
import warnings


class TestGkp(unittest.TestCase):

    def state(self, label='X+', delta2=1.0, kappa2=1.0, sigma2=0.1,
              mean_u=0.0, mean_v=0.0):
        return gkp.make_finite_gkp(
            label, ErrorEnvelope1(delta2, kappa2, mean_u, mean_v), sigma2
        )

    def outcome_grid(self, extent=10, points=8001):
        return np.linspace(-extent * SQRT_PI, extent * SQRT_PI, points)

    def test_squeezing_db(self):
        """σ² = 0.1 is 10 dB and the conversion inverts"""
        self.assertAlmostEqual(gkp.squeezing_db(0.1), 10.0,
                               msg='σ² = 0.1 is not 10 dB')
        self.assertAlmostEqual(gkp.sigma2_from_db(gkp.squeezing_db(0.04)),
                               0.04, msg='dB conversion does not invert')

    def test_make__rejects_unphysical(self):
        """Nonpositive variances, δκ ≥ 1 and unknown labels are rejected"""
        with self.assertRaises(UnphysicalEnvelopeError):
            ErrorEnvelope1(0.0, 1.0)
        with self.assertRaises(UnphysicalEnvelopeError):
            with warnings.catch_warnings():
                warnings.simplefilter('ignore', RegimeWarning)
                self.state(delta2=1.0, kappa2=1.0, sigma2=1.5)
        with self.assertRaises(ContractViolation):
            self.state(label='Y+')

    def test_make__regime_warning(self):
        """A wide tooth raises a RegimeWarning"""
        with self.assertWarns(RegimeWarning):
            self.state(delta2=1.0, kappa2=0.1, sigma2=0.5)

    def test_comb_coefficient(self):
        """Z0 has even q teeth, X+ has all q teeth and even p teeth"""
        k = np.arange(-2, 3)
        np.testing.assert_array_equal(
            gkp.comb_coefficient('Z0', 'q', k), [1, 0, 1, 0, 1]
        )
        np.testing.assert_array_equal(
            gkp.comb_coefficient('X+', 'q', k), [1, 1, 1, 1, 1]
        )
        np.testing.assert_array_equal(
            gkp.comb_coefficient('X+', 'p', k), [1, 0, 1, 0, 1]
        )
        np.testing.assert_array_equal(
            gkp.comb_coefficient('Z1', 'p', k), [1, -1, 1, -1, 1]
        )

    def test_wavefunction__normalized(self):
        """Normalized wavefunctions have unit norm in both quadratures"""
        grid = np.linspace(-12 * SQRT_PI, 12 * SQRT_PI, 20001)
        step = grid[1] - grid[0]
        for label in gkp.LABELS:
            state = self.state(label, mean_u=0.3, mean_v=-0.2)
            for quadrature in gkp.QUADRATURES:
                psi = gkp.quadrature_wavefunction(state, quadrature, grid)
                self.assertAlmostEqual(
                    np.sum(np.abs(psi) ** 2) * step, 1.0, delta=1e-6,
                    msg='{} {} wavefunction is not normalized'.format(
                        label, quadrature
                    ),
                )

    def test_wavefunction__rejects_bad_grid(self):
        """A decreasing grid or an unknown construction is rejected"""
        state = self.state()
        with self.assertRaises(ContractViolation):
            gkp.quadrature_wavefunction(state, 'q', [1.0, 0.0])
        with self.assertRaises(ContractViolation):
            gkp.quadrature_wavefunction(state, 'q', [0.0, 1.0], 'fock')

    def test_wavefunction__mean_shift(self):
        """A mean q-displacement u′ moves the teeth of ψ(q) by u′"""
        grid = np.linspace(-0.5, 0.5, 2001)
        state = self.state('Z0', mean_u=0.2)
        density = np.abs(gkp.quadrature_wavefunction(state, 'q', grid)) ** 2
        self.assertAlmostEqual(grid[np.argmax(density)], 0.2, delta=2e-3,
                               msg='tooth did not move with u′')

    def test_wavefunction__constructions_agree(self):
        """Envelope and comb constructions converge as κδ shrinks"""
        grid = np.linspace(-80.0, 80.0, 40001)
        step = grid[1] - grid[0]
        distances = []
        for variance in (0.01, 0.05, 0.1):
            state = self.state('X+', variance, variance, sigma2=1.0)
            exact = gkp.quadrature_wavefunction(state, 'q', grid, 'envelope')
            comb = gkp.quadrature_wavefunction(state, 'q', grid, 'comb')
            distances.append(
                math.sqrt(np.sum(np.abs(exact - comb) ** 2) * step)
            )
            if variance == 0.01:
                overlap = abs(np.sum(np.conj(exact) * comb) * step)
                self.assertLess(1 - overlap ** 2, 1e-3,
                                msg='constructions disagree at κδ = 0.01')
        self.assertLess(distances[0], distances[1],
                        msg='distance is not monotone in κδ')
        self.assertLess(distances[1], distances[2],
                        msg='distance is not monotone in κδ')

    def test_outcome_pdf__plus_state_comb(self):
        """|+̃⟩ in q has teeth at n√π with ratio e^{−πσ²}"""
        state = self.state('X+')
        peaks = gkp.homodyne_outcome_pdf(
            state, 'q', np.array([0.0, SQRT_PI, 2 * SQRT_PI])
        )
        self.assertAlmostEqual(peaks[1] / peaks[0], math.exp(-math.pi * 0.1),
                               delta=1e-3, msg='adjacent peak ratio is wrong')
        grid = self.outcome_grid()
        pdf = gkp.homodyne_outcome_pdf(state, 'q', grid)
        self.assertAlmostEqual(integrate.trapezoid(pdf, grid), 1.0,
                               delta=1e-6,
                               msg='outcome pdf does not integrate to one')

    def test_outcome_pdf__zero_state_spacing(self):
        """|0̃⟩ in q only has teeth at even multiples of √π"""
        pdf = gkp.homodyne_outcome_pdf(
            self.state('Z0'), 'q', np.array([0.0, SQRT_PI, 2 * SQRT_PI])
        )
        self.assertLess(pdf[1], 1e-6 * pdf[0], msg='odd tooth present')
        self.assertGreater(pdf[2], 0.1 * pdf[0], msg='even tooth missing')

    def test_outcome_pdf__one_state_offset(self):
        """|1̃⟩ in q has its teeth at odd multiples of √π"""
        pdf = gkp.homodyne_outcome_pdf(
            self.state('Z1'), 'q', np.array([0.0, SQRT_PI])
        )
        self.assertLess(pdf[0], 1e-6 * pdf[1], msg='even tooth present')

    def test_comb_spec__matches_wavefunction(self):
        """The comb outcome model agrees with |ψ|² of the comb form"""
        state = self.state('X+')
        grid = self.outcome_grid(points=20001)
        density = np.abs(
            gkp.quadrature_wavefunction(state, 'q', grid, 'comb')
        ) ** 2
        pdf = gkp.homodyne_outcome_pdf(state, 'q', grid)
        self.assertLess(np.max(np.abs(density - pdf)), 1e-3 * np.max(pdf),
                        msg='outcome model differs from |ψ|²')

    def test_sample__reproducible(self):
        """Samples depend only on the seed"""
        state = self.state('X+')
        first = gkp.sample_homodyne(state, 'q', seed=11, size=50)
        second = gkp.sample_homodyne(state, 'q', seed=11, size=50)
        np.testing.assert_array_equal(first, second)
        with self.assertRaises(ContractViolation):
            gkp.make_rng(1.5)

    def test_sample__statistics(self):
        """Sampled outcomes sit near the teeth with the P_N weights"""
        state = self.state('X+')
        samples = gkp.sample_homodyne(state, 'q', seed=3, size=20000)
        teeth = np.round(samples / SQRT_PI)
        share = np.mean(teeth == 0)
        spec = gkp.comb_spec(state, 'q')
        expected = spec.weights()[spec.support() == 0][0]
        self.assertAlmostEqual(share, expected, delta=0.02,
                               msg='tooth frequencies are off')

    @given(st.sampled_from(gkp.LABELS), st.sampled_from(gkp.QUADRATURES),
           st.floats(0.5, 2.0), st.floats(0.5, 2.0))
    @settings(max_examples=50, deadline=None)
    def test_property__mixture_normalized(self, label, quadrature, delta2,
                                          kappa2):
        """Comb weights always sum to one"""
        state = self.state(label, delta2, kappa2, sigma2=0.05)
        self.assertAlmostEqual(
            gkp.comb_spec(state, quadrature).weights().sum(), 1.0,
            msg='comb weights are not normalized',
        )


if __name__ == '__main__':
    unittest.main()
