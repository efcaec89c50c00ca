"""Finite-energy GKP qubits

A finite-energy GKP state is the ideal comb state smeared by a Gaussian
error wavefunction η(u, v) over displacements. The error wavefunction
has q-displacement variance δ² and p-displacement variance κ², both
given here as multiples of a reference σ² (σ² = 1 is the vacuum).

In the q representation, with b_k the ideal comb coefficients,

    ψ(q) ∝ Σ_k b_k exp(−(q − k√π − u′)²/(2δ²))
                   exp(−κ²(q + k√π)²/8) exp(i v′(q + k√π)/2)

and the p representation swaps the roles of (δ, u′) and (κ, v′) with
the opposite sign on the phase. The 'comb' construction freezes the
envelope factor at the tooth centre, giving the familiar comb of
squeezed states under a Gaussian envelope.
"""
from gkplab.errors import ContractViolation, RegimeWarning
from gkplab.errors import UnphysicalEnvelopeError

import math
import numbers
import numpy as np
import warnings


SQRT_PI = math.sqrt(math.pi)
LABELS = ('Z0', 'Z1', 'X+', 'X-')
QUADRATURES = ('q', 'p')
TAIL_WEIGHT = 1e-15
# warn when a tooth or envelope width is no longer small against √π
REGIME_STD = SQRT_PI / 3


def squeezing_db(sigma2):
    """Squeezing in dB of a state with variance σ² (σ² = 0.1 ↔ 10 dB)"""
    return -10 * math.log10(sigma2)


def sigma2_from_db(db):
    return 10 ** (-db / 10)


def check_label(label):
    if label not in LABELS:
        raise ContractViolation(
            'unknown logical label {!r}; use one of {}'.format(
                label, ', '.join(LABELS)
            )
        )
    return label


def check_quadrature(quadrature):
    if quadrature not in QUADRATURES:
        raise ContractViolation(
            'quadrature must be "q" or "p", got {!r}'.format(quadrature)
        )
    return quadrature


def warn_regime(std, what):
    """Emit a RegimeWarning when `std` is not small against √π"""
    if std >= REGIME_STD:
        warnings.warn(
            '{} width {:.3g} is not small against √π; the finite-energy '
            'approximations lose accuracy'.format(what, std),
            RegimeWarning,
            stacklevel=3,
        )


def comb_coefficient(label, quadrature, k):
    """Ideal comb coefficient of tooth k√π in the given representation

    Arguments:
        label {string} -- one of Z0, Z1, X+, X-
        quadrature {string} -- 'q' or 'p'
        k {integer|array} -- tooth index (or indices)

    Returns:
        {integer|array} -- 1, −1 or 0
    """
    k = np.asarray(k)
    parity = np.mod(k, 2)
    sign = 1 - 2 * parity
    if quadrature == 'q':
        table = {
            'Z0': 1 - parity,
            'Z1': parity,
            'X+': np.ones_like(k),
            'X-': sign,
        }
    else:
        table = {
            'X+': 1 - parity,
            'X-': parity,
            'Z0': np.ones_like(k),
            'Z1': sign,
        }
    return table[label]


class ErrorEnvelope1(object):
    """Single-mode Gaussian error wavefunction

    Arguments:
        delta2 {float} -- q-displacement variance δ² (multiple of σ²)
        kappa2 {float} -- p-displacement variance κ² (multiple of σ²)

    Keyword Arguments:
        mean_u {float} -- mean q-displacement u′ (default: {0.0})
        mean_v {float} -- mean p-displacement v′ (default: {0.0})

    Raises:
        UnphysicalEnvelopeError -- a variance is not positive
    """
    def __init__(self, delta2, kappa2, mean_u=0.0, mean_v=0.0):
        if not delta2 > 0 or not kappa2 > 0:
            raise UnphysicalEnvelopeError(
                'envelope variances must be positive, got δ²={} κ²={}'.format(
                    delta2, kappa2
                )
            )
        self.delta2 = delta2
        self.kappa2 = kappa2
        self.mean_u = mean_u
        self.mean_v = mean_v

    def __repr__(self):
        return 'ErrorEnvelope1(delta2={}, kappa2={}, mean_u={}, mean_v={})'.format(
            self.delta2, self.kappa2, self.mean_u, self.mean_v
        )


class MixtureSpec(object):
    """Homodyne outcome model X = offset + spacing·N + Q

    The integer N follows a discrete Gaussian with weights
    exp(−(offset + spacing·n − weight_center)²/(2·weight_variance)) and
    Q is normal with mean `residue_mean` and variance `residue_variance`.
    All quantities are absolute (σ² already applied).
    """
    def __init__(self, spacing, offset, weight_variance, residue_variance,
                 weight_center=0.0, residue_mean=0.0):
        if not weight_variance > 0 or not residue_variance > 0:
            raise ContractViolation('mixture variances must be positive')
        self.spacing = spacing
        self.offset = offset
        self.weight_variance = weight_variance
        self.residue_variance = residue_variance
        self.weight_center = weight_center
        self.residue_mean = residue_mean

    def positions(self, n):
        return self.offset + self.spacing * np.asarray(n)

    def support(self):
        """Integers n whose weight is above the tail cut-off"""
        reach = math.sqrt(
            2 * self.weight_variance * math.log(1 / TAIL_WEIGHT)
        )
        low = math.floor((self.weight_center - reach - self.offset) /
                         self.spacing)
        high = math.ceil((self.weight_center + reach - self.offset) /
                         self.spacing)
        return np.arange(low, high + 1)

    def weights(self, n=None):
        """Normalized discrete-Gaussian weights P_N over `n` (or the support)"""
        if n is None:
            n = self.support()
        x = self.positions(n) - self.weight_center
        log_weights = -x ** 2 / (2 * self.weight_variance)
        weights = np.exp(log_weights - np.max(log_weights))
        return weights / weights.sum()

    def pdf(self, x):
        n = self.support()
        weights = self.weights(n)
        x = np.asarray(x, dtype=float)
        residues = (x[..., None] - self.positions(n) - self.residue_mean)
        gauss = np.exp(-residues ** 2 / (2 * self.residue_variance))
        gauss /= math.sqrt(2 * math.pi * self.residue_variance)
        return gauss @ weights

    def sample(self, rng, size=None):
        n = self.support()
        picks = rng.choice(n, size=size, p=self.weights(n))
        residues = rng.normal(
            self.residue_mean, math.sqrt(self.residue_variance), size=size
        )
        return self.positions(picks) + residues


class FiniteGkpState(object):
    """A single finite-energy GKP qubit: logical label plus envelope"""

    def __init__(self, label, envelope, sigma2):
        self.label = check_label(label)
        self.envelope = envelope
        self.sigma2 = sigma2
        self._norms = {}

    @property
    def delta(self):
        """Absolute q-displacement standard deviation"""
        return math.sqrt(self.envelope.delta2 * self.sigma2)

    @property
    def kappa(self):
        """Absolute p-displacement standard deviation"""
        return math.sqrt(self.envelope.kappa2 * self.sigma2)

    def _parameters(self, quadrature):
        """(tooth width, envelope width, tooth shift, phase shift, sign)"""
        env = self.envelope
        if quadrature == 'q':
            return self.delta, self.kappa, env.mean_u, env.mean_v, 1
        return self.kappa, self.delta, env.mean_v, env.mean_u, -1

    def teeth(self, quadrature):
        """Tooth indices k that carry weight above the tail cut-off"""
        _, envelope_width, shift, _, _ = self._parameters(quadrature)
        reach = math.sqrt(math.log(1 / TAIL_WEIGHT)) / envelope_width
        centre = -shift / 2
        low = math.floor((centre - reach) / SQRT_PI)
        high = math.ceil((centre + reach) / SQRT_PI)
        k = np.arange(low, high + 1)
        return k[comb_coefficient(self.label, quadrature, k) != 0]

    def _raw(self, quadrature, x, construction):
        width, envelope_width, shift, phase_shift, sign = \
            self._parameters(quadrature)
        x = np.asarray(x, dtype=float)
        psi = np.zeros(x.shape, dtype=complex)
        for k in self.teeth(quadrature):
            coefficient = comb_coefficient(self.label, quadrature, k)
            centre = k * SQRT_PI
            tooth = np.exp(-(x - centre - shift) ** 2 / (2 * width ** 2))
            if construction == 'envelope':
                envelope = np.exp(
                    -envelope_width ** 2 * (x + centre) ** 2 / 8
                )
            else:
                envelope = math.exp(
                    -envelope_width ** 2 * (centre + shift / 2) ** 2 / 2
                )
            phase = np.exp(sign * 1j * phase_shift * (x + centre) / 2)
            psi += coefficient * tooth * envelope * phase
        return psi

    def norm(self, quadrature, construction='envelope'):
        """L2 norm of the unnormalized wavefunction (fine-grid quadrature)"""
        key = (quadrature, construction)
        if key not in self._norms:
            width, envelope_width, shift, _, _ = self._parameters(quadrature)
            reach = 9 / envelope_width + abs(shift) + 2 * SQRT_PI
            step = width / 8
            grid = np.arange(shift - reach, shift + reach, step)
            density = np.abs(self._raw(quadrature, grid, construction)) ** 2
            self._norms[key] = math.sqrt(density.sum() * step)
        return self._norms[key]

    def __repr__(self):
        return 'FiniteGkpState({!r}, {!r}, sigma2={})'.format(
            self.label, self.envelope, self.sigma2
        )


def make_finite_gkp(label, envelope, sigma2=0.1):
    """Build a finite-energy GKP qubit

    Arguments:
        label {string} -- ideal logical state: Z0, Z1, X+ or X-
        envelope {ErrorEnvelope1} -- error wavefunction parameters

    Keyword Arguments:
        sigma2 {float} -- reference variance σ² (default: {0.1})

    Returns:
        {FiniteGkpState} -- the state handle

    Raises:
        UnphysicalEnvelopeError -- δκ ≥ 1 or σ² not positive
        ContractViolation -- unknown label
    """
    check_label(label)
    if not sigma2 > 0:
        raise UnphysicalEnvelopeError('σ² must be positive')
    state = FiniteGkpState(label, envelope, sigma2)
    if state.delta * state.kappa >= 1:
        raise UnphysicalEnvelopeError(
            'δκ = {:.3g} violates δκ < 1'.format(state.delta * state.kappa)
        )
    warn_regime(state.delta, 'tooth')
    warn_regime(state.kappa, 'envelope')
    return state


def quadrature_wavefunction(state, quadrature, grid, construction='envelope',
                            normalize=True):
    """Evaluate ψ(q) or ψ(p) of a finite-energy GKP state on a grid

    Arguments:
        state {FiniteGkpState} -- the state
        quadrature {string} -- 'q' or 'p'
        grid {array} -- strictly increasing evaluation points

    Keyword Arguments:
        construction {string} -- 'envelope' for the exact error-wavefunction
                                 integral, 'comb' for the comb of squeezed
                                 states (default: {'envelope'})
        normalize {bool} -- divide by the numerically computed norm
                            (default: {True})

    Returns:
        {array} -- complex amplitudes

    Raises:
        ContractViolation -- bad quadrature, construction or grid
    """
    check_quadrature(quadrature)
    if construction not in ('envelope', 'comb'):
        raise ContractViolation(
            'construction must be "envelope" or "comb", got {!r}'.format(
                construction
            )
        )
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ContractViolation('grid must be strictly increasing')
    psi = state._raw(quadrature, grid, construction)
    if normalize:
        psi = psi / state.norm(quadrature, construction)
    return psi


def comb_spec(state, quadrature):
    """Outcome mixture of a homodyne measurement of `quadrature`

    Measuring along the stabilizer direction of the label (q for Z0/Z1,
    p for X+/X−) sees teeth every 2√π; the other quadrature sees every
    √π. Comb weights come from the envelope width, residues from the
    tooth width.
    """
    check_quadrature(quadrature)
    width, envelope_width, shift, _, _ = state._parameters(quadrature)
    aligned = {'q': ('Z0', 'Z1'), 'p': ('X+', 'X-')}[quadrature]
    if state.label in aligned:
        spacing = 2 * SQRT_PI
        offset = SQRT_PI if state.label in ('Z1', 'X-') else 0.0
    else:
        spacing, offset = SQRT_PI, 0.0
    return MixtureSpec(
        spacing,
        offset,
        weight_variance=1 / (2 * envelope_width ** 2),
        residue_variance=width ** 2 / 2,
        weight_center=-shift / 2,
        residue_mean=shift,
    )


def homodyne_outcome_pdf(state, quadrature, x):
    """Outcome density Σ_n P_N[n]·P_Q(x − spacing·n) of a homodyne

    Arguments:
        state {FiniteGkpState} -- the measured state
        quadrature {string} -- 'q' or 'p'
        x {float|array} -- outcome(s)

    Returns:
        {float|array} -- the density
    """
    return comb_spec(state, quadrature).pdf(x)


def make_rng(seed):
    """A numpy Generator from a seed, or pass a Generator through"""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and not isinstance(seed, numbers.Integral):
        raise ContractViolation('seed must be an integer')
    return np.random.default_rng(seed)


def sample_homodyne(state, quadrature, seed=None, size=None):
    """Draw homodyne outcomes: comb index from P_N, then residue from P_Q

    Arguments:
        state {FiniteGkpState} -- the measured state
        quadrature {string} -- 'q' or 'p'

    Keyword Arguments:
        seed {integer|Generator} -- seed or generator (default: {None})
        size {integer} -- number of outcomes, or None for a scalar
                          (default: {None})

    Returns:
        {float|array} -- outcome(s)
    """
    return comb_spec(state, quadrature).sample(make_rng(seed), size=size)
