"""Brute-force wavefunctions on a position grid, for cross-checks

Each mode is sampled on x_j = −L + j·Δx, j = 0..M−1. A self-dual grid
has M·Δx² = 2π, so the momentum grid of the centred DFT coincides with
the position grid; choosing Δx = √π/r with M = 2r² also puts every
multiple of √π on a grid point.

The p representation of an axis is

    ψ_p = fftshift(fft(ifftshift(ψ))) · Δx/√(2π)

along that axis, which is also the action of the Fourier gate.
"""
from gkplab import gaussian, graph, protocols
from gkplab.errors import AliasingError, CapacityError, ContractViolation
from gkplab.gkp import ErrorEnvelope1, FiniteGkpState, check_quadrature
from gkplab.gkp import comb_coefficient, warn_regime
from gkplab.graph import GkpGraphState, SQRT_PI
from gkplab.stabilizer import pauli_matrix
from gkplab.tool import csv_text
from gkplab.topology import GraphTopology
from scipy import fft, integrate, ndimage

import itertools
import math
import numpy as np


MAX_MODES = 3
NORM_TOL = 1e-8
ALIAS_TOL = 1e-6
TERM_CUTOFF = 1e-16
MIN_EXTENT = 6 * SQRT_PI
# fewest points per mode, by mode count
MIN_POINTS = {1: 1024, 2: 256, 3: 256}
MAX_GRID_POINTS = 2 ** 24
# standard deviations of q spread kept inside the grid
SPREAD_MARGIN = 7.0


def _is_power_of_two(value):
    return value >= 2 and value & (value - 1) == 0


class GridSpec(object):
    """Grid [−L, L) with M points per mode

    Arguments:
        extent {float} -- half-width L
        points {integer} -- points per mode M (a power of two)

    Raises:
        ContractViolation -- L < 6√π or M not a power of two
    """
    def __init__(self, extent, points):
        if extent < MIN_EXTENT - 1e-12:
            raise ContractViolation('grid must reach at least 6√π')
        if not _is_power_of_two(int(points)) or points != int(points):
            raise ContractViolation(
                'points per mode must be a power of two, got {}'.format(
                    points
                )
            )
        self.extent = float(extent)
        self.points = int(points)

    @classmethod
    def self_dual(cls, points):
        """M points with M·Δx² = 2π, so L = √(πM/2)"""
        return cls(math.sqrt(math.pi * points / 2), points)

    @classmethod
    def for_modes(cls, n_modes, extent=MIN_EXTENT):
        """Smallest self-dual grid of at least `extent` for n modes

        One- and two-mode grids also keep √π on a grid point (M = 2r²).

        Raises:
            CapacityError -- n outside 1..3, or the grid would exceed
                             MAX_GRID_POINTS
        """
        if not 1 <= n_modes <= MAX_MODES:
            raise CapacityError(
                'the grid oracle handles 1 to {} modes, not {}'.format(
                    MAX_MODES, n_modes
                )
            )
        points = MIN_POINTS[n_modes]
        while True:
            if points ** n_modes > MAX_GRID_POINTS:
                raise CapacityError(
                    'a {}-mode grid reaching {:.3g} needs more than {} '
                    'points'.format(n_modes, extent, MAX_GRID_POINTS)
                )
            spec = cls.self_dual(points)
            root = int(round(math.sqrt(points / 2)))
            aligned = n_modes == 3 or 2 * root ** 2 == points
            if aligned and spec.extent >= extent:
                return spec
            points *= 2

    @property
    def step(self):
        return 2 * self.extent / self.points

    @property
    def is_self_dual(self):
        return abs(self.points * self.step ** 2 - 2 * math.pi) < 1e-9

    @property
    def axis(self):
        return -self.extent + self.step * np.arange(self.points)

    def position(self, value):
        """Fractional grid index of `value`"""
        if not -self.extent <= value < self.extent:
            raise ContractViolation(
                '{} lies outside the grid [−{L}, {L})'.format(
                    value, L=self.extent
                )
            )
        return (value + self.extent) / self.step

    def __eq__(self, other):
        return (isinstance(other, GridSpec) and
                self.extent == other.extent and self.points == other.points)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'GridSpec(extent={:.6g}, points={})'.format(
            self.extent, self.points
        )


def required_extent(sigma2, envelopes, sheared=False):
    """Half-width that keeps the finite-energy spread of every mode

    A mode whose envelope variances are (l, m)·σ² spreads over q and p
    with standard deviation about 1/√(2·min(l, m)·σ²). A C_X shear adds
    the spreads of the two modes it couples.

    Arguments:
        sigma2 {float} -- σ²
        envelopes {list} -- (l, m) per mode

    Keyword Arguments:
        sheared {bool} -- combine the spreads in quadrature (default: {False})

    Returns:
        {float} -- half-width, never below 6√π
    """
    spreads = [1 / math.sqrt(2 * min(float(l), float(m)) * sigma2)
               for l, m in envelopes]
    if sheared:
        spread = math.sqrt(sum(s ** 2 for s in spreads))
    else:
        spread = max(spreads)
    return max(MIN_EXTENT, SPREAD_MARGIN * spread)


class GridWavefunction(object):
    """Amplitudes of an n-mode wavefunction, one array axis per mode"""

    def __init__(self, spec, amplitudes, modes=None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.ndim > MAX_MODES:
            raise CapacityError('at most {} modes'.format(MAX_MODES))
        if any(size != spec.points for size in amplitudes.shape):
            raise ContractViolation('amplitudes do not match the grid')
        self.spec = spec
        self.amplitudes = amplitudes
        self.modes = tuple(range(amplitudes.ndim) if modes is None
                           else modes)
        if len(self.modes) != amplitudes.ndim:
            raise ContractViolation('one label per mode is needed')

    @property
    def n_modes(self):
        return self.amplitudes.ndim

    def axis(self, mode):
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ContractViolation('unknown mode {!r}'.format(mode))

    def norm(self):
        weight = self.spec.step ** self.n_modes
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2)) * weight)

    def normalize(self):
        norm = self.norm()
        if norm == 0:
            raise ContractViolation('cannot normalize a zero wavefunction')
        return self.replace(self.amplitudes / norm)

    def replace(self, amplitudes, modes=None):
        return GridWavefunction(
            self.spec, amplitudes, self.modes if modes is None else modes
        )

    def marginal(self, mode, quadrature='q'):
        """Density of one mode's q or p with the other modes traced out"""
        check_quadrature(quadrature)
        amplitudes = self.amplitudes
        axis = self.axis(mode)
        if quadrature == 'p':
            amplitudes = _to_momentum(amplitudes, axis, self.spec.step)
        density = np.abs(amplitudes) ** 2
        others = tuple(i for i in range(self.n_modes) if i != axis)
        return density.sum(axis=others) * self.spec.step ** len(others)

    def __repr__(self):
        return 'GridWavefunction(modes={}, {!r})'.format(
            list(self.modes), self.spec
        )


def tensor(w1, w2):
    """Product wavefunction of two grids with disjoint modes"""
    if w1.spec != w2.spec:
        raise ContractViolation('wavefunctions live on different grids')
    if set(w1.modes) & set(w2.modes):
        raise ContractViolation('the factors share modes')
    if w1.n_modes + w2.n_modes > MAX_MODES:
        raise CapacityError('at most {} modes'.format(MAX_MODES))
    return GridWavefunction(
        w1.spec, np.multiply.outer(w1.amplitudes, w2.amplitudes),
        w1.modes + w2.modes,
    )


def _to_momentum(amplitudes, axis, step, inverse=False):
    shifted = fft.ifftshift(amplitudes, axes=axis)
    if inverse:
        out = fft.ifft(shifted, axis=axis)
        return fft.fftshift(out, axes=axis) * math.sqrt(2 * math.pi) / step
    out = fft.fft(shifted, axis=axis)
    return fft.fftshift(out, axes=axis) * step / math.sqrt(2 * math.pi)


def _mesh(spec, n_modes):
    axis = spec.axis
    grids = np.meshgrid(*([axis] * n_modes), indexing='ij')
    return np.stack([g.ravel() for g in grids])


def _qubit_index(bits):
    index = 0
    for bit in bits:
        index = 2 * index + int(bit)
    return index


def _branch_wavefunction(spec, points, mean, phase, cov, coefficients):
    """q-wavefunction of one Gaussian branch over the ideal comb

    With s = q − k√π and ω = φ_t + s/2 + k√π, the tooth k contributes
    a_k·exp(iφ_s·s − ½(s−μ_s)ᵀΣ_ss⁻¹(s−μ_s) + iω·m(s) − ½ωᵀCω), where
    m(s) and C are the conditional mean and covariance of t given s.
    """
    n = len(mean) // 2
    sigma_ss, sigma_ts, sigma_tt = cov[:n, :n], cov[n:, :n], cov[n:, n:]
    inv_ss = np.linalg.inv(sigma_ss)
    regress = sigma_ts @ inv_ss
    conditional = sigma_tt - regress @ sigma_ts.T
    mu_s, mu_t = mean[:n], mean[n:]
    phi_s, phi_t = phase[:n], phase[n:]
    reach = int(math.ceil(spec.extent / SQRT_PI)) + 2
    psi = np.zeros(points.shape[1], dtype=complex)
    for k in itertools.product(range(-reach, reach + 1), repeat=n):
        centre = np.array(k, dtype=float) * SQRT_PI
        coefficient = coefficients[_qubit_index(np.mod(k, 2))]
        if coefficient == 0:
            continue
        if math.exp(-0.5 * centre @ conditional @ centre) < TERM_CUTOFF:
            continue
        s = points - centre[:, None]
        d = s - mu_s[:, None]
        omega = phi_t[:, None] + s / 2 + centre[:, None]
        m = mu_t[:, None] + regress @ d
        exponent = (
            1j * (phi_s @ s) -
            0.5 * np.einsum('ip,ij,jp->p', d, inv_ss, d) +
            1j * np.einsum('ip,ip->p', omega, m) -
            0.5 * np.einsum('ip,ij,jp->p', omega, conditional, omega)
        )
        psi += coefficient * np.exp(exponent)
    return psi


def synthesize(source, spec=None):
    """Evaluate a finite-energy state on the grid and normalize it

    Arguments:
        source {FiniteGkpState|GkpGraphState} -- single qubit or small
                                                 graph state (n ≤ 3)

    Keyword Arguments:
        spec {GridSpec} -- grid (default: {GridSpec.for_modes(n)})

    Returns:
        {GridWavefunction} -- normalized q-representation wavefunction

    Raises:
        CapacityError -- more than three modes
    """
    if isinstance(source, FiniteGkpState):
        spec = spec or GridSpec.for_modes(1)
        psi = source._raw('q', spec.axis, 'envelope')
        return GridWavefunction(spec, psi).normalize()
    if not isinstance(source, GkpGraphState):
        raise ContractViolation('cannot synthesize {!r}'.format(source))
    n = source.n_modes
    if n > MAX_MODES or n == 0:
        raise CapacityError(
            'the grid oracle handles 1 to {} modes, not {}'.format(
                MAX_MODES, n
            )
        )
    if set(source.qubits) != set(source.modes):
        raise ContractViolation('ideal layer has qubits without modes')
    spec = spec or GridSpec.for_modes(n)
    cov = gaussian.as_float(source.cov) * source.sigma2
    warn_regime(math.sqrt(float(np.max(np.diag(cov)))), 'branch envelope')
    order = [source.tableau.index(m) for m in source.modes]
    reference = source.tableau.statevector()
    points = _mesh(spec, n)
    psi = np.zeros(points.shape[1], dtype=complex)
    for branch in source.branches:
        flipped = pauli_matrix(branch.flip_x, branch.flip_z) @ reference
        flipped = np.transpose(
            flipped.reshape([2] * n), order
        ).ravel()
        psi += branch.amplitude * _branch_wavefunction(
            spec, points, gaussian.as_float(branch.mean), branch.phase, cov,
            flipped,
        )
    return GridWavefunction(
        spec, psi.reshape([spec.points] * n), source.modes
    ).normalize()


def _check_unitary(before, after, what):
    if abs(after.norm() - before.norm()) > ALIAS_TOL:
        raise AliasingError('{} moved weight off the grid'.format(what))
    return after


def _cz(w, i, j, inverse=False):
    a, b = w.axis(i), w.axis(j)
    if a == b:
        raise ContractViolation('C_Z needs two distinct modes')
    axis = w.spec.axis
    shape = [1] * w.n_modes
    shape_a, shape_b = list(shape), list(shape)
    shape_a[a] = shape_b[b] = w.spec.points
    product = axis.reshape(shape_a) * axis.reshape(shape_b)
    sign = 1 if inverse else -1
    return w.replace(w.amplitudes * np.exp(sign * 1j * product))


def _cx(w, control, target, inverse=False):
    """ψ(q_c, q_t) → ψ(q_c, q_t ∓ q_c) by exact index shifts"""
    a, b = w.axis(control), w.axis(target)
    if a == b:
        raise ContractViolation('C_X needs two distinct modes')
    if not w.spec.is_self_dual:
        raise ContractViolation('C_X needs a self-dual grid')
    points = w.spec.points
    moved = np.moveaxis(w.amplitudes, [a, b], [0, 1])
    out = np.zeros_like(moved)
    for j in range(points):
        shift = j - points // 2
        shift = -shift if inverse else shift
        source = moved[j]
        if shift > 0:
            out[j, shift:] = source[:points - shift]
        elif shift < 0:
            out[j, :points + shift] = source[-shift:]
        else:
            out[j] = source
    result = w.replace(np.moveaxis(out, [0, 1], [a, b]))
    return _check_unitary(w, result, 'C_X shear')


def _fourier(w, mode, inverse=False):
    axis = w.axis(mode)
    if not w.spec.is_self_dual:
        raise ContractViolation('the Fourier gate needs a self-dual grid')
    return w.replace(_to_momentum(w.amplitudes, axis, w.spec.step, inverse))


def _displacement(w, mode, du, dv):
    """D(du, dv)ψ(q) = e^{i dv (q − du/2)} ψ(q − du)

    The q shift is applied as a phase ramp in the p representation.
    """
    axis = w.axis(mode)
    spec = w.spec
    shape = [1] * w.n_modes
    shape[axis] = spec.points
    grid = spec.axis.reshape(shape)
    amplitudes = w.amplitudes
    if du:
        edge = np.abs(grid) >= spec.extent - abs(du)
        lost = float(np.sum(np.abs(amplitudes * edge) ** 2))
        if lost * spec.step ** w.n_modes > ALIAS_TOL:
            raise AliasingError('displacement pushes weight off the grid')
        momentum = _to_momentum(amplitudes, axis, spec.step)
        momentum = momentum * np.exp(-1j * du * grid)
        amplitudes = _to_momentum(momentum, axis, spec.step, inverse=True)
    amplitudes = amplitudes * np.exp(1j * dv * (grid - du / 2))
    return w.replace(amplitudes)


def _beamsplitter(w, transmissivity, i, j):
    """ψ'(x) = ψ(Rᵀx) with R the beamsplitter rotation, by interpolation"""
    a, b = w.axis(i), w.axis(j)
    if a == b:
        raise ContractViolation('a beamsplitter needs two distinct modes')
    cos = math.sqrt(transmissivity)
    sin = math.sqrt(1 - transmissivity)
    spec = w.spec
    points = _mesh(spec, w.n_modes)
    source = points.copy()
    source[a] = cos * points[a] - sin * points[b]
    source[b] = sin * points[a] + cos * points[b]
    coordinates = (source + spec.extent) / spec.step
    shape = w.amplitudes.shape
    real = ndimage.map_coordinates(w.amplitudes.real, coordinates, order=3,
                                   mode='constant')
    imag = ndimage.map_coordinates(w.amplitudes.imag, coordinates, order=3,
                                   mode='constant')
    return w.replace((real + 1j * imag).reshape(shape))


def evolve(w, gate, *args, **kwargs):
    """Apply a gate to a grid wavefunction

    Gates: ('cz', i, j), ('cx', c, t, inverse=False),
    ('displacement', mode, du, dv), ('fourier', mode, inverse=False),
    ('beamsplitter', T, i, j).

    Raises:
        AliasingError -- the gate pushes weight off the grid
        ContractViolation -- unknown gate or modes
    """
    if gate == 'cz':
        return _cz(w, *args, **kwargs)
    if gate == 'cx':
        return _cx(w, *args, **kwargs)
    if gate == 'fourier':
        return _fourier(w, *args, **kwargs)
    if gate == 'displacement':
        return _displacement(w, *args, **kwargs)
    if gate == 'beamsplitter':
        return _beamsplitter(w, *args, **kwargs)
    raise ContractViolation('unknown grid gate {!r}'.format(gate))


def slice_homodyne(w, mode, quadrature, y):
    """Condition on a homodyne outcome

    Arguments:
        w {GridWavefunction} -- the state
        mode {hashable} -- measured mode
        quadrature {string} -- 'q' or 'p'
        y {float} -- the outcome (inside the grid)

    Returns:
        {tuple} -- (normalized wavefunction of the other modes, or None for
                   a single mode; outcome density at y)
    """
    check_quadrature(quadrature)
    spec = w.spec
    moved = np.moveaxis(w.amplitudes, w.axis(mode), 0)
    position = spec.position(y)
    if quadrature == 'p':
        # the centred DFT evaluated at y itself, exact between grid points
        kernel = np.exp(-1j * y * spec.axis) * spec.step / math.sqrt(
            2 * math.pi
        )
        sliced = np.tensordot(kernel, moved, axes=(0, 0))
    else:
        low = int(math.floor(position))
        fraction = position - low
        if fraction < 1e-9 or low + 1 >= spec.points:
            sliced = moved[low]
        else:
            sliced = (1 - fraction) * moved[low] + fraction * moved[low + 1]
    others = w.n_modes - 1
    density = float(np.sum(np.abs(sliced) ** 2)) * w.spec.step ** others
    if not others:
        return None, density
    modes = tuple(m for m in w.modes if m != mode)
    rest = GridWavefunction(w.spec, sliced, modes)
    return rest.normalize(), density


def overlap(w1, w2):
    """⟨w1|w2⟩ on a shared grid"""
    if w1.spec != w2.spec or w1.amplitudes.shape != w2.amplitudes.shape:
        raise ContractViolation('wavefunctions live on different grids')
    weight = w1.spec.step ** w1.n_modes
    return complex(np.vdot(w1.amplitudes, w2.amplitudes) * weight)


def fidelity(w1, w2):
    return abs(overlap(w1, w2)) ** 2


def density_rows(w, quadrature='q'):
    """(x, density of mode 1, density of mode 2, ...) per grid point"""
    columns = [w.marginal(mode, quadrature) for mode in w.modes]
    return [
        [x] + [column[j] for column in columns]
        for j, x in enumerate(w.spec.axis)
    ]


def dump_density_csv(w, path, quadrature='q', tool=None):
    """Write the per-mode marginal densities as CSV

    Keyword Arguments:
        tool {Tool} -- tool whose `save` writes the file, honoring dry runs
                       (default: {plain write})
    """
    header = ['x'] + ['density_{}'.format(mode) for mode in w.modes]
    content = csv_text(header, density_rows(w, quadrature))
    if tool is not None:
        return tool.save(path, content)
    with open(path, 'w', newline='\n') as out_file:
        out_file.write(content)
    return path


def momentum_wavefunction(state, p):
    """Unnormalized ψ(p) as the closed-form Fourier transform of ψ(q)

    Every tooth of the q envelope construction is a Gaussian
    exp(−a q² + b q + g), whose transform is
    √(π/a)·exp(g + (b − ip)²/(4a)) up to the 1/√(2π) of the DFT.
    """
    delta, kappa = state.delta, state.kappa
    u, v = state.envelope.mean_u, state.envelope.mean_v
    a = 1 / (2 * delta ** 2) + kappa ** 2 / 8
    p = np.asarray(p, dtype=float)
    psi = np.zeros(p.shape, dtype=complex)
    for k in state.teeth('q'):
        coefficient = comb_coefficient(state.label, 'q', k)
        centre = k * SQRT_PI
        b = (centre + u) / delta ** 2 - kappa ** 2 * centre / 4 + 0.5j * v
        g = (-(centre + u) ** 2 / (2 * delta ** 2) -
             kappa ** 2 * centre ** 2 / 8 + 0.5j * v * centre)
        psi += coefficient * np.exp(g + (b - 1j * p) ** 2 / (4 * a))
    return psi * math.sqrt(1 / (2 * a))


def steane_reference_density(sigma2, outcomes, envelopes=((1, 1), (1, 1))):
    """Exact density of the ancilla p outcome of a p-Steane round

    Before C_X(ancilla → data) the two qubits are a product, so the
    measured p_a − p_d has density ∫ρ_a(y + t)·ρ_d(t)dt, with ρ_a and ρ_d
    the exact p densities of |0̃⟩ and |+̃⟩. The convolution is done by
    trapezoid quadrature on a grid much finer than a tooth.

    Arguments:
        sigma2 {float} -- σ²
        outcomes {list} -- outcomes y

    Keyword Arguments:
        envelopes {tuple} -- ((l_B, m_B), (l_A, m_A)) for data and ancilla
                             (default: {((1, 1), (1, 1))})

    Returns:
        {array} -- density at every outcome
    """
    (l_b, m_b), (l_a, m_a) = envelopes
    data = FiniteGkpState('X+', ErrorEnvelope1(l_b, m_b), sigma2)
    ancilla = FiniteGkpState('Z0', ErrorEnvelope1(l_a, m_a), sigma2)
    reach = 16 / min(data.delta, ancilla.delta) + 2 * SQRT_PI
    step = min(data.kappa, ancilla.kappa) / 12
    t = np.arange(-reach, reach + step, step)
    rho_d = np.abs(momentum_wavefunction(data, t)) ** 2
    rho_d /= integrate.trapezoid(rho_d, t)
    norm_a = integrate.trapezoid(
        np.abs(momentum_wavefunction(ancilla, t)) ** 2, t
    )
    density = [
        integrate.trapezoid(
            np.abs(momentum_wavefunction(ancilla, y + t)) ** 2 * rho_d, t
        ) / norm_a
        for y in outcomes
    ]
    return np.array(density)


def oracle_check(sigma2=0.1, outcomes=None, envelopes=((1, 1), (1, 1))):
    """Compare a single-qubit p-Steane round with the grid oracle

    The data qubit |+̃⟩ and the ancilla |0̃⟩ are synthesized on a 2-mode
    grid sized for σ², entangled by C_X(ancilla → data) and sliced at
    each outcome in p; the data remainder, displaced by the same
    feedback, is compared with the analytic branch superposition.

    The slice density is compared with the exact convolution of the two
    p densities. The discrete-Gaussian outcome model is reported next to
    it; its comb-mixture form drifts from the exact density as σ² grows.

    Keyword Arguments:
        sigma2 {float} -- σ² (default: {0.1})
        outcomes {list} -- forced outcomes (default: {three per cell of
                           the first two cells})
        envelopes {tuple} -- ((l_B, m_B), (l_A, m_A)) for data and ancilla
                             (default: {((1, 1), (1, 1))})

    Returns:
        {list} -- one dict per outcome: outcome, fidelity, grid density,
                  exact density, model density, relative error of the grid
                  and of the model against the exact density

    Raises:
        CapacityError -- σ² so small that the grid outgrows the oracle
    """
    if outcomes is None:
        outcomes = [0.0, 0.2 * SQRT_PI, 0.4 * SQRT_PI,
                    0.6 * SQRT_PI, 0.8 * SQRT_PI, SQRT_PI]
    data_env, ancilla_env = envelopes
    spec = GridSpec.for_modes(
        2, required_extent(sigma2, envelopes, sheared=True)
    )
    data = graph.build_graph_state(
        [data_env], GraphTopology(['data']), sigma2, ['X+']
    )
    ancilla = graph.build_graph_state(
        [ancilla_env], GraphTopology(['ancilla']), sigma2, ['Z0']
    )
    grid = evolve(
        tensor(synthesize(data, spec), synthesize(ancilla, spec)),
        'cx', 'ancilla', 'data',
    )
    joint = graph.add_mode(data, 'ancilla', 'Z0', ancilla_env)
    entangled = graph.apply_cx(joint, 'ancilla', 'data')
    a, _, _ = graph.measured_index(entangled, 'ancilla', 'p')
    gain = gaussian.gain_vector(gaussian.as_float(entangled.cov), a)
    feedback_index = entangled.n_modes + entangled.index('data')
    params = protocols.SteaneParams(
        ancilla_env[0], data_env[0], ancilla_env[1], data_env[1], sigma2
    )
    cfg = protocols.SteaneConfig('data', 'p', ancilla_env,
                                 ancilla_mode='ancilla')
    exact = steane_reference_density(sigma2, outcomes, envelopes)
    results = []
    for y, reference in zip(outcomes, exact):
        analytic, _ = protocols.steane_correct_vertex(data, cfg, outcome=y)
        predicted = synthesize(analytic, spec)
        remainder, density = slice_homodyne(grid, 'ancilla', 'p', y)
        p_c, _ = protocols.centered_mod_root_pi(y)
        remainder = evolve(
            remainder, 'displacement', 'data', 0.0,
            -gain[feedback_index] * p_c,
        )
        model = float(protocols.steane_outcome_pdf(params, y))
        reference = float(reference)
        results.append({
            'outcome': float(y),
            'fidelity': fidelity(predicted, remainder),
            'grid_density': density,
            'exact_density': reference,
            'model_density': model,
            'relative_error': abs(density - reference) / reference,
            'model_error': abs(model - reference) / reference,
        })
    return results
