"""Steane error correction, fusions and their error budgets

Outcome-level formulas for a single Steane round work on SteaneParams
(l_A, l_B, m_A, m_B, σ²). State-level procedures (`steane_correct_vertex`
and `fuse`) drive the graph engine and return the measurement records
that `protocol_error_probability` turns into a total error budget.
"""
from gkplab import gaussian, graph
from gkplab.errors import ConsistencyError, ContractViolation
from gkplab.gkp import check_quadrature, make_rng, warn_regime
from gkplab.graph import SQRT_PI, VertexEnvelope
from gkplab.stabilizer import project_bell_ideal
from scipy import integrate, stats

import math
import numpy as np


QUAD_TOL = 1e-8
MAX_PATTERN_RECORDS = 12
FUSION_VARIANTS = ('A', 'B', 'C')


def centered_mod_root_pi(y):
    """p_c(y) in [−√π/2, √π/2) and z with y = z√π + p_c

    Arguments:
        y {float} -- homodyne outcome

    Returns:
        {tuple} -- (p_c, z)
    """
    return graph.centered_mod(y, SQRT_PI)


class SteaneParams(object):
    """Envelopes of ancilla (A) and data (B) for one Steane round"""

    def __init__(self, l_a=1.0, l_b=1.0, m_a=1.0, m_b=1.0, sigma2=0.1):
        for name, value in (('l_a', l_a), ('l_b', l_b), ('m_a', m_a),
                            ('m_b', m_b), ('sigma2', sigma2)):
            if not value > 0:
                raise ContractViolation('{} must be positive'.format(name))
        self.l_a = float(l_a)
        self.l_b = float(l_b)
        self.m_a = float(m_a)
        self.m_b = float(m_b)
        self.sigma2 = float(sigma2)

    @property
    def comb_exponent(self):
        """a in P_N[n] ∝ exp(−a n²)"""
        return (math.pi * self.l_a * self.l_b * self.sigma2 /
                (self.l_a + self.l_b))

    @property
    def residue_variance(self):
        return (self.m_a + self.m_b) * self.sigma2 / 2

    @property
    def optimal_gain(self):
        return self.m_b / (self.m_a + self.m_b)

    def replace(self, **changes):
        values = dict(l_a=self.l_a, l_b=self.l_b, m_a=self.m_a,
                      m_b=self.m_b, sigma2=self.sigma2)
        values.update(changes)
        return SteaneParams(**values)

    def __repr__(self):
        return ('SteaneParams(l_a={}, l_b={}, m_a={}, m_b={}, '
                'sigma2={})').format(self.l_a, self.l_b, self.m_a, self.m_b,
                                     self.sigma2)


def comb_probabilities(params, ns):
    """Normalized integer-comb weights P_N[n]"""
    exponent = params.comb_exponent
    reach = int(math.ceil(math.sqrt(40 / exponent))) + 1
    normalizer = np.exp(-exponent * np.arange(-reach, reach + 1) ** 2).sum()
    ns = np.asarray(ns, dtype=float)
    return np.exp(-exponent * ns ** 2) / normalizer


def residue_density(params, x):
    return stats.norm.pdf(x, scale=math.sqrt(params.residue_variance))


def steane_outcome_pdf(params, y):
    """P_Y(y) = Σ_n P_N[n]·P_Q(y − n√π) of the Steane ancilla homodyne

    Arguments:
        params {SteaneParams} -- envelopes and σ²
        y {float|array} -- outcome(s)

    Returns:
        {float|array} -- the density
    """
    warn_regime(math.sqrt(params.residue_variance), 'Steane outcome residue')
    y = np.asarray(y, dtype=float)
    reach = int(math.ceil(math.sqrt(40 / params.comb_exponent))) + 1
    reach += int(math.ceil(np.max(np.abs(y)) / SQRT_PI)) if y.size else 0
    ns = np.arange(-reach, reach + 1)
    weights = comb_probabilities(params, ns)
    residues = y[..., None] - ns * SQRT_PI
    return (weights * residue_density(params, residues)).sum(axis=-1)


class BranchWeights(object):
    """Weights c_n, c_{n+1} of the two comb cells bracketing an outcome

    Arguments:
        c_n {float} -- weight of the cell n√π ≤ |y|
        c_next {float} -- weight of the cell (n+1)√π > |y|

    Keyword Arguments:
        n {integer} -- lower cell index (default: {0})
    """
    def __init__(self, c_n, c_next, n=0):
        if c_n < 0 or c_next < 0 or not c_n + c_next > 0:
            raise ContractViolation(
                'branch weights must be nonnegative with a positive sum'
            )
        self.c_n = float(c_n)
        self.c_next = float(c_next)
        self.n = int(n)

    def __repr__(self):
        return 'BranchWeights(c_n={:.6g}, c_next={:.6g}, n={})'.format(
            self.c_n, self.c_next, self.n
        )


def steane_branch_weights(params, y):
    """c_n = P_N[n]·P_Q(|y| − n√π) and c_{n+1} for n = ⌊|y|/√π⌋"""
    distance = abs(float(y))
    n = int(math.floor(distance / SQRT_PI))
    c_n, c_next = comb_probabilities(params, [n, n + 1]) * residue_density(
        params, np.array([distance - n * SQRT_PI,
                          distance - (n + 1) * SQRT_PI])
    )
    return BranchWeights(c_n, c_next, n)


def branch_error_probability(weights, y):
    """Probability that the decoded comb cell is the wrong one

    Arguments:
        weights {BranchWeights} -- weights of the two candidate cells
        y {float} -- the outcome

    Returns:
        {float} -- c_{n+1}/(c_n + c_{n+1}) when |y| − n√π < √π/2,
                   c_n/(c_n + c_{n+1}) otherwise
    """
    total = weights.c_n + weights.c_next
    if abs(float(y)) - weights.n * SQRT_PI < SQRT_PI / 2:
        return weights.c_next / total
    return weights.c_n / total


def _check_window(nu):
    if not 0 <= nu < SQRT_PI / 2:
        raise ContractViolation(
            'post-selection half-window must lie in [0, √π/2), got {}'.format(
                nu
            )
        )


def _accepted_windows(nu):
    """Positive half of I₀(ν) ∪ I₁(ν); the outcome law is symmetric"""
    return [(0.0, SQRT_PI / 2 - nu), (SQRT_PI / 2 + nu, SQRT_PI)]


def _integrate(function, windows):
    total = 0.0
    for low, high in windows:
        if high <= low:
            continue
        value, _ = integrate.quad(
            function, low, high, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200
        )
        total += value
    return 2 * total


def postselect_success_probability(params, nu):
    """Probability that a Steane outcome lands outside the exclusion band

    Integrates P_Y over I₀ = {|y| ≤ √π/2 − ν} and
    I₁ = {√π/2 + ν ≤ |y| < √π}.

    Raises:
        ContractViolation -- ν outside [0, √π/2)
    """
    _check_window(nu)
    return _integrate(lambda y: steane_outcome_pdf(params, y),
                      _accepted_windows(nu))


def average_error_probability(params, nu=0.0):
    """∫ P_Y·P_b over the accepted windows, normalized by P_succ(ν)"""
    _check_window(nu)

    def integrand(y):
        weights = steane_branch_weights(params, y)
        return steane_outcome_pdf(params, y) * branch_error_probability(
            weights, y
        )

    windows = _accepted_windows(nu)
    success = _integrate(lambda y: steane_outcome_pdf(params, y), windows)
    if success <= 0:
        return 0.0
    return min(1.0, max(0.0, _integrate(integrand, windows) / success))


def tradeoff_curve(params, nus):
    """(P_succ(ν), average error(ν)) for every ν in `nus`"""
    return [
        (postselect_success_probability(params, nu),
         average_error_probability(params, nu))
        for nu in nus
    ]


# state-level protocols

class SteaneConfig(object):
    """One Steane round on a graph vertex

    Arguments:
        target {hashable} -- vertex to correct

    Keyword Arguments:
        quadrature {string} -- 'p' corrects p errors with a |0̃⟩ ancilla,
                               'q' corrects q errors with a |+̃⟩ ancilla
                               (default: {'p'})
        ancilla {VertexEnvelope|tuple} -- (l_A, m_A) (default: {(1, 1)})
        gain {float} -- feedback gain on the target; None uses the
                        regression gain m_B/(m_A+m_B) (default: {None})
        nu {float} -- post-selection half-window (default: {0.0})
        ancilla_mode {hashable} -- identifier of the ancilla
                                   (default: {'ancilla:<target>'})
        label {string} -- record label (default: {None})
    """
    def __init__(self, target, quadrature='p', ancilla=(1, 1), gain=None,
                 nu=0.0, ancilla_mode=None, label=None):
        check_quadrature(quadrature)
        _check_window(nu)
        self.target = target
        self.quadrature = quadrature
        self.ancilla = VertexEnvelope.coerce(ancilla)
        self.gain = gain
        self.nu = nu
        self.ancilla_mode = (ancilla_mode if ancilla_mode is not None
                             else 'ancilla:{}'.format(target))
        self.label = label

    def __repr__(self):
        return 'SteaneConfig(target={!r}, quadrature={!r}, nu={})'.format(
            self.target, self.quadrature, self.nu
        )


def steane_correct_vertex(state, cfg, outcome=None, rng=None):
    """Steane error correction of one vertex

    Attaches the ancilla, entangles it with C_X (ancilla as control for
    the p round, data as control for the q round), homodynes the
    ancilla and feeds back onto the target and its neighbourhood.

    Arguments:
        state {GkpGraphState} -- the state
        cfg {SteaneConfig} -- the round

    Keyword Arguments:
        outcome {float} -- forced outcome, or None to sample (default: {None})
        rng {Generator|int} -- generator or seed (default: {None})

    Returns:
        {tuple} -- (state, MeasurementRecord); a post-selection rejection
                   returns the input state with record.accepted False
    """
    state.index(cfg.target)
    ancilla = cfg.ancilla_mode
    if cfg.quadrature == 'p':
        work = graph.add_mode(state, ancilla, 'Z0', cfg.ancilla)
        work = graph.apply_cx(work, ancilla, cfg.target)
    else:
        work = graph.add_mode(state, ancilla, 'X+', cfg.ancilla)
        work = graph.apply_cx(work, cfg.target, ancilla)
    a, _, _ = graph.measured_index(work, ancilla, cfg.quadrature)
    warn_regime(math.sqrt(float(work.cov[a, a]) * work.sigma2 / 2),
                'Steane outcome residue')
    work, record = graph.measure_mode(
        work, ancilla, cfg.quadrature, outcome, make_rng(rng), nu=cfg.nu,
        label=cfg.label or 'steane:{}'.format(cfg.target),
        gain=cfg.gain, gain_mode=cfg.target,
    )
    if not record.accepted:
        return state, record
    return work, record


class FusionConfig(object):
    """Type-II fusion of vertices `control` (C) and `target` (T)

    Arguments:
        control {hashable} -- vertex C
        target {hashable} -- vertex T

    Keyword Arguments:
        variant {string} -- 'A', 'B' or 'C' (default: {'A'})
        nu {float|tuple} -- post-selection half-window, one value or one
                            per measured mode (default: {0.0})
        label {string} -- record label prefix (default: {None})
    """
    def __init__(self, control, target, variant='A', nu=0.0, label=None):
        if variant not in FUSION_VARIANTS:
            raise ContractViolation(
                'fusion variant must be one of {}, got {!r}'.format(
                    FUSION_VARIANTS, variant
                )
            )
        if control == target:
            raise ContractViolation('fusion needs two distinct vertices')
        nus = tuple(nu) if isinstance(nu, (tuple, list)) else (nu, nu)
        if len(nus) != 2:
            raise ContractViolation('one window per measured mode is needed')
        for value in nus:
            _check_window(value)
        self.control = control
        self.target = target
        self.variant = variant
        self.nu = nus
        self.label = label

    def __repr__(self):
        return 'FusionConfig({!r}, {!r}, variant={!r})'.format(
            self.control, self.target, self.variant
        )


def fusion_circuit(state, cfg):
    """Gaussian part of a fusion as one affine map

    A: inverse Fourier on C, then C_X(C→T).
    B: inverse Fourier on T, then C_X(C→T).
    C: inverse Fourier on T, then a 50:50 beamsplitter with T on the
       first port.
    """
    n, exact_mode = state.n_modes, state.exact
    c, t = state.index(cfg.control), state.index(cfg.target)
    if cfg.variant == 'A':
        maps = [gaussian.fourier_map(n, c, True, exact_mode),
                gaussian.cx_map(n, c, t, exact_mode)]
    elif cfg.variant == 'B':
        maps = [gaussian.fourier_map(n, t, True, exact_mode),
                gaussian.cx_map(n, c, t, exact_mode)]
    else:
        half = gaussian.exact('1/2') if exact_mode else 0.5
        maps = [gaussian.fourier_map(n, t, True, exact_mode),
                gaussian.beamsplitter_map(n, half, t, c, exact_mode)]
    return gaussian.compose(*maps)


def fusion_measurements(cfg):
    """Measured (mode, quadrature) pairs in measurement order"""
    if cfg.variant == 'C':
        return [(cfg.control, 'p'), (cfg.target, 'q')]
    return [(cfg.target, 'q'), (cfg.control, 'p')]


def measured_pauli(state, affine, mode, quadrature):
    """Ideal-layer Pauli and comb spacing of a post-circuit homodyne

    The measured variable, written in the variables before the circuit,
    is α·(±x₁ ± x₂ ...). An s coefficient on a mode contributes Z there
    and a t coefficient contributes X; the comb spacing is α√π.
    """
    a, _, _ = graph.measured_index(state, mode, quadrature)
    row = affine.linear[a, :]
    n = state.n_modes
    tableau = state.tableau
    x = np.zeros(len(tableau), dtype=np.uint8)
    z = np.zeros(len(tableau), dtype=np.uint8)
    coefficients = []
    for i, vertex in enumerate(state.modes):
        s_coef, t_coef = row[i], row[n + i]
        if float(s_coef) != 0 and float(t_coef) != 0:
            raise ContractViolation(
                'measured variable mixes q and p of {!r}'.format(vertex)
            )
        if float(s_coef) != 0:
            z[tableau.index(vertex)] = 1
            coefficients.append(s_coef)
        if float(t_coef) != 0:
            x[tableau.index(vertex)] = 1
            coefficients.append(t_coef)
    scale = max(coefficients, key=lambda value: abs(float(value)))
    spacing = graph.sqrt_pi(state.exact) * abs(scale)
    return (x, z), spacing


def fuse(state, cfg, outcomes=None, rng=None):
    """Fuse two vertices of one state

    Runs the variant's circuit, homodynes both modes, projects the ideal
    layer onto the matching Bell checks and removes C and T. Feedback
    from each homodyne reaches at most the second neighbours of C and T.
    To fuse two separate graphs take their `graph.tensor` first.

    Arguments:
        state {GkpGraphState} -- the state holding both vertices
        cfg {FusionConfig} -- the fusion

    Keyword Arguments:
        outcomes {tuple} -- forced outcomes in measurement order; None
                            entries are sampled (default: {None})
        rng {Generator|int} -- generator or seed (default: {None})

    Returns:
        {tuple} -- (state, [records]); a rejection at either homodyne
                   returns the input state and the records so far

    Raises:
        ConsistencyError -- fused topology disagrees with the Bell
                            projection of the ideal graph
    """
    state.index(cfg.control)
    state.index(cfg.target)
    rng = make_rng(rng)
    outcomes = tuple(outcomes) if outcomes is not None else (None, None)
    if len(outcomes) != 2:
        raise ContractViolation('a fusion takes two outcomes')
    affine = fusion_circuit(state, cfg)
    plan = fusion_measurements(cfg)
    paulis, spacings = [], []
    for mode, quadrature in plan:
        pauli, spacing = measured_pauli(state, affine, mode, quadrature)
        paulis.append(pauli)
        spacings.append(spacing)
    work = graph.apply_map(state, affine)
    records = []
    prefix = cfg.label or 'fusion-{}'.format(cfg.variant)
    names = ('u', 'v')
    for (mode, quadrature), spacing, outcome, nu, name in zip(
            plan, spacings, outcomes, cfg.nu, names):
        work, record = graph.measure_mode(
            work, mode, quadrature, outcome, rng, nu=nu, spacing=spacing,
            label='{}:{}'.format(prefix, name), ideal=False,
        )
        records.append(record)
        if not record.accepted:
            return state, records
    work = graph.project_ideal(
        work, paulis, [cfg.control, cfg.target], [r.z for r in records]
    )
    _, _, expected = project_bell_ideal(state.tableau, cfg.control, cfg.target)
    fused = work.tableau.to_graph().topology
    if fused.reordered(expected.topology.vertices) != expected.topology:
        raise ConsistencyError(
            'fused topology {} differs from the ideal Bell projection '
            '{}'.format(fused.edges(), expected.topology.edges())
        )
    return work, records


# multi-measurement error budget

class ErrorBudget(object):
    """Total error and success probabilities of a measurement sequence"""

    def __init__(self, error_probability, success_probability):
        self.error_probability = error_probability
        self.success_probability = success_probability

    def __repr__(self):
        return 'ErrorBudget(error={:.6g}, success={:.6g})'.format(
            self.error_probability, self.success_probability
        )


def _record_pieces(record, nu):
    """Outcome intervals per decoding direction, with their nominal cell

    For e = +1 the competing cell lies above the decoded one, for e = −1
    below. Each entry is (decoded cell, low, high).
    """
    spacing = float(record.spacing)
    band = float(nu) * spacing / SQRT_PI
    return {
        1: [(0, 0.0, spacing / 2 - band),
            (-1, -spacing, -spacing / 2 - band)],
        -1: [(0, -spacing / 2 + band, 0.0),
             (1, spacing / 2 + band, spacing)],
    }


def _cell_mass(record, sigma2, pieces, delta, shift):
    spacing = float(record.spacing)
    conjugate = float(record.conjugate_variance)
    scale = math.sqrt(float(record.measured_variance) * sigma2 / 2)
    normalizer = graph.comb_normalizer(conjugate, sigma2, spacing)
    mean = float(record.nominal_mean) + shift
    total = 0.0
    for cell, low, high in pieces:
        if high <= low:
            continue
        k = cell + delta
        weight = graph.comb_weights([k], conjugate, sigma2, spacing)[0]
        offset = k * spacing + mean
        total += weight / normalizer * (
            stats.norm.cdf(high - offset, scale=scale) -
            stats.norm.cdf(low - offset, scale=scale)
        )
    return total


def protocol_error_budget(records, sigma2, nu=None):
    """Error budget of a sequence of homodyne measurements

    Every accepted record contributes an outcome law P_N[k]·P_Q with its
    measured variance, conjugate variance and comb spacing. Wrong comb
    assignments of earlier measurements shift later means through the
    recorded couplings. The budget sums exactly over the decoding
    direction and the right/wrong cell of every measurement, restricted
    to outcomes within one spacing of zero.

    Arguments:
        records {list} -- MeasurementRecord sequence
        sigma2 {float} -- σ²

    Keyword Arguments:
        nu {float} -- post-selection half-window for every record; None
                      uses each record's own (default: {None})

    Returns:
        {ErrorBudget} -- probability of at least one wrong assignment
                         among accepted outcomes, and the accepted mass
    """
    records = [r for r in records if r.accepted]
    if len(records) > MAX_PATTERN_RECORDS:
        raise ContractViolation(
            'error budget is limited to {} measurements'.format(
                MAX_PATTERN_RECORDS
            )
        )
    if not records:
        return ErrorBudget(0.0, 1.0)
    position = {r.index: i for i, r in enumerate(records)}
    pieces = [
        _record_pieces(r, r.nu if nu is None else nu) for r in records
    ]

    def walk(m, deltas):
        if m == len(records):
            return 1.0, 1.0
        record = records[m]
        shift = sum(
            float(weight) * deltas[position[j]]
            for j, weight in record.couplings.items()
            if j in position and position[j] < m
        )
        total = clean = 0.0
        for direction in (1, -1):
            for delta in (0, direction):
                mass = _cell_mass(record, sigma2, pieces[m][direction],
                                  delta, shift)
                if mass == 0:
                    continue
                sub_total, sub_clean = walk(m + 1, deltas + [delta])
                total += mass * sub_total
                if delta == 0:
                    clean += mass * sub_clean
        return total, clean

    total, clean = walk(0, [])
    if total <= 0:
        return ErrorBudget(0.0, 0.0)
    error = min(1.0, max(0.0, (total - clean) / total))
    return ErrorBudget(error, min(1.0, total))


def protocol_error_probability(records, sigma2, nu=None):
    """Average total error probability of a measurement sequence"""
    return protocol_error_budget(records, sigma2, nu).error_probability
