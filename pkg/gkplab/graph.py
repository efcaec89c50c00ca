"""Finite-energy GKP graph states as superpositions of Gaussian branches

A state holds

  * an ideal layer: a stabilizer tableau of the underlying ideal GKP
    qubit state, plus per-branch Pauli flips relative to it;
  * a displacement layer: one covariance matrix V (multiple of σ²)
    shared by every branch, and per branch a mean vector μ, a phase
    gradient φ and a complex amplitude.

Branch b stands for amp_b ∫dx η(x − μ_b) e^{iφ_b·x} D(x) F_b|Ψ̄⟩ with
η(x) ∝ exp(−½ xᵀ(σ²V)⁻¹x), D(s, t) = e^{i(−s·p + t·q)} and F_b the
branch's Pauli flips. Operations never mutate their input.
"""
from gkplab import gaussian
from gkplab.errors import ContractViolation
from gkplab.gaussian import GaussianMoments
from gkplab.gkp import check_label, check_quadrature, make_rng
from gkplab.stabilizer import StabilizerTableau, anticommutes
from gkplab.stabilizer import single_qubit_pauli
from gkplab.topology import GraphTopology

import math
import numbers
import numpy as np
import sympy


SQRT_PI = math.sqrt(math.pi)
PRUNE_EPS = 1e-12
NORM_TOL = 1e-10


def sqrt_pi(exact_mode=False):
    return sympy.sqrt(sympy.pi) if exact_mode else SQRT_PI


def floor(value):
    if isinstance(value, sympy.Basic):
        return int(sympy.floor(value))
    return int(math.floor(value))


def centered_mod(y, spacing):
    """Split y = z·spacing + p_c with p_c in [−spacing/2, spacing/2)

    Returns:
        {tuple} -- (p_c, z)
    """
    half = sympy.Rational(1, 2) if isinstance(y, sympy.Basic) else 0.5
    z = floor(y / spacing + half)
    return y - z * spacing, z


class VertexEnvelope(object):
    """Per-vertex error envelope (l, m) with means (μ_q, μ_p)"""

    def __init__(self, l, m, mu_q=0, mu_p=0):
        if not float(l) > 0 or not float(m) > 0:
            raise ContractViolation(
                'envelope variances must be positive, got l={} m={}'.format(
                    l, m
                )
            )
        self.l = l
        self.m = m
        self.mu_q = mu_q
        self.mu_p = mu_p

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, dict):
            return cls(**value)
        return cls(*value)

    def __repr__(self):
        return 'VertexEnvelope(l={}, m={}, mu_q={}, mu_p={})'.format(
            self.l, self.m, self.mu_q, self.mu_p
        )


class Branch(object):
    """One term of the coherent superposition"""
    __slots__ = ('amplitude', 'mean', 'phase', 'tags', 'flip_x', 'flip_z')

    def __init__(self, amplitude, mean, phase, tags, flip_x, flip_z):
        self.amplitude = complex(amplitude)
        self.mean = mean
        self.phase = np.asarray(phase, dtype=float)
        self.tags = tuple(int(t) for t in tags)
        self.flip_x = np.asarray(flip_x, dtype=np.uint8)
        self.flip_z = np.asarray(flip_z, dtype=np.uint8)

    def copy(self, **changes):
        values = {
            'amplitude': self.amplitude,
            'mean': self.mean.copy(),
            'phase': self.phase.copy(),
            'tags': self.tags,
            'flip_x': self.flip_x.copy(),
            'flip_z': self.flip_z.copy(),
        }
        values.update(changes)
        return Branch(**values)

    @property
    def weight(self):
        return abs(self.amplitude) ** 2

    def __repr__(self):
        return 'Branch(tags={}, weight={:.6g})'.format(self.tags, self.weight)


class MeasurementRecord(object):
    """Outcome and bookkeeping of one homodyne measurement

    `measured_variance` is V_aa and `conjugate_variance` the conditional
    variance of the conjugate variable, both as multiples of σ².
    `couplings` maps the index of an earlier record to the shift of this
    measurement's mean per unit comb offset of that record.
    """
    def __init__(self, index, mode, quadrature, outcome, spacing, accepted,
                 label=None, nu=0.0, z=None, p_c=None, cells=(),
                 measured_variance=None, conjugate_variance=None,
                 nominal_mean=0.0, couplings=None):
        self.index = index
        self.mode = mode
        self.quadrature = quadrature
        self.outcome = outcome
        self.spacing = spacing
        self.accepted = accepted
        self.label = label
        self.nu = nu
        self.z = z
        self.p_c = p_c
        self.cells = tuple(cells)
        self.measured_variance = measured_variance
        self.conjugate_variance = conjugate_variance
        self.nominal_mean = nominal_mean
        self.couplings = dict(couplings or {})

    def to_dict(self):
        def number(value):
            return None if value is None else float(value)
        return {
            'index': self.index,
            'mode': self.mode,
            'quadrature': self.quadrature,
            'label': self.label,
            'outcome': number(self.outcome),
            'spacing': number(self.spacing),
            'accepted': self.accepted,
            'nu': number(self.nu),
            'z': None if self.z is None else int(self.z),
            'p_c': number(self.p_c),
            'cells': [int(k) for k in self.cells],
            'measured_variance': number(self.measured_variance),
            'conjugate_variance': number(self.conjugate_variance),
            'nominal_mean': number(self.nominal_mean),
            'couplings': {str(k): float(v) for k, v in self.couplings.items()},
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['couplings'] = {
            int(k): v for k, v in data.get('couplings', {}).items()
        }
        return cls(**data)

    def __repr__(self):
        return 'MeasurementRecord({}, {!r}, {}, y={}, accepted={})'.format(
            self.index, self.mode, self.quadrature, self.outcome,
            self.accepted,
        )


class GkpGraphState(object):
    """Immutable snapshot of a finite-energy GKP graph state

    Build states with `build_graph_state`; the functions of this module
    return new snapshots.
    """
    def __init__(self, modes, sigma2, cov, branches, tableau, nominal,
                 responses=(), records=(), dropped_weight=0.0, labels=None):
        self.modes = tuple(modes)
        self.sigma2 = sigma2
        self.cov = cov
        self.branches = list(branches)
        self.tableau = tableau
        self.nominal = nominal
        self.responses = list(responses)
        self.records = tuple(records)
        self.dropped_weight = dropped_weight
        self.labels = dict(labels or {})
        if not self.branches:
            raise ContractViolation('a state needs at least one branch')
        if self.cov.shape != (2 * len(self.modes), 2 * len(self.modes)):
            raise ContractViolation('covariance does not match the modes')

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def exact(self):
        return gaussian.is_exact(self.cov)

    @property
    def qubits(self):
        return self.tableau.qubits

    def index(self, mode):
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ContractViolation('unknown mode {!r}'.format(mode))

    def graph_form(self):
        return self.tableau.to_graph()

    @property
    def topology(self):
        """Graph of the ideal layer (up to local Cliffords), in mode order"""
        topology = self.graph_form().topology
        order = [v for v in self.modes if v in topology]
        order += [v for v in topology.vertices if v not in order]
        return topology.reordered(order)

    def moments(self, branch=0):
        return GaussianMoments(self.branches[branch].mean, self.cov,
                               validate=False)

    def total_weight(self):
        return sum(b.weight for b in self.branches)

    def __len__(self):
        return len(self.branches)

    def __repr__(self):
        return 'GkpGraphState(modes={}, branches={}, exact={})'.format(
            list(self.modes), len(self.branches), self.exact
        )

    def _replace(self, **changes):
        values = {
            'modes': self.modes,
            'sigma2': self.sigma2,
            'cov': self.cov,
            'branches': self.branches,
            'tableau': self.tableau,
            'nominal': self.nominal,
            'responses': self.responses,
            'records': self.records,
            'dropped_weight': self.dropped_weight,
            'labels': self.labels,
        }
        values.update(changes)
        return GkpGraphState(**values)


def _convert(value, exact_mode):
    return gaussian.exact(value) if exact_mode else float(value)


def build_graph_state(envelopes, topology, sigma2=0.1, labels=None,
                      exact=False):
    """Graph state Π C_Z over `topology` of finite-energy qubits

    Arguments:
        envelopes {list} -- one VertexEnvelope (or (l, m, μ_q, μ_p)) per
                            vertex, in topology order
        topology {GraphTopology} -- the graph

    Keyword Arguments:
        sigma2 {float} -- reference variance σ² (default: {0.1})
        labels {list} -- ideal label per vertex (default: {all X+})
        exact {bool} -- keep covariance and means as sympy numbers
                        (default: {False})

    Returns:
        {GkpGraphState} -- single-branch state with Q = diag(l),
                           P = diag(m) + A·diag(l)·A, R = −diag(l)·A

    Raises:
        ContractViolation -- nonpositive variances, size mismatches
    """
    envelopes = [VertexEnvelope.coerce(env) for env in envelopes]
    n = len(topology)
    if len(envelopes) != n:
        raise ContractViolation(
            '{} envelopes for {} vertices'.format(len(envelopes), n)
        )
    if not sigma2 > 0:
        raise ContractViolation('σ² must be positive')
    labels = list(labels) if labels is not None else ['X+'] * n
    if len(labels) != n:
        raise ContractViolation('one ideal label per vertex is needed')
    for label in labels:
        check_label(label)
    cov = gaussian.zeros((2 * n, 2 * n), exact)
    mean = gaussian.zeros(2 * n, exact)
    for i, env in enumerate(envelopes):
        cov[i, i] = _convert(env.l, exact)
        cov[n + i, n + i] = _convert(env.m, exact)
        mean[i] = _convert(env.mu_q, exact)
        mean[n + i] = _convert(env.mu_p, exact)
    tableau = StabilizerTableau.from_labels(labels, topology.vertices)
    branch = Branch(
        1.0, mean, np.zeros(2 * n), (),
        np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8),
    )
    state = GkpGraphState(
        topology.vertices, sigma2, cov, [branch], tableau, mean.copy(),
        labels=dict(zip(topology.vertices, labels)),
    )
    for v, w in topology.edges():
        state = apply_cz(state, v, w)
    return state


def empty_state(sigma2=0.1, exact=False):
    """State with no modes at all"""
    return build_graph_state([], GraphTopology([]), sigma2, exact=exact)


def apply_map(state, affine, tableau=None):
    """Push every layer of the displacement picture through an affine map

    The ideal layer is replaced by `tableau` when one is given and left
    alone otherwise.
    """
    linear = affine.linear
    cov = gaussian.symmetrize(linear @ state.cov @ linear.T)
    inverse_t = np.linalg.inv(gaussian.as_float(linear)).T
    branches = [
        b.copy(mean=affine(b.mean), phase=inverse_t @ b.phase)
        for b in state.branches
    ]
    return state._replace(
        cov=cov,
        branches=branches,
        nominal=affine(state.nominal),
        responses=[linear @ r for r in state.responses],
        tableau=state.tableau if tableau is None else tableau,
    )


def apply_cz(state, i, j):
    """C_Z on modes i, j: t_i → t_i − s_j, t_j → t_j − s_i

    The ideal-layer edge (i, j) is toggled.
    """
    if i == j:
        raise ContractViolation('C_Z needs two distinct modes')
    affine = gaussian.cz_map(
        state.n_modes, state.index(i), state.index(j), state.exact
    )
    return apply_map(state, affine, state.tableau.cz(i, j))


def apply_cx(state, control, target):
    """C_X: s_T → s_T + s_C, t_C → t_C − t_T; CNOT on the ideal layer"""
    if control == target:
        raise ContractViolation('C_X needs two distinct modes')
    affine = gaussian.cx_map(
        state.n_modes, state.index(control), state.index(target), state.exact
    )
    return apply_map(
        state, affine, state.tableau.cnot(control, target)
    )


def mode_map(state, kind, *args, **kwargs):
    """AffineMap of a single- or two-mode linear optics element

    Kinds: ('beamsplitter', T, i, j), ('fourier', i, inverse=False),
    ('squeezer', r, i).
    """
    n, exact_mode = state.n_modes, state.exact
    if kind == 'beamsplitter':
        transmissivity, i, j = args
        return gaussian.beamsplitter_map(
            n, transmissivity, state.index(i), state.index(j), exact_mode
        )
    if kind == 'fourier':
        (i,) = args
        return gaussian.fourier_map(
            n, state.index(i), kwargs.get('inverse', False), exact_mode
        )
    if kind == 'squeezer':
        r, i = args
        return gaussian.squeezer_map(n, r, state.index(i), exact_mode)
    raise ContractViolation('unknown mode map {!r}'.format(kind))


def apply_mode_map(state, kind, *args, **kwargs):
    """Apply a beamsplitter, Fourier rotation or squeezer

    A Fourier rotation is a logical Hadamard and updates the ideal
    layer. Beamsplitters and squeezers act on the displacement layer
    only; fusion circuits handle their ideal-layer effect themselves.
    """
    affine = mode_map(state, kind, *args, **kwargs)
    tableau = None
    if kind == 'fourier':
        tableau = state.tableau.h(args[0])
    return apply_map(state, affine, tableau)


def _select(state, branches):
    if branches is None:
        return set(range(len(state.branches)))
    if callable(branches):
        return {i for i, b in enumerate(state.branches) if branches(b)}
    return set(branches)


def _displace(state, shift, branches=None, nominal=True):
    """Apply D(shift) to the selected branches

    Means move by `shift`, the amplitude picks up e^{−iφ·shift} and the
    phase gradient changes by (+shift_t/2, −shift_s/2).
    """
    n = state.n_modes
    chosen = _select(state, branches)
    shift_float = gaussian.as_float(shift)
    new = []
    for i, b in enumerate(state.branches):
        if i not in chosen:
            new.append(b)
            continue
        phase = b.phase.copy()
        amplitude = b.amplitude * np.exp(-1j * (b.phase @ shift_float))
        phase[n:] -= shift_float[:n] / 2
        phase[:n] += shift_float[n:] / 2
        new.append(b.copy(amplitude=amplitude, mean=b.mean + shift,
                          phase=phase))
    changes = {'branches': new}
    if nominal and branches is None:
        changes['nominal'] = state.nominal + shift
    return state._replace(**changes)


def apply_displacement(state, mode, du, dv, branches=None):
    """Displace one mode by D(du, dv) on the selected branches

    Arguments:
        state {GkpGraphState} -- the state
        mode {hashable} -- mode identifier
        du {number} -- q displacement
        dv {number} -- p displacement

    Keyword Arguments:
        branches {None|iterable|callable} -- all branches, branch indices
                                             or a predicate (default: {None})
    """
    i = state.index(mode)
    shift = gaussian.zeros(2 * state.n_modes, state.exact)
    shift[i] = _convert(du, state.exact)
    shift[state.n_modes + i] = _convert(dv, state.exact)
    return _displace(state, shift, branches)


def normalize(state):
    total = state.total_weight()
    if total <= 0:
        raise ContractViolation('state has zero norm')
    scale = 1 / math.sqrt(total)
    return state._replace(branches=[
        b.copy(amplitude=b.amplitude * scale) for b in state.branches
    ])


def prune(state, eps=PRUNE_EPS):
    """Normalize, drop branches with weight below `eps`, renormalize"""
    state = normalize(state)
    kept = [b for b in state.branches if b.weight >= eps]
    if not kept:
        kept = [max(state.branches, key=lambda b: b.weight)]
    dropped = 1 - sum(b.weight for b in kept)
    if dropped <= 0:
        return state
    state = state._replace(
        branches=kept, dropped_weight=state.dropped_weight + dropped
    )
    return normalize(state)


def tensor(first, second):
    """Product state of two states with disjoint modes"""
    if set(first.modes) & set(second.modes):
        raise ContractViolation('states share mode identifiers')
    if first.sigma2 != second.sigma2:
        raise ContractViolation('states were built with different σ²')
    if first.exact != second.exact:
        raise ContractViolation('cannot mix exact and float states')
    n, m = first.n_modes, second.n_modes
    exact_mode = first.exact
    order = (list(range(n)) + list(range(2 * n, 2 * n + m)) +
             list(range(n, 2 * n)) + list(range(2 * n + m, 2 * (n + m))))

    def join(a, b):
        return np.concatenate([a, b])[order]

    cov = gaussian.zeros((2 * (n + m), 2 * (n + m)), exact_mode)
    cov[:2 * n, :2 * n] = first.cov
    cov[2 * n:, 2 * n:] = second.cov
    cov = cov[np.ix_(order, order)]
    branches = []
    for a in first.branches:
        for b in second.branches:
            branches.append(Branch(
                a.amplitude * b.amplitude,
                join(a.mean, b.mean),
                join(a.phase, b.phase),
                a.tags + b.tags,
                np.concatenate([a.flip_x, b.flip_x]),
                np.concatenate([a.flip_z, b.flip_z]),
            ))
    zeros_first = gaussian.zeros(2 * n, exact_mode)
    zeros_second = gaussian.zeros(2 * m, exact_mode)
    responses = ([join(r, zeros_second) for r in first.responses] +
                 [join(zeros_first, r) for r in second.responses])
    offset = len(first.records)
    records = list(first.records)
    for record in second.records:
        shifted = MeasurementRecord.from_dict(record.to_dict())
        shifted.outcome, shifted.p_c = record.outcome, record.p_c
        shifted.index = record.index + offset
        shifted.couplings = {
            k + offset: v for k, v in record.couplings.items()
        }
        records.append(shifted)
    labels = dict(first.labels)
    labels.update(second.labels)
    return GkpGraphState(
        first.modes + second.modes,
        first.sigma2,
        cov,
        branches,
        first.tableau.tensor(second.tableau),
        join(first.nominal, second.nominal),
        responses,
        records,
        first.dropped_weight + second.dropped_weight,
        labels,
    )


def add_mode(state, mode, label, envelope):
    """Append a fresh, uncorrelated mode prepared in `label`"""
    if mode in state.modes:
        raise ContractViolation('mode {!r} already exists'.format(mode))
    fresh = build_graph_state(
        [envelope], GraphTopology([mode]), state.sigma2, [label],
        exact=state.exact,
    )
    return tensor(state, fresh)


def vertex_envelope(state, mode):
    """Marginal (l′, m′) of one vertex"""
    i = state.index(mode)
    n = state.n_modes
    return state.cov[i, i], state.cov[n + i, n + i]


def measured_index(state, mode, quadrature):
    """(measured variable, conjugate variable, phase sign) of a homodyne"""
    check_quadrature(quadrature)
    i = state.index(mode)
    n = state.n_modes
    if quadrature == 'q':
        return i, n + i, 1
    return n + i, i, -1


def outcome_mixture(state, mode, quadrature, spacing=None):
    """Per-branch (weight, mean) and the shared comb/residue parameters"""
    a, b, _ = measured_index(state, mode, quadrature)
    spacing = float(spacing if spacing is not None else SQRT_PI)
    moments = GaussianMoments(state.nominal, state.cov, validate=False)
    conjugate = float(gaussian.conditional_variance(moments, b))
    measured = float(state.cov[a, a])
    means = [float(br.mean[a]) for br in state.branches]
    weights = np.array([br.weight for br in state.branches])
    return weights / weights.sum(), means, conjugate, measured, spacing


def comb_weights(ks, conjugate, sigma2, spacing):
    """Discrete-Gaussian comb weights P_N[k] ∝ exp(−c σ² (k·spacing)²)"""
    ks = np.asarray(ks, dtype=float)
    return np.exp(-conjugate * sigma2 * (ks * spacing) ** 2)


def comb_normalizer(conjugate, sigma2, spacing):
    reach = int(math.ceil(
        math.sqrt(36 / (conjugate * sigma2)) / spacing
    )) + 2
    return comb_weights(np.arange(-reach, reach + 1), conjugate, sigma2,
                        spacing).sum()


def sample_outcome(state, mode, quadrature, rng, spacing=None):
    """Draw a homodyne outcome: branch, then comb index, then residue"""
    weights, means, conjugate, measured, spacing = outcome_mixture(
        state, mode, quadrature, spacing
    )
    branch = rng.choice(len(weights), p=weights)
    reach = int(math.ceil(
        math.sqrt(36 / (conjugate * state.sigma2)) / spacing
    )) + 2
    ks = np.arange(-reach, reach + 1)
    comb = comb_weights(ks, conjugate, state.sigma2, spacing)
    k = rng.choice(ks, p=comb / comb.sum())
    residue = rng.normal(
        means[branch], math.sqrt(measured * state.sigma2 / 2)
    )
    return float(k * spacing + residue)


def in_exclusion_band(y, spacing, nu):
    """Whether |y| mod spacing is within ν of spacing/2

    ν is given for the √π spacing and scales with the spacing.
    """
    if not nu:
        return False
    band = float(nu) * float(spacing) / SQRT_PI
    remainder = math.fmod(abs(float(y)), float(spacing))
    return abs(remainder - float(spacing) / 2) <= band


def measure_mode(state, mode, quadrature, outcome=None, rng=None, nu=0.0,
                 spacing=None, label=None, gain=None, gain_mode=None,
                 ideal=True):
    """Homodyne one mode, split branches, feed back and update the ideal layer

    Every branch splits into the two comb cells bracketing the outcome y.
    The measured variable is conditioned on y − k·spacing, its conjugate
    is integrated out, and the feedback displacement −K·p_c(y), with K
    the regression of every remaining variable on the measured one,
    removes the y dependence of all branch means.

    Arguments:
        state {GkpGraphState} -- the state
        mode {hashable} -- measured mode
        quadrature {string} -- 'q' or 'p'

    Keyword Arguments:
        outcome {number} -- forced outcome, or None to sample (default: {None})
        rng {Generator|int} -- generator or seed for sampling (default: {None})
        nu {float} -- post-selection half-window (default: {0.0})
        spacing {number} -- comb spacing (default: {√π})
        label {string} -- record label (default: {None})
        gain {float} -- overrides the feedback gain on `gain_mode`
                        (default: {None})
        gain_mode {hashable} -- mode whose feedback `gain` replaces
                                (default: {None})
        ideal {bool} -- measure the mode's Z/X on the ideal layer and remove
                        it; fusion handles the ideal layer itself
                        (default: {True})

    Returns:
        {tuple} -- (new state, MeasurementRecord); a rejected outcome
                   returns the input state unchanged
    """
    exact_mode = state.exact
    if spacing is None:
        spacing = sqrt_pi(exact_mode)
    a, b, sign = measured_index(state, mode, quadrature)
    if outcome is None:
        outcome = sample_outcome(state, mode, quadrature, make_rng(rng),
                                 spacing)
    y = _convert(outcome, exact_mode) if exact_mode else float(outcome)
    index = len(state.records)
    if in_exclusion_band(y, spacing, nu):
        record = MeasurementRecord(
            index, mode, quadrature, y, spacing, False, label, nu,
        )
        return state, record

    n = state.n_modes
    p_c, z = centered_mod(y, spacing)
    n0 = floor(abs(y) / spacing)
    direction = 1 if y >= 0 else -1
    cells = (direction * n0, direction * (n0 + 1))
    cells = tuple(sorted(cells, key=lambda k: k != z))

    cov = state.cov
    gain_vector = gaussian.gain_vector(cov, a)
    moments = GaussianMoments(state.nominal, cov, validate=False)
    conjugate = float(gaussian.conditional_variance(moments, b))
    measured = float(cov[a, a])
    conditioned = gaussian.symmetrize(cov - np.outer(gain_vector, cov[a, :]))
    keep = [i for i in range(2 * n) if i not in (a, b)]
    conditioned_float = gaussian.as_float(conditioned)
    regression = gaussian.regression(conditioned_float, b, keep)
    gain_float = gaussian.as_float(gain_vector)

    # feedback, in the coordinates that survive the measurement
    feedback = -gain_vector * p_c
    if gain is not None:
        target = state.index(gain_mode if gain_mode is not None else mode)
        target = target if quadrature == 'q' else n + target
        feedback[target] = -sign * _convert(gain, exact_mode) * p_c
    feedback = feedback[keep]

    sigma2 = state.sigma2
    spacing_float = float(spacing)
    y_float = float(y)
    normalizer = comb_normalizer(conjugate, sigma2, spacing_float)
    residue_variance = measured * sigma2 / 2
    branches = []
    for parent in state.branches:
        mean_float = gaussian.as_float(parent.mean)
        for k in cells:
            tau = y - k * spacing
            tau_float = float(tau)
            mean = parent.mean + gain_vector * (tau - parent.mean[a])
            mean_cond = mean_float + gain_float * (tau_float - mean_float[a])
            prob_n = comb_weights([k], conjugate, sigma2,
                                  spacing_float)[0] / normalizer
            prob_q = math.exp(
                -(tau_float - mean_float[a]) ** 2 / (2 * residue_variance)
            ) / math.sqrt(2 * math.pi * residue_variance)
            kappa = parent.phase[b] + sign * (y_float + k * spacing_float) / 2
            phase_factor = np.exp(1j * (
                kappa * (mean_cond[b] - regression @ mean_cond[keep]) +
                parent.phase[a] * tau_float
            ))
            phase = parent.phase[keep] + kappa * regression
            branches.append(Branch(
                parent.amplitude * math.sqrt(prob_n * prob_q) * phase_factor,
                mean[keep],
                phase,
                parent.tags + (k - z,),
                parent.flip_x,
                parent.flip_z,
            ))

    nominal = state.nominal + gain_vector * (p_c - state.nominal[a])
    responses = [r - gain_vector * r[a] for r in state.responses]
    couplings = {
        j: float(r[a]) for j, r in enumerate(state.responses)
        if float(r[a]) != 0
    }
    responses.append(-gain_vector * spacing)
    record = MeasurementRecord(
        index, mode, quadrature, y, spacing, True, label, nu, z, p_c, cells,
        measured, conjugate, float(state.nominal[a]), couplings,
    )
    new = state._replace(
        modes=tuple(v for v in state.modes if v != mode),
        cov=conditioned[np.ix_(keep, keep)],
        branches=branches,
        nominal=nominal[keep],
        responses=[r[keep] for r in responses],
        records=state.records + (record,),
    )
    new = _displace(new, feedback)
    if ideal:
        letter = 'Z' if quadrature == 'q' else 'X'
        pauli = single_qubit_pauli(new.tableau, mode, letter)
        new = project_ideal(new, [pauli], [mode], [z])
    return prune(new), record


def project_ideal(state, paulis, removed, nominal_cells):
    """Measure commuting Paulis on the ideal layer and remove qubits

    The shared tableau is projected onto the outcomes of the nominal comb
    cells; each branch whose comb index differs in parity (or whose flips
    anticommute with a measured Pauli) picks up the matching byproduct as
    a flip. The last len(paulis) tags of every branch belong to these
    measurements.
    """
    outcomes = [int(z) % 2 for z in nominal_cells]
    projected, byproducts = state.tableau.project(paulis, outcomes)
    remaining = projected.remove(removed)
    keep = [projected.index(q) for q in remaining.qubits]
    count = len(paulis)
    branches = []
    for branch in state.branches:
        flips = (branch.flip_x.copy(), branch.flip_z.copy())
        tags = branch.tags[-count:]
        toggles = [
            (tag + anticommutes(flips, pauli)) % 2
            for tag, pauli in zip(tags, paulis)
        ]
        flip_x, flip_z = flips
        for toggle, (dx, dz) in zip(toggles, byproducts):
            if toggle:
                flip_x = flip_x ^ dx
                flip_z = flip_z ^ dz
        branches.append(branch.copy(flip_x=flip_x[keep], flip_z=flip_z[keep]))
    return state._replace(tableau=remaining, branches=branches)


def canonical_flips(state, branch):
    """Branch flips as a Z-only pattern on the ideal graph

    On a graph state X_v acts as Z on the neighbours of v, so every flip
    pattern has a Z-only form. Needs a graph form without local Cliffords.
    """
    form = state.graph_form()
    if not form.is_plain:
        raise ContractViolation(
            'ideal layer is only a graph state up to local Cliffords'
        )
    adjacency = form.topology.adjacency
    pattern = branch.flip_z.copy()
    for v in np.flatnonzero(branch.flip_x):
        pattern ^= adjacency[v]
    return {
        q: 'Z' if bit else 'I' for q, bit in zip(state.qubits, pattern)
    }


def absorbed_means(state):
    """Branch means with the Pauli flips folded in as √π shifts

    X̄ flips add √π to the q mean and Z̄ flips add √π to the p mean.
    """
    n = state.n_modes
    root = sqrt_pi(state.exact)
    out = []
    for branch in state.branches:
        mean = branch.mean.copy()
        for q, fx, fz in zip(state.qubits, branch.flip_x, branch.flip_z):
            if q not in state.modes:
                continue
            i = state.index(q)
            if fx:
                mean[i] = mean[i] + root
            if fz:
                mean[n + i] = mean[n + i] + root
        out.append(mean)
    return out


def branch_table(state):
    """One row per branch: tags, weight, amplitude and float means"""
    return [
        {
            'tags': list(b.tags),
            'weight': b.weight,
            'amplitude': b.amplitude,
            'mean': [float(v) for v in b.mean],
        }
        for b in state.branches
    ]


def _number_to_json(value):
    if isinstance(value, sympy.Basic):
        value = sympy.nsimplify(value)
        if value.is_Integer:
            return int(value)
        return str(value)
    return float(value)


def _number_from_json(value, exact_mode):
    if exact_mode:
        return gaussian.exact(value)
    return float(value)


def _mode_to_json(mode):
    return mode if isinstance(mode, (str, numbers.Integral)) else str(mode)


def to_json(state):
    """JSON-ready checkpoint of a state

    Exact entries are strings such as "5/3" or "sqrt(pi)/3"; float
    entries are plain numbers.
    """
    def vector(values):
        return [_number_to_json(v) for v in values]

    return {
        'modes': [_mode_to_json(m) for m in state.modes],
        'qubits': [_mode_to_json(q) for q in state.qubits],
        'sigma2': state.sigma2,
        'exact': state.exact,
        'cov': [vector(row) for row in state.cov],
        'nominal': vector(state.nominal),
        'responses': [vector(r) for r in state.responses],
        'tableau': {
            'x': state.tableau.xs.tolist(),
            'z': state.tableau.zs.tolist(),
            'signs': state.tableau.signs.tolist(),
        },
        'branches': [
            {
                'amplitude': [b.amplitude.real, b.amplitude.imag],
                'mean': vector(b.mean),
                'phase': b.phase.tolist(),
                'tags': list(b.tags),
                'flip_x': b.flip_x.tolist(),
                'flip_z': b.flip_z.tolist(),
            }
            for b in state.branches
        ],
        'records': [r.to_dict() for r in state.records],
        'dropped_weight': state.dropped_weight,
        'labels': [[_mode_to_json(k), v] for k, v in state.labels.items()],
    }


def from_json(data):
    """Rebuild a state from `to_json` output"""
    exact_mode = bool(data.get('exact', False))

    def vector(values):
        out = gaussian.zeros(len(values), exact_mode)
        for i, value in enumerate(values):
            out[i] = _number_from_json(value, exact_mode)
        return out

    size = len(data['cov'])
    cov = gaussian.zeros((size, size), exact_mode)
    for i, row in enumerate(data['cov']):
        cov[i, :] = vector(row)
    tableau = StabilizerTableau(
        data['tableau']['x'],
        data['tableau']['z'],
        data['tableau']['signs'],
        data['qubits'],
    )
    branches = [
        Branch(
            complex(*b['amplitude']), vector(b['mean']), b['phase'],
            b['tags'], b['flip_x'], b['flip_z'],
        )
        for b in data['branches']
    ]
    return GkpGraphState(
        data['modes'],
        data['sigma2'],
        cov,
        branches,
        tableau,
        vector(data['nominal']),
        [vector(r) for r in data.get('responses', [])],
        [MeasurementRecord.from_dict(r) for r in data.get('records', [])],
        data.get('dropped_weight', 0.0),
        dict((k, v) for k, v in data.get('labels', [])),
    )
