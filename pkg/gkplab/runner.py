#!/usr/bin/env python
"""Run protocol scripts, parameter sweeps and single-qubit distributions

A protocol script is a JSON object:

    {
        "name": "tree4",
        "sigma2": 0.1,
        "seed": 7,
        "exact": true,
        "variant": "A",
        "nu": 0.0,
        "steps": [
            {"op": "new_qubit", "mode": 0, "label": "X+", "env": [1, 1]},
            {"op": "cz", "modes": [0, 1]},
            {"op": "steane", "target": 0, "quadrature": "p",
             "ancilla": [1, 1], "gain": null, "outcome": 0},
            {"op": "fuse", "control": 1, "target": 3, "outcomes": [0, 0]},
            {"op": "measure", "mode": 2, "quadrature": "q"},
            {"op": "emit", "what": "covariance"}
        ],
        "params": {"l_a": 1, "l_b": 1, "m_a": 1, "m_b": 4},
        "sweep": {"param": "sigma2", "values": [0.05, 0.1],
                  "metric": "avg_error"}
    }

Steps without an outcome are sampled from the script seed. Command line
flags override the script's top-level values.
"""
from concurrent.futures import ThreadPoolExecutor
from gkplab import gkp, graph, oracle, protocols
from gkplab.errors import ContractViolation, GkpError, PostSelectionRejected
from gkplab.errors import ScriptError
from gkplab.tool import BaseCommand, CommandError, PostSelectionExhausted
from gkplab.tool import Tool, csv_text

import json
import numbers
import numpy as np
import os
import sys


SUBCOMMANDS = ('run', 'sweep', 'emit-dist', 'oracle-check')
STEP_OPS = ('new_qubit', 'cz', 'steane', 'fuse', 'measure', 'emit')
EMIT_KINDS = ('covariance', 'branches', 'records', 'topology', 'state')
SWEEP_PARAMS = ('sigma2', 'm_b', 'nu')
METRICS = ('avg_error', 'p_succ', 'tradeoff')
DISTRIBUTION_KINDS = ('outcome', 'wavefunction')
SCRIPTS_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                            'scripts')
DEFAULT_SIGMA2 = 0.1


def thread_limit():
    """Worker count for sweeps: $GKPLAB_THREADS or the CPU count"""
    value = os.environ.get('GKPLAB_THREADS')
    if not value:
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError:
        raise ContractViolation(
            'GKPLAB_THREADS must be an integer, got {!r}'.format(value)
        )
    if threads < 1:
        raise ContractViolation('GKPLAB_THREADS must be at least 1')
    return threads


def resolve_script_path(path):
    """A script path, or the name of a bundled script such as 'tree4'"""
    if path is None:
        raise ScriptError('no protocol script given (use --script)')
    if os.path.isfile(path):
        return path
    name = path if path.endswith('.json') else path + '.json'
    bundled = os.path.join(SCRIPTS_PATH, name)
    if os.path.isfile(bundled):
        return bundled
    raise ScriptError('protocol script not found: {}'.format(path))


def load_script(path):
    """Read and validate a protocol script

    Arguments:
        path {string} -- script path or bundled script name

    Returns:
        {dict} -- the validated script

    Raises:
        ScriptError -- unreadable file, bad JSON or an invalid step
    """
    path = resolve_script_path(path)
    try:
        with open(path) as script_file:
            script = json.load(script_file)
    except OSError as e:
        raise ScriptError('cannot read {}: {}'.format(path, e))
    except ValueError as e:
        raise ScriptError('{} is not valid JSON: {}'.format(path, e))
    validate_script(script)
    return script


def _mode(step, key, index):
    if key not in step:
        raise ScriptError('missing "{}"'.format(key), step=index)
    mode = step[key]
    if not isinstance(mode, (str, numbers.Integral)) or \
            isinstance(mode, bool):
        raise ScriptError(
            '"{}" must be an integer or a string, got {!r}'.format(key, mode),
            step=index,
        )
    return mode


def _existing(modes, mode, index):
    if mode not in modes:
        raise ScriptError('unknown mode {!r}'.format(mode), step=index)
    return mode


def _check_outcome(value, index):
    if value is None:
        return
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ScriptError(
            'outcome must be a number or null, got {!r}'.format(value),
            step=index,
        )


def validate_script(script):
    """Check step references and parameters without running anything

    Mode references are resolved by replaying which modes each step
    creates and consumes.

    Raises:
        ScriptError -- the first problem, with its step index
    """
    if not isinstance(script, dict):
        raise ScriptError('a protocol script is a JSON object')
    steps = script.get('steps', [])
    if not isinstance(steps, list):
        raise ScriptError('"steps" must be a list')
    modes = set()
    for index, step in enumerate(steps):
        if not isinstance(step, dict) or step.get('op') not in STEP_OPS:
            raise ScriptError(
                'unknown step {!r}; use one of {}'.format(
                    step.get('op') if isinstance(step, dict) else step,
                    ', '.join(STEP_OPS),
                ),
                step=index,
            )
        op = step['op']
        try:
            if op == 'new_qubit':
                mode = _mode(step, 'mode', index)
                if mode in modes:
                    raise ScriptError(
                        'mode {!r} already exists'.format(mode), step=index
                    )
                gkp.check_label(step.get('label', 'X+'))
                graph.VertexEnvelope.coerce(step.get('env', [1, 1]))
                modes.add(mode)
            elif op == 'cz':
                pair = step.get('modes')
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ScriptError('"modes" must list two modes',
                                      step=index)
                for mode in pair:
                    _existing(modes, mode, index)
                if pair[0] == pair[1]:
                    raise ScriptError('cz needs two distinct modes',
                                      step=index)
            elif op == 'steane':
                _existing(modes, _mode(step, 'target', index), index)
                protocols.SteaneConfig(
                    step['target'],
                    step.get('quadrature', 'p'),
                    step.get('ancilla', [1, 1]),
                    nu=step.get('nu') or 0.0,
                )
                _check_outcome(step.get('outcome'), index)
            elif op == 'fuse':
                control = _existing(modes, _mode(step, 'control', index),
                                    index)
                target = _existing(modes, _mode(step, 'target', index),
                                   index)
                protocols.FusionConfig(
                    control, target, step.get('variant') or 'A',
                    nu=step.get('nu') or 0.0,
                )
                outcomes = step.get('outcomes')
                if outcomes is not None:
                    if not isinstance(outcomes, list) or len(outcomes) != 2:
                        raise ScriptError('"outcomes" must list two values',
                                          step=index)
                    for value in outcomes:
                        _check_outcome(value, index)
                modes -= {control, target}
            elif op == 'measure':
                mode = _existing(modes, _mode(step, 'mode', index), index)
                gkp.check_quadrature(step.get('quadrature', 'q'))
                _check_outcome(step.get('outcome'), index)
                modes.remove(mode)
            elif step.get('what', 'state') not in EMIT_KINDS:
                raise ScriptError(
                    'emit "what" must be one of {}'.format(
                        ', '.join(EMIT_KINDS)
                    ),
                    step=index,
                )
        except ScriptError:
            raise
        except (GkpError, ValueError, TypeError) as e:
            raise ScriptError(str(e), step=index)
    sweep = script.get('sweep')
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise ScriptError('"sweep" must be an object')
        if sweep.get('param') not in SWEEP_PARAMS:
            raise ScriptError('sweep "param" must be one of {}'.format(
                ', '.join(SWEEP_PARAMS)
            ))
        if sweep.get('metric', 'avg_error') not in METRICS:
            raise ScriptError('sweep "metric" must be one of {}'.format(
                ', '.join(METRICS)
            ))
        values = sweep.get('values')
        if not isinstance(values, list) or not values:
            raise ScriptError('sweep "values" must be a non-empty list')
    return script


def describe_step(step):
    """One line summary of a script step"""
    op = step['op']
    if op == 'new_qubit':
        return 'new qubit {!r} in {} with envelope {}'.format(
            step['mode'], step.get('label', 'X+'), step.get('env', [1, 1])
        )
    if op == 'cz':
        return 'C_Z {!r} - {!r}'.format(*step['modes'])
    if op == 'steane':
        return '{}-Steane on {!r}'.format(step.get('quadrature', 'p'),
                                          step['target'])
    if op == 'fuse':
        return 'fusion of {!r} and {!r}'.format(step['control'],
                                                step['target'])
    if op == 'measure':
        return '{}-homodyne of {!r}'.format(step.get('quadrature', 'q'),
                                            step['mode'])
    return 'emit {}'.format(step.get('what', 'state'))


def _outcome(value, exact_mode):
    if value is None or not exact_mode:
        return value
    return graph._convert(value, exact_mode)


def _matrix(values):
    return [[graph._number_to_json(v) for v in row] for row in values]


def _emit(state, what):
    if what == 'covariance':
        return _matrix(state.cov)
    if what == 'branches':
        return [_branch_dict(b) for b in state.branches]
    if what == 'records':
        return [r.to_dict() for r in state.records]
    if what == 'topology':
        return _topology_dict(state)
    return graph.to_json(state)


def _topology_dict(state):
    topology = state.topology
    return {
        'vertices': [graph._mode_to_json(v) for v in topology.vertices],
        'edges': [[graph._mode_to_json(v) for v in edge]
                  for edge in topology.edges()],
    }


def _branch_dict(branch):
    return {
        'tags': [int(t) for t in branch.tags],
        'weight': float(branch.weight),
        'amplitude': [float(branch.amplitude.real),
                      float(branch.amplitude.imag)],
        'mean': [graph._number_to_json(v) for v in branch.mean],
        'flip_x': [int(f) for f in branch.flip_x],
        'flip_z': [int(f) for f in branch.flip_z],
    }


class RunReport(object):
    """Outcome of one protocol script run

    Arguments:
        name {string} -- script name
        state {GkpGraphState} -- final state
        emits {list} -- (step index, kind, payload) snapshots

    Keyword Arguments:
        attempts {integer} -- attempts used, counting rejections
                              (default: {1})
        seed {integer} -- seed of the run (default: {None})
        variant {string} -- fusion variant override (default: {None})
    """
    def __init__(self, name, state, emits, attempts=1, seed=None,
                 variant=None):
        self.name = name
        self.state = state
        self.emits = list(emits)
        self.attempts = attempts
        self.seed = seed
        self.variant = variant
        self.budget = protocols.protocol_error_budget(state.records,
                                                      state.sigma2)

    @property
    def records(self):
        return self.state.records

    def branch_rows(self):
        """Header and rows for branches.csv"""
        state = self.state
        n = state.n_modes
        header = ['branch']
        header += ['tag_{}'.format(r.label or r.index) for r in state.records]
        header += ['weight', 'amplitude_re', 'amplitude_im']
        header += ['mean_q_{}'.format(m) for m in state.modes]
        header += ['mean_p_{}'.format(m) for m in state.modes]
        header += ['flip_x_{}'.format(q) for q in state.qubits]
        header += ['flip_z_{}'.format(q) for q in state.qubits]
        rows = []
        for index, branch in enumerate(state.branches):
            row = [index] + [int(t) for t in branch.tags]
            row += [float(branch.weight), float(branch.amplitude.real),
                    float(branch.amplitude.imag)]
            row += [float(v) for v in branch.mean[:2 * n]]
            row += [int(f) for f in branch.flip_x]
            row += [int(f) for f in branch.flip_z]
            rows.append(row)
        return header, rows

    def to_dict(self):
        state = self.state
        return {
            'script': self.name,
            'seed': self.seed,
            'variant': self.variant,
            'sigma2': state.sigma2,
            'squeezing_db': gkp.squeezing_db(state.sigma2),
            'exact': state.exact,
            'attempts': self.attempts,
            'modes': [graph._mode_to_json(m) for m in state.modes],
            'topology': _topology_dict(state),
            'covariance': _matrix(state.cov),
            'covariance_float': [[float(v) for v in row]
                                 for row in state.cov],
            'branches': [_branch_dict(b) for b in state.branches],
            'total_weight': float(state.total_weight()),
            'dropped_weight': float(state.dropped_weight),
            'records': [r.to_dict() for r in state.records],
            'error_probability': self.budget.error_probability,
            'success_probability': self.budget.success_probability,
            'emits': [
                {'step': index, 'what': what, 'data': data}
                for index, what, data in self.emits
            ],
        }


def execute_script(script, sigma2=None, variant=None, nu=None, rng=None,
                   exact=None, log=None):
    """Execute the steps of a validated script once

    Keyword Arguments:
        sigma2 {float} -- overrides the script σ² (default: {None})
        variant {string} -- overrides every fusion variant (default: {None})
        nu {float} -- overrides every post-selection window (default: {None})
        rng {Generator|int} -- generator for sampled outcomes
                               (default: {the script seed})
        exact {bool} -- overrides exact arithmetic (default: {None})
        log {callable} -- log(msg, verbosity) for step progress
                          (default: {None})

    Returns:
        {tuple} -- (final state, emitted snapshots)

    Raises:
        PostSelectionRejected -- a window rejected an outcome
        ScriptError -- a step failed, with its index
    """
    log = log or (lambda msg, verbosity: None)
    sigma2 = sigma2 if sigma2 is not None else script.get('sigma2',
                                                          DEFAULT_SIGMA2)
    exact_mode = exact if exact is not None else script.get('exact', False)
    rng = gkp.make_rng(rng if rng is not None else script.get('seed'))
    default_nu = nu if nu is not None else script.get('nu', 0.0)
    default_variant = script.get('variant', 'A')
    state = graph.empty_state(sigma2, exact=exact_mode)
    emits = []
    for index, step in enumerate(script.get('steps', [])):
        op = step['op']
        step_nu = nu if nu is not None else step.get('nu', default_nu)
        log('    Step {}: {}'.format(index, describe_step(step)), 2)
        try:
            if op == 'new_qubit':
                state = graph.add_mode(
                    state, step['mode'], step.get('label', 'X+'),
                    graph.VertexEnvelope.coerce(step.get('env', [1, 1])),
                )
            elif op == 'cz':
                state = graph.apply_cz(state, *step['modes'])
            elif op == 'steane':
                cfg = protocols.SteaneConfig(
                    step['target'],
                    step.get('quadrature', 'p'),
                    step.get('ancilla', [1, 1]),
                    gain=step.get('gain'),
                    nu=step_nu,
                    label=step.get('label'),
                )
                state, record = protocols.steane_correct_vertex(
                    state, cfg, _outcome(step.get('outcome'), exact_mode),
                    rng,
                )
                if not record.accepted:
                    raise PostSelectionRejected(
                        'step {}: outcome {:.6g} rejected'.format(
                            index, float(record.outcome)
                        )
                    )
            elif op == 'fuse':
                cfg = protocols.FusionConfig(
                    step['control'],
                    step['target'],
                    variant or step.get('variant') or default_variant,
                    nu=step_nu,
                    label=step.get('label'),
                )
                outcomes = step.get('outcomes') or [None, None]
                state, records = protocols.fuse(
                    state, cfg,
                    [_outcome(value, exact_mode) for value in outcomes],
                    rng,
                )
                if not records[-1].accepted:
                    raise PostSelectionRejected(
                        'step {}: outcome {:.6g} rejected'.format(
                            index, float(records[-1].outcome)
                        )
                    )
            elif op == 'measure':
                state, record = graph.measure_mode(
                    state, step['mode'], step.get('quadrature', 'q'),
                    _outcome(step.get('outcome'), exact_mode), rng,
                    nu=step_nu, label=step.get('label'),
                )
                if not record.accepted:
                    raise PostSelectionRejected(
                        'step {}: outcome {:.6g} rejected'.format(
                            index, float(record.outcome)
                        )
                    )
            else:
                what = step.get('what', 'state')
                emits.append((index, what, _emit(state, what)))
        except (PostSelectionRejected, ScriptError):
            raise
        except GkpError as e:
            raise ScriptError(str(e), step=index)
        for number, branch in enumerate(state.branches):
            log('        branch {} tags {} weight {:.6g}'.format(
                number, [int(t) for t in branch.tags], float(branch.weight)
            ), 3)
    return state, emits


def run_protocol_script(path, retries=0, seed=None, log=None, **overrides):
    """Load a script and run it, re-sampling rejected attempts

    Arguments:
        path {string} -- script path or bundled script name

    Keyword Arguments:
        retries {integer} -- extra attempts after a rejection (default: {0})
        seed {integer} -- overrides the script seed (default: {None})
        log {callable} -- log(msg, verbosity) (default: {None})
        **overrides {dict} -- sigma2, variant, nu, exact

    Returns:
        {RunReport} -- the accepted run

    Raises:
        PostSelectionRejected -- every attempt was rejected
    """
    script = load_script(path)
    return run_script(script, retries, seed, log, **overrides)


def run_script(script, retries=0, seed=None, log=None, **overrides):
    """`run_protocol_script` on an already loaded script"""
    log = log or (lambda msg, verbosity: None)
    seed = seed if seed is not None else script.get('seed')
    rng = gkp.make_rng(seed)
    for attempt in range(1, retries + 2):
        try:
            state, emits = execute_script(script, rng=rng, log=log,
                                          **overrides)
        except PostSelectionRejected as e:
            log('    Attempt {} rejected: {}'.format(attempt, e), 1)
            continue
        return RunReport(script.get('name', ''), state, emits, attempt, seed,
                         overrides.get('variant'))
    raise PostSelectionRejected(
        'post-selection rejected all {} attempt(s)'.format(retries + 1)
    )


def _metric_columns(metric, suffix):
    columns = {
        'avg_error': ['avg_error'],
        'p_succ': ['p_succ'],
        'tradeoff': ['p_succ', 'avg_error'],
    }[metric]
    return [c + suffix for c in columns]


def _metric_values(metric, error, success):
    return {
        'avg_error': [error],
        'p_succ': [success],
        'tradeoff': [success, error],
    }[metric]


def sweep_emit(script, parameter, values, metric='avg_error', sigma2=None,
               nu=None, variant=None, seed=None, workers=None):
    """Evaluate a metric over a parameter sweep

    σ² and ν sweeps run the script (in floating point) and evaluate the
    error budget of its records, once per fusion variant when the script
    fuses. An m_B sweep evaluates the single-round Steane formulas for
    the script's "params" block.

    Arguments:
        script {dict} -- validated script
        parameter {string} -- 'sigma2', 'm_b' or 'nu'
        values {list} -- parameter values

    Keyword Arguments:
        metric {string} -- 'avg_error', 'p_succ' or 'tradeoff'
                           (default: {'avg_error'})
        sigma2 {float} -- σ² when it is not swept (default: {script σ²})
        nu {float} -- ν when it is not swept (default: {script ν})
        variant {string} -- restrict to one fusion variant (default: {None})
        seed {integer} -- seed for sampled outcomes (default: {script seed})
        workers {integer} -- thread pool size (default: {thread_limit()})

    Returns:
        {tuple} -- (header, rows) with one row per value, in order

    Raises:
        ContractViolation -- unknown parameter or metric
    """
    if parameter not in SWEEP_PARAMS:
        raise ContractViolation('sweep parameter must be one of {}'.format(
            ', '.join(SWEEP_PARAMS)
        ))
    if metric not in METRICS:
        raise ContractViolation('metric must be one of {}'.format(
            ', '.join(METRICS)
        ))
    sigma2 = sigma2 if sigma2 is not None else script.get('sigma2',
                                                          DEFAULT_SIGMA2)
    nu = nu if nu is not None else script.get('nu', 0.0)
    seed = seed if seed is not None else script.get('seed')
    values = [float(v) for v in values]

    if parameter == 'm_b':
        params = protocols.SteaneParams(
            sigma2=sigma2, **script.get('params', {})
        )
        header = [parameter] + _metric_columns(metric, '')

        def point(value):
            swept = params.replace(m_b=value)
            success = protocols.postselect_success_probability(swept, nu)
            error = protocols.average_error_probability(swept, nu)
            return [value] + _metric_values(metric, error, success)
    else:
        fuses = any(s['op'] == 'fuse' for s in script.get('steps', []))
        if variant is not None:
            variants = [variant]
        elif fuses:
            variants = list(protocols.FUSION_VARIANTS)
        else:
            variants = [None]
        header = [parameter]
        for name in variants:
            header += _metric_columns(metric, '_' + name if name else '')

        def point(value):
            run_sigma2 = value if parameter == 'sigma2' else sigma2
            budget_nu = value if parameter == 'nu' else None
            row = [value]
            for name in variants:
                report = run_script(script, seed=seed, sigma2=run_sigma2,
                                    variant=name, exact=False)
                budget = protocols.protocol_error_budget(
                    report.records, run_sigma2, budget_nu
                )
                row += _metric_values(metric, budget.error_probability,
                                      budget.success_probability)
            return row

    with ThreadPoolExecutor(max_workers=workers or thread_limit()) as pool:
        rows = list(pool.map(point, values))
    return header, rows


def emit_distribution(label='X+', quadrature='q', sigma2=DEFAULT_SIGMA2,
                      envelope=None, kind='outcome', extent=10.0,
                      points=4001, construction='envelope'):
    """Outcome density or |ψ|² of one finite-energy GKP qubit on a grid

    Keyword Arguments:
        label {string} -- logical label (default: {'X+'})
        quadrature {string} -- 'q' or 'p' (default: {'q'})
        sigma2 {float} -- σ² (default: {0.1})
        envelope {ErrorEnvelope1} -- error wavefunction
                                     (default: {δ² = κ² = 1})
        kind {string} -- 'outcome' for the homodyne outcome density,
                         'wavefunction' for |ψ|² (default: {'outcome'})
        extent {float} -- grid half-width in units of √π (default: {10.0})
        points {integer} -- number of grid points (default: {4001})
        construction {string} -- wavefunction construction
                                 (default: {'envelope'})

    Returns:
        {tuple} -- (header, rows) with columns x and pdf
    """
    if kind not in DISTRIBUTION_KINDS:
        raise ContractViolation('distribution kind must be one of {}'.format(
            ', '.join(DISTRIBUTION_KINDS)
        ))
    if points < 2 or not extent > 0:
        raise ContractViolation('the grid needs a positive extent and at '
                                'least two points')
    state = gkp.make_finite_gkp(
        label, envelope or gkp.ErrorEnvelope1(1.0, 1.0), sigma2
    )
    half_width = extent * gkp.SQRT_PI
    grid = np.linspace(-half_width, half_width, points)
    if kind == 'outcome':
        pdf = gkp.homodyne_outcome_pdf(state, quadrature, grid)
    else:
        psi = gkp.quadrature_wavefunction(state, quadrature, grid,
                                          construction)
        pdf = np.abs(psi) ** 2
    return ['x', 'pdf'], [[x, p] for x, p in zip(grid, pdf)]


class Runner(Tool):
    def __init__(self, subcommand, **options):
        """Protocol runner tool

        Arguments:
            subcommand {string} -- run, sweep, emit-dist or oracle-check
            **options {dict} -- command line options
        """
        if subcommand not in SUBCOMMANDS:
            raise ContractViolation('unknown subcommand {!r}'.format(
                subcommand
            ))
        self.subcommand = subcommand
        self.dryrun = options.get('dryrun', False)
        self.verbosity = options.get('verbosity', 1)
        self.script_path = options.get('script', None)
        self.seed = options.get('seed', None)
        self.sigma2 = options.get('sigma2', None)
        self.variant = options.get('variant', None)
        self.nu = options.get('nu', None)
        self.out = options.get('out', None) or '.'
        self.format = options.get('format', None) or 'csv'
        self.param = options.get('param', None)
        self.values = options.get('values', None)
        self.metric = options.get('metric', None)
        self.retries = options.get('retries', None) or 0
        self.exact = options.get('exact', None)
        self.label = options.get('label', None) or 'X+'
        self.quadrature = options.get('quadrature', None) or 'q'
        self.kind = options.get('kind', None) or 'outcome'
        self.envelope = options.get('envelope', None) or [1.0, 1.0]
        self.means = options.get('means', None) or [0.0, 0.0]
        self.extent = options.get('extent', None) or 10.0
        self.points = options.get('points', None) or 4001
        if self.retries < 0:
            raise ContractViolation('--retries must not be negative')

    @property
    def prefix(self):
        return 'DryRun: ' if self.dryrun else ''

    def log(self, msg, verbosity=1):
        self.write('{}{}'.format(self.prefix, msg), verbosity=verbosity)

    def execute(self):
        """Dispatch to the subcommand"""
        handler = {
            'run': self.run,
            'sweep': self.sweep,
            'emit-dist': self.emit_dist,
            'oracle-check': self.oracle_check,
        }[self.subcommand]
        return handler()

    def output_path(self, filename):
        return os.path.join(self.out, filename)

    def save_table(self, stem, header, rows):
        """Write rows as CSV or JSON according to --format"""
        if self.format == 'json':
            content = json.dumps(
                [dict(zip(header, _plain(row))) for row in rows], indent=2
            ) + '\n'
            return self.save(self.output_path(stem + '.json'), content)
        return self.save(self.output_path(stem + '.csv'),
                         csv_text(header, rows))

    def overrides(self):
        return {
            'sigma2': self.sigma2,
            'variant': self.variant,
            'nu': self.nu,
            'exact': self.exact,
        }

    def run(self):
        """Run a protocol script and write report.json, branches, records"""
        script = load_script(self.script_path)
        self.log('Run {} (σ² {})'.format(
            script.get('name', self.script_path),
            self.sigma2 if self.sigma2 is not None else
            script.get('sigma2', DEFAULT_SIGMA2),
        ))
        if self.dryrun:
            for index, step in enumerate(script.get('steps', [])):
                self.log('    Step {}: {}'.format(index, describe_step(step)))
            return None
        report = run_script(script, self.retries, self.seed, self.log,
                            **self.overrides())
        self.save(self.output_path('report.json'),
                  json.dumps(report.to_dict(), indent=2) + '\n')
        header, rows = report.branch_rows()
        self.save_table('branches', header, rows)
        self.save(self.output_path('records.jsonl'), ''.join(
            json.dumps(r.to_dict()) + '\n' for r in report.records
        ))
        self.log('    {} modes, {} branches, error {:.6g}, success '
                 '{:.6g}'.format(
                     report.state.n_modes, len(report.state.branches),
                     report.budget.error_probability,
                     report.budget.success_probability,
                 ))
        return report

    def sweep(self):
        """Evaluate the sweep and write sweep.csv"""
        script = load_script(self.script_path)
        block = script.get('sweep') or {}
        param = self.param or block.get('param')
        values = self.values or block.get('values')
        metric = self.metric or block.get('metric', 'avg_error')
        if param is None or not values:
            raise ContractViolation(
                'a sweep needs --param and --values or a "sweep" block'
            )
        self.log('Sweep {} over {} values of {}'.format(
            metric, len(values), param
        ))
        if self.dryrun:
            return None
        header, rows = sweep_emit(
            script, param, values, metric, sigma2=self.sigma2, nu=self.nu,
            variant=self.variant, seed=self.seed,
        )
        for row in rows:
            self.log('    {} = {:.6g}: {}'.format(
                param, row[0], ', '.join('{:.6g}'.format(v) for v in row[1:])
            ), verbosity=2)
        self.save_table('sweep', header, rows)
        return rows

    def emit_dist(self):
        """Write distribution.csv for one GKP qubit"""
        sigma2 = self.sigma2 if self.sigma2 is not None else DEFAULT_SIGMA2
        envelope = gkp.ErrorEnvelope1(self.envelope[0], self.envelope[1],
                                      self.means[0], self.means[1])
        self.log('Distribution of {} ({}, {}) at σ² {}'.format(
            self.label, self.quadrature, self.kind, sigma2
        ))
        header, rows = emit_distribution(
            self.label, self.quadrature, sigma2, envelope, self.kind,
            self.extent, self.points,
        )
        self.save_table('distribution', header, rows)
        return rows

    def oracle_check(self):
        """Compare a Steane round with the grid oracle and write oracle.json"""
        sigma2 = self.sigma2 if self.sigma2 is not None else DEFAULT_SIGMA2
        self.log('Oracle check at σ² {}'.format(sigma2))
        if self.dryrun:
            return None
        results = oracle.oracle_check(sigma2)
        for result in results:
            self.log('    y = {:.6g}: fidelity {:.6g}, density error '
                     '{:.3g}'.format(result['outcome'], result['fidelity'],
                                     result['relative_error']), verbosity=2)
        summary = {
            'sigma2': sigma2,
            'min_fidelity': min(r['fidelity'] for r in results),
            'max_relative_error': max(r['relative_error'] for r in results),
            'max_model_error': max(r['model_error'] for r in results),
            'results': results,
        }
        self.save(self.output_path('oracle.json'),
                  json.dumps(summary, indent=2) + '\n')
        self.log('    minimum fidelity {:.6g}'.format(summary['min_fidelity']))
        return summary


def _plain(row):
    return [v if isinstance(v, (str, numbers.Integral)) else float(v)
            for v in row]


class Command(BaseCommand):
    help = 'Finite-energy GKP graph state protocol runner'

    def add_arguments(self, parser):
        """Define command arguments"""
        parser.add_argument(
            'subcommand',
            action='store',
            choices=SUBCOMMANDS,
            help='What to do: run a script, sweep a parameter, emit a '
                 'single-qubit distribution or check the grid oracle',
        )
        parser.add_argument(
            '--script',
            action='store',
            default='tree4',
            dest='script',
            help='Protocol script path or bundled script name',
        )
        parser.add_argument(
            '--seed',
            action='store',
            default=None,
            dest='seed',
            help='Seed for sampled outcomes (overrides the script)',
            type=int,
        )
        parser.add_argument(
            '--sigma2',
            action='store',
            default=None,
            dest='sigma2',
            help='Reference variance σ² (overrides the script)',
            type=float,
        )
        parser.add_argument(
            '--variant',
            action='store',
            choices=protocols.FUSION_VARIANTS,
            default=None,
            dest='variant',
            help='Fusion circuit variant (overrides the script)',
        )
        parser.add_argument(
            '--nu',
            action='store',
            default=None,
            dest='nu',
            help='Post-selection half-window ν (overrides the script)',
            type=float,
        )
        parser.add_argument(
            '--exact',
            action='store_true',
            default=None,
            dest='exact',
            help='Use exact rational arithmetic for the covariance',
        )
        parser.add_argument(
            '--out',
            action='store',
            default='.',
            dest='out',
            help='Directory for the output files',
        )
        parser.add_argument(
            '--format',
            action='store',
            choices=('csv', 'json'),
            default='csv',
            dest='format',
            help='Format of tabular output',
        )
        parser.add_argument(
            '--param',
            action='store',
            choices=SWEEP_PARAMS,
            default=None,
            dest='param',
            help='Swept parameter (overrides the script sweep block)',
        )
        parser.add_argument(
            '--values',
            action='store',
            default=None,
            dest='values',
            help='Swept values (more than one can be specified)',
            nargs='+',
            type=float,
        )
        parser.add_argument(
            '--metric',
            action='store',
            choices=METRICS,
            default=None,
            dest='metric',
            help='Sweep metric',
        )
        parser.add_argument(
            '--retries',
            action='store',
            default=0,
            dest='retries',
            help='Extra attempts when post-selection rejects a run',
            type=int,
        )
        parser.add_argument(
            '--label',
            action='store',
            choices=gkp.LABELS,
            default='X+',
            dest='label',
            help='Logical state for emit-dist',
        )
        parser.add_argument(
            '--quadrature',
            action='store',
            choices=gkp.QUADRATURES,
            default='q',
            dest='quadrature',
            help='Measured quadrature for emit-dist',
        )
        parser.add_argument(
            '--kind',
            action='store',
            choices=DISTRIBUTION_KINDS,
            default='outcome',
            dest='kind',
            help='emit-dist output: homodyne outcome density or |ψ|²',
        )
        parser.add_argument(
            '--envelope',
            action='store',
            default=[1.0, 1.0],
            dest='envelope',
            help='emit-dist envelope variances δ² κ² in units of σ²',
            nargs=2,
            type=float,
        )
        parser.add_argument(
            '--means',
            action='store',
            default=[0.0, 0.0],
            dest='means',
            help='emit-dist envelope means u′ v′',
            nargs=2,
            type=float,
        )
        parser.add_argument(
            '--extent',
            action='store',
            default=10.0,
            dest='extent',
            help='emit-dist grid half-width in units of √π',
            type=float,
        )
        parser.add_argument(
            '--points',
            action='store',
            default=4001,
            dest='points',
            help='emit-dist grid points',
            type=int,
        )

    def handle(self, **options):
        subcommand = options.pop('subcommand')
        try:
            runner = Runner(subcommand, **options)
            runner.execute()
        except PostSelectionRejected as e:
            raise PostSelectionExhausted(str(e))
        except (GkpError, ValueError, OSError) as e:
            raise CommandError(str(e))


if __name__ == '__main__':
    cmd = Command()
    cmd.run_from_argv(sys.argv)
