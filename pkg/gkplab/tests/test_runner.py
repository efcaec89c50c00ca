from gkplab import runner
from gkplab.errors import ContractViolation, PostSelectionRejected
from gkplab.errors import ScriptError
from gkplab.runner import Command, Runner
from gkplab.tool import PostSelectionExhausted
from scipy import integrate
from unittest import mock

import csv
import io
import json
import math
import os
import shutil
import unittest
import uuid


HALF_TOOTH = 0.5 * math.sqrt(math.pi)


class TestRunner(unittest.TestCase):

    def setUp(self):
        """Create a temporary output directory in the working directory"""
        while True:
            self.tmp_path = os.path.join('.', uuid.uuid4().hex[:8])
            if os.path.exists(self.tmp_path):
                continue
            os.makedirs(self.tmp_path)
            break

    def tearDown(self):
        shutil.rmtree(self.tmp_path, ignore_errors=True)

    def write_script(self, script, name='script.json'):
        path = os.path.join(self.tmp_path, name)
        with open(path, 'w') as script_file:
            json.dump(script, script_file)
        return path

    def rejecting_script(self):
        """One qubit whose Steane outcome sits on a cell boundary"""
        return {
            'name': 'reject',
            'sigma2': 0.1,
            'steps': [
                {'op': 'new_qubit', 'mode': 0, 'label': 'X+'},
                {'op': 'steane', 'target': 0, 'quadrature': 'p',
                 'nu': 0.2, 'outcome': HALF_TOOTH},
            ],
        }

    def runner(self, subcommand, **options):
        options.setdefault('out', self.tmp_path)
        options.setdefault('verbosity', 0)
        return Runner(subcommand, **options)

    def test_resolve_script_path(self):
        """Bundled scripts are found by name"""
        path = runner.resolve_script_path('tree4')
        self.assertTrue(path.endswith('tree4.json'), msg=path)
        self.assertEqual(runner.resolve_script_path(path), path)
        with self.assertRaises(ScriptError):
            runner.resolve_script_path('no-such-script')
        with self.assertRaises(ScriptError):
            runner.resolve_script_path(None)

    def test_load_script__bad_json(self):
        """Unparseable files are reported as script errors"""
        path = os.path.join(self.tmp_path, 'broken.json')
        with open(path, 'w') as script_file:
            script_file.write('{"steps": [')
        with self.assertRaises(ScriptError):
            runner.load_script(path)

    def test_validate_script__step_index(self):
        """The first invalid step is named in the error"""
        script = {
            'steps': [
                {'op': 'new_qubit', 'mode': 0},
                {'op': 'cz', 'modes': [0, 7]},
            ],
        }
        with self.assertRaises(ScriptError) as context:
            runner.validate_script(script)
        self.assertEqual(context.exception.step, 1)
        self.assertIn('step 1', str(context.exception))

    def test_validate_script__rejects(self):
        """Unknown ops, reused modes and bad sweeps are refused"""
        bad_scripts = [
            {'steps': [{'op': 'teleport'}]},
            {'steps': [{'op': 'new_qubit', 'mode': 0},
                       {'op': 'new_qubit', 'mode': 0}]},
            {'steps': [{'op': 'new_qubit', 'mode': 0},
                       {'op': 'measure', 'mode': 0},
                       {'op': 'measure', 'mode': 0}]},
            {'steps': [{'op': 'emit', 'what': 'everything'}]},
            {'steps': [], 'sweep': {'param': 'delta', 'values': [1]}},
            {'steps': [], 'sweep': {'param': 'sigma2', 'values': []}},
            [],
        ]
        for script in bad_scripts:
            with self.assertRaises(ScriptError, msg=repr(script)):
                runner.validate_script(script)

    def test_run_script__empty(self):
        """A script without steps gives an empty, error-free report"""
        report = runner.run_script({'name': 'empty', 'steps': []})
        self.assertEqual(report.state.n_modes, 0)
        self.assertListEqual(list(report.records), [])
        self.assertEqual(report.budget.error_probability, 0.0)
        self.assertEqual(report.budget.success_probability, 1.0)

    def test_run_script__rejected(self):
        """A rejected outcome fails every attempt"""
        script = runner.validate_script(self.rejecting_script())
        with self.assertRaises(PostSelectionRejected):
            runner.run_script(script, retries=2)
        report = runner.run_script(script, nu=0.0)
        self.assertEqual(report.attempts, 1)

    def test_run__tree4(self):
        """The bundled tree script writes the report, branches and records"""
        report = self.runner('run', script='tree4').execute()
        self.assertEqual(report.attempts, 1)
        with open(os.path.join(self.tmp_path, 'report.json')) as report_file:
            data = json.load(report_file)
        self.assertListEqual(data['modes'], [0, 2, 4, 5])
        self.assertTrue(data['exact'], msg='tree4 runs in exact arithmetic')
        self.assertEqual(data['covariance'][0][0], '5/3')
        self.assertEqual(data['covariance'][1][1], '11/15')
        self.assertEqual(data['covariance'][0][5], '-2/3')
        self.assertEqual(data['covariance'][0][1], 0)
        self.assertAlmostEqual(data['covariance_float'][2][3], -4 / 15)
        self.assertEqual(len(data['records']), 3)
        self.assertEqual(data['emits'][0]['what'], 'topology')
        self.assertAlmostEqual(data['total_weight'], 1.0, places=6)
        self.assertGreater(data['error_probability'], 0.0)

        with open(os.path.join(self.tmp_path, 'branches.csv')) as rows_file:
            rows = list(csv.reader(rows_file))
        self.assertEqual(rows[0][0], 'branch')
        self.assertIn('tag_w', rows[0])
        self.assertEqual(len(rows) - 1, len(data['branches']))

        with open(os.path.join(self.tmp_path, 'records.jsonl')) as jsonl:
            lines = [json.loads(line) for line in jsonl]
        self.assertEqual(len(lines), 3)

    def test_run__json_branches(self):
        """--format json writes branches.json instead of branches.csv"""
        self.runner('run', script='tree4', format='json').execute()
        self.assertTrue(
            os.path.isfile(os.path.join(self.tmp_path, 'branches.json'))
        )
        self.assertFalse(
            os.path.isfile(os.path.join(self.tmp_path, 'branches.csv'))
        )

    def test_run__dryrun(self):
        """A dry run writes nothing"""
        result = self.runner('run', script='tree4', dryrun=True).execute()
        self.assertIsNone(result)
        self.assertListEqual(os.listdir(self.tmp_path), [])

    def test_runner__rejects_options(self):
        """Unknown subcommands and negative retries are refused"""
        with self.assertRaises(ContractViolation):
            self.runner('plot')
        with self.assertRaises(ContractViolation):
            self.runner('run', retries=-1)

    def test_sweep_emit__m_b(self):
        """The error grows with the data envelope variance m_B"""
        script = runner.load_script('tree4')
        header, rows = runner.sweep_emit(script, 'm_b', [1, 2, 3, 4],
                                         workers=2)
        self.assertListEqual(header, ['m_b', 'avg_error'])
        self.assertListEqual([row[0] for row in rows], [1.0, 2.0, 3.0, 4.0])
        errors = [row[1] for row in rows]
        self.assertListEqual(errors, sorted(errors),
                             msg='error is not increasing in m_B')

    def test_sweep_emit__sigma2(self):
        """σ² sweeps give one column per fusion variant, in input order"""
        script = runner.load_script('tree4')
        values = [0.1, 0.05]
        header, rows = runner.sweep_emit(script, 'sigma2', values, workers=2)
        self.assertListEqual(
            header, ['sigma2', 'avg_error_A', 'avg_error_B', 'avg_error_C']
        )
        self.assertListEqual([row[0] for row in rows], values)
        for row in rows:
            self.assertAlmostEqual(row[1], row[2], delta=1e-10)
            self.assertAlmostEqual(row[1], row[3], delta=1e-10)
        self.assertGreater(rows[0][1], rows[1][1],
                           msg='error is not increasing in σ²')
        _, again = runner.sweep_emit(script, 'sigma2', values, workers=1)
        self.assertListEqual(rows, again, msg='sweep is not deterministic')

    def test_sweep_emit__rejects(self):
        """Unknown parameters and metrics are refused"""
        script = runner.load_script('tree4')
        with self.assertRaises(ContractViolation):
            runner.sweep_emit(script, 'delta', [1.0])
        with self.assertRaises(ContractViolation):
            runner.sweep_emit(script, 'sigma2', [0.1], metric='fidelity')

    def test_sweep__writes_csv(self):
        """The sweep subcommand writes sweep.csv"""
        rows = self.runner('sweep', script='tree4', param='m_b',
                           values=[1.0, 4.0], metric='p_succ').execute()
        self.assertEqual(len(rows), 2)
        with open(os.path.join(self.tmp_path, 'sweep.csv')) as sweep_file:
            table = list(csv.reader(sweep_file))
        self.assertListEqual(table[0], ['m_b', 'p_succ'])
        self.assertEqual(len(table), 3)

    def test_emit_distribution(self):
        """Outcome densities integrate to one"""
        for label in ('X+', 'Z0'):
            header, rows = runner.emit_distribution(label, 'q', 0.1)
            self.assertListEqual(header, ['x', 'pdf'])
            x = [row[0] for row in rows]
            pdf = [row[1] for row in rows]
            self.assertAlmostEqual(integrate.trapezoid(pdf, x), 1.0,
                                   delta=1e-4, msg=label)
        with self.assertRaises(ContractViolation):
            runner.emit_distribution(kind='histogram')
        with self.assertRaises(ContractViolation):
            runner.emit_distribution(points=1)

    def test_emit_dist__json(self):
        """emit-dist writes one record per grid point"""
        self.runner('emit-dist', format='json', kind='wavefunction',
                    points=101).execute()
        path = os.path.join(self.tmp_path, 'distribution.json')
        with open(path) as distribution_file:
            rows = json.load(distribution_file)
        self.assertEqual(len(rows), 101)
        self.assertSetEqual(set(rows[0]), {'x', 'pdf'})

    def test_thread_limit(self):
        """GKPLAB_THREADS caps the sweep workers"""
        with mock.patch.dict(os.environ, {'GKPLAB_THREADS': '3'}):
            self.assertEqual(runner.thread_limit(), 3)
        for value in ('0', 'many'):
            with mock.patch.dict(os.environ, {'GKPLAB_THREADS': value}):
                with self.assertRaises(ContractViolation, msg=value):
                    runner.thread_limit()

    def test_command__exit_codes(self):
        """Exhausted post-selection exits 2, bad input exits 1"""
        path = self.write_script(self.rejecting_script())
        stderr = io.StringIO()
        with self.assertRaises(SystemExit) as context:
            Command(stderr=stderr).run_from_argv([
                'gkplab', 'run', '--script', path, '--out', self.tmp_path,
                '-v', '0',
            ])
        self.assertEqual(context.exception.code, 2)
        self.assertIn('PostSelectionExhausted', stderr.getvalue())
        self.assertFalse(
            os.path.isfile(os.path.join(self.tmp_path, 'report.json'))
        )

        with self.assertRaises(SystemExit) as context:
            Command(stderr=io.StringIO()).run_from_argv([
                'gkplab', 'run', '--script', 'no-such-script',
                '--out', self.tmp_path, '-v', '0',
            ])
        self.assertEqual(context.exception.code, 1)

    def test_command__traceback(self):
        """--traceback raises the error instead of exiting"""
        path = self.write_script(self.rejecting_script())
        with self.assertRaises(PostSelectionExhausted):
            Command(stderr=io.StringIO()).run_from_argv([
                'gkplab', 'run', '--script', path, '--out', self.tmp_path,
                '-v', '0', '--traceback',
            ])

    def test_command__dryrun(self):
        """A dry run from the command line validates and writes nothing"""
        command = Command(stdout=io.StringIO(), stderr=io.StringIO())
        command.run_from_argv([
            'gkplab', 'run', '--script', 'tree4', '--out', self.tmp_path,
            '--dryrun', '-v', '0',
        ])
        self.assertTrue(command.dryrun)
        self.assertEqual(command.verbosity, 0)
        self.assertListEqual(os.listdir(self.tmp_path), [])


if __name__ == '__main__':
    unittest.main()
