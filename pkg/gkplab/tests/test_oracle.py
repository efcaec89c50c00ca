from gkplab import gkp, graph, oracle
from gkplab.errors import CapacityError, ContractViolation
from gkplab.gkp import ErrorEnvelope1, SQRT_PI
from gkplab.oracle import GridSpec
from gkplab.topology import GraphTopology

import csv
import numpy as np
import os
import shutil
import unittest
import uuid


class TestOracle(unittest.TestCase):

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

    def single(self, label='X+'):
        return oracle.synthesize(
            gkp.make_finite_gkp(label, ErrorEnvelope1(1, 1), 0.1)
        )

    def pair(self):
        """|+̃⟩ data and |0̃⟩ ancilla on a two-mode grid"""
        data = graph.build_graph_state([(1, 1)], GraphTopology(['data']))
        joint = graph.add_mode(data, 'ancilla', 'Z0', (1, 1))
        return oracle.synthesize(joint, GridSpec.for_modes(2))

    def test_grid_spec(self):
        """Self-dual grids put every multiple of √π on a grid point"""
        spec = GridSpec.for_modes(1)
        self.assertTrue(spec.is_self_dual, msg='grid is not self-dual')
        position = spec.position(3 * SQRT_PI)
        self.assertAlmostEqual(position, round(position), places=9)
        with self.assertRaises(ContractViolation):
            GridSpec(1.0, 64)
        with self.assertRaises(ContractViolation):
            GridSpec(12.0, 63)
        with self.assertRaises(ContractViolation):
            spec.position(spec.extent)
        with self.assertRaises(CapacityError):
            GridSpec.for_modes(4)

    def test_grid_spec__powers_of_two(self):
        """Grids have power-of-two sizes and grow with the needed extent"""
        self.assertEqual(GridSpec.for_modes(1).points, 2048)
        self.assertEqual(GridSpec.for_modes(2).points, 512)
        self.assertEqual(GridSpec.for_modes(3).points, 256)
        self.assertTrue(GridSpec.for_modes(3).is_self_dual)
        with self.assertRaises(ContractViolation):
            GridSpec(12.0, 288)

        extent = oracle.required_extent(0.02, [(1, 1), (1, 1)], sheared=True)
        self.assertAlmostEqual(extent, 7 / np.sqrt(0.02), places=9)
        spec = GridSpec.for_modes(2, extent)
        self.assertEqual(spec.points, 2048)
        self.assertGreaterEqual(spec.extent, extent)
        position = spec.position(SQRT_PI)
        self.assertAlmostEqual(position, round(position), places=9,
                               msg="√π is not a grid point")
        with self.assertRaises(CapacityError):
            GridSpec.for_modes(3, extent=100.0)

    def test_required_extent(self):
        """Wide envelopes never shrink the grid below 6√π"""
        self.assertAlmostEqual(
            oracle.required_extent(10.0, [(1, 1)]), 6 * SQRT_PI
        )
        single = oracle.required_extent(0.05, [(1, 1)])
        narrow = oracle.required_extent(0.05, [(1, 0.5)])
        self.assertGreater(narrow, single)
        sheared = oracle.required_extent(0.05, [(1, 1), (1, 1)],
                                         sheared=True)
        self.assertAlmostEqual(sheared, np.sqrt(2) * single, places=9)

    def test_synthesize__normalized(self):
        """Synthesized states are normalized in q and in p"""
        w = self.single()
        self.assertAlmostEqual(w.norm(), 1.0, places=9)
        density = w.marginal(0, 'p')
        self.assertAlmostEqual(np.sum(density) * w.spec.step, 1.0, places=6,
                               msg='p marginal is not normalized')

    def test_synthesize__capacity(self):
        """Four modes are beyond the grid oracle"""
        topology = GraphTopology.from_edges(
            range(4), [(0, 1), (1, 2), (2, 3)]
        )
        state = graph.build_graph_state([(1, 1)] * 4, topology)
        with self.assertRaises(CapacityError):
            oracle.synthesize(state)
        with self.assertRaises(ContractViolation):
            oracle.synthesize('not a state')

    def test_fourier__four_times(self):
        """Four quarter rotations are the identity"""
        w = self.single('Z0')
        rotated = w
        for _ in range(4):
            rotated = oracle.evolve(rotated, 'fourier', 0)
        self.assertAlmostEqual(oracle.fidelity(w, rotated), 1.0, places=10)

    def test_fourier__swaps_labels(self):
        """The Fourier gate maps |0̃⟩ to |+̃⟩"""
        rotated = oracle.evolve(self.single('Z0'), 'fourier', 0)
        self.assertGreater(oracle.fidelity(rotated, self.single('X+')), 0.99)

    def test_cz__inverse(self):
        """C_Z followed by its inverse is the identity"""
        w = self.pair()
        back = oracle.evolve(
            oracle.evolve(w, 'cz', 'data', 'ancilla'),
            'cz', 'data', 'ancilla', inverse=True,
        )
        self.assertAlmostEqual(oracle.fidelity(w, back), 1.0, places=10)
        with self.assertRaises(ContractViolation):
            oracle.evolve(w, 'cz', 'data', 'data')

    def test_cx__inverse(self):
        """C_X followed by its inverse is the identity"""
        w = self.pair()
        forward = oracle.evolve(w, 'cx', 'ancilla', 'data')
        self.assertAlmostEqual(forward.norm(), 1.0, places=6)
        back = oracle.evolve(forward, 'cx', 'ancilla', 'data', inverse=True)
        self.assertGreater(oracle.fidelity(w, back), 1 - 1e-6)
        with self.assertRaises(ContractViolation):
            oracle.evolve(w, 'swap', 'ancilla', 'data')

    def test_displacement__moves_teeth(self):
        """A √π q-shift moves the central tooth of |0̃⟩ to √π"""
        shifted = oracle.evolve(self.single('Z0'), 'displacement', 0,
                                SQRT_PI, 0.0)
        peak = shifted.spec.axis[np.argmax(shifted.marginal(0))]
        self.assertAlmostEqual(peak, SQRT_PI, delta=shifted.spec.step,
                               msg='central tooth did not move')
        self.assertAlmostEqual(shifted.norm(), 1.0, places=6)

    def test_overlap__grids(self):
        """Overlaps need a shared grid"""
        w = self.single()
        self.assertAlmostEqual(oracle.fidelity(w, w), 1.0, places=10)
        self.assertLess(oracle.fidelity(w, self.single('X-')), 1e-3)
        with self.assertRaises(ContractViolation):
            oracle.overlap(w, self.pair())

    def test_slice_homodyne(self):
        """A single-mode slice returns only the outcome density"""
        w = self.single()
        rest, density = oracle.slice_homodyne(w, 0, 'q', 0.0)
        self.assertIsNone(rest)
        self.assertAlmostEqual(density, w.marginal(0)[w.spec.points // 2],
                               places=8)

    def test_dump_density_csv(self):
        """Marginal densities are written one grid point per row"""
        w = self.single()
        path = oracle.dump_density_csv(
            w, os.path.join(self.tmp_path, 'density.csv')
        )
        with open(path) as density_file:
            rows = list(csv.reader(density_file))
        self.assertListEqual(rows[0], ['x', 'density_0'])
        self.assertEqual(len(rows) - 1, w.spec.points)

    def test_tensor(self):
        """A product of two single-mode grids matches joint synthesis"""
        spec = GridSpec.for_modes(2)
        data = graph.build_graph_state([(1, 1)], GraphTopology(['data']))
        ancilla = graph.build_graph_state(
            [(1, 1)], GraphTopology(['ancilla']), labels=['Z0']
        )
        product = oracle.tensor(oracle.synthesize(data, spec),
                                oracle.synthesize(ancilla, spec))
        self.assertTupleEqual(product.modes, ('data', 'ancilla'))
        self.assertAlmostEqual(oracle.fidelity(product, self.pair()), 1.0,
                               places=9)
        with self.assertRaises(ContractViolation):
            oracle.tensor(product.replace(product.amplitudes[0],
                                          modes=['data']), product)

    def test_slice_homodyne__p_off_grid(self):
        """p slices between grid points agree with the exact density"""
        w = self.single('Z0')
        _, on_grid = oracle.slice_homodyne(w, 0, 'p', 0.0)
        self.assertAlmostEqual(on_grid, w.marginal(0, 'p')[w.spec.points // 2],
                               places=8)
        state = gkp.make_finite_gkp('Z0', ErrorEnvelope1(1, 1), 0.1)
        peak = abs(oracle.momentum_wavefunction(state, 0.0)) ** 2
        for y in (0.013, 0.3 * SQRT_PI, SQRT_PI + 0.05):
            _, density = oracle.slice_homodyne(w, 0, 'p', y)
            exact = abs(oracle.momentum_wavefunction(state, y)) ** 2 / peak
            self.assertAlmostEqual(density / on_grid / exact, 1.0,
                                   delta=1e-4,
                                   msg='p density at y={}'.format(y))

    def test_steane_reference_density(self):
        """The exact outcome density integrates to one"""
        y = np.arange(-24.0, 24.0, 0.05)
        density = oracle.steane_reference_density(0.1, y)
        self.assertAlmostEqual(np.sum(density) * 0.05, 1.0, delta=1e-6)
        left, right = oracle.steane_reference_density(0.1, [-0.7, 0.7])
        self.assertAlmostEqual(left, right, delta=1e-9 * max(left, right),
                               msg='density is not symmetric')

    def check_oracle(self, results):
        for result in results:
            self.assertGreaterEqual(
                result['fidelity'], 0.99,
                msg='overlap too small at y={}'.format(result['outcome']),
            )
        peaks = [r for r in results
                 if abs(r['outcome'] / SQRT_PI - round(r['outcome'] /
                                                      SQRT_PI)) < 1e-9]
        self.assertEqual(len(peaks), 2, msg='expected two comb peaks')
        for result in peaks:
            self.assertLessEqual(
                result['relative_error'], 1e-3,
                msg='density mismatch at y={}'.format(result['outcome']),
            )
        return peaks

    def test_oracle_check(self):
        """The analytic Steane round agrees with the grid oracle"""
        results = oracle.oracle_check(0.1)
        self.assertEqual(len(results), 6)
        for result in self.check_oracle(results):
            self.assertGreater(
                result['model_error'], result['relative_error'],
                msg='the outcome model should trail the grid at σ²=0.1',
            )
            self.assertLess(result['model_error'], 0.1)

    def test_oracle_check__small_sigma2(self):
        """At σ²=0.02 the grid grows and the outcome model tightens"""
        outcomes = [0.0, 0.3 * SQRT_PI, SQRT_PI]
        results = oracle.oracle_check(0.02, outcomes)
        self.assertEqual(len(results), 3)
        for result in self.check_oracle(results):
            self.assertLess(result['model_error'], 1e-2,
                            msg='outcome model at y={}'.format(
                                result['outcome']))


if __name__ == '__main__':
    unittest.main()
