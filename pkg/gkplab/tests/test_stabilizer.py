from gkplab import stabilizer
from gkplab.errors import ContractViolation, ImpossibleOutcomeError
from gkplab.stabilizer import StabilizerTableau
from gkplab.topology import GraphTopology
from hypothesis import given, settings, strategies as st

import numpy as np
import unittest


class TestStabilizer(unittest.TestCase):

    def two_stars(self):
        """Stars 0–1, 0–2 and 3–4, 3–5"""
        return GraphTopology.from_edges(
            range(6), [(0, 1), (0, 2), (3, 4), (3, 5)]
        )

    def assertSameState(self, first, second, msg=None):
        self.assertAlmostEqual(stabilizer.fidelity(first, second), 1.0,
                               places=9, msg=msg)

    def test_pauli_strings(self):
        """Pauli strings convert to bits and back"""
        x, z = stabilizer.pauli_from_string('XZYI')
        np.testing.assert_array_equal(x, [1, 0, 1, 0])
        np.testing.assert_array_equal(z, [0, 1, 1, 0])
        self.assertEqual(stabilizer.pauli_to_string(x, z), 'XZYI')
        with self.assertRaises(ContractViolation):
            stabilizer.pauli_from_string('XQ')

    def test_multiply_paulis(self):
        """(X⊗Z)(Z⊗X) = Y⊗Y and anticommuting products are refused"""
        xz = stabilizer.pauli_from_string('XZ') + (0,)
        zx = stabilizer.pauli_from_string('ZX') + (0,)
        x, z, sign = stabilizer.multiply_paulis(xz, zx)
        self.assertEqual(stabilizer.pauli_to_string(x, z), 'YY')
        self.assertEqual(sign, 0, msg='Y⊗Y sign is wrong')
        expected = (stabilizer.pauli_matrix(*xz[:2]) @
                    stabilizer.pauli_matrix(*zx[:2]))
        np.testing.assert_allclose(expected, stabilizer.pauli_matrix(x, z))
        single_x = stabilizer.pauli_from_string('X') + (0,)
        single_z = stabilizer.pauli_from_string('Z') + (0,)
        with self.assertRaises(ContractViolation):
            stabilizer.multiply_paulis(single_x, single_z)

    def test_from_labels(self):
        """Product states have the expected single-qubit expectations"""
        tableau = StabilizerTableau.from_labels(['X+', 'Z1'], ['a', 'b'])
        self.assertTrue(tableau.is_valid(), msg='product tableau is invalid')
        self.assertEqual(
            tableau.expectation(*stabilizer.pauli_from_string('XI')), 1
        )
        self.assertEqual(
            tableau.expectation(*stabilizer.pauli_from_string('IZ')), -1
        )
        self.assertEqual(
            tableau.expectation(*stabilizer.pauli_from_string('ZI')), 0
        )
        with self.assertRaises(ContractViolation):
            StabilizerTableau.from_labels(['Y+'])

    def test_gates__bell_pair(self):
        """H then CNOT prepares a state stabilized by XX and ZZ"""
        tableau = StabilizerTableau.from_labels(['Z0', 'Z0']).h(0).cnot(0, 1)
        for text in ('XX', 'ZZ'):
            self.assertEqual(
                tableau.expectation(*stabilizer.pauli_from_string(text)), 1,
                msg='{} is not a stabilizer'.format(text),
            )
        self.assertEqual(
            tableau.expectation(*stabilizer.pauli_from_string('YY')), -1
        )

    def test_gates__cz_makes_graph(self):
        """C_Z on |+⟩|+⟩ is the single-edge graph state"""
        tableau = StabilizerTableau.from_labels(['X+', 'X+']).cz(0, 1)
        form = tableau.to_graph()
        self.assertTrue(form.is_plain, msg='no local Cliffords expected')
        self.assertListEqual(form.topology.edges(), [(0, 1)])
        self.assertSameState(
            tableau.statevector(),
            stabilizer.graph_statevector(form.topology),
        )

    def test_gates__pauli_signs(self):
        """X and Z gates flip the signs of anticommuting generators"""
        tableau = StabilizerTableau.from_labels(['Z0', 'X+'])
        flipped = tableau.x(0).z(1)
        self.assertListEqual(flipped.generators(), ['-ZI', '-IX'])
        self.assertListEqual(
            tableau.apply_pauli(*stabilizer.pauli_from_string('XZ'))
            .generators(),
            ['-ZI', '-IX'],
        )

    def test_graph_tableau_statevector(self):
        """The graph tableau describes Π C_Z |+⟩"""
        topology = self.two_stars()
        tableau = stabilizer.ideal_graph_from_edges(topology)
        self.assertTrue(tableau.is_valid(), msg='graph tableau is invalid')
        self.assertSameState(tableau.statevector(),
                             stabilizer.graph_statevector(topology))

    def test_measure_pauli(self):
        """Random outcomes give a byproduct, fixed ones are checked"""
        tableau = StabilizerTableau.from_labels(['X+'])
        z = stabilizer.pauli_from_string('Z')
        projected, byproduct = tableau.measure_pauli(*z, outcome=1)
        self.assertEqual(projected.expectation(*z), -1)
        self.assertTrue(stabilizer.anticommutes(byproduct, z),
                        msg='byproduct must anticommute with the Pauli')
        _, byproduct = projected.measure_pauli(*z, outcome=1)
        self.assertIsNone(byproduct, msg='repeated outcome is deterministic')
        with self.assertRaises(ImpossibleOutcomeError):
            projected.measure_pauli(*z, outcome=0)

    def test_project__byproducts(self):
        """Byproduct i anticommutes with Pauli i and commutes with the rest"""
        tableau = stabilizer.ideal_graph_from_edges(self.two_stars())
        paulis = stabilizer.bell_paulis(tableau, 1, 3)
        _, byproducts = tableau.project(paulis, [0, 1])
        for i, byproduct in enumerate(byproducts):
            for j, pauli in enumerate(paulis):
                self.assertEqual(
                    stabilizer.anticommutes(byproduct, pauli), int(i == j),
                    msg='byproduct {} against Pauli {}'.format(i, j),
                )

    def test_remove__entangled(self):
        """Entangled qubits cannot be removed"""
        tableau = stabilizer.ideal_graph_from_edges(self.two_stars())
        with self.assertRaises(ContractViolation):
            tableau.remove([0])

    def test_measure_pauli_ideal__leaf(self):
        """Z on a leaf cuts it off; outcome 1 leaves a Z on its neighbour"""
        topology = GraphTopology.from_edges([0, 1, 2], [(0, 1), (0, 2)])
        tableau = stabilizer.ideal_graph_from_edges(topology)
        _, pattern, form = stabilizer.measure_pauli_ideal(
            tableau, 1, 'Z', 0
        )
        self.assertListEqual(form.topology.edges(), [(0, 2)])
        self.assertDictEqual(pattern, {0: 'I', 2: 'I'})
        _, pattern, _ = stabilizer.measure_pauli_ideal(tableau, 1, 'Z', 1)
        self.assertDictEqual(pattern, {0: 'Z', 2: 'I'})
        with self.assertRaises(ContractViolation):
            stabilizer.measure_pauli_ideal(tableau, 1, 'Y')

    def test_bell_projection__matches_dense(self):
        """Bell projection agrees with the dense oracle for every outcome"""
        topology = self.two_stars()
        tableau = stabilizer.ideal_graph_from_edges(topology)
        vector = stabilizer.graph_statevector(topology)
        for outcome in ((0, 0), (0, 1), (1, 0), (1, 1)):
            remaining, _, _ = stabilizer.project_bell_ideal(
                tableau, 1, 3, outcome
            )
            self.assertEqual(remaining.qubits, (0, 2, 4, 5))
            dense = stabilizer.project_bell_statevector(
                vector, 6, 1, 3, outcome
            )
            self.assertSameState(
                remaining.statevector(), dense,
                msg='outcome {} differs from the dense oracle'.format(
                    outcome
                ),
            )
        with self.assertRaises(ContractViolation):
            stabilizer.project_bell_ideal(tableau, 1, 1)

    @given(st.lists(
        st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(
            lambda edge: edge[0] != edge[1]
        ),
        max_size=8,
    ))
    @settings(max_examples=100, deadline=None)
    def test_property__graph_form_round_trip(self, edges):
        """Graph tableaux reduce back to their own graph"""
        topology = GraphTopology.from_edges(range(5), edges)
        form = stabilizer.ideal_graph_from_edges(topology).to_graph()
        self.assertTrue(form.is_plain, msg='graph state needed Cliffords')
        self.assertEqual(form.topology, topology,
                         msg='graph form changed the graph')
        self.assertFalse(np.any(form.corrections),
                         msg='graph state needed corrections')


if __name__ == '__main__':
    unittest.main()
