from gkplab.errors import ContractViolation
from gkplab.topology import GraphTopology

import networkx as nx
import numpy as np
import unittest


class TestGraphTopology(unittest.TestCase):

    def star(self):
        """Vertex 0 joined to 1 and 2"""
        return GraphTopology.from_edges([0, 1, 2], [(0, 1), (0, 2)])

    def test_from_edges(self):
        """Edges become a symmetric adjacency with zero diagonal"""
        topology = self.star()
        np.testing.assert_array_equal(
            topology.adjacency, [[0, 1, 1], [1, 0, 0], [1, 0, 0]]
        )
        self.assertListEqual(topology.edges(), [(0, 1), (0, 2)],
                             msg='edge list is wrong')
        self.assertEqual(topology.degree(0), 2, msg='degree is wrong')
        self.assertListEqual(topology.neighbors(1), [0],
                             msg='neighbours are wrong')

    def test_rejects_malformed(self):
        """Self loops, unknown vertices and asymmetric matrices are rejected"""
        with self.assertRaises(ContractViolation):
            GraphTopology.from_edges([0, 1], [(0, 0)])
        with self.assertRaises(ContractViolation):
            GraphTopology.from_edges([0, 1], [(0, 2)])
        with self.assertRaises(ContractViolation):
            GraphTopology([0, 1], [[0, 1], [0, 0]])
        with self.assertRaises(ContractViolation):
            GraphTopology([0, 0])

    def test_toggle(self):
        """Toggling adds a missing edge and removes a present one"""
        topology = self.star().toggle(1, 2)
        self.assertIn((1, 2), topology.edges(), msg='edge was not added')
        topology = topology.toggle(0, 1)
        self.assertNotIn((0, 1), topology.edges(), msg='edge was not removed')

    def test_with_vertex_and_without(self):
        """Adding and removing vertices keeps the other edges"""
        topology = self.star().with_vertex('a')
        self.assertEqual(topology.degree('a'), 0, msg='new vertex has edges')
        topology = topology.without([0])
        self.assertEqual(topology.vertices, (1, 2, 'a'),
                         msg='vertex order changed')
        self.assertListEqual(topology.edges(), [], msg='edges survived')
        with self.assertRaises(ContractViolation):
            self.star().with_vertex(0)

    def test_reordered(self):
        """A permuted vertex list describes the same graph"""
        topology = self.star()
        permuted = topology.reordered([2, 0, 1])
        self.assertEqual(permuted.vertices, (2, 0, 1))
        self.assertEqual(permuted.reordered([0, 1, 2]), topology,
                         msg='reordering does not invert')
        self.assertNotEqual(permuted, topology,
                            msg='vertex order must take part in equality')

    def test_distances(self):
        """Distances from a set of sources follow the shortest paths"""
        topology = GraphTopology.from_edges(
            [0, 1, 2, 3], [(0, 1), (1, 2), (2, 3)]
        )
        self.assertDictEqual(topology.distances([0]),
                             {0: 0, 1: 1, 2: 2, 3: 3})

    def test_networkx_round_trip(self):
        """Conversion to networkx and back keeps the graph"""
        topology = self.star()
        graph = topology.to_networkx()
        self.assertTrue(nx.is_connected(graph), msg='star is disconnected')
        self.assertEqual(GraphTopology.from_networkx(graph, [0, 1, 2]),
                         topology)
        path = GraphTopology.from_edges([5, 6, 7], [(5, 6), (6, 7)])
        self.assertTrue(topology.is_isomorphic(path),
                        msg='a 3-vertex star is a 3-vertex path')


if __name__ == '__main__':
    unittest.main()
