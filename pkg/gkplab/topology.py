from gkplab.errors import ContractViolation

import networkx as nx
import numpy as np


class GraphTopology(object):
    """Simple undirected graph on an ordered list of mode identifiers

    Arguments:
        vertices {iterable} -- ordered, unique vertex identifiers

    Keyword Arguments:
        adjacency {array} -- symmetric 0/1 matrix with zero diagonal
                             (default: {no edges})

    Raises:
        ContractViolation -- duplicate vertices or a malformed adjacency
    """
    def __init__(self, vertices, adjacency=None):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ContractViolation('vertex identifiers must be unique')
        size = len(self.vertices)
        if adjacency is None:
            adjacency = np.zeros((size, size), dtype=np.uint8)
        adjacency = np.asarray(adjacency).astype(np.uint8)
        if adjacency.shape != (size, size):
            raise ContractViolation(
                'adjacency shape {} does not match {} vertices'.format(
                    adjacency.shape, size
                )
            )
        if np.any(adjacency != adjacency.T) or np.any(np.diag(adjacency)):
            raise ContractViolation(
                'adjacency must be symmetric with a zero diagonal'
            )
        if np.any(adjacency > 1):
            raise ContractViolation('adjacency entries must be 0 or 1')
        self.adjacency = adjacency

    @classmethod
    def from_edges(cls, vertices, edges=()):
        graph = nx.Graph()
        graph.add_nodes_from(vertices)
        for v, w in edges:
            if v == w:
                raise ContractViolation('self loop on vertex {!r}'.format(v))
            for vertex in (v, w):
                if vertex not in graph:
                    raise ContractViolation(
                        'edge references unknown vertex {!r}'.format(vertex)
                    )
            graph.add_edge(v, w)
        return cls.from_networkx(graph, vertices)

    @classmethod
    def from_networkx(cls, graph, vertices=None):
        vertices = list(graph.nodes) if vertices is None else list(vertices)
        adjacency = nx.to_numpy_array(graph, nodelist=vertices, dtype=int)
        return cls(vertices, adjacency)

    def to_networkx(self):
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges())
        return graph

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, vertex):
        return vertex in self.vertices

    def __eq__(self, other):
        if not isinstance(other, GraphTopology):
            return NotImplemented
        return (self.vertices == other.vertices and
                np.array_equal(self.adjacency, other.adjacency))

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __repr__(self):
        return 'GraphTopology(vertices={}, edges={})'.format(
            list(self.vertices), self.edges()
        )

    def index(self, vertex):
        try:
            return self.vertices.index(vertex)
        except ValueError:
            raise ContractViolation('unknown vertex {!r}'.format(vertex))

    def edges(self):
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return [(self.vertices[i], self.vertices[j]) for i, j in zip(rows, cols)]

    def neighbors(self, vertex):
        row = self.adjacency[self.index(vertex)]
        return [self.vertices[j] for j in np.flatnonzero(row)]

    def degree(self, vertex):
        return int(self.adjacency[self.index(vertex)].sum())

    def toggle(self, v, w):
        """Copy with the edge (v, w) added or removed"""
        i, j = self.index(v), self.index(w)
        if i == j:
            raise ContractViolation('cannot toggle a self loop')
        adjacency = self.adjacency.copy()
        adjacency[i, j] ^= 1
        adjacency[j, i] ^= 1
        return GraphTopology(self.vertices, adjacency)

    def with_vertex(self, vertex):
        """Copy with an isolated vertex appended"""
        if vertex in self.vertices:
            raise ContractViolation('vertex {!r} already exists'.format(vertex))
        size = len(self.vertices)
        adjacency = np.zeros((size + 1, size + 1), dtype=np.uint8)
        adjacency[:size, :size] = self.adjacency
        return GraphTopology(self.vertices + (vertex,), adjacency)

    def without(self, vertices):
        """Copy with the given vertices (and their edges) removed"""
        drop = {self.index(v) for v in vertices}
        keep = [i for i in range(len(self.vertices)) if i not in drop]
        return GraphTopology(
            [self.vertices[i] for i in keep],
            self.adjacency[np.ix_(keep, keep)],
        )

    def reordered(self, vertices):
        """Same graph with the vertex list permuted to `vertices`"""
        if sorted(map(repr, vertices)) != sorted(map(repr, self.vertices)):
            raise ContractViolation('reordering must keep the vertex set')
        order = [self.index(v) for v in vertices]
        return GraphTopology(vertices, self.adjacency[np.ix_(order, order)])

    def distances(self, sources):
        """Graph distance from the nearest of `sources` to every vertex

        Unreachable vertices are left out of the result.
        """
        return nx.multi_source_dijkstra_path_length(
            self.to_networkx(), set(sources)
        )

    def is_isomorphic(self, other):
        return nx.is_isomorphic(self.to_networkx(), other.to_networkx())
