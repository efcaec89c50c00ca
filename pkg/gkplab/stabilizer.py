"""Stabilizer tableau for the ideal layer of a GKP graph state

Only the n stabilizer generators are stored (no destabilizers): an n×n
X block, an n×n Z block and one sign bit per generator. A row with
x=1, z=1 on a qubit stands for Y there. Row products follow the
Aaronson-Gottesman phase rule.

Pauli operators passed in from outside are (x bits, z bits) pairs of
length-n 0/1 vectors.
"""
from functools import reduce
from gkplab.errors import ConsistencyError, ContractViolation
from gkplab.errors import ImpossibleOutcomeError
from gkplab.topology import GraphTopology

import numpy as np


MAX_DENSE_QUBITS = 12
IDEAL_GENERATORS = {
    # label: (x, z, sign)
    'X+': (1, 0, 0),
    'X-': (1, 0, 1),
    'Z0': (0, 1, 0),
    'Z1': (0, 1, 1),
}

_PAULI_MATRICES = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def _phase_exponent(x1, z1, x2, z2):
    """Σ_j g(x1, z1, x2, z2): the power of i picked up by P1·P2"""
    x1, z1, x2, z2 = (np.asarray(a, dtype=int) for a in (x1, z1, x2, z2))
    g = np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where(
            (x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
            np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0),
        ),
    )
    return int(g.sum())


def multiply_paulis(a, b):
    """Product of two commuting signed Paulis (x, z, sign)"""
    x1, z1, r1 = a
    x2, z2, r2 = b
    total = (2 * r1 + 2 * r2 + _phase_exponent(x1, z1, x2, z2)) % 4
    if total not in (0, 2):
        raise ContractViolation('multiplied Paulis do not commute')
    return (x1 ^ x2, z1 ^ z2, total // 2)


def anticommutes(a, b):
    """1 if the Paulis (x, z) a and b anticommute, else 0"""
    x1, z1 = a[0], a[1]
    x2, z2 = b[0], b[1]
    return int((np.dot(x1, z2) + np.dot(z1, x2)) % 2)


def pauli_matrix(x, z, sign=0):
    """Dense matrix of a signed Pauli string (qubit 0 most significant)"""
    factors = [_PAULI_MATRICES[(int(a), int(b))] for a, b in zip(x, z)]
    matrix = reduce(np.kron, factors, np.eye(1, dtype=complex))
    return -matrix if sign else matrix


def pauli_from_string(text):
    """('XZ', ...) style string to (x, z) bit vectors"""
    table = {'I': (0, 0), 'X': (1, 0), 'Z': (0, 1), 'Y': (1, 1)}
    try:
        bits = [table[c] for c in text.upper()]
    except KeyError:
        raise ContractViolation('bad Pauli string {!r}'.format(text))
    x = np.array([b[0] for b in bits], dtype=np.uint8)
    z = np.array([b[1] for b in bits], dtype=np.uint8)
    return x, z


def pauli_to_string(x, z):
    table = {(0, 0): 'I', (1, 0): 'X', (0, 1): 'Z', (1, 1): 'Y'}
    return ''.join(table[(int(a), int(b))] for a, b in zip(x, z))


class GraphForm(object):
    """Local-Clifford reduction of a stabilizer state to a graph state

    The reduced state satisfies O·ψ = Z^corrections |G⟩, where O is the
    product of `local_cliffords` (a list of ('H'|'S', qubit) applied in
    order) and G has adjacency `topology.adjacency`.
    """
    def __init__(self, topology, local_cliffords, corrections):
        self.topology = topology
        self.local_cliffords = list(local_cliffords)
        self.corrections = np.asarray(corrections, dtype=np.uint8)

    @property
    def is_plain(self):
        """No local Cliffords are needed"""
        return not self.local_cliffords

    def correction_pattern(self):
        """Per-vertex canonical correction string ('I' or 'Z')"""
        return {
            vertex: 'Z' if bit else 'I'
            for vertex, bit in zip(self.topology.vertices, self.corrections)
        }


class StabilizerTableau(object):
    """n commuting, independent stabilizer generators on n qubits

    Arguments:
        xs {array} -- n×n X block
        zs {array} -- n×n Z block
        signs {array} -- n sign bits

    Keyword Arguments:
        qubits {iterable} -- qubit identifiers (default: {0..n−1})
    """
    def __init__(self, xs, zs, signs, qubits=None):
        self.signs = np.array(signs, dtype=np.uint8).ravel()
        n = self.signs.size
        self.xs = np.array(xs, dtype=np.uint8)
        self.zs = np.array(zs, dtype=np.uint8)
        if self.xs.size != n * n or self.zs.size != n * n:
            raise ContractViolation('tableau blocks must be n×n')
        self.xs = self.xs.reshape(n, n)
        self.zs = self.zs.reshape(n, n)
        self.qubits = tuple(range(n) if qubits is None else qubits)
        if len(self.qubits) != n:
            raise ContractViolation('one identifier per qubit is needed')

    @classmethod
    def from_labels(cls, labels, qubits=None):
        """Product state of single-qubit ideal labels (Z0, Z1, X+, X-)"""
        n = len(labels)
        xs = np.zeros((n, n), dtype=np.uint8)
        zs = np.zeros((n, n), dtype=np.uint8)
        signs = np.zeros(n, dtype=np.uint8)
        for i, label in enumerate(labels):
            try:
                x, z, sign = IDEAL_GENERATORS[label]
            except KeyError:
                raise ContractViolation('unknown label {!r}'.format(label))
            xs[i, i], zs[i, i], signs[i] = x, z, sign
        return cls(xs, zs, signs, qubits)

    def copy(self):
        return StabilizerTableau(
            self.xs.copy(), self.zs.copy(), self.signs.copy(), self.qubits
        )

    def __len__(self):
        return self.signs.size

    def __repr__(self):
        return 'StabilizerTableau({})'.format(self.generators())

    def generators(self):
        return [
            ('-' if s else '+') + pauli_to_string(x, z)
            for x, z, s in zip(self.xs, self.zs, self.signs)
        ]

    def index(self, qubit):
        try:
            return self.qubits.index(qubit)
        except ValueError:
            raise ContractViolation('unknown qubit {!r}'.format(qubit))

    def row(self, i):
        return (self.xs[i].copy(), self.zs[i].copy(), int(self.signs[i]))

    def _rowsum(self, h, i):
        """Replace generator h by the product of generators i and h"""
        x, z, sign = multiply_paulis(self.row(i), self.row(h))
        self.xs[h], self.zs[h], self.signs[h] = x, z, sign

    def is_valid(self):
        """Generators commute pairwise and are independent"""
        n = len(self)
        for i in range(n):
            for j in range(i + 1, n):
                if anticommutes(self.row(i), self.row(j)):
                    return False
        matrix = np.hstack([self.xs, self.zs]).astype(np.uint8)
        return _gf2_rank(matrix) == n

    def tensor(self, other):
        """Tableau of the product state self ⊗ other"""
        n, m = len(self), len(other)
        xs = np.zeros((n + m, n + m), dtype=np.uint8)
        zs = np.zeros((n + m, n + m), dtype=np.uint8)
        xs[:n, :n], xs[n:, n:] = self.xs, other.xs
        zs[:n, :n], zs[n:, n:] = self.zs, other.zs
        return StabilizerTableau(
            xs, zs, np.concatenate([self.signs, other.signs]),
            self.qubits + other.qubits,
        )

    def with_qubit(self, qubit, label):
        """Append a fresh qubit prepared in an ideal label state"""
        if qubit in self.qubits:
            raise ContractViolation('qubit {!r} already exists'.format(qubit))
        return self.tensor(StabilizerTableau.from_labels([label], [qubit]))

    # gates; each returns a new tableau

    def h(self, a):
        out = self.copy()
        a = out.index(a)
        out.signs ^= out.xs[:, a] & out.zs[:, a]
        out.xs[:, a], out.zs[:, a] = self.zs[:, a].copy(), self.xs[:, a].copy()
        return out

    def s(self, a):
        out = self.copy()
        a = out.index(a)
        out.signs ^= out.xs[:, a] & out.zs[:, a]
        out.zs[:, a] ^= out.xs[:, a]
        return out

    def x(self, a):
        out = self.copy()
        out.signs ^= out.zs[:, out.index(a)]
        return out

    def z(self, a):
        out = self.copy()
        out.signs ^= out.xs[:, out.index(a)]
        return out

    def cnot(self, control, target):
        out = self.copy()
        a, b = out.index(control), out.index(target)
        if a == b:
            raise ContractViolation('CNOT needs distinct qubits')
        xa, za, xb, zb = out.xs[:, a], out.zs[:, a], out.xs[:, b], out.zs[:, b]
        out.signs ^= xa & zb & (xb ^ za ^ 1)
        out.xs[:, b] = xb ^ xa
        out.zs[:, a] = za ^ zb
        return out

    def cz(self, a, b):
        if a == b:
            raise ContractViolation('CZ needs distinct qubits')
        return self.h(b).cnot(a, b).h(b)

    def apply_pauli(self, x, z):
        """Conjugate by a Pauli: flips the sign of anticommuting generators"""
        out = self.copy()
        for i in range(len(out)):
            out.signs[i] ^= anticommutes(out.row(i), (x, z))
        return out

    # measurement

    def expectation(self, x, z):
        """+1 or −1 if ±P is a stabilizer, 0 if the outcome is random"""
        pauli = (np.asarray(x, dtype=np.uint8), np.asarray(z, dtype=np.uint8))
        if any(anticommutes(self.row(i), pauli) for i in range(len(self))):
            return 0
        sign = self._sign_in_group(*pauli)
        return -1 if sign else 1

    def _sign_in_group(self, x, z):
        """Sign bit of ±P, where ±P is known to lie in the group"""
        n = len(self)
        matrix = np.hstack([self.xs, self.zs]).T.astype(np.uint8)
        target = np.concatenate([x, z]).astype(np.uint8)
        choice = _gf2_solve(matrix, target)
        if choice is None:
            raise ConsistencyError('Pauli commutes with the group but is '
                                   'not in it')
        product = (np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), 0)
        for i in np.flatnonzero(choice):
            product = multiply_paulis(product, self.row(i))
        return product[2]

    def measure_pauli(self, x, z, outcome=0):
        """Project onto the (−1)^outcome eigenspace of the Pauli (x, z)

        Arguments:
            x {array} -- X bits of the measured Pauli
            z {array} -- Z bits of the measured Pauli

        Keyword Arguments:
            outcome {integer} -- forced outcome bit (default: {0})

        Returns:
            {tuple} -- (projected tableau, byproduct) where the byproduct is
                       a stabilizer (x, z) of the pre-measurement state that
                       anticommutes with the Pauli, or None when the outcome
                       was deterministic

        Raises:
            ImpossibleOutcomeError -- the outcome has zero probability
        """
        pauli = (np.asarray(x, dtype=np.uint8), np.asarray(z, dtype=np.uint8))
        rows = [i for i in range(len(self))
                if anticommutes(self.row(i), pauli)]
        if not rows:
            if self._sign_in_group(*pauli) != outcome:
                raise ImpossibleOutcomeError(
                    'outcome {} of {} has zero probability'.format(
                        outcome, pauli_to_string(*pauli)
                    )
                )
            return self.copy(), None
        out = self.copy()
        pivot = rows[0]
        byproduct = (out.xs[pivot].copy(), out.zs[pivot].copy())
        for i in rows[1:]:
            out._rowsum(i, pivot)
        out.xs[pivot], out.zs[pivot] = pauli
        out.signs[pivot] = outcome
        return out, byproduct

    def project(self, paulis, outcomes=None):
        """Measure commuting Paulis in turn with forced outcomes

        Returns the projected tableau and one byproduct per Pauli. The
        byproducts are stabilizers of the input state; byproduct i
        anticommutes with Pauli i only, so flipping outcome i of the
        projection amounts to applying byproduct i to the result.
        """
        if outcomes is None:
            outcomes = [0] * len(paulis)
        tableau = self
        byproducts = []
        for pauli, outcome in zip(paulis, outcomes):
            tableau, byproduct = tableau.measure_pauli(
                pauli[0], pauli[1], outcome
            )
            if byproduct is None:
                raise ContractViolation(
                    'ideal outcome of {} is deterministic'.format(
                        pauli_to_string(*pauli)
                    )
                )
            byproducts.append(byproduct)
        # make byproduct i commute with every later Pauli
        for i in reversed(range(len(byproducts))):
            for j in range(i + 1, len(byproducts)):
                if anticommutes(byproducts[i], paulis[j]):
                    byproducts[i] = (
                        byproducts[i][0] ^ byproducts[j][0],
                        byproducts[i][1] ^ byproducts[j][1],
                    )
        return tableau, byproducts

    def remove(self, qubits):
        """Drop qubits that are in a product state with the rest

        Raises:
            ContractViolation -- the qubits are still entangled
        """
        out = self.copy()
        cols = [out.index(q) for q in qubits]
        n = len(out)
        pivots = []
        for block in ('xs', 'zs'):
            for col in cols:
                matrix = getattr(out, block)
                candidates = [r for r in range(n)
                              if r not in pivots and matrix[r, col]]
                if not candidates:
                    continue
                pivot = candidates[0]
                pivots.append(pivot)
                for r in range(n):
                    if r != pivot and getattr(out, block)[r, col]:
                        out._rowsum(r, pivot)
        if len(pivots) != len(cols):
            raise ContractViolation(
                'qubits {} are entangled with the rest'.format(list(qubits))
            )
        keep_rows = [r for r in range(n) if r not in pivots]
        keep_cols = [c for c in range(n) if c not in cols]
        return StabilizerTableau(
            out.xs[np.ix_(keep_rows, keep_cols)],
            out.zs[np.ix_(keep_rows, keep_cols)],
            out.signs[keep_rows],
            [out.qubits[c] for c in keep_cols],
        )

    # graph form

    def _reduce_x(self):
        """Row-reduce the X block in place; return the pivot columns"""
        n = len(self)
        rank = 0
        pivots = []
        for col in range(n):
            rows = [r for r in range(rank, n) if self.xs[r, col]]
            if not rows:
                continue
            self._swap_rows(rank, rows[0])
            for r in range(n):
                if r != rank and self.xs[r, col]:
                    self._rowsum(r, rank)
            pivots.append(col)
            rank += 1
        return pivots

    def _swap_rows(self, a, b):
        if a != b:
            for block in (self.xs, self.zs, self.signs):
                block[[a, b]] = block[[b, a]]

    def to_graph(self):
        """Reduce to a graph state by local Cliffords

        Hadamards on the columns without an X pivot make the X block
        invertible, row reduction turns it into the identity, phase
        gates clear Y entries on the diagonal and the remaining signs
        become Z corrections.

        Returns:
            {GraphForm} -- graph, local Cliffords and Z corrections
        """
        work = self.copy()
        operations = []
        pivots = work._reduce_x()
        for col in range(len(work)):
            if col not in pivots:
                work = work.h(work.qubits[col])
                operations.append(('H', work.qubits[col]))
        if len(work._reduce_x()) != len(work):
            raise ConsistencyError('X block is singular after Hadamards')
        for i in range(len(work)):
            if work.zs[i, i]:
                work = work.s(work.qubits[i])
                operations.append(('S', work.qubits[i]))
        adjacency = work.zs.copy()
        if np.any(adjacency != adjacency.T):
            raise ConsistencyError('reduced tableau is not a graph state')
        topology = GraphTopology(work.qubits, adjacency)
        return GraphForm(topology, operations, work.signs.copy())

    def statevector(self):
        """Dense state vector (qubit 0 most significant), n ≤ 12"""
        n = len(self)
        if n > MAX_DENSE_QUBITS:
            raise ContractViolation(
                'dense state vectors are limited to {} qubits'.format(
                    MAX_DENSE_QUBITS
                )
            )
        if n == 0:
            return np.ones(1, dtype=complex)
        projector = np.eye(2 ** n, dtype=complex)
        for i in range(n):
            generator = pauli_matrix(self.xs[i], self.zs[i], self.signs[i])
            projector = projector @ (np.eye(2 ** n) + generator) / 2
        column = int(np.argmax(np.real(np.diag(projector))))
        vector = projector[:, column]
        return vector / np.linalg.norm(vector)


def _gf2_rank(matrix):
    matrix = matrix.copy() % 2
    rank = 0
    rows, cols = matrix.shape
    for col in range(cols):
        hits = [r for r in range(rank, rows) if matrix[r, col]]
        if not hits:
            continue
        matrix[[rank, hits[0]]] = matrix[[hits[0], rank]]
        for r in range(rows):
            if r != rank and matrix[r, col]:
                matrix[r] ^= matrix[rank]
        rank += 1
    return rank


def _gf2_solve(matrix, target):
    """Solve matrix·c = target over GF(2); None when inconsistent"""
    rows, cols = matrix.shape
    augmented = np.hstack([matrix % 2, target.reshape(-1, 1) % 2]).astype(
        np.uint8
    )
    pivots = []
    rank = 0
    for col in range(cols):
        hits = [r for r in range(rank, rows) if augmented[r, col]]
        if not hits:
            continue
        augmented[[rank, hits[0]]] = augmented[[hits[0], rank]]
        for r in range(rows):
            if r != rank and augmented[r, col]:
                augmented[r] ^= augmented[rank]
        pivots.append(col)
        rank += 1
    if np.any(augmented[rank:, -1]):
        return None
    solution = np.zeros(cols, dtype=np.uint8)
    for r, col in enumerate(pivots):
        solution[col] = augmented[r, -1]
    return solution


def ideal_graph_from_edges(topology):
    """Tableau of Π C_Z |+⟩ with generators X_v Π_{w∈N(v)} Z_w"""
    n = len(topology)
    return StabilizerTableau(
        np.eye(n, dtype=np.uint8),
        topology.adjacency.copy(),
        np.zeros(n, dtype=np.uint8),
        topology.vertices,
    )


def single_qubit_pauli(tableau, qubit, letter):
    x = np.zeros(len(tableau), dtype=np.uint8)
    z = np.zeros(len(tableau), dtype=np.uint8)
    i = tableau.index(qubit)
    if letter in ('X', 'Y'):
        x[i] = 1
    if letter in ('Z', 'Y'):
        z[i] = 1
    return x, z


def bell_paulis(tableau, c, t):
    """The two commuting checks X_c Z_t and Z_c X_t of the rotated Bell basis"""
    xc, zc = single_qubit_pauli(tableau, c, 'X')
    zt_x, zt_z = single_qubit_pauli(tableau, t, 'Z')
    first = (xc | zt_x, zc | zt_z)
    zc_x, zc_z = single_qubit_pauli(tableau, c, 'Z')
    xt_x, xt_z = single_qubit_pauli(tableau, t, 'X')
    second = (zc_x | xt_x, zc_z | xt_z)
    return [first, second]


def project_bell_ideal(tableau, c, t, outcome=(0, 0)):
    """Rotated Bell projection |ψ_ij⟩⟨ψ_ij| on (c, t), then removal

    |ψ_ij⟩ is the joint eigenstate of X_c Z_t with eigenvalue (−1)^i and
    of Z_c X_t with eigenvalue (−1)^j; |ψ_00⟩ ∝ |0,+⟩ + |1,−⟩.

    Returns:
        {tuple} -- (tableau on the remaining qubits, per-vertex corrections
                   in canonical Z form, GraphForm of the fused state)

    Raises:
        ContractViolation -- c equals t
        ImpossibleOutcomeError -- the projector annihilates the state
    """
    if c == t:
        raise ContractViolation('Bell projection needs two distinct qubits')
    if tuple(outcome) not in ((0, 0), (0, 1), (1, 0), (1, 1)):
        raise ContractViolation('Bell outcome must be a pair of bits')
    projected = tableau
    for pauli, bit in zip(bell_paulis(tableau, c, t), outcome):
        projected, _ = projected.measure_pauli(pauli[0], pauli[1], bit)
    remaining = projected.remove([c, t])
    form = remaining.to_graph()
    return remaining, form.correction_pattern(), form


def measure_pauli_ideal(tableau, qubit, basis, outcome=0):
    """Single-qubit Z or X measurement followed by removal of the qubit

    Returns:
        {tuple} -- (tableau on the remaining qubits, per-vertex corrections,
                   GraphForm of the remaining state)
    """
    if basis not in ('X', 'Z'):
        raise ContractViolation('basis must be "X" or "Z"')
    x, z = single_qubit_pauli(tableau, qubit, basis)
    projected, _ = tableau.measure_pauli(x, z, outcome)
    remaining = projected.remove([qubit])
    form = remaining.to_graph()
    return remaining, form.correction_pattern(), form


# dense state-vector oracle, used to cross-check the tableau on small graphs

def graph_statevector(topology):
    """Π C_Z |+⟩^n as a dense vector (qubit 0 most significant)"""
    n = len(topology)
    if n > MAX_DENSE_QUBITS:
        raise ContractViolation('too many qubits for a dense vector')
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n)[::-1]) & 1
    upper = np.triu(topology.adjacency.astype(int))
    parity = np.einsum('bi,ij,bj->b', bits, upper, bits) % 2
    return (1 - 2 * parity) / np.sqrt(2 ** n) + 0j


def project_bell_statevector(vector, n, c, t, outcome=(0, 0)):
    """Dense Bell projection on qubit positions (c, t), then trace them out

    Returns the normalized state on the other n − 2 qubits (in their
    original order).
    """
    x1, z1 = np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
    x2, z2 = np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
    x1[c], z1[t] = 1, 1
    z2[c], x2[t] = 1, 1
    eye = np.eye(2 ** n)
    projector = (
        (eye + (-1) ** outcome[0] * pauli_matrix(x1, z1)) / 2 @
        (eye + (-1) ** outcome[1] * pauli_matrix(x2, z2)) / 2
    )
    projected = projector @ vector
    norm = np.linalg.norm(projected)
    if norm < 1e-12:
        raise ImpossibleOutcomeError('projection annihilates the state')
    tensor = (projected / norm).reshape([2] * n)
    # the pair is now in a fixed two-qubit state; read it off one slice
    pair = np.moveaxis(tensor, [c, t], [0, 1]).reshape(4, -1)
    row = int(np.argmax(np.linalg.norm(pair, axis=1)))
    rest = pair[row]
    return rest / np.linalg.norm(rest)


def fidelity(a, b):
    return float(abs(np.vdot(a, b)) ** 2)
