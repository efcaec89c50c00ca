"""Gaussian algebra for the displacement-variable layer

Every vector and matrix here is laid out in the ordering
(s_1, ..., s_n, t_1, ..., t_n): q-displacements first, p-displacements
second. Covariances are stored as dimensionless multiples of σ² so that
exact rationals survive; σ² only enters when a density is evaluated.

Two numeric paths share the same code. Float moments use ordinary
numpy arrays. Exact moments use numpy object arrays holding sympy
numbers (rationals, √π, √2) and every operation keeps them exact.
"""
from gkplab.errors import ContractViolation, DegenerateConditioningError
from scipy import stats

import numbers
import numpy as np
import sympy


SYMMETRY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-12
PSD_TOL = 1e-10


def exact(value):
    """Convert a number to a sympy number

    Floats are rationalized, so only pass floats that are meant to be
    rationals (0.5, 0.25, ...). Strings are parsed with sympy, which
    accepts '5/3' or 'sqrt(pi)/3'.
    """
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, str):
        return sympy.sympify(value)
    if isinstance(value, numbers.Integral):
        return sympy.Integer(int(value))
    return sympy.nsimplify(value, rational=True)


def is_exact(array):
    """Whether an array belongs to the exact (sympy) path"""
    return np.asarray(array).dtype == object


def as_float(array):
    """Float copy of a float or exact array"""
    array = np.asarray(array)
    if array.dtype == object:
        return np.array(
            [float(v) for v in array.ravel()], dtype=float
        ).reshape(array.shape)
    return np.array(array, dtype=float)


def as_exact(array):
    """Exact copy of a float or exact array"""
    array = np.asarray(array)
    out = np.empty(array.shape, dtype=object)
    for index, value in np.ndenumerate(array):
        out[index] = exact(value)
    return out


def simplify(array):
    """Simplify every entry of an exact array in place and return it"""
    if is_exact(array):
        for index, value in np.ndenumerate(array):
            array[index] = sympy.nsimplify(sympy.simplify(value))
    return array


def zeros(shape, exact_mode=False):
    if exact_mode:
        return np.full(shape, sympy.Integer(0), dtype=object)
    return np.zeros(shape)


def identity(size, exact_mode=False):
    out = zeros((size, size), exact_mode)
    for i in range(size):
        out[i, i] = sympy.Integer(1) if exact_mode else 1.0
    return out


def symplectic_form(n_modes, exact_mode=False):
    """Ω = [[0, 1], [−1, 0]] in the (s, t) block ordering"""
    omega = zeros((2 * n_modes, 2 * n_modes), exact_mode)
    one = sympy.Integer(1) if exact_mode else 1.0
    for i in range(n_modes):
        omega[i, n_modes + i] = one
        omega[n_modes + i, i] = -one
    return omega


def is_symplectic(linear, tol=SYMPLECTIC_TOL):
    """Check S·Ω·Sᵀ = Ω to within `tol` (max-norm)"""
    linear = as_float(linear)
    size = linear.shape[0]
    if linear.shape != (size, size) or size % 2:
        return False
    omega = symplectic_form(size // 2)
    return np.max(np.abs(linear @ omega @ linear.T - omega)) < tol


class GaussianMoments(object):
    """Mean vector and covariance matrix of the displacement variables

    Arguments:
        mean {array} -- length 2n mean vector
        cov {array} -- 2n×2n covariance as a multiple of σ²

    Keyword Arguments:
        validate {bool} -- check the symmetry and PSD invariants
                           (default: {True})

    Raises:
        ContractViolation -- mismatched shapes, asymmetric or indefinite
                             covariance
    """
    def __init__(self, mean, cov, validate=True):
        self.mean = np.asarray(mean)
        self.cov = np.asarray(cov)
        if self.cov.ndim != 2 or self.cov.shape[0] != self.cov.shape[1]:
            raise ContractViolation(
                'covariance must be square, got shape {}'.format(
                    self.cov.shape
                )
            )
        if self.mean.shape != (self.cov.shape[0],):
            raise ContractViolation(
                'mean of length {} does not match a {}×{} covariance'.format(
                    self.mean.size, *self.cov.shape
                )
            )
        if validate:
            check_covariance(self.cov)

    @property
    def dimension(self):
        return self.mean.size

    @property
    def exact(self):
        return is_exact(self.cov)

    def to_float(self):
        return GaussianMoments(
            as_float(self.mean), as_float(self.cov), validate=False
        )

    def to_exact(self):
        return GaussianMoments(
            as_exact(self.mean), as_exact(self.cov), validate=False
        )

    def __repr__(self):
        return 'GaussianMoments(dimension={}, exact={})'.format(
            self.dimension, self.exact
        )


def check_covariance(cov):
    """Raise unless `cov` is symmetric and positive semidefinite"""
    values = as_float(cov)
    if values.size == 0:
        return
    scale = max(1.0, np.max(np.abs(values)))
    if np.max(np.abs(values - values.T)) > SYMMETRY_TOL * scale:
        raise ContractViolation('covariance is not symmetric')
    if np.min(np.linalg.eigvalsh(values)) < -PSD_TOL * scale:
        raise ContractViolation('covariance is not positive semidefinite')


class AffineMap(object):
    """x ↦ S·x + d on the displacement variables

    Arguments:
        linear {array} -- 2n'×2n matrix S

    Keyword Arguments:
        shift {array} -- length 2n' vector d (default: {zero})
    """
    def __init__(self, linear, shift=None):
        self.linear = np.asarray(linear)
        if self.linear.ndim != 2:
            raise ContractViolation('the linear part must be a matrix')
        if shift is None:
            shift = zeros(self.linear.shape[0], is_exact(self.linear))
        self.shift = np.asarray(shift)
        if self.shift.shape != (self.linear.shape[0],):
            raise ContractViolation('shift length does not match the map')

    @property
    def dimension_in(self):
        return self.linear.shape[1]

    @property
    def dimension_out(self):
        return self.linear.shape[0]

    def then(self, other):
        """The map that applies `self` first and `other` second"""
        return AffineMap(
            other.linear @ self.linear,
            other.linear @ self.shift + other.shift,
        )

    def is_symplectic(self, tol=SYMPLECTIC_TOL):
        return is_symplectic(self.linear, tol)

    def __call__(self, vector):
        return self.linear @ np.asarray(vector) + self.shift


def compose(*maps):
    """Compose maps in application order"""
    result = maps[0]
    for affine in maps[1:]:
        result = result.then(affine)
    return result


def symmetrize(cov):
    return (cov + cov.T) / 2


def apply_affine(moments, affine):
    """Push moments through an affine map

    Arguments:
        moments {GaussianMoments} -- the moments to transform
        affine {AffineMap} -- the map x ↦ S·x + d

    Returns:
        {GaussianMoments} -- mean S·μ + d and covariance S·V·Sᵀ

    Raises:
        ContractViolation -- dimension mismatch
    """
    if affine.dimension_in != moments.dimension:
        raise ContractViolation(
            'map acts on {} variables but the moments have {}'.format(
                affine.dimension_in, moments.dimension
            )
        )
    linear = affine.linear
    cov = symmetrize(linear @ moments.cov @ linear.T)
    return GaussianMoments(affine(moments.mean), cov, validate=False)


def _resolve_index(direction, dimension):
    """Accept an integer index or a unit row selecting one variable"""
    if isinstance(direction, (numbers.Integral, np.integer)):
        index = int(direction)
    else:
        row = as_float(direction)
        hits = np.flatnonzero(row)
        if row.shape != (dimension,) or hits.size != 1 or row[hits[0]] != 1:
            raise ContractViolation('direction must select one variable')
        index = int(hits[0])
    if not 0 <= index < dimension:
        raise ContractViolation(
            'index {} out of range for {} variables'.format(index, dimension)
        )
    return index


def gain_vector(cov, index):
    """Regression coefficients V[:, a] / V[a, a] of every variable on `a`"""
    variance = cov[index, index]
    if as_float(variance) <= 0:
        raise DegenerateConditioningError(
            'variable {} has zero variance'.format(index)
        )
    return cov[:, index] / variance


def condition_on_linear(moments, direction, value, sigma2=1.0):
    """Condition on one displacement variable taking `value`

    Arguments:
        moments {GaussianMoments} -- the joint moments
        direction {int|array} -- index (or unit row) of the variable
        value {number} -- the observed value

    Keyword Arguments:
        sigma2 {float} -- σ², used only for the weight (default: {1.0})

    Returns:
        {tuple} -- (moments of the remaining variables, Gaussian density
                   of `value` under the marginal of the variable)

    Raises:
        DegenerateConditioningError -- the variable has zero variance
    """
    index = _resolve_index(direction, moments.dimension)
    gain = gain_vector(moments.cov, index)
    residual = value - moments.mean[index]
    mean = moments.mean + gain * residual
    cov = symmetrize(moments.cov - np.outer(gain, moments.cov[index, :]))
    keep = [i for i in range(moments.dimension) if i != index]
    weight = stats.norm.pdf(
        float(value),
        loc=float(moments.mean[index]),
        scale=np.sqrt(float(moments.cov[index, index]) * sigma2),
    )
    conditioned = GaussianMoments(
        mean[keep], cov[np.ix_(keep, keep)], validate=False
    )
    if not conditioned.exact and conditioned.dimension:
        check_covariance(conditioned.cov)
    return conditioned, weight


def marginalize(moments, keep):
    """Restrict moments to the variables listed in `keep` (in that order)"""
    keep = list(keep)
    if not keep:
        raise ContractViolation('cannot marginalize onto an empty set')
    for index in keep:
        if not 0 <= index < moments.dimension:
            raise ContractViolation('index {} out of range'.format(index))
    return GaussianMoments(
        moments.mean[keep],
        moments.cov[np.ix_(keep, keep)],
        validate=False,
    )


def conditional_variance(moments, index):
    """Variance of one variable given all of the others

    Equals 1 / (V⁻¹)_aa; for a single variable it is just its variance.
    """
    cov = moments.cov
    index = _resolve_index(index, moments.dimension)
    rest = [i for i in range(moments.dimension) if i != index]
    if not rest:
        return cov[index, index]
    if is_exact(cov):
        block = sympy.Matrix(cov[np.ix_(rest, rest)])
        cross = sympy.Matrix(cov[rest, index])
        value = cov[index, index] - (cross.T * block.LUsolve(cross))[0, 0]
        return sympy.nsimplify(sympy.simplify(value))
    block = cov[np.ix_(rest, rest)]
    cross = cov[rest, index]
    return cov[index, index] - cross @ np.linalg.solve(block, cross)


def regression(cov, index, rest):
    """Coefficients G with E[x_index | x_rest] = G·x_rest (float)"""
    cov = as_float(cov)
    if not len(rest):
        return np.zeros(0)
    block = cov[np.ix_(rest, rest)]
    return np.linalg.lstsq(block, cov[rest, index], rcond=None)[0]


# gate maps in the (s, t) ordering; each builds the 2n×2n linear part

def _one(exact_mode):
    return sympy.Integer(1) if exact_mode else 1.0


def _check_modes(n_modes, *modes):
    for mode in modes:
        if not 0 <= mode < n_modes:
            raise ContractViolation(
                'mode {} out of range for {} modes'.format(mode, n_modes)
            )
    if len(set(modes)) != len(modes):
        raise ContractViolation('two-mode gates need distinct modes')


def cz_map(n_modes, i, j, exact_mode=False):
    """t_i → t_i − s_j and t_j → t_j − s_i"""
    _check_modes(n_modes, i, j)
    linear = identity(2 * n_modes, exact_mode)
    linear[n_modes + i, j] -= _one(exact_mode)
    linear[n_modes + j, i] -= _one(exact_mode)
    return AffineMap(linear)


def cx_map(n_modes, control, target, exact_mode=False):
    """s_T → s_T + s_C and t_C → t_C − t_T"""
    _check_modes(n_modes, control, target)
    linear = identity(2 * n_modes, exact_mode)
    linear[target, control] += _one(exact_mode)
    linear[n_modes + control, n_modes + target] -= _one(exact_mode)
    return AffineMap(linear)


def fourier_map(n_modes, i, inverse=False, exact_mode=False):
    """Quarter rotation: (s, t) → (t, −s), or (−t, s) for the inverse"""
    _check_modes(n_modes, i)
    one = _one(exact_mode)
    sign = -one if inverse else one
    linear = identity(2 * n_modes, exact_mode)
    linear[i, i] = 0 * one
    linear[n_modes + i, n_modes + i] = 0 * one
    linear[i, n_modes + i] = sign
    linear[n_modes + i, i] = -sign
    return AffineMap(linear)


def beamsplitter_map(n_modes, transmissivity, i, j, exact_mode=False):
    """x_i → √T x_i + √(1−T) x_j and x_j → −√(1−T) x_i + √T x_j

    The same rotation acts on the s and the t variables.
    """
    _check_modes(n_modes, i, j)
    if not 0 < float(transmissivity) < 1:
        raise ContractViolation(
            'transmissivity must lie in (0, 1), got {}'.format(transmissivity)
        )
    if exact_mode:
        transmissivity = exact(transmissivity)
        cos, sin = sympy.sqrt(transmissivity), sympy.sqrt(1 - transmissivity)
    else:
        cos = np.sqrt(transmissivity)
        sin = np.sqrt(1 - transmissivity)
    linear = identity(2 * n_modes, exact_mode)
    for offset in (0, n_modes):
        linear[offset + i, offset + i] = cos
        linear[offset + i, offset + j] = sin
        linear[offset + j, offset + i] = -sin
        linear[offset + j, offset + j] = cos
    return AffineMap(linear)


def squeezer_map(n_modes, r, i, exact_mode=False):
    """s → e^{−r} s and t → e^{r} t"""
    _check_modes(n_modes, i)
    linear = identity(2 * n_modes, exact_mode)
    if exact_mode:
        r = exact(r)
        linear[i, i] = sympy.exp(-r)
        linear[n_modes + i, n_modes + i] = sympy.exp(r)
    else:
        linear[i, i] = np.exp(-r)
        linear[n_modes + i, n_modes + i] = np.exp(r)
    return AffineMap(linear)


def displacement_map(n_modes, i, du, dv, exact_mode=False):
    """Pure shift (s_i, t_i) += (du, dv)"""
    _check_modes(n_modes, i)
    shift = zeros(2 * n_modes, exact_mode)
    shift[i] = exact(du) if exact_mode else float(du)
    shift[n_modes + i] = exact(dv) if exact_mode else float(dv)
    return AffineMap(identity(2 * n_modes, exact_mode), shift)
