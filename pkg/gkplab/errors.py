class GkpError(Exception):
    """Base class for every error raised by the simulation library"""
    pass


class ContractViolation(GkpError, ValueError):
    """A pre-condition of an operation does not hold

    Raised for dimension mismatches, invalid mode indices, out of range
    parameters and similar caller mistakes.
    """
    pass


class DegenerateConditioningError(ContractViolation):
    """Conditioning on a displacement variable with zero variance"""
    pass


class UnphysicalEnvelopeError(ContractViolation):
    """Envelope variances are not positive or violate δκ < 1"""
    pass


class ScriptError(ContractViolation):
    """A protocol script could not be parsed or validated

    The offending step index (if any) is kept on `step` so that the
    command line can point at it.
    """
    def __init__(self, msg, step=None):
        self.step = step
        if step is not None:
            msg = 'step {}: {}'.format(step, msg)
        super(ScriptError, self).__init__(msg)


class ImpossibleOutcomeError(GkpError):
    """A projector annihilates the ideal stabilizer state"""
    pass


class CapacityError(GkpError):
    """The grid oracle was asked to hold more modes than it supports"""
    pass


class AliasingError(GkpError):
    """A grid operation pushed amplitude past the edge of the grid"""
    pass


class ConsistencyError(GkpError):
    """Two independent derivations of the same quantity disagree"""
    pass


class PostSelectionRejected(GkpError):
    """Every attempt of a run was rejected by a post-selection window"""
    pass


class RegimeWarning(UserWarning):
    """Parameters are outside the σ ≪ √π regime the approximations assume"""
    pass
