"""Exception taxonomy for the generator and harness.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat and
the categories meaningful: configuration problems, malformed files/programs,
semantic execution failures, and sampling exhaustion.
"""


class RefDiagError(Exception):
    """Base class for all package errors."""


class ConfigError(RefDiagError):
    """Invalid or out-of-range configuration value."""


class FormatError(RefDiagError):
    """Malformed or version-incompatible input file."""


class MaskFormatError(FormatError):
    """Corrupt run-length encoded mask (runs do not sum to width*height)."""


class ProgramFormatError(FormatError):
    """Base for malformed program documents."""


class UnknownFunctionError(ProgramFormatError):
    """Program references a function outside the module catalog."""


class ProgramArityError(ProgramFormatError):
    """Node has the wrong number of inputs or value inputs."""


class DanglingInputError(ProgramFormatError):
    """Node input index does not reference an existing node."""


class CyclicProgramError(ProgramFormatError):
    """Node references itself or a later node (list is not topological)."""


class MultipleRootsError(ProgramFormatError):
    """Program does not have exactly one unconsumed output node."""


class InvalidReferenceError(RefDiagError):
    """Lookup of an object id that is not part of the scene."""


class ExecutionError(RefDiagError):
    """Program execution failed; carries the offending node index."""

    def __init__(self, node_index, cause):
        self.node_index = node_index
        self.cause = cause
        super().__init__(f"node {node_index}: {cause}")


class NonUniqueReferentError(RefDiagError):
    """`unique` applied to a set with zero or more than one element."""


class RankOutOfRangeError(RefDiagError):
    """`ordinal` rank outside 1..len(set)."""


class ArityViolationError(RefDiagError):
    """Runtime input-set arity violation (e.g. relate on a non-singleton)."""


class RenderRequiredError(RefDiagError):
    """A `visible` node was executed without render data."""


class UndefinedRatioError(RefDiagError):
    """Occlusion ratio requested for an off-screen object."""


class SamplingExhaustedError(RefDiagError):
    """Scene sampling gave up; message names the failing constraint."""


class GenerationExhaustedError(RefDiagError):
    """Expression sampling hit the retry cap; message names the scene."""


class TemplateError(RefDiagError):
    """Text template does not match the program skeleton."""
