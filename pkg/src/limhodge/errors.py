"""Exception taxonomy shared across the package."""


class LimhodgeError(Exception):
    pass


class NotCompatible(LimhodgeError):
    """A map violates the subspace/filtration containments it must preserve."""


class NotHermitian(LimhodgeError):
    pass


class UnknownFiltration(LimhodgeError):
    pass


class MismatchedObject(LimhodgeError):
    pass


class NotAConvolution(LimhodgeError):
    pass


class NotNilpotent(LimhodgeError):
    pass


class NonCommuting(LimhodgeError):
    pass


class NotLefschetz(LimhodgeError):
    pass


class DescentAxiomFailure(LimhodgeError):
    """Cohomology descent produced a module violating an axiom (upstream bug)."""


class AxiomFailure(LimhodgeError):
    """A builder output violates one of the lemma-level identities."""


class SchemaError(LimhodgeError):
    pass


class AdjointnessViolation(SchemaError):
    pass


class HardLefschetzViolation(SchemaError):
    pass


class PurityViolation(SchemaError):
    pass


class TheoremCheckFailure(LimhodgeError):
    pass


class ParamError(LimhodgeError):
    pass
