class DomainError(ValueError):
    """Input is well-typed but outside the domain of the operation."""


class ContractError(ValueError):
    """Caller broke a precondition (shape mismatch, bad label, ...)."""


class TrainingDiverged(RuntimeError):
    pass
