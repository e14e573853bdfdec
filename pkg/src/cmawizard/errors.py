"""Exception types shared across the package."""


class CmaWizardError(Exception):
    """Base class for errors raised by this package."""


class InvalidDomainError(CmaWizardError):
    pass


class InvalidLossError(CmaWizardError):
    pass


class BudgetTooSmallError(CmaWizardError):
    pass


class UnknownSuiteError(CmaWizardError):
    pass


class UnknownBaselineError(CmaWizardError):
    pass


class ConfigurationError(CmaWizardError):
    """Tuner or CLI settings incompatible with the requested experiment."""


class RegistryError(CmaWizardError):
    pass


class EvaluationError(CmaWizardError):
    pass


class StoreError(CmaWizardError):
    pass
