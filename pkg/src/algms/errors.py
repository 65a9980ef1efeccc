"""Exception hierarchy shared by the solver modules and the CLI."""


class AMSError(Exception):
    """Base class for all library errors."""


class ConfigError(AMSError, ValueError):
    """Invalid user input: mesh parameters, file contents, option combinations."""


class MeshError(ConfigError):
    pass


class StructuralError(AMSError):
    """The matrix does not have the sparsity pattern of a DSSY system."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class NumericalError(AMSError):
    """A numerical kernel failed (breakdown, inconsistent data, indefiniteness)."""


class IndefiniteError(NumericalError):
    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class MatrixMarketError(ConfigError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
