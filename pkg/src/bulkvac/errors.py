"""Exception hierarchy shared by the library and the CLI.

Every error carries an ``exit_code`` so the command line can map failures
onto a stable taxonomy (2 config, 3 instability, 4 numeric).
"""


class BulkVacError(Exception):
    exit_code = 4


class ParameterError(BulkVacError, ValueError):
    """A distribution or model parameter is out of its admissible range."""

    exit_code = 2


class ConfigError(BulkVacError):
    """A configuration document failed schema validation."""

    exit_code = 2

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}" if pointer else message)


class NonAbsorbingError(ParameterError):
    """DPH transition matrix does not guarantee absorption."""


class InstabilityError(BulkVacError):
    """Traffic intensity is not below one."""

    exit_code = 3

    def __init__(self, rho: float):
        self.rho = rho
        super().__init__(f"unstable model: rho = {rho:.6f} >= 1")


class NumericalError(BulkVacError):
    exit_code = 4


class RootCountError(NumericalError):
    def __init__(self, expected: int, found: int, moduli):
        self.moduli = list(moduli)
        shown = ", ".join(f"{m:.6g}" for m in sorted(self.moduli)[: expected + 4])
        super().__init__(
            f"expected {expected} roots strictly inside the unit disk, found {found}; "
            f"smallest moduli: {shown}"
        )


class NearDegenerateError(NumericalError):
    def __init__(self, root: complex):
        self.root = root
        super().__init__(
            f"characteristic root {root:.6g} lies on the unit circle; "
            "perturb the parameters slightly (e.g. the group-size pmf) and retry"
        )


class ConditioningError(NumericalError):
    pass


class NegativeProbabilityError(NumericalError):
    """A computed probability is negative beyond round-off."""


class TruncationError(NumericalError):
    def __init__(self, mass: float, suggested: int):
        self.suggested = suggested
        super().__init__(
            f"probability mass {mass:.3e} at the truncation boundary; "
            f"retry with a queue cap of at least {suggested}"
        )
