"""Exception types shared across the package.

Validation problems derive from ``ValueError``; numerical failures derive from
:class:`NumericalError`. The command line maps the two groups to exit codes
2 and 3.
"""


class UnknownSpeciesError(KeyError, ValueError):
    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"unknown ion species {self.label!r}"


class ChainShapeError(ValueError):
    """The crystal does not have the shape an operation requires."""


class DecoupledIonError(ValueError):
    """An ion that must take part has zero coupling to the chosen mode."""


class PhysicalityError(ValueError):
    """Measured quantities are inconsistent with any density matrix."""


class FitError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class ConvergenceError(NumericalError):
    pass


class LeakageError(NumericalError):
    """Population reached the top of the truncated Fock space."""

    def __init__(self, population, n_max, suggested_n_max, mode=0):
        self.population = population
        self.n_max = n_max
        self.suggested_n_max = suggested_n_max
        self.mode = mode
        where = f" in mode {mode}" if mode else ""
        super().__init__(
            f"Fock truncation leakage{where}: top-two-level population {population:.3g} "
            f"exceeds 1e-6 at n_max={n_max}; rerun with n_max >= {suggested_n_max}"
        )
