"""Shared exception and warning types."""


class NumericalFailure(RuntimeError):
    """An iterative routine exhausted its budget without converging.

    Carries enough state to diagnose the failure: the index of the
    offending quantity (eigenvalue index, mode index) and the last
    value the iteration produced.
    """

    def __init__(self, message, index=None, last_value=None):
        super().__init__(message)
        self.index = index
        self.last_value = last_value


class SelfCheckError(RuntimeError):
    """Two independent computational routes disagreed beyond tolerance."""


class TruncationWarning(UserWarning):
    """The boundary potential is too small for the requested spectrum.

    Eigenfunctions of the highest requested modes may not be
    exponentially small at the domain edge, so truncation error can
    leak into every downstream quantity.
    """


class BinBoundaryWarning(UserWarning):
    """An eigenvalue sits within solver tolerance of an integer bin edge."""
