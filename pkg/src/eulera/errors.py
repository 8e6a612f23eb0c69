"""Exception hierarchy shared by all modules.

``ValidationError`` marks bad input (CLI exit status 1); ``NumericalError``
marks a computation that could not be completed (CLI exit status 2).
"""


class EulerAlphaError(Exception):
    pass


class ValidationError(EulerAlphaError, ValueError):
    pass


class NumericalError(EulerAlphaError, RuntimeError):
    pass


class SingularModeError(NumericalError):
    """A per-mode linear system could not be factorized."""

    def __init__(self, mode, detail=""):
        self.mode = mode
        msg = f"singular system for Fourier mode index {mode}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CFLError(NumericalError):
    pass


class PicardConvergenceError(NumericalError):
    def __init__(self, msg, t=None, iterations=None):
        self.t = t
        self.iterations = iterations
        super().__init__(msg)
