"""Exception types. The CLI maps them to exit codes."""


class InputError(ValueError):
    """Malformed or inconsistent input (exit code 2)."""


class InfeasibleError(ValueError):
    """Well-formed input on which the requested analysis cannot run (exit code 1)."""


class TrainingError(RuntimeError):
    """Optimisation diverged."""
