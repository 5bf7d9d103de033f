"""Error taxonomy shared by the library and the command-line harness."""


class InputError(ValueError):
    """Malformed user input: spec files, CSV data, model files, options."""


class FitError(RuntimeError):
    """A fitting engine could not produce a model from the given data."""


class MismatchError(ValueError):
    """A model and a dataset do not fit together (unknown features, arity)."""
