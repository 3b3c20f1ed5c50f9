"""Exception types shared across the package."""


class MonogamyLabError(Exception):
    """Base class for errors raised by this package."""


class ScenarioTooLargeError(MonogamyLabError):
    """Scenario exceeds the configured behavior-size cap."""


class SignallingInputError(MonogamyLabError):
    """A nonsignalling behavior was required but a signalling one was given."""


class InputFormatError(MonogamyLabError):
    """Malformed file or serialized object."""
