"""Error taxonomy shared across the package.

ConfigError maps to CLI exit code 1, NumericsError (runtime aborts such as
positivity or momentum-boundary leakage) to exit code 2.  Physics assertion
failures are reported through diagnostics results, not exceptions.
"""


class ConfigError(ValueError):
    """A run configuration or field definition violates a stated constraint."""


class GaugeSingularityError(ConfigError):
    """The axis field passes through the spinor-gauge singularity at -z."""


class NumericsError(RuntimeError):
    """A solver detected a numerical violation and aborted the run."""
