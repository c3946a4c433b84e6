"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration problems
exit 1, numerical-invariant breaches exit 2.
"""


class ConfigError(ValueError):
    """A configuration invariant is violated (bad prices, shapes, signs)."""


class NumericalInvariantError(RuntimeError):
    """A solved quantity breaks a structural invariant beyond tolerance.

    Raised e.g. when a value-table row loses concavity (grid or quadrature
    too coarse) or a simulated trial fails the charging-completion guarantee.
    """
