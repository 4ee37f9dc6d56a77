"""Python bindings for the Anderson operator toolkit.

Fields are float64 arrays of shape (n, n) indexed [i, j] at the node
(i h, j h), h = 2 pi / n.
"""

from ._core import (
    Operator,
    __version__,
    eigendecompose,
    energy,
    fountain_solve,
    heat_diagnostics,
    kato_modulus_log,
    mountain_pass_solve,
    resolvent_sup_norm,
    run,
    sample_white_noise,
    selfdual_minimize,
    selfdual_value,
)

__all__ = [
    "Operator",
    "__version__",
    "eigendecompose",
    "energy",
    "fountain_solve",
    "heat_diagnostics",
    "kato_modulus_log",
    "mountain_pass_solve",
    "resolvent_sup_norm",
    "run",
    "sample_white_noise",
    "selfdual_minimize",
    "selfdual_value",
]
