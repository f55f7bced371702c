from finslerkit.jets._kernels import use_backend
from finslerkit.jets.jet import (
    DEFAULT_DEGREE,
    Jet,
    arithmetic,
    elementary,
    exp,
    log,
    make_variable,
    partial,
    pow_int,
    sqrt,
    value_of,
)
from finslerkit.jets.oracle import fd_oracle

__all__ = [
    "DEFAULT_DEGREE",
    "Jet",
    "arithmetic",
    "elementary",
    "exp",
    "fd_oracle",
    "log",
    "make_variable",
    "partial",
    "pow_int",
    "sqrt",
    "use_backend",
    "value_of",
]
