"""qclab: numerical laboratory for planar quasiconformal mapping theory."""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    GridField,
    GridSpec,
    RegionMask,
    disc_mask,
    full_mask,
    lp_norm,
    quadrature_integral,
    sample,
    wirtinger_derivative,
)
