"""Exterior calculus, jet fields and variational derivations for
form-valued histories, with a numeric cross-checking oracle."""

from .atoms import JetOrderError, func, jet, param
from .eom import Certificate, EomIdeal, reduce_mod_eom
from .fields import FieldDecl, FieldRegistry, SlotSymmetry, SymmetrySpec, jet_extend, substitute
from .forms import (
    Chart,
    FormExpr,
    GradeError,
    canonicalize,
    coordinate_star,
    dx,
    exterior_derivative,
    interior_product,
    metric_star,
    vol,
    vol_sub,
    wedge,
)
from .variational import (
    LagrangianModel,
    NotASymmetryError,
    NotCovariantError,
    apply_variation,
    euler_lagrange,
    momentaB_check,
    noether_current,
    omega,
    partial_c,
    partial_dc,
    polymomenta,
    theta,
    vertical_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "Certificate", "Chart", "EomIdeal", "FieldDecl", "FieldRegistry", "FormExpr", "GradeError",
    "JetOrderError", "LagrangianModel", "NotASymmetryError", "NotCovariantError", "SlotSymmetry",
    "SymmetrySpec", "apply_variation", "canonicalize", "coordinate_star", "dx", "euler_lagrange",
    "exterior_derivative", "func", "interior_product", "jet", "jet_extend", "metric_star",
    "momentaB_check", "noether_current", "omega", "param", "partial_c", "partial_dc",
    "polymomenta", "reduce_mod_eom", "substitute", "theta", "vertical_derivative", "vol",
    "vol_sub", "wedge",
]
