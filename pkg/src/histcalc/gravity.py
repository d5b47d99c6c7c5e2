"""Lorentz-invariance identities of first-order (tetrad/connection) gravity."""

from __future__ import annotations

from fractions import Fraction

from .fields import SymmetrySpec
from .forms import FormExpr, exterior_derivative, wedge
from .variational import LagrangianModel


class WrongModelError(ValueError):
    """The model does not carry a tetrad and a Lorentz connection."""


def _check_gravity(model: LagrangianModel, tetrad: str, connection: str) -> int:
    reg = model.registry
    if tetrad not in reg.fields or connection not in reg.fields:
        raise WrongModelError(f"model lacks fields {tetrad!r} and {connection!r}")
    e, w = reg[tetrad], reg[connection]
    ok = (
        e.degree == 1 and len(e.slots) == 1
        and w.degree == 1 and len(w.slots) == 2 and w.slots[0] == w.slots[1] == e.slots[0]
        and any(s.kind == "antisym" and set(s.positions) == {0, 1} for s in w.symmetries)
    )
    if not ok:
        raise WrongModelError("expected a one-form tetrad e^I and an antisymmetric connection w^{IJ}")
    if model.chart.signature is None or len(model.chart.signature) < e.slots[0]:
        raise WrongModelError("the internal metric is taken from the chart signature, which is missing")
    return e.slots[0]


def _eta(model, i) -> int:
    return model.chart.signature[i]


def connection_mixed(model: LagrangianModel, J: int, B: int, connection: str = "w") -> FormExpr:
    """``w^J_B = w^{JK} eta_{KB}``."""
    return model.registry.form(connection, (J, B)).scale(_eta(model, B))


def global_lorentz_charge(model: LagrangianModel, tetrad: str = "e", connection: str = "w") -> dict:
    """``J_{AB} = Pi_{[AJ} w^J_B]`` for every pair ``A < B``."""
    size = _check_gravity(model, tetrad, connection)
    Pi = {(A, J): model.momentum(connection, (A, J)) for A in range(size) for J in range(size)}
    out = {}
    for A in range(size):
        for B in range(A + 1, size):
            acc = FormExpr(model.n)
            for J in range(size):
                acc = acc + wedge(Pi[(A, J)], connection_mixed(model, J, B, connection))
                acc = acc - wedge(Pi[(B, J)], connection_mixed(model, J, A, connection))
            out[(A, B)] = acc.scale(Fraction(1, 2))
    return out


def local_lorentz_identity(model: LagrangianModel, tetrad: str = "e", connection: str = "w") -> dict:
    """``dPi_{AB} - Pi_{JB} w^J_A + Pi_{AJ} w_B^J`` for every pair ``A < B``."""
    size = _check_gravity(model, tetrad, connection)
    reg = model.registry
    Pi = {(A, J): model.momentum(connection, (A, J)) for A in range(size) for J in range(size)}
    out = {}
    for A in range(size):
        for B in range(A + 1, size):
            acc = exterior_derivative(Pi[(A, B)])
            for J in range(size):
                acc = acc - wedge(Pi[(J, B)], connection_mixed(model, J, A, connection))
                lowered = reg.form(connection, (B, J)).scale(_eta(model, B))
                acc = acc + wedge(Pi[(A, J)], lowered)
            out[(A, B)] = acc
    return out


def lorentz_symmetry(model: LagrangianModel, parameter: str = "lam", tetrad: str = "e",
                     connection: str = "w") -> SymmetrySpec:
    """Infinitesimal local Lorentz transformation with parameter ``lam^{IJ}``:
    ``delta e^I = lam^I_J e^J`` and
    ``delta w^{IJ} = lam^I_K w^{KJ} - w^{IK} lam_K^J - d lam^{IJ}``, the sign
    of ``d lam`` that keeps ``dw + w^w`` covariant."""
    size = _check_gravity(model, tetrad, connection)
    reg = model.registry
    if parameter not in reg.fields:
        raise WrongModelError(f"parameter field {parameter!r} is not declared")
    lam = {(I, J): reg.form(parameter, (I, J)) for I in range(size) for J in range(size)}
    e = {I: reg.form(tetrad, (I,)) for I in range(size)}
    w = {(I, J): reg.form(connection, (I, J)) for I in range(size) for J in range(size)}
    var = {}
    for I in range(size):
        acc = FormExpr(model.n)
        for J in range(size):
            acc = acc + wedge(lam[(I, J)], e[J]).scale(_eta(model, J))
        var[(tetrad, (I,))] = acc
    for I in range(size):
        for J in range(size):
            acc = -exterior_derivative(lam[(I, J)])
            for K in range(size):
                eta = _eta(model, K)
                acc = acc + wedge(lam[(I, K)], w[(K, J)]).scale(eta)
                acc = acc - wedge(w[(I, K)], lam[(K, J)]).scale(eta)
            var[(connection, (I, J))] = acc
    return SymmetrySpec("lorentz", var, FormExpr(model.n), (parameter,))


__all__ = [
    "WrongModelError",
    "global_lorentz_charge",
    "local_lorentz_identity",
    "lorentz_symmetry",
    "connection_mixed",
]
