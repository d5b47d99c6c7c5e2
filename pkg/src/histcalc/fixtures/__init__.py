"""Built-in example models, each available as a ``.lagr`` source and as a
programmatic construction that must agree with it exactly."""

from __future__ import annotations

from fractions import Fraction
from importlib import resources
from itertools import product

from ..atoms import func, jet, param
from ..fields import FieldDecl, FieldRegistry, SlotSymmetry, SymmetrySpec
from ..forms import (
    Chart,
    FormExpr,
    coordinate_star,
    dx,
    exterior_derivative,
    interior_product,
    levi_civita,
    metric_star,
    vol,
    wedge,
)
from ..variational import LagrangianModel

HALF = Fraction(1, 2)
MINKOWSKI = Chart(4, ("t", "x", "y", "z"), (-1, 1, 1, 1))

ALIASES = {"tD": "oscillator", "td": "oscillator", "gravity": "palatini", "scalar_field": "scalar"}


def _model(reg, L, name, syms=()):
    syms = list(syms)
    return LagrangianModel(reg, L, name, syms), syms


def oscillator():
    reg = FieldRegistry(Chart(1, ("t",)))
    reg.declare_field(FieldDecl("q", 0))
    reg.declare_function("V", [0, 0, HALF, 0, Fraction(1, 10)])
    q, dq = reg.form("q"), exterior_derivative(reg.form("q"))
    L = wedge(dq, coordinate_star(dq)).scale(HALF) - wedge(FormExpr.atom(func("V", jet("q")), 1), dx(0, 1))
    shift = SymmetrySpec("time_shift", {("q", ()): interior_product(0, dq)}, interior_product(0, L), ())
    return _model(reg, L, "oscillator", [shift])


def harmonic():
    reg = FieldRegistry(Chart(1, ("t",)))
    reg.declare_field(FieldDecl("q", 0))
    q = reg.form("q")
    dq = exterior_derivative(q)
    L = wedge(dq, coordinate_star(dq)).scale(HALF) - wedge(q * q, dx(0, 1)).scale(HALF)
    return _model(reg, L, "harmonic")


def scalar():
    reg = FieldRegistry(MINKOWSKI)
    reg.declare_field(FieldDecl("phi", 0))
    phi = reg.form("phi")
    dphi = exterior_derivative(phi)
    m = FormExpr.atom(param("m"), 4)
    L = wedge(dphi, metric_star(dphi, MINKOWSKI)).scale(-HALF) - (m * m * phi * phi * vol(4)).scale(HALF)
    syms = [
        SymmetrySpec(f"shift_{MINKOWSKI.coords[mu]}", {("phi", ()): interior_product(mu, dphi)},
                     interior_product(mu, L), ())
        for mu in (0, 1)
    ]
    return _model(reg, L, "scalar", syms)


def _em_registry(with_gauge: bool):
    reg = FieldRegistry(MINKOWSKI)
    reg.declare_field(FieldDecl("A", 1))
    if with_gauge:
        reg.declare_field(FieldDecl("chi", 0, param=True))
    A = reg.form("A")
    dA = exterior_derivative(A)
    return reg, A, wedge(dA, metric_star(dA, MINKOWSKI)).scale(HALF)


def em():
    reg, A, L = _em_registry(True)
    gauge = SymmetrySpec("gauge", {("A", ()): exterior_derivative(reg.form("chi"))}, FormExpr(4), ("chi",))
    return _model(reg, L, "em", [gauge])


def em_broken():
    reg, A, L = _em_registry(False)
    return _model(reg, L, "em_broken", [SymmetrySpec("rescale", {("A", ()): A}, FormExpr(4), ())])


def palatini():
    reg = FieldRegistry(MINKOWSKI)
    anti = (SlotSymmetry("antisym", (0, 1)),)
    reg.declare_field(FieldDecl("e", 1, (4,)))
    reg.declare_field(FieldDecl("w", 1, (4, 4), anti))
    reg.declare_field(FieldDecl("lam", 0, (4, 4), anti, param=True))
    eta = MINKOWSKI.signature
    r = range(4)
    e = {I: reg.form("e", (I,)) for I in r}
    w = {(I, J): reg.form("w", (I, J)) for I, J in product(r, r)}
    lam = {(I, J): reg.form("lam", (I, J)) for I, J in product(r, r)}
    L = FormExpr(4)
    for I, J, K, M in product(r, repeat=4):
        eps = levi_civita((I, J, K, M))
        if eps:
            curv = exterior_derivative(w[(K, M)])
            for N in r:
                curv = curv + wedge(w[(K, N)], w[(N, M)]).scale(eta[N])
            L = L + wedge(wedge(e[I], e[J]), curv).scale(eps)
    var = {}
    for I in r:
        var[("e", (I,))] = sum((wedge(lam[(I, J)], e[J]).scale(eta[J]) for J in r), FormExpr(4))
    for I, J in product(r, r):
        acc = -exterior_derivative(lam[(I, J)])
        for K in r:
            acc = acc + wedge(lam[(I, K)], w[(K, J)]).scale(eta[K])
            acc = acc - wedge(w[(I, K)], lam[(K, J)]).scale(eta[K])
        var[("w", (I, J))] = acc
    return _model(reg, L, "palatini", [SymmetrySpec("lorentz", var, FormExpr(4), ("lam",))])


BUILDERS = {
    "oscillator": oscillator,
    "harmonic": harmonic,
    "scalar": scalar,
    "em": em,
    "em_broken": em_broken,
    "palatini": palatini,
}


def names() -> list:
    return sorted(BUILDERS)


def resolve(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(names())}")
    return key


def source(name: str) -> str:
    """Text of the fixture's ``.lagr`` file."""
    return resources.files(__name__).joinpath(f"{resolve(name)}.lagr").read_text(encoding="utf-8")


def load(name: str):
    """Parse the fixture's ``.lagr`` source; returns ``(model, symmetries)``."""
    from ..dsl.parser import parse

    key = resolve(name)
    return parse(source(key), key)


def build(name: str):
    """Programmatic construction; returns ``(model, symmetries)``."""
    return BUILDERS[resolve(name)]()
