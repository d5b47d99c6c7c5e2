"""Seeded random expressions, registries and Lagrangians for property checks."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .atoms import FuncAtom, ParamAtom, jet
from .fields import FieldDecl, FieldRegistry, SlotSymmetry
from .forms import (
    Chart,
    FormExpr,
    canonicalize,
    coordinate_star,
    exterior_derivative,
    metric_star,
    wedge,
)
from .variational import LagrangianModel

COORDS = ("t", "x", "y", "z")


def random_registry(rng: random.Random, n: int, with_slots: bool = True) -> FieldRegistry:
    """Scalar ``f``, one-form ``a`` and, when room allows, a two-form ``b``
    and an antisymmetric internal pair ``u[I,J]``."""
    sig = tuple(rng.choice((-1, 1)) for _ in range(n))
    reg = FieldRegistry(Chart(n, COORDS[:n] if n <= 4 else (), sig))
    reg.declare_field(FieldDecl("f", 0))
    reg.declare_field(FieldDecl("a", 1))
    if n >= 2:
        reg.declare_field(FieldDecl("b", 2))
    if with_slots:
        reg.declare_field(FieldDecl("u", 1, (3, 3), (SlotSymmetry("antisym", (0, 1)),)))
    reg.declare_function("V", [0.0, 0.3, -0.5, 0.2])
    return reg


def _coef(rng):
    return Fraction(rng.choice((-1, 1)) * rng.randint(1, 5), rng.randint(1, 3))


def random_atom(rng: random.Random, reg: FieldRegistry, max_order: int = 1, plain: bool = False):
    """A jet atom of a declared field; occasionally a function or constant."""
    n = reg.n
    roll = rng.random()
    if not plain and roll < 0.08:
        return ParamAtom("p", "k", ())
    decl = rng.choice(list(reg.fields.values()))
    comp = tuple(sorted(rng.sample(range(n), decl.degree)))
    inst = rng.choice(decl.instances())
    order = rng.randint(0, max_order)
    deriv = tuple(sorted(rng.choice(range(n)) for _ in range(order)))
    scalars = [d.name for d in reg.fields.values() if d.degree == 0 and not d.slots]
    if not plain and roll > 0.92 and reg.functions and scalars:
        fn = rng.choice(sorted(reg.functions))
        return FuncAtom("f", fn, jet(rng.choice(scalars)), rng.randint(0, 2))
    return jet(decl.name, comp, deriv, inst)


def random_form(rng: random.Random, reg: FieldRegistry, grade: int, nterms: int = 3,
                max_degree: int = 2, max_order: int = 1, vgrade: int = 0) -> FormExpr:
    """Random homogeneous expression of bidegree ``[vgrade; grade]``."""
    n = reg.n
    raw = []
    for _ in range(nterms):
        atoms = [random_atom(rng, reg, max_order) for _ in range(rng.randint(0, max_degree))]
        gens = []
        while len(gens) < vgrade:
            g = random_atom(rng, reg, max_order, plain=True)
            if g not in gens:
                gens.append(g)
        mono = rng.sample(range(n), grade)
        raw.append((_coef(rng), atoms, gens, mono))
    return canonicalize(raw, n)


def random_nonzero_form(rng, reg, grade, **kw) -> FormExpr:
    for _ in range(50):
        e = random_form(rng, reg, grade, **kw)
        if e:
            return e
    raise RuntimeError("could not draw a nonzero form")


def random_lagrangian(seed: int, n: Optional[int] = None) -> LagrangianModel:
    """A covariant first-order Lagrangian built by wedging fields, their
    differentials, Hodge duals and constant coordinate differentials."""
    rng = random.Random(seed)
    n = n or rng.randint(1, 4)
    sig = tuple(rng.choice((-1, 1)) for _ in range(n))
    reg = FieldRegistry(Chart(n, COORDS[:n], sig))
    grades = sorted({rng.randint(0, min(2, n - 1)) for _ in range(rng.randint(1, 3))})
    names = []
    for i, r in enumerate(grades):
        name = f"c{i}"
        reg.declare_field(FieldDecl(name, r))
        names.append(name)
    use_metric = rng.random() < 0.5
    star = (lambda e: metric_star(e, reg.chart)) if use_metric else coordinate_star
    blocks = []
    for name in names:
        c = reg.form(name)
        dc = exterior_derivative(c, max_order=1)
        for b in (c, dc):
            if b:
                blocks += [b, star(b)]
    blocks += [FormExpr(n, {((), (), (mu,)): Fraction(1)}) for mu in range(n)]
    L = FormExpr(n)
    for _ in range(200):
        if len(L.terms) and rng.random() < 0.4:
            break
        acc = FormExpr.scalar(_coef(rng), n)
        for _ in range(4):
            if not acc or acc.grade == n:
                break
            b = rng.choice(blocks)
            if acc.grade + b.grade <= n:
                acc = wedge(acc, b)
        if acc.terms and acc.grade == n:
            L = L + acc
    if L.atom_degree() == 0:
        L = L + wedge(reg.form(names[0]), star(reg.form(names[0])))
    return LagrangianModel(reg, L, f"random-{seed}")


__all__ = [
    "random_registry",
    "random_atom",
    "random_form",
    "random_nonzero_form",
    "random_lagrangian",
]
