"""Variational calculus on form-valued histories.

Conventions fixed here and relied on everywhere else:

* partial derivatives are *left* derivatives: ``delta F = delta c ^ dF/dc``;
* for a field with internal slot symmetries, the derivative with respect to
  an ordered instance such as ``w^{KL}`` treats ``w^{KL}`` and ``w^{LK}`` as
  formally independent, so it is the derivative with respect to the stored
  independent component divided by the orbit size (and signed);
* the Euler-Lagrange derivative is ``dL/dc - (-1)^|c| d(dL/d(dc))``;
* ``Theta = -sum Dc ^ P``, the sign for which
  ``DL = sum Dc ^ EL(c) - d Theta`` holds identically;
* the Noether current is ``j = X + i_delta Theta = X - sum delta c ^ P``,
  for which ``dj = sum delta c ^ EL(c)`` whenever ``delta L = dX``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Optional

from .atoms import jet
from .fields import FieldRegistry, SymmetrySpec
from .forms import (
    FormExpr,
    GradeError,
    _accumulate,
    diff_atom,
    exterior_derivative,
    sort_sign,
    total_derivative,
    wedge,
)


class NotCovariantError(ValueError):
    """The expression has no left derivative with respect to the given form."""


class NotASymmetryError(ValueError):
    """``delta L - dX`` does not vanish modulo the equations of motion."""

    def __init__(self, message, residual=None, remainder=None):
        super().__init__(message)
        self.residual = residual
        self.remainder = remainder


def _left_solve(per_comp: dict, r: int, R: int, n: int, what: str) -> FormExpr:
    """Find ``G`` of grade ``R - r`` with ``dx^alpha ^ G = per_comp[alpha]``."""
    g = R - r
    terms: dict = {}
    norm = comb(n - g, r)
    for alpha, h in per_comp.items():
        for (atoms, gens, beta), c in h.terms.items():
            if not set(alpha) <= set(beta):
                raise NotCovariantError(f"{what}: component {alpha} is not a wedge factor")
            gamma = tuple(i for i in beta if i not in alpha)
            s = sort_sign(alpha + gamma)[1]
            _accumulate(terms, (atoms, gens, gamma), c * s / norm)
    G = FormExpr(n, terms)
    for alpha in combinations(range(n), r):
        lhs = FormExpr(n, {((), (), alpha): Fraction(1)}) * G
        if lhs != per_comp.get(alpha, FormExpr(n)):
            raise NotCovariantError(f"{what} does not exist: the expression is not a function of the form")
    return G


class LagrangianModel:
    """A chart, declared fields and an n-form Lagrangian of first-jet atoms."""

    def __init__(self, registry: FieldRegistry, lagrangian: FormExpr, name: str = "",
                 symmetries: Iterable[SymmetrySpec] = ()):
        registry.freeze()
        self.registry = registry
        self.chart = registry.chart
        self.n = registry.n
        self.name = name
        if lagrangian.n != self.n:
            raise ValueError("Lagrangian built over a different dimension")
        if lagrangian.terms:
            if lagrangian.grade != self.n:
                raise GradeError(f"Lagrangian has grade {lagrangian.grade}, expected {self.n}")
            if lagrangian.vgrades() != {0}:
                raise GradeError("Lagrangian must not contain vertical generators")
            if lagrangian.max_jet_order() > 1:
                raise GradeError("Lagrangian must depend on first-jet atoms only")
        self.lagrangian = lagrangian
        self.symmetries = list(symmetries)
        self._cache: dict = {}

    def __repr__(self):
        return f"LagrangianModel({self.name or 'unnamed'}, n={self.n}, fields={list(self.registry.fields)})"

    def decl(self, name):
        return self.registry[name]

    def instances(self, ordered: bool = False) -> list:
        """``(field, slots)`` over dynamical fields; independent components
        by default, every non-vanishing ordered assignment if ``ordered``."""
        out = []
        for decl in self.registry.dynamical():
            insts = decl.all_instances() if ordered else decl.instances()
            out += [(decl.name, inst) for inst in insts]
        return out

    def dynamical_fields(self) -> set:
        return {d.name for d in self.registry.dynamical()}

    def cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # per-instance derived quantities (ordered-instance convention)
    def momentum(self, name, slots=()):
        return partial_dc(self.lagrangian, self.registry, name, slots)

    def force(self, name, slots=()):
        return partial_c(self.lagrangian, self.registry, name, slots)

    def el(self, name, slots=()):
        return euler_lagrange(self, name, slots)


def _instance(registry: FieldRegistry, name: str, slots):
    decl = registry[name]
    canon, sign = decl.canonical_slots(tuple(slots))
    return decl, canon, sign


def _raw_partial_c(F: FormExpr, registry: FieldRegistry, decl, canon) -> FormExpr:
    n, r = registry.n, decl.degree
    if not F.terms:
        return FormExpr(n)
    R = F.grade
    if R < r:
        raise GradeError(f"d/d{decl.name}: expression grade {R} below field grade {r}")
    per = {}
    for alpha in combinations(range(n), r):
        h = diff_atom(F, jet(decl.name, alpha, (), canon))
        if h.terms:
            per[alpha] = h
    return _left_solve(per, r, R, n, f"d/d{decl.name}")


def _raw_partial_dc(F: FormExpr, registry: FieldRegistry, decl, canon) -> FormExpr:
    n, r = registry.n, decl.degree
    if not F.terms:
        return FormExpr(n)
    R = F.grade
    if R < r + 1:
        raise GradeError(f"d/d(d{decl.name}): expression grade {R} below {r + 1}")
    per: dict = {}
    seen: dict = {}
    for alpha in combinations(range(n), r):
        for mu in range(n):
            h = diff_atom(F, jet(decl.name, alpha, (mu,), canon))
            if mu in alpha:
                if h.terms:
                    raise NotCovariantError(
                        f"expression depends on {decl.name} derivatives outside d{decl.name}"
                    )
                continue
            beta, s = sort_sign((mu,) + alpha)
            k = h.scale(s)
            if beta in seen:
                if seen[beta] != k:
                    raise NotCovariantError(
                        f"expression depends on {decl.name} derivatives outside d{decl.name}"
                    )
            else:
                seen[beta] = k
                if k.terms:
                    per[beta] = k
    return _left_solve(per, r + 1, R, n, f"d/d(d{decl.name})")


def partial_c(F: FormExpr, registry: FieldRegistry, name: str, slots=()) -> FormExpr:
    """Left derivative of ``F`` with respect to the field component (the
    derivative atoms held fixed)."""
    decl, canon, sign = _instance(registry, name, slots)
    if not sign:
        return FormExpr(registry.n)
    raw = _raw_partial_c(F, registry, decl, canon)
    return raw.scale(Fraction(sign, decl.orbit_size(canon)))


def partial_dc(F: FormExpr, registry: FieldRegistry, name: str, slots=()) -> FormExpr:
    """Left derivative with respect to ``d(field)``; on a Lagrangian this is
    the historical momentum ``P``."""
    decl, canon, sign = _instance(registry, name, slots)
    if not sign:
        return FormExpr(registry.n)
    raw = _raw_partial_dc(F, registry, decl, canon)
    return raw.scale(Fraction(sign, decl.orbit_size(canon)))


def polymomenta(P: FormExpr) -> dict:
    """Dual components: ``{mu: P^mu}`` with ``P = sum P^mu Vol_mu``."""
    out: dict = {}
    n = P.n
    if P.terms:
        P.grade
    for (atoms, gens, gamma), c in P.terms.items():
        mu = tuple(i for i in range(n) if i not in gamma)
        s = sort_sign(mu + gamma)[1]
        out.setdefault(mu, {})
        _accumulate(out[mu], (atoms, gens, ()), c * s)
    return {mu: FormExpr(n, t) for mu, t in sorted(out.items()) if t}


def euler_lagrange(model: LagrangianModel, name: str, slots=()) -> FormExpr:
    """Euler-Lagrange residual of grade ``n - r`` for one field instance."""
    decl, canon, sign = _instance(model.registry, name, slots)

    def raw():
        f = _raw_partial_c(model.lagrangian, model.registry, decl, canon)
        p = _raw_partial_dc(model.lagrangian, model.registry, decl, canon)
        dp = exterior_derivative(p, max_order=2)
        return f - dp if decl.degree % 2 == 0 else f + dp

    if not sign:
        return FormExpr(model.n)
    res = model.cached(("el", name, canon), raw)
    return res.scale(Fraction(sign, decl.orbit_size(canon)))


def vertical_derivative(expr: FormExpr, fields: Optional[set] = None) -> FormExpr:
    """``D F = sum_a D(a) ^ dF/da`` over the jet coordinates of ``fields``
    (all fields when ``None``).  Generators are placed on the left.

    Results of vertical grade 3 are not representable; a grade-2 input is
    accepted only when its derivative vanishes, as ``D omega`` does.
    """
    top = bool(expr.terms) and max(expr.vgrades()) >= 2
    out = FormExpr(expr.n)
    targets = set()
    for a in expr.atoms():
        if a.kind == "f":
            a = a.arg
        if a.kind == "j" and (fields is None or a.field in fields):
            targets.add(a)
    for a in sorted(targets):
        part = diff_atom(expr, a)
        if part:
            out = out + wedge(FormExpr.generator(a, expr.n), part)
    if top and out:
        raise GradeError("vertical grade would exceed 2")
    return out


def field_variation_form(model: LagrangianModel, name: str, slots=()) -> FormExpr:
    """``Dc`` for one field instance."""
    return vertical_derivative(model.registry.form(name, slots), {name})


def D(model: LagrangianModel, expr: FormExpr) -> FormExpr:
    return vertical_derivative(expr, model.dynamical_fields())


def theta(model: LagrangianModel) -> FormExpr:
    """Presymplectic potential, bidegree ``[1; n-1]``."""

    def build():
        out = FormExpr(model.n)
        for name, inst in model.instances(ordered=True):
            P = model.momentum(name, inst)
            if P:
                out = out - wedge(field_variation_form(model, name, inst), P)
        return out

    return model.cached("theta", build)


def omega(model: LagrangianModel) -> FormExpr:
    """``omega = D Theta``, bidegree ``[2; n-1]``."""
    return model.cached("omega", lambda: D(model, theta(model)))


def momentaB_check(model: LagrangianModel) -> FormExpr:
    """``DL - sum Dc ^ EL(c) + d Theta``; identically zero for a sound engine."""

    def build():
        lhs = D(model, model.lagrangian)
        for name, inst in model.instances(ordered=True):
            el = euler_lagrange(model, name, inst)
            if el:
                lhs = lhs - wedge(field_variation_form(model, name, inst), el)
        return lhs + exterior_derivative(theta(model), max_order=2)

    return model.cached("momentaB", build)


# symmetries ------------------------------------------------------------------


def _variation_table(model: LagrangianModel, sym: SymmetrySpec) -> dict:
    """Map each independent instance to its ``delta c`` form."""
    reg = model.registry
    table: dict = {}
    for (name, slots), form in sym.variations.items():
        decl = reg[name]
        canon, sign = decl.canonical_slots(tuple(slots))
        if not sign:
            if form:
                raise ValueError(f"nonzero variation assigned to vanishing {name}{list(slots)}")
            continue
        if form.terms and form.grade != decl.degree:
            raise GradeError(f"variation of {name} has grade {form.grade}, expected {decl.degree}")
        val = form.scale(sign)
        key = (name, canon)
        if key in table:
            if table[key] != val:
                raise ValueError(f"variation of {name}{list(slots)} violates the slot symmetry")
        else:
            table[key] = val
    return table


def apply_variation(expr: FormExpr, model: LagrangianModel, sym: SymmetrySpec,
                    max_order: int = 3) -> FormExpr:
    """``delta F`` with ``delta(dc) = d(delta c)``, computed atom by atom."""
    table = _variation_table(model, sym)
    comps = {k: v.components() for k, v in table.items()}
    out = FormExpr(expr.n)
    targets = set()
    for a in expr.atoms():
        if a.kind == "f":
            a = a.arg
        if a.kind == "j":
            targets.add(a)
    for a in sorted(targets):
        key = (a.field, a.slots)
        if key not in comps:
            continue
        delta = comps[key].get(a.comp, FormExpr(expr.n))
        for mu in a.deriv:
            delta = total_derivative(delta, mu, max_order)
        if delta:
            out = out + wedge(delta, diff_atom(expr, a))
    return out


def noether_current(model: LagrangianModel, sym: SymmetrySpec, ideal=None,
                    degree_bound: Optional[int] = None) -> FormExpr:
    """Noether current ``j = X - sum delta c ^ P`` (grade ``n - 1``).

    The symmetry condition ``delta L - dX = 0`` modulo the equations of
    motion is checked first; failure raises :class:`NotASymmetryError`.
    """
    from .eom import EomIdeal, reduce_mod_eom

    n = model.n
    X = sym.boundary if sym.boundary is not None else FormExpr(n)
    if X.terms and X.grade != n - 1:
        raise GradeError(f"boundary term has grade {X.grade}, expected {n - 1}")
    residual = apply_variation(model.lagrangian, model, sym)
    if X:
        residual = residual - exterior_derivative(X, max_order=3)
    if residual:
        ideal = ideal or EomIdeal.from_model(model)
        rem, _ = reduce_mod_eom(residual, ideal, degree_bound=degree_bound)
        if rem:
            raise NotASymmetryError(
                f"{sym.name or 'variation'} is not a symmetry: delta L - dX does not vanish on shell",
                residual=residual, remainder=rem,
            )
    table = _variation_table(model, sym)
    j = X
    for name, inst in model.instances(ordered=True):
        decl = model.registry[name]
        canon, sign = decl.canonical_slots(inst)
        delta = table.get((name, canon))
        if not delta:
            continue
        P = model.momentum(name, inst)
        if P:
            j = j - wedge(delta.scale(sign), P)
    return j


__all__ = [
    "LagrangianModel",
    "NotCovariantError",
    "NotASymmetryError",
    "partial_c",
    "partial_dc",
    "polymomenta",
    "euler_lagrange",
    "vertical_derivative",
    "theta",
    "omega",
    "momentaB_check",
    "apply_variation",
    "noether_current",
    "field_variation_form",
    "D",
]
