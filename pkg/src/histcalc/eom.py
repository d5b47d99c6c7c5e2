"""Reduction modulo the equations of motion.

"On shell" is the ideal generated by the Euler-Lagrange residuals together
with their horizontal derivatives ``d(EL)`` and, for bigraded input, their
vertical derivatives ``D(EL)`` (variations tangent to the space of
solutions).  Membership is decided by exact linear algebra: the unknowns are
the coefficients of multiplier monomials of bounded atom degree, and the
candidate monomials are discovered by closing over the support of the target
expression, so only monomials that can actually touch the target enter the
system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from sympy import QQ
from sympy.polys.matrices.sdm import SDM

from .atoms import JetOrderError
from .forms import FormExpr, _join, _merge_atoms, exterior_derivative, wedge
from .variational import LagrangianModel, euler_lagrange, vertical_derivative

log = logging.getLogger(__name__)

MAX_COLUMNS = 250_000


@dataclass
class EomIdeal:
    """Euler-Lagrange residuals of a model, one per independent field component."""

    residuals: list  # [(label, FormExpr)]
    n: int
    fields: frozenset = frozenset()

    @classmethod
    def from_model(cls, model: LagrangianModel) -> "EomIdeal":
        def build():
            res = []
            for name, inst in model.instances():
                el = euler_lagrange(model, name, inst)
                if el:
                    label = name + ("[" + ",".join(map(str, inst)) + "]" if inst else "")
                    res.append((label, el))
            return cls(res, model.n, frozenset(model.dynamical_fields()))

        return model.cached("eom_ideal", build)

    def generators(self, expr: FormExpr) -> list:
        """Residuals and the derivatives of them that can matter for ``expr``."""
        vmax = max(expr.vgrades(), default=0)
        rmax = max(expr.grades(), default=0)
        order = max(2, expr.max_jet_order())
        out = []
        for label, el in self.residuals:
            forms = [(f"EL[{label}]", el)]
            if el.grade + 1 <= rmax:
                try:
                    forms.append((f"d EL[{label}]", exterior_derivative(el, max_order=order)))
                except JetOrderError:
                    pass
            if vmax >= 1:
                for lab, g in list(forms):
                    Dg = vertical_derivative(g, set(self.fields) or None)
                    if Dg:
                        forms.append((f"D({lab})", Dg))
            out += [(lab, g) for lab, g in forms if g]
        return out


@dataclass
class Certificate:
    """Multipliers with ``expr = sum_i C_i ^ g_i``."""

    entries: list = field(default_factory=list)  # [(label, multiplier, generator)]

    def reconstruct(self, n: int) -> FormExpr:
        out = FormExpr(n)
        for _, c, g in self.entries:
            out = out + wedge(c, g)
        return out

    def verify(self, expr: FormExpr) -> bool:
        return self.reconstruct(expr.n) == expr

    def to_obj(self) -> list:
        from .dsl.printer import to_structured_obj

        return [
            {"generator": lab, "multiplier": to_structured_obj(c)} for lab, c, _ in self.entries
        ]


def _divide(target, term):
    """Multiplier key ``m`` with ``m ^ term = +-target``, or None."""
    t_atoms, t_gens, t_mono = target
    a_atoms, a_gens, a_mono = term
    if not set(a_gens) <= set(t_gens) or not set(a_mono) <= set(t_mono):
        return None
    tp = dict(t_atoms)
    for a, p in a_atoms:
        if tp.get(a, 0) < p:
            return None
        tp[a] -= p
    atoms = tuple(sorted((a, p) for a, p in tp.items() if p))
    gens = tuple(g for g in t_gens if g not in a_gens)
    mono = tuple(i for i in t_mono if i not in a_mono)
    return atoms, gens, mono


def _times(mkey, gen: FormExpr) -> dict:
    """Terms of ``m ^ gen`` for a monomial key ``m``."""
    m_atoms, m_gens, m_mono = mkey
    out: dict = {}
    for (atoms, gens, mono), c in gen.terms.items():
        mono2, s1 = _join(m_mono, mono)
        if not s1:
            continue
        gens2, s2 = _join(m_gens, gens)
        if not s2:
            continue
        key = (_merge_atoms(m_atoms, atoms), gens2, mono2)
        v = out.get(key, 0) + c * (s1 * s2)
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return out


def _degree(key) -> int:
    return sum(p for _, p in key[0])


def reduce_mod_eom(expr: FormExpr, ideal: EomIdeal, degree_bound: Optional[int] = None,
                   max_columns: int = MAX_COLUMNS) -> tuple:
    """Return ``(remainder, certificate)``.

    The remainder is zero exactly when a certificate with multipliers of
    atom degree at most ``degree_bound`` (default: the atom degree of
    ``expr``) exists; otherwise the input is returned unchanged and the
    certificate is ``None``.
    """
    n = expr.n
    if not expr.terms:
        return FormExpr(n), Certificate([])
    if degree_bound is None:
        degree_bound = expr.atom_degree()
    gens = ideal.generators(expr)
    v_e = max(expr.vgrades())
    r_e = max(expr.grades())
    usable = []
    for lab, g in gens:
        vg, rg = max(g.vgrades()), max(g.grades())
        if vg <= v_e and rg <= r_e:
            usable.append((lab, g))
    # index generator terms by their smallest atom
    index: dict = {}
    bare: list = []
    for i, (_, g) in enumerate(usable):
        for key in g.terms:
            if key[0]:
                index.setdefault(key[0][0][0], []).append((i, key))
            else:
                bare.append((i, key))

    columns: list = []
    col_of: dict = {}
    seen_targets = set()
    queue = list(expr.terms)
    while queue:
        target = queue.pop()
        if target in seen_targets:
            continue
        seen_targets.add(target)
        cands = list(bare)
        for a, _ in target[0]:
            cands += index.get(a, ())
        for i, gkey in cands:
            m = _divide(target, gkey)
            if m is None or _degree(m) > degree_bound or (i, m) in col_of:
                continue
            vec = _times(m, usable[i][1])
            if not vec:
                continue
            col_of[(i, m)] = len(columns)
            columns.append(((i, m), vec))
            for k in vec:
                if k not in seen_targets:
                    queue.append(k)
            if len(columns) > max_columns:
                log.warning("reduce_mod_eom: candidate cap %d reached", max_columns)
                return expr, None
    if not columns:
        return expr, None

    row_of: dict = {}
    rows: dict = {}
    ncols = len(columns)
    for j, (_, vec) in enumerate(columns):
        for k, c in vec.items():
            r = row_of.setdefault(k, len(row_of))
            rows.setdefault(r, {})[j] = QQ(c.numerator, c.denominator)
    for k, c in expr.terms.items():
        r = row_of.setdefault(k, len(row_of))
        rows.setdefault(r, {})[ncols] = QQ(c.numerator, c.denominator)
    log.debug("reduce_mod_eom: %d rows x %d columns", len(row_of), ncols)
    A = SDM(rows, (len(row_of), ncols + 1), QQ)
    R, pivots = A.rref()
    if pivots and pivots[-1] == ncols:
        return expr, None
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        val = R.get(r, {}).get(ncols)
        if val:
            x[pc] = Fraction(int(val.numerator), int(val.denominator))
    mult: dict = {}
    for j, ((i, m), _) in enumerate(columns):
        if x[j]:
            terms = mult.setdefault(i, {})
            terms[m] = terms.get(m, 0) + x[j]
    cert = Certificate([
        (usable[i][0], FormExpr(n, {k: v for k, v in t.items() if v}), usable[i][1])
        for i, t in sorted(mult.items())
    ])
    if not cert.verify(expr):
        raise AssertionError("internal error: certificate does not reconstruct the input")
    return FormExpr(n), cert


__all__ = ["EomIdeal", "Certificate", "reduce_mod_eom"]
