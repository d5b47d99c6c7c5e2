"""Field declarations, first-jet lifts and substitution.

Internal indices are concrete: a field such as the connection ``w^{IJ}`` is
stored as its independent components ``w^{01}, w^{02}, ...`` and every
contraction over internal indices is expanded explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import factorial
from typing import Optional

from .atoms import Atom, FuncAtom, JetAtom, ParamAtom, jet
from .forms import (
    Chart,
    FormExpr,
    GradeError,
    _accumulate,
    exterior_derivative,
    sort_sign,
    total_derivative,
    wedge,
)


@dataclass(frozen=True)
class SlotSymmetry:
    """(Anti)symmetry among a group of internal slot positions."""

    kind: str  # "antisym" | "sym"
    positions: tuple

    def __post_init__(self):
        if self.kind not in ("antisym", "sym"):
            raise ValueError(f"unknown slot symmetry {self.kind!r}")
        if len(self.positions) < 2 or len(set(self.positions)) != len(self.positions):
            raise ValueError("a slot symmetry needs at least two distinct positions")


@dataclass(frozen=True)
class FieldDecl:
    """An r-history with optional internal index slots.

    ``slots`` gives the range of each internal slot; ``param`` marks a
    variation parameter that is never varied itself.
    """

    name: str
    degree: int
    slots: tuple = ()
    symmetries: tuple = ()
    param: bool = False

    def canonical_slots(self, values) -> tuple:
        """Return ``(canonical_values, sign)``; sign 0 when the component vanishes."""
        vals = list(values)
        if len(vals) != len(self.slots):
            raise ValueError(f"{self.name} takes {len(self.slots)} internal indices, got {len(vals)}")
        for v, rng in zip(vals, self.slots):
            if not 0 <= v < rng:
                raise ValueError(f"internal index {v} out of range {rng} for {self.name}")
        sign = 1
        for sym in self.symmetries:
            group = [vals[p] for p in sym.positions]
            if sym.kind == "antisym":
                srt, s = sort_sign(group)
                if not s:
                    return tuple(vals), 0
                sign *= s
            else:
                srt = tuple(sorted(group))
            for p, v in zip(sym.positions, srt):
                vals[p] = v
        return tuple(vals), sign

    def instances(self) -> list:
        """Independent (canonical, non-vanishing) internal components."""
        out = []
        for vals in product(*(range(r) for r in self.slots)):
            canon, s = self.canonical_slots(vals)
            if s and canon == vals:
                out.append(vals)
        return out

    def all_instances(self) -> list:
        """Every non-vanishing ordered slot assignment."""
        return [v for v in product(*(range(r) for r in self.slots)) if self.canonical_slots(v)[1]]

    def orbit_size(self, values) -> int:
        """Number of ordered assignments equivalent to ``values``."""
        size = 1
        for sym in self.symmetries:
            group = [values[p] for p in sym.positions]
            count = factorial(len(group))
            for v in set(group):
                count //= factorial(group.count(v))
            size *= count
        return size


class FieldRegistry:
    """Declared fields and functions over one chart.

    Declarations mutate the registry during setup; call :meth:`freeze`
    before sharing it.
    """

    def __init__(self, chart: Chart):
        self.chart = chart
        self.fields: dict = {}
        self.functions: dict = {}
        self.frozen = False

    @property
    def n(self) -> int:
        return self.chart.n

    def freeze(self) -> "FieldRegistry":
        self.frozen = True
        return self

    def _writable(self):
        if self.frozen:
            raise RuntimeError("registry is frozen")

    def declare_field(self, decl: FieldDecl) -> FieldDecl:
        self._writable()
        if decl.name in self.fields or decl.name in self.functions:
            raise ValueError(f"duplicate declaration of {decl.name!r}")
        if not 0 <= decl.degree <= self.n:
            raise ValueError(f"form degree {decl.degree} outside [0, {self.n}]")
        used = set()
        for sym in decl.symmetries:
            if any(p < 0 or p >= len(decl.slots) for p in sym.positions):
                raise ValueError(f"symmetry of {decl.name} references an undeclared slot")
            if used & set(sym.positions):
                raise ValueError(f"overlapping symmetry groups on {decl.name}")
            used |= set(sym.positions)
            ranges = {decl.slots[p] for p in sym.positions}
            if len(ranges) != 1:
                raise ValueError(f"symmetric slots of {decl.name} must share a range")
            if sym.kind == "antisym" and ranges.pop() < len(sym.positions):
                raise ValueError(
                    f"antisymmetric group of size {len(sym.positions)} over a smaller range "
                    f"leaves {decl.name} with no components"
                )
        self.fields[decl.name] = decl
        return decl

    def declare_function(self, name: str, numeric=None) -> str:
        """A single-variable function such as a potential ``V``; ``numeric``
        optionally binds polynomial coefficients (lowest order first) used by
        the numeric oracle."""
        self._writable()
        if name in self.fields or name in self.functions:
            raise ValueError(f"duplicate declaration of {name!r}")
        self.functions[name] = None if numeric is None else [float(c) for c in numeric]
        return name

    def __getitem__(self, name) -> FieldDecl:
        try:
            return self.fields[name]
        except KeyError:
            raise KeyError(f"unknown field {name!r}") from None

    def dynamical(self) -> list:
        return [d for d in self.fields.values() if not d.param]

    def params(self) -> list:
        return [d for d in self.fields.values() if d.param]

    def instance(self, name: str, slots=()) -> tuple:
        decl = self[name]
        return decl.canonical_slots(tuple(slots))

    def form(self, name: str, slots=()) -> FormExpr:
        """``c = sum_alpha c_alpha dx^alpha`` for one internal component."""
        decl = self[name]
        canon, sign = decl.canonical_slots(tuple(slots))
        terms = {}
        if sign:
            for alpha in combinations(range(self.n), decl.degree):
                terms[(((jet(name, alpha, (), canon), 1),), (), alpha)] = Fraction(sign)
        return FormExpr(self.n, terms)

    def jet_atoms(self, name: str, slots=(), order: int = 1) -> list:
        decl = self[name]
        canon, sign = decl.canonical_slots(tuple(slots))
        if not sign:
            return []
        out = []
        comps = list(combinations(range(self.n), decl.degree))
        for k in range(order + 1):
            for der in combinations_with_replacement(range(self.n), k):
                out += [jet(name, a, der, canon) for a in comps]
        return out

    def count_atoms(self, name: str, order: int = 1) -> tuple:
        """``(#undifferentiated, #first-derivative)`` atoms over all instances."""
        decl = self[name]
        n0 = n1 = 0
        for inst in decl.instances():
            atoms = self.jet_atoms(name, inst, order)
            n0 += sum(1 for a in atoms if not a.deriv)
            n1 += sum(1 for a in atoms if len(a.deriv) == 1)
        return n0, n1


def combinations_with_replacement(it, k):
    from itertools import combinations_with_replacement as cwr

    return cwr(it, k)


def declare_field(registry: FieldRegistry, decl: FieldDecl) -> FieldDecl:
    return registry.declare_field(decl)


def jet_extend(registry: FieldRegistry, name: str, slots=()) -> tuple:
    """First jet lift ``(c, dc)`` of a declared field component."""
    c = registry.form(name, slots)
    return c, exterior_derivative(c)


@dataclass
class SymmetrySpec:
    """A variation ``delta c`` per field instance plus the boundary form ``X``.

    Keys of ``variations`` are ``(field, slots)`` pairs; the variation of
    ``dc`` is always ``d(delta c)``.
    """

    name: str
    variations: dict = field(default_factory=dict)
    boundary: Optional[FormExpr] = None
    params: tuple = ()


def _instance_bindings(registry: FieldRegistry, name: str, slots, repl: FormExpr, max_order: int):
    decl = registry[name]
    canon, sign = decl.canonical_slots(tuple(slots))
    if not sign:
        raise ValueError(f"{name}{list(slots)} vanishes identically and cannot be bound")
    if repl.terms and repl.grade != decl.degree:
        raise GradeError(f"binding for {name} has grade {repl.grade}, expected {decl.degree}")
    if sign < 0:
        repl = -repl
    comps = repl.components()
    return canon, comps


class _Binder:
    """Lazy atom -> replacement map for :func:`substitute`."""

    def __init__(self, registry, bindings, max_order):
        self.n = registry.n
        self.atom_map: dict = {}
        self.field_map: dict = {}
        self.max_order = max_order
        for key, repl in bindings.items():
            if not isinstance(repl, FormExpr):
                repl = FormExpr.scalar(repl, self.n)
            if isinstance(key, (JetAtom, FuncAtom, ParamAtom)):
                if repl.terms and repl.grade != 0:
                    raise GradeError(f"atom binding must be grade 0, got {repl.grade}")
                self.atom_map[key] = repl
            else:
                name, slots = (key, ()) if isinstance(key, str) else key
                decl = registry[name]
                if decl.slots and not slots and isinstance(key, str):
                    for inst in decl.instances():
                        canon, comps = _instance_bindings(registry, name, inst, repl, max_order)
                        self.field_map[(name, canon)] = comps
                    continue
                canon, comps = _instance_bindings(registry, name, slots, repl, max_order)
                self.field_map[(name, canon)] = comps
        self.cache: dict = {}

    def lookup(self, atom) -> Optional[FormExpr]:
        if atom in self.cache:
            return self.cache[atom]
        out = None
        if atom in self.atom_map:
            out = self.atom_map[atom]
        elif atom.kind == "j" and (atom.field, atom.slots) in self.field_map:
            comps = self.field_map[(atom.field, atom.slots)]
            out = comps.get(atom.comp, FormExpr(self.n))
            for mu in atom.deriv:
                out = total_derivative(out, mu, self.max_order)
        elif atom.kind == "f":
            arg = self.lookup(atom.arg)
            if arg is not None:
                if len(arg.terms) == 1:
                    (key, c), = arg.terms.items()
                    atoms, gens, mono = key
                    if c == 1 and not gens and len(atoms) == 1 and atoms[0][1] == 1 and atoms[0][0].kind == "j":
                        out = FormExpr.atom(atom._replace(arg=atoms[0][0]), self.n)
                if out is None:
                    raise ValueError(
                        f"cannot substitute a compound expression into function {atom.name}"
                    )
        self.cache[atom] = out
        return out


def substitute(expr: FormExpr, bindings: dict, registry: FieldRegistry, max_order: int = 3) -> FormExpr:
    """Simultaneous substitution, followed by canonicalization.

    Keys are atoms (bound to grade-0 expressions, literal on that atom only)
    or fields ``name`` / ``(name, slots)`` (bound to a form of the field's
    grade; all jet coordinates of that component follow, derivative atoms via
    total derivatives of the replacement).  Unbound atoms and vertical
    generators are left unchanged.
    """
    binder = _Binder(registry, bindings, max_order)
    n = expr.n
    out = FormExpr(n)
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        kept = []
        factors = []
        for atom, p in atoms:
            repl = binder.lookup(atom)
            if repl is None:
                kept.append((atom, p))
            else:
                factors.extend([repl] * p)
        base = FormExpr(n, {(tuple(kept), gens, mono): c})
        if not factors:
            _accumulate(terms, (tuple(kept), gens, mono), c)
            continue
        prod = FormExpr.scalar(1, n)
        for f in factors:
            prod = wedge(prod, f)
            if not prod:
                break
        if prod:
            out = out + wedge(prod, base)
    return out + FormExpr(n, terms)


__all__ = [
    "SlotSymmetry",
    "FieldDecl",
    "FieldRegistry",
    "SymmetrySpec",
    "declare_field",
    "jet_extend",
    "substitute",
]
