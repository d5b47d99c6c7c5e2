"""Exact graded exterior algebra over a single coordinate chart.

A :class:`FormExpr` is a finite sum of terms

    coefficient * (product of scalar atoms) * (wedge of vertical generators)
                * dx^{i_1} ... dx^{i_r}

with an exact rational coefficient.  Ordinary horizontal forms have no
vertical generators; the same class carries the bigraded objects produced by
the vertical derivative.  Vertical generators ``D(atom)`` anticommute among
themselves, ``dx`` monomials anticommute among themselves, and the two kinds
commute with each other.

Terms are stored in canonical form only: atoms sorted with integer powers,
generator and monomial indices strictly ascending with the permutation parity
folded into the coefficient, like terms merged and zeros dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from numbers import Rational
from typing import Iterable, Optional

from .atoms import Atom, JetOrderError, atom_partial, atom_total_derivative

__all__ = [
    "Chart",
    "FormExpr",
    "BigradedExpr",
    "GradeError",
    "canonicalize",
    "wedge",
    "exterior_derivative",
    "interior_product",
    "coordinate_star",
    "metric_star",
    "levi_civita",
    "sort_sign",
    "total_derivative",
    "vol",
    "vol_sub",
    "dx",
]


class GradeError(ValueError):
    """Grade-strict operation applied to an inhomogeneous or ill-sized form."""


@dataclass(frozen=True)
class Chart:
    """Coordinates ``x^0..x^{n-1}`` with an optional diagonal signature."""

    n: int
    coords: tuple = ()
    signature: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chart dimension must be at least 1")
        if not self.coords:
            object.__setattr__(self, "coords", tuple(f"x{i}" for i in range(self.n)))
        if len(self.coords) != self.n:
            raise ValueError(f"{len(self.coords)} coordinate labels for n={self.n}")
        if self.signature is not None:
            sig = tuple(int(s) for s in self.signature)
            if len(sig) != self.n or any(s not in (1, -1) for s in sig):
                raise ValueError("signature needs exactly n entries, each +1 or -1")
            object.__setattr__(self, "signature", sig)

    @property
    def vol(self) -> "FormExpr":
        return vol(self.n)

    def index(self, label: str) -> int:
        return self.coords.index(label)


def sort_sign(seq) -> tuple:
    """Sort ``seq``; return ``(sorted_tuple, parity)``, parity 0 on a repeat."""
    items = list(seq)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and items[j - 1] == items[j]:
            return tuple(items), 0
    return tuple(items), sign


@lru_cache(maxsize=1 << 16)
def _join(a: tuple, b: tuple) -> tuple:
    if not a:
        return b, 1
    if not b:
        return a, 1
    return sort_sign(a + b)


def _merge_atoms(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for atom, p in b:
        powers[atom] = powers.get(atom, 0) + p
    return tuple(sorted(powers.items()))


def _atoms_from_list(atoms: Iterable[Atom]) -> tuple:
    powers: dict = {}
    for atom in atoms:
        powers[atom] = powers.get(atom, 0) + 1
    return tuple(sorted(powers.items()))


def levi_civita(indices) -> int:
    """Totally antisymmetric symbol with ``eps(0, 1, ..., n-1) = +1``."""
    idx = tuple(indices)
    if sorted(idx) != list(range(len(idx))):
        return 0
    return sort_sign(idx)[1]


def _coef(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"exact rational coefficient required, got {type(c).__name__}")


class FormExpr:
    """Canonical sum of terms keyed by ``(atoms, vertical, monomial)``."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Optional[dict] = None):
        self.n = n
        self.terms = terms if terms is not None else {}

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "FormExpr":
        return cls(n, {})

    @classmethod
    def scalar(cls, c, n: int) -> "FormExpr":
        c = _coef(c)
        return cls(n, {((), (), ()): c} if c else {})

    @classmethod
    def atom(cls, atom: Atom, n: int, coeff=1) -> "FormExpr":
        return cls(n, {(((atom, 1),), (), ()): _coef(coeff)})

    @classmethod
    def generator(cls, atom: Atom, n: int) -> "FormExpr":
        """The vertical one-form ``D(atom)``."""
        return cls(n, {((), (atom,), ()): Fraction(1)})

    # inspection -------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def grades(self) -> set:
        return {len(k[2]) for k in self.terms}

    def vgrades(self) -> set:
        return {len(k[1]) for k in self.terms}

    @property
    def grade(self) -> Optional[int]:
        """Horizontal grade; ``None`` for zero, :class:`GradeError` if mixed."""
        g = self.grades()
        if not g:
            return None
        if len(g) > 1:
            raise GradeError(f"mixed horizontal grades {sorted(g)}")
        return g.pop()

    @property
    def vgrade(self) -> Optional[int]:
        g = self.vgrades()
        if not g:
            return None
        if len(g) > 1:
            raise GradeError(f"mixed vertical grades {sorted(g)}")
        return g.pop()

    @property
    def bidegree(self) -> Optional[tuple]:
        if not self.terms:
            return None
        return (self.vgrade, self.grade)

    def is_homogeneous(self) -> bool:
        return len(self.grades()) <= 1 and len(self.vgrades()) <= 1

    def atoms(self) -> set:
        out = set()
        for atoms, gens, _ in self.terms:
            out.update(a for a, _ in atoms)
            out.update(gens)
        return out

    def atom_degree(self) -> int:
        return max((sum(p for _, p in k[0]) for k in self.terms), default=0)

    def max_jet_order(self) -> int:
        order = 0
        for a in self.atoms():
            if a.kind == "j":
                order = max(order, len(a.deriv))
            elif a.kind == "f":
                order = max(order, 0)
        return order

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))

    def component(self, mono: tuple) -> "FormExpr":
        """Grade-0 coefficient of ``dx^mono`` (``mono`` ascending)."""
        mono = tuple(mono)
        return FormExpr(
            self.n, {(a, g, ()): c for (a, g, m), c in self.terms.items() if m == mono}
        )

    def components(self) -> dict:
        out: dict = {}
        for (a, g, m), c in self.terms.items():
            out.setdefault(m, {})[(a, g, ())] = c
        return {m: FormExpr(self.n, t) for m, t in out.items()}

    # algebra ----------------------------------------------------------------
    def _check(self, other: "FormExpr"):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, FormExpr):
            if other == 0:
                return self
            other = FormExpr.scalar(other, self.n)
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            v = terms.get(k, 0) + c
            if v:
                terms[k] = v
            else:
                terms.pop(k, None)
        return FormExpr(self.n, terms)

    __radd__ = __add__

    def __neg__(self):
        return FormExpr(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "FormExpr":
        c = _coef(c)
        if not c:
            return FormExpr(self.n)
        return FormExpr(self.n, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, FormExpr):
            return wedge(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(Fraction(1) / _coef(other))

    def __eq__(self, other):
        if isinstance(other, FormExpr):
            return self.n == other.n and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        from .dsl.printer import to_text

        return f"FormExpr({to_text(self)})"


BigradedExpr = FormExpr


def canonicalize(raw, n: Optional[int] = None) -> FormExpr:
    """Canonical form of raw terms ``(coeff, atoms, vertical, monomial)``.

    ``atoms`` is a list of atoms (repeats allowed); ``vertical`` and
    ``monomial`` are sequences in arbitrary order.  A :class:`FormExpr`
    argument is rebuilt from its own terms, which makes the operation
    idempotent.
    """
    if isinstance(raw, FormExpr):
        n = raw.n
        raw = [(c, [a for a, p in atoms for _ in range(p)], list(g), list(m))
               for (atoms, g, m), c in raw.terms.items()]
    if n is None:
        raise ValueError("dimension required")
    terms: dict = {}
    for coeff, atoms, gens, mono in raw:
        mono_s, s1 = sort_sign(mono)
        if not s1:
            continue
        gens_s, s2 = sort_sign(gens)
        if not s2:
            continue
        if any(i < 0 or i >= n for i in mono_s):
            raise ValueError(f"coordinate index out of range in {mono_s}")
        key = (_atoms_from_list(atoms), gens_s, mono_s)
        v = terms.get(key, 0) + _coef(coeff) * s1 * s2
        if v:
            terms[key] = v
        else:
            terms.pop(key, None)
    return FormExpr(n, terms)


def _accumulate(terms: dict, key, c):
    v = terms.get(key, 0) + c
    if v:
        terms[key] = v
    else:
        del terms[key]


def wedge(a: FormExpr, b: FormExpr) -> FormExpr:
    """Wedge product in both gradings (juxtaposition in the notation)."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    terms: dict = {}
    for (aa, ag, am), ac in a.terms.items():
        for (ba, bg, bm), bc in b.terms.items():
            mono, s1 = _join(am, bm)
            if not s1:
                continue
            gens, s2 = _join(ag, bg)
            if not s2:
                continue
            key = (_merge_atoms(aa, ba), gens, mono)
            _accumulate(terms, key, ac * bc * (s1 * s2))
    return FormExpr(a.n, terms)


def wedge_all(factors, n: int) -> FormExpr:
    out = FormExpr.scalar(1, n)
    for f in factors:
        out = wedge(out, f)
    return out


def dx(mu: int, n: int) -> FormExpr:
    if not 0 <= mu < n:
        raise ValueError(f"coordinate index {mu} out of range for n={n}")
    return FormExpr(n, {((), (), (mu,)): Fraction(1)})


def vol(n: int) -> FormExpr:
    return FormExpr(n, {((), (), tuple(range(n))): Fraction(1)})


def _complement(mono: tuple, n: int) -> tuple:
    rest = tuple(i for i in range(n) if i not in mono)
    return rest, sort_sign(mono + rest)[1]


def vol_sub(mus, n: int) -> FormExpr:
    """``Vol_{mus}``, fixed by ``dx^{mus} ^ Vol_{mus} = Vol``."""
    mus = tuple(mus)
    sorted_mus, s = sort_sign(mus)
    if not s:
        return FormExpr(n)
    rest, s2 = _complement(sorted_mus, n)
    return FormExpr(n, {((), (), rest): Fraction(s * s2)})


def _require_homogeneous(expr: FormExpr, what: str):
    if len(expr.grades()) > 1:
        raise GradeError(f"{what} requires a homogeneous form, got grades {sorted(expr.grades())}")


def total_derivative(expr: FormExpr, mu: int, max_order: int = 2) -> FormExpr:
    """Coordinate derivative ``d/dx^mu`` of every coefficient (and generator),
    leaving the ``dx`` monomials alone."""
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        for i, (atom, p) in enumerate(atoms):
            rest = atoms[:i] + ((atom, p - 1),) + atoms[i + 1:] if p > 1 else atoms[:i] + atoms[i + 1:]
            for dc, new_atoms in atom_total_derivative(atom, mu, max_order):
                key = (_merge_atoms(rest, _atoms_from_list(new_atoms)), gens, mono)
                _accumulate(terms, key, c * p * dc)
        for i, g in enumerate(gens):
            (_, [g2]), = atom_total_derivative(g, mu, max_order)
            new_gens, s = sort_sign(gens[:i] + (g2,) + gens[i + 1:])
            if s:
                _accumulate(terms, (atoms, new_gens, mono), c * s)
    return FormExpr(expr.n, terms)


def exterior_derivative(expr: FormExpr, max_order: int = 2) -> FormExpr:
    """Horizontal exterior derivative ``d``.

    Differentiating a jet coordinate raises its derivative order by one;
    results beyond ``max_order`` raise :class:`JetOrderError`.  With the
    default this rejects any input that already holds second derivatives.
    """
    _require_homogeneous(expr, "d")
    out = FormExpr(expr.n)
    for mu in range(expr.n):
        part = total_derivative(expr, mu, max_order)
        if part:
            out = out + wedge(dx(mu, expr.n), part)
    return out


def interior_product(mu: int, expr: FormExpr) -> FormExpr:
    """Contraction with the coordinate vector ``e_mu`` (graded anti-derivation)."""
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        if mu in mono:
            k = mono.index(mu)
            key = (atoms, gens, mono[:k] + mono[k + 1:])
            _accumulate(terms, key, c if k % 2 == 0 else -c)
    return FormExpr(expr.n, terms)


def coordinate_star(expr: FormExpr) -> FormExpr:
    """Coordinate Hodge dual with ``dx^I ^ star(dx^I) = Vol`` (no sum)."""
    _require_homogeneous(expr, "star")
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        rest, s = _complement(mono, expr.n)
        _accumulate(terms, (atoms, gens, rest), c * s)
    return FormExpr(expr.n, terms)


def metric_star(expr: FormExpr, chart: Chart) -> FormExpr:
    """Hodge dual of a constant diagonal metric: ``b ^ star(a) = <b, a> Vol``."""
    if chart.signature is None:
        raise ValueError("metric star needs a chart signature")
    if chart.n != expr.n:
        raise ValueError("chart and expression dimensions differ")
    _require_homogeneous(expr, "metric star")
    sig = chart.signature
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        rest, s = _complement(mono, expr.n)
        for i in mono:
            s *= sig[i]
        _accumulate(terms, (atoms, gens, rest), c * s)
    return FormExpr(expr.n, terms)


def metric_pairing(a: tuple, b: tuple, chart: Chart) -> int:
    """Induced pairing of two ascending basis monomials."""
    if a != b:
        return 0
    s = 1
    for i in a:
        s *= chart.signature[i]
    return s


def diff_atom(expr: FormExpr, wrt: Atom) -> FormExpr:
    """Partial derivative with respect to one jet coordinate (others fixed)."""
    terms: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        for i, (atom, p) in enumerate(atoms):
            repl = atom_partial(atom, wrt)
            if repl is None:
                continue
            rest = atoms[:i] + ((atom, p - 1),) + atoms[i + 1:] if p > 1 else atoms[:i] + atoms[i + 1:]
            if repl:
                rest = _merge_atoms(rest, ((repl[0], 1),))
            _accumulate(terms, (rest, gens, mono), c * p)
    return FormExpr(expr.n, terms)


def basis_monomials(n: int, r: int):
    return list(combinations(range(n), r))


__all__ += ["wedge_all", "diff_atom", "basis_monomials", "metric_pairing", "JetOrderError"]
