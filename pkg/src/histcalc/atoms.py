"""Scalar atoms: the commuting building blocks of every expression.

Forms are expanded into components, so every atom is a real scalar: a jet
coordinate ``c_{alpha,mu...}`` of a declared field, a derivative of a
user-declared single-variable function evaluated on a jet coordinate, or an
inert constant parameter.  Atoms are plain named tuples so that they hash and
sort quickly; the first field is a kind tag which makes the three families
mutually comparable.
"""

from __future__ import annotations

from typing import NamedTuple, Union


class JetAtom(NamedTuple):
    """Component ``comp`` of field instance ``field[slots]``, differentiated
    along the coordinate directions in ``deriv`` (sorted, so mixed partials
    commute)."""

    kind: str
    field: str
    slots: tuple
    comp: tuple
    deriv: tuple

    @property
    def order(self) -> int:
        return len(self.deriv)

    def base(self) -> "JetAtom":
        return self._replace(deriv=())


class FuncAtom(NamedTuple):
    """``name^{(order)}(arg)`` for a declared function of one jet coordinate."""

    kind: str
    name: str
    arg: JetAtom
    order: int


class ParamAtom(NamedTuple):
    """A constant: killed by both the horizontal and vertical derivatives."""

    kind: str
    name: str
    slots: tuple


Atom = Union[JetAtom, FuncAtom, ParamAtom]


def jet(field: str, comp=(), deriv=(), slots=()) -> JetAtom:
    return JetAtom("j", field, tuple(slots), tuple(comp), tuple(sorted(deriv)))


def func(name: str, arg: JetAtom, order: int = 0) -> FuncAtom:
    if arg.kind != "j" or arg.deriv:
        raise ValueError("function atoms take an undifferentiated jet coordinate")
    return FuncAtom("f", name, arg, order)


def param(name: str, slots=()) -> ParamAtom:
    return ParamAtom("p", name, tuple(slots))


def jet_order(atom: Atom) -> int:
    if atom.kind == "j":
        return len(atom.deriv)
    return 0


class JetOrderError(ValueError):
    """Raised when a derivative would exceed the permitted jet order."""


def atom_total_derivative(atom: Atom, mu: int, max_order: int):
    """Return ``d_mu atom`` as a list of ``(coeff, [atoms...])`` products."""
    if atom.kind == "j":
        if len(atom.deriv) + 1 > max_order:
            raise JetOrderError(
                f"derivative of {format_atom(atom)} exceeds jet order {max_order}"
            )
        return [(1, [atom._replace(deriv=tuple(sorted(atom.deriv + (mu,))))])]
    if atom.kind == "f":
        # chain rule through the single argument
        if max_order < 1:
            raise JetOrderError("jet order 0 forbids derivatives")
        return [(1, [atom._replace(order=atom.order + 1), atom.arg._replace(deriv=(mu,))])]
    return []


def atom_partial(atom: Atom, wrt: Atom):
    """Partial derivative of a single atom with respect to a jet coordinate.

    Returns ``None`` when independent, else the replacement atom (the
    coefficient is always 1).
    """
    if atom == wrt:
        return ()
    if atom.kind == "f" and atom.arg == wrt:
        return (atom._replace(order=atom.order + 1),)
    return None


def format_atom(atom: Atom, coords=None) -> str:
    lab = (lambda i: coords[i]) if coords else str
    if atom.kind == "j":
        name = atom.field
        if atom.slots:
            name += "^{" + ",".join(map(str, atom.slots)) + "}"
        sub = "".join(lab(i) for i in atom.comp)
        if atom.deriv:
            sub += "," + "".join(lab(i) for i in atom.deriv)
        return f"{name}_{{{sub}}}" if sub else name
    if atom.kind == "f":
        primes = "'" * atom.order if atom.order <= 3 else f"^({atom.order})"
        return f"{atom.name}{primes}({format_atom(atom.arg, coords)})"
    name = atom.name
    if atom.slots:
        name += "^{" + ",".join(map(str, atom.slots)) + "}"
    return name
