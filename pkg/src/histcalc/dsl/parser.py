"""Parser and elaborator for ``.lagr`` model sources.

A model file is a sequence of line statements::

    # comments run to end of line
    chart t x y z
    signature - + + +
    field A : 1
    field e[I:4] : 1
    field w[I:4, J:4] : 1 antisym(I, J)
    param lam[I:4, J:4] : 0 antisym(I, J)
    constant m
    function V = 0 0 1/2          # optional numeric polynomial, lowest order first
    L = eps[I,J,K,L] e[I] e[J] (d(w[K,L]) + w[K,M] w[M,L])
    symmetry lorentz
      delta e[I] = lam[I,J] e[J]
      X = 0
    end

Expressions: juxtaposition or ``^`` is the wedge product, ``*`` multiplies
when one side is a 0-form, ``/`` divides by a number.  Built-ins are
``d(.)``, ``star(.)`` (coordinate Hodge star), ``gstar(.)`` (metric star),
``inner(x, .)`` (contraction with a coordinate vector), ``d(t)`` for a
coordinate differential and ``vol``.  ``eps[...]`` and ``eta[...]`` are the
internal Levi-Civita and metric symbols.

Index rules: an internal index repeated in a product is summed.  Field slots
are upper, ``eps``/``eta`` slots lower, and a leading underscore (``w[I,_J]``)
lowers a field slot.  Two occurrences in the same position insert the
diagonal internal metric, taken from the chart signature.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional

from ..atoms import FuncAtom, JetOrderError, param as param_atom
from ..fields import FieldDecl, FieldRegistry, SlotSymmetry, SymmetrySpec
from ..forms import (
    Chart,
    FormExpr,
    GradeError,
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


class ParseError(ValueError):
    """Syntax or elaboration failure at a source position."""

    def __init__(self, cause: str, line: int = 0, col: int = 0):
        self.cause, self.line, self.col = cause, line, col
        super().__init__(f"line {line}, col {col}: {cause}")


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>_?[A-Za-z][A-Za-z0-9_]*)|(?P<op>[()\[\],:=+\-*/^]))"
)


@dataclass
class Tok:
    kind: str  # num | name | op | end
    text: str
    line: int
    col: int


def tokenize(text: str, line: int, offset: int = 0) -> list:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + 1 + offset + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col - 1 - offset]!r}", line, col)
        kind = m.lastgroup
        out.append(Tok(kind, m.group(kind), line, m.start(kind) + 1 + offset))
        pos = m.end()
    out.append(Tok("end", "", line, len(text) + 1 + offset))
    return out


# expression syntax tree -----------------------------------------------------------


@dataclass
class Node:
    line: int
    col: int


@dataclass
class Num(Node):
    value: Fraction


@dataclass
class Ref(Node):
    name: str
    indices: tuple = ()  # ((name_or_int, lowered), ...)
    bracketed: bool = False


@dataclass
class Call(Node):
    fn: str
    args: tuple


@dataclass
class Neg(Node):
    arg: Node


@dataclass
class Sum(Node):
    parts: tuple  # ((sign, Node), ...)


@dataclass
class Prod(Node):
    factors: tuple  # (Node, ...)
    ops: tuple  # ops between factors: "wedge" | "*" | "/"


class _Parser:
    def __init__(self, toks):
        self.toks, self.i = toks, 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def take(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text) -> Tok:
        t = self.tok
        if t.text != text or t.kind not in ("op", "name"):
            raise ParseError(f"expected {text!r}, found {t.text or 'end of line'!r}", t.line, t.col)
        return self.take()

    def expr(self) -> Node:
        t = self.tok
        parts = []
        sign = 1
        if t.kind == "op" and t.text in "+-":
            sign = -1 if t.text == "-" else 1
            self.take()
        parts.append((sign, self.term()))
        while self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1 if self.take().text == "-" else 1
            parts.append((sign, self.term()))
        if len(parts) == 1 and parts[0][0] == 1:
            return parts[0][1]
        return Sum(t.line, t.col, tuple(parts))

    def _starts_factor(self) -> bool:
        t = self.tok
        return t.kind in ("num", "name") or (t.kind == "op" and t.text == "(")

    def term(self) -> Node:
        t = self.tok
        factors = [self.unary()]
        ops = []
        while True:
            nxt = self.tok
            if nxt.kind == "op" and nxt.text in "*/^":
                self.take()
                ops.append({"*": "*", "/": "/", "^": "wedge"}[nxt.text])
                factors.append(self.unary())
            elif self._starts_factor():
                ops.append("wedge")
                factors.append(self.unary())
            else:
                break
        if len(factors) == 1:
            return factors[0]
        return Prod(t.line, t.col, tuple(factors), tuple(ops))

    def unary(self) -> Node:
        t = self.tok
        if t.kind == "op" and t.text == "-":
            self.take()
            return Neg(t.line, t.col, self.unary())
        return self.primary()

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(t.line, t.col, Fraction(int(t.text)))
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.take()
            if self.tok.kind == "op" and self.tok.text == "(":
                self.take()
                args = [self.expr()]
                while self.tok.text == "," and self.tok.kind == "op":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                return Call(t.line, t.col, t.text, tuple(args))
            if self.tok.kind == "op" and self.tok.text == "[":
                self.take()
                idx = [self.index()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.take()
                    idx.append(self.index())
                self.expect("]")
                return Ref(t.line, t.col, t.text, tuple(idx), True)
            return Ref(t.line, t.col, t.text)
        raise ParseError(f"unexpected {t.text or 'end of line'!r}", t.line, t.col)

    def index(self):
        t = self.take()
        if t.kind == "num":
            return int(t.text), False
        if t.kind == "name":
            lowered = t.text.startswith("_")
            return t.text.lstrip("_"), lowered
        raise ParseError(f"expected an index, found {t.text!r}", t.line, t.col)

    def done(self):
        t = self.tok
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.line, t.col)


def parse_expression(text: str, line: int = 1, offset: int = 0) -> Node:
    p = _Parser(tokenize(text, line, offset))
    e = p.expr()
    p.done()
    return e


# elaboration --------------------------------------------------------------------


@dataclass
class _Env:
    registry: FieldRegistry
    constants: set = field(default_factory=set)
    lagrangian: Optional[FormExpr] = None

    @property
    def n(self):
        return self.registry.n


class _Elab:
    """Free-index analysis and evaluation of expression trees."""

    def __init__(self, env: _Env):
        self.env = env
        self.reg = env.registry
        self.chart = env.registry.chart

    # index bookkeeping: free(node) -> {name: (position, range)}
    def free(self, node) -> dict:
        if isinstance(node, Num):
            return {}
        if isinstance(node, Ref):
            return self._ref_free(node)
        if isinstance(node, Call):
            if node.fn == "inner":
                return self.free(node.args[1]) if len(node.args) == 2 else {}
            return self.free(node.args[0]) if node.args else {}
        if isinstance(node, Neg):
            return self.free(node.arg)
        if isinstance(node, Sum):
            first = self.free(node.parts[0][1])
            for _, p in node.parts[1:]:
                other = self.free(p)
                if set(other) != set(first):
                    raise ParseError(
                        f"summands carry different free indices {sorted(first)} and {sorted(other)}",
                        p.line, p.col)
            return first
        if isinstance(node, Prod):
            free, _ = self._contractions(node)
            return free
        raise TypeError(node)

    def _ref_free(self, node: Ref) -> dict:
        if not node.bracketed:
            return {}
        name = node.name
        if name in ("eps", "eta"):
            size = len(node.indices) if name == "eps" else self._eta_range(node)
            ranges = [size] * len(node.indices)
            lowered = [True] * len(node.indices)
        else:
            decl = self._decl(node)
            if len(node.indices) != len(decl.slots):
                raise ParseError(f"{name} takes {len(decl.slots)} internal indices, got {len(node.indices)}",
                                 node.line, node.col)
            ranges = list(decl.slots)
            lowered = [lo for _, lo in node.indices]
        out = {}
        for (ix, _), rng, lo in zip(node.indices, ranges, lowered):
            if isinstance(ix, int):
                if not 0 <= ix < rng:
                    raise ParseError(f"index value {ix} out of range {rng}", node.line, node.col)
                continue
            if ix in out:
                raise ParseError(f"index {ix} repeated inside {name}[...]", node.line, node.col)
            out[ix] = ("d" if lo else "u", rng)
        return out

    def _eta_range(self, node):
        sig = self.chart.signature
        if sig is None:
            raise ParseError("eta needs a chart signature", node.line, node.col)
        if len(node.indices) != 2:
            raise ParseError("eta takes two indices", node.line, node.col)
        return len(sig)

    def _decl(self, node: Ref):
        try:
            return self.reg[node.name]
        except KeyError:
            raise ParseError(f"unknown identifier {node.name!r}", node.line, node.col) from None

    def _contractions(self, node: Prod):
        seen: dict = {}
        for f in node.factors:
            for ix, (pos, rng) in self.free(f).items():
                seen.setdefault(ix, []).append((pos, rng))
        free, summed = {}, {}
        for ix, occ in seen.items():
            if len(occ) > 2:
                raise ParseError(f"index {ix} occurs {len(occ)} times in one product", node.line, node.col)
            if len({r for _, r in occ}) > 1:
                raise ParseError(f"index {ix} used with different ranges", node.line, node.col)
            if len(occ) == 1:
                free[ix] = occ[0]
            else:
                summed[ix] = (occ[0][1], occ[0][0] == occ[1][0])
        return free, summed

    # evaluation
    def eval(self, node, bind: dict) -> FormExpr:
        n = self.env.n
        if isinstance(node, Num):
            return FormExpr.scalar(node.value, n)
        if isinstance(node, Neg):
            return -self.eval(node.arg, bind)
        if isinstance(node, Sum):
            out = FormExpr(n)
            for sign, p in node.parts:
                v = self.eval(p, bind)
                out = out + v if sign > 0 else out - v
            return out
        if isinstance(node, Prod):
            return self._eval_prod(node, bind)
        if isinstance(node, Ref):
            return self._eval_ref(node, bind)
        if isinstance(node, Call):
            return self._eval_call(node, bind)
        raise TypeError(node)

    def _combine(self, left: FormExpr, op: str, right: FormExpr, node) -> FormExpr:
        if op == "wedge":
            return wedge(left, right)
        if op == "*":
            if left.terms and right.terms and left.grade != 0 and right.grade != 0:
                raise ParseError("'*' needs a 0-form on one side; use juxtaposition for the wedge product",
                                 node.line, node.col)
            return wedge(left, right)
        raise AssertionError(op)

    def _eval_prod(self, node: Prod, bind: dict) -> FormExpr:
        _, summed = self._contractions(node)
        names = [ix for ix in summed if ix not in bind]
        n = self.env.n
        out = FormExpr(n)
        sig = self.chart.signature
        for values in product(*(range(summed[ix][0]) for ix in names)):
            b = dict(bind)
            b.update(zip(names, values))
            coeff = 1
            for ix in names:
                if summed[ix][1]:
                    if sig is None:
                        raise ParseError(f"contracting {ix} in equal positions needs a chart signature",
                                         node.line, node.col)
                    coeff *= sig[b[ix]]
            acc = self.eval(node.factors[0], b)
            for op, f in zip(node.ops, node.factors[1:]):
                if not acc.terms:
                    break
                if op == "/":
                    if not isinstance(f, Num):
                        raise ParseError("division is only by a number", f.line, f.col)
                    if f.value == 0:
                        raise ParseError("division by zero", f.line, f.col)
                    acc = acc.scale(1 / f.value)
                    continue
                acc = self._combine(acc, op, self.eval(f, b), f)
            out = out + acc.scale(coeff)
        return out

    def _slot_values(self, node: Ref, bind: dict) -> tuple:
        vals = []
        for ix, _ in node.indices:
            if isinstance(ix, int):
                vals.append(ix)
            elif ix in bind:
                vals.append(bind[ix])
            else:
                raise ParseError(f"index {ix} is free here", node.line, node.col)
        return tuple(vals)

    def _eval_ref(self, node: Ref, bind: dict) -> FormExpr:
        n = self.env.n
        name = node.name
        if name == "eps" and node.bracketed:
            return FormExpr.scalar(levi_civita(self._slot_values(node, bind)), n)
        if name == "eta" and node.bracketed:
            self._eta_range(node)
            a, b = self._slot_values(node, bind)
            return FormExpr.scalar(self.chart.signature[a] if a == b else 0, n)
        if name == "vol" and not node.bracketed:
            return vol(n)
        if name == "L" and not node.bracketed and name not in self.reg.fields:
            if self.env.lagrangian is None:
                raise ParseError("L is referenced before it is defined", node.line, node.col)
            return self.env.lagrangian
        if name in self.env.constants:
            return FormExpr.atom(param_atom(name), n)
        if name in self.chart.coords:
            raise ParseError(f"coordinate {name!r} may only appear as d({name}) or inner({name}, ...)",
                             node.line, node.col)
        decl = self._decl(node)
        vals = self._slot_values(node, bind) if node.bracketed else ()
        if len(vals) != len(decl.slots):
            raise ParseError(f"{name} takes {len(decl.slots)} internal indices", node.line, node.col)
        form = self.reg.form(name, vals)
        sig = self.chart.signature
        for (ix, lowered), v in zip(node.indices, vals):
            if lowered:
                form = form.scale(sig[v])
        return form

    def _eval_call(self, node: Call, bind: dict) -> FormExpr:
        fn, args = node.fn, node.args
        n = self.env.n

        def one():
            if len(args) != 1:
                raise ParseError(f"{fn}() takes one argument", node.line, node.col)
            return args[0]

        if fn == "d":
            a = one()
            if isinstance(a, Ref) and not a.bracketed and a.name in self.chart.coords:
                return dx(self.chart.index(a.name), n)
            try:
                return exterior_derivative(self.eval(a, bind), max_order=1)
            except JetOrderError:
                raise ParseError("d() of a derivative: sources are first order", node.line, node.col) from None
        if fn == "star":
            return coordinate_star(self._homog(self.eval(one(), bind), node))
        if fn == "gstar":
            if self.chart.signature is None:
                raise ParseError("gstar needs a chart signature", node.line, node.col)
            return metric_star(self._homog(self.eval(one(), bind), node), self.chart)
        if fn == "inner":
            if len(args) != 2 or not (isinstance(args[0], Ref) and args[0].name in self.chart.coords):
                raise ParseError("inner(x, expr) takes a coordinate and an expression", node.line, node.col)
            return interior_product(self.chart.index(args[0].name), self.eval(args[1], bind))
        if fn in self.reg.functions:
            arg = self.eval(one(), bind)
            if len(arg.terms) != 1:
                raise ParseError(f"{fn}() needs a single 0-form field component as argument",
                                 node.line, node.col)
            (atoms, gens, mono), c = next(iter(arg.terms.items()))
            if c != 1 or gens or mono or len(atoms) != 1 or atoms[0][1] != 1 or atoms[0][0].kind != "j":
                raise ParseError(f"{fn}() needs a single 0-form field component as argument",
                                 node.line, node.col)
            return FormExpr.atom(FuncAtom("f", fn, atoms[0][0], 0), n)
        raise ParseError(f"unknown function {fn!r}", node.line, node.col)

    @staticmethod
    def _homog(e: FormExpr, node) -> FormExpr:
        if e.terms and len(e.grades()) > 1:
            raise ParseError("star of a mixed-grade expression", node.line, node.col)
        return e

    def top(self, node, bind: Optional[dict] = None, expect_free=()) -> FormExpr:
        free = self.free(node)
        extra = set(free) - set(expect_free)
        if extra:
            raise ParseError(f"free internal indices {sorted(extra)} are not summed", node.line, node.col)
        missing = set(expect_free) - set(free)
        if missing:
            raise ParseError(f"right-hand side lacks indices {sorted(missing)}", node.line, node.col)
        try:
            return self.eval(node, bind or {})
        except GradeError as exc:
            raise ParseError(str(exc), node.line, node.col) from None


# statements ----------------------------------------------------------------------


@dataclass
class ParsedModel:
    """Result of :func:`parse`: the model and its declared symmetries."""

    model: LagrangianModel
    symmetries: list
    source: str = ""

    def __iter__(self):
        yield self.model
        yield self.symmetries

    def __getitem__(self, i):
        return (self.model, self.symmetries)[i]


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _field_decl(toks: list, is_param: bool, chart: Chart) -> FieldDecl:
    p = _Parser(toks)
    t = p.take()  # keyword
    name_tok = p.take()
    if name_tok.kind != "name" or name_tok.text.startswith("_"):
        raise ParseError("expected a field name", name_tok.line, name_tok.col)
    slot_names, ranges = [], []
    if p.tok.text == "[":
        p.take()
        while True:
            ix = p.take()
            if ix.kind != "name":
                raise ParseError("expected a slot name", ix.line, ix.col)
            p.expect(":")
            r = p.take()
            if r.kind != "num":
                raise ParseError("expected a slot range", r.line, r.col)
            if ix.text in slot_names:
                raise ParseError(f"slot {ix.text} declared twice", ix.line, ix.col)
            slot_names.append(ix.text)
            ranges.append(int(r.text))
            if p.tok.text == ",":
                p.take()
                continue
            p.expect("]")
            break
    p.expect(":")
    deg = p.take()
    if deg.kind != "num":
        raise ParseError("expected the form degree", deg.line, deg.col)
    syms = []
    while p.tok.kind == "name":
        kind = p.take()
        if kind.text not in ("antisym", "sym"):
            raise ParseError(f"unknown slot symmetry {kind.text!r}", kind.line, kind.col)
        p.expect("(")
        pos = []
        while True:
            s = p.take()
            if s.text not in slot_names:
                raise ParseError(f"unknown slot {s.text!r}", s.line, s.col)
            pos.append(slot_names.index(s.text))
            if p.tok.text == ",":
                p.take()
                continue
            p.expect(")")
            break
        try:
            syms.append(SlotSymmetry(kind.text, tuple(pos)))
        except ValueError as exc:
            raise ParseError(str(exc), kind.line, kind.col) from None
    p.done()
    return FieldDecl(name_tok.text, int(deg.text), tuple(ranges), tuple(syms), is_param)


def _number_list(toks: list) -> list:
    """``1/2 -3 0`` style rational lists."""
    out = []
    i = 0
    while toks[i].kind != "end":
        sign = 1
        if toks[i].text == "-":
            sign, i = -1, i + 1
        t = toks[i]
        if t.kind != "num":
            raise ParseError("expected a number", t.line, t.col)
        val = Fraction(int(t.text))
        i += 1
        if toks[i].text == "/":
            den = toks[i + 1]
            if den.kind != "num" or int(den.text) == 0:
                raise ParseError("bad denominator", den.line, den.col)
            val /= int(den.text)
            i += 2
        out.append(sign * val)
    return out


def parse(source: str, name: str = "") -> ParsedModel:
    """Parse and elaborate a model source; see the module docstring."""
    lines = source.splitlines()
    coords = None
    signature = None
    decls: list = []
    functions: dict = {}
    constants: set = set()
    lagr = None  # (node, line)
    symmetries: list = []  # (name, line, [(kind, payload, line)])
    current = None

    for ln, raw in enumerate(lines, start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        indent = len(text) - len(text.lstrip())
        body = text.strip()
        head = body.split()[0]
        if current is not None:
            if head == "end":
                symmetries.append(current)
                current = None
                continue
            if head == "delta":
                if "=" not in body:
                    raise ParseError("expected '=' in delta statement", ln, indent + 1)
                lhs, rhs = body[len("delta"):].split("=", 1)
                lhs_off = indent + len("delta")
                target = parse_expression(lhs, ln, lhs_off)
                if not isinstance(target, Ref):
                    raise ParseError("delta needs a field on the left", ln, indent + 1)
                expr = parse_expression(rhs, ln, indent + body.index("=") + 1)
                current[2].append(("delta", (target, expr), ln))
                continue
            if head == "X":
                _, rhs = body.split("=", 1) if "=" in body else (None, None)
                if rhs is None:
                    raise ParseError("expected 'X = ...'", ln, indent + 1)
                current[2].append(("X", parse_expression(rhs, ln, indent + body.index("=") + 1), ln))
                continue
            raise ParseError(f"unexpected {head!r} inside a symmetry block", ln, indent + 1)
        if head == "chart":
            if coords is not None:
                raise ParseError("chart declared twice", ln, indent + 1)
            coords = tuple(body.split()[1:])
            if not coords or any(not re.fullmatch(r"[A-Za-z][A-Za-z0-9]*", c) for c in coords):
                raise ParseError("chart needs coordinate names", ln, indent + 1)
            continue
        if head == "signature":
            parts = body.split()[1:]
            if any(p not in ("+", "-") for p in parts) or not parts:
                raise ParseError("signature entries are '+' or '-'", ln, indent + 1)
            signature = tuple(1 if p == "+" else -1 for p in parts)
            continue
        if head in ("field", "param"):
            if coords is None:
                raise ParseError("declare the chart first", ln, indent + 1)
            decls.append((_field_decl(tokenize(body, ln, indent), head == "param", None), ln))
            continue
        if head == "constant":
            for cname in body.split()[1:]:
                constants.add(cname)
            continue
        if head == "function":
            toks = tokenize(body, ln, indent)
            fname = toks[1]
            if fname.kind != "name":
                raise ParseError("expected a function name", fname.line, fname.col)
            numeric = None
            if toks[2].text == "=":
                numeric = [float(x) for x in _number_list(toks[3:])]
            elif toks[2].kind != "end":
                raise ParseError("expected '=' or end of line", toks[2].line, toks[2].col)
            functions[fname.text] = numeric
            continue
        if head == "symmetry":
            parts = body.split()
            if len(parts) != 2:
                raise ParseError("expected 'symmetry NAME'", ln, indent + 1)
            current = (parts[1], ln, [])
            continue
        if head == "L" or body.startswith("L="):
            if lagr is not None:
                raise ParseError("Lagrangian defined twice", ln, indent + 1)
            eq = body.index("=") if "=" in body else -1
            if eq < 0:
                raise ParseError("expected 'L = ...'", ln, indent + 1)
            lagr = (parse_expression(body[eq + 1:], ln, indent + eq + 1), ln)
            continue
        raise ParseError(f"unknown statement {head!r}", ln, indent + 1)
    if current is not None:
        raise ParseError(f"symmetry {current[0]!r} is not closed with 'end'", current[1], 1)
    if coords is None:
        raise ParseError("missing chart statement", 1, 1)
    if signature is not None and len(signature) != len(coords):
        raise ParseError("signature length differs from the number of coordinates", 1, 1)
    try:
        chart = Chart(len(coords), coords, signature)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None
    reg = FieldRegistry(chart)
    for decl, ln in decls:
        try:
            reg.declare_field(decl)
        except (ValueError, GradeError) as exc:
            raise ParseError(str(exc), ln, 1) from None
    for fname, numeric in functions.items():
        reg.declare_function(fname, numeric)
    env = _Env(reg, constants)
    el = _Elab(env)
    if lagr is None:
        raise ParseError("missing Lagrangian 'L = ...'", len(lines) or 1, 1)
    node, ln = lagr
    L = el.top(node)
    if L.terms and (len(L.grades()) != 1 or L.grade != chart.n):
        g = sorted(L.grades())
        raise ParseError(f"Lagrangian has grade {g[0] if len(g) == 1 else g}, expected {chart.n}",
                         node.line, node.col)
    if L.terms and L.vgrades() != {0}:
        raise ParseError("Lagrangian must not contain vertical generators", node.line, node.col)
    env.lagrangian = L
    specs = []
    for sname, sline, stmts in symmetries:
        variations: dict = {}
        X = None
        used_params = []
        for kind, payload, ln in stmts:
            if kind == "X":
                if X is not None:
                    raise ParseError("X defined twice", ln, 1)
                X = el.top(payload)
                continue
            target, expr = payload
            decl = el._decl(target)
            if decl.param:
                raise ParseError(f"{decl.name} is a parameter and is not varied", target.line, target.col)
            lhs_free = el.free(target)
            if any(lo for _, lo in target.indices):
                raise ParseError("delta targets use upper slots", target.line, target.col)
            names = list(lhs_free)
            for vals in product(*(range(lhs_free[ix][1]) for ix in names)):
                bind = dict(zip(names, vals))
                slots = el._slot_values(target, bind)
                val = el.top(expr, bind, expect_free=names)
                if val.terms and val.grade != decl.degree:
                    raise ParseError(f"variation of {decl.name} has grade {val.grade}, expected {decl.degree}",
                                     expr.line, expr.col)
                variations[(decl.name, slots)] = val
        for d in reg.params():
            used_params.append(d.name)
        specs.append(SymmetrySpec(sname, variations, X if X is not None else FormExpr(chart.n),
                                  tuple(used_params)))
    try:
        model = LagrangianModel(reg, L, name, specs)
    except (ValueError, GradeError) as exc:
        raise ParseError(str(exc), node.line, node.col) from None
    return ParsedModel(model, specs, source)


def parse_file(path) -> ParsedModel:
    from pathlib import Path

    p = Path(path)
    return parse(p.read_text(encoding="utf-8"), p.stem)


__all__ = ["ParseError", "ParsedModel", "parse", "parse_file", "parse_expression"]
