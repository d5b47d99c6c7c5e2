"""Text, LaTeX and structured (JSON) rendering of expressions."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional

from ..atoms import FuncAtom, JetAtom, ParamAtom, format_atom
from ..forms import FormExpr, canonicalize

STRUCTURED_FORMAT = "histcalc.expr"
STRUCTURED_VERSION = 1


def _labels(n: int, coords) -> tuple:
    if coords:
        return tuple(coords)
    return ("t",) if n == 1 else tuple(f"x{i}" for i in range(n))


def _coef_text(c: Fraction, has_body: bool) -> str:
    mag = abs(c)
    if mag == 1 and has_body:
        return ""
    return str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"


def _term_text(key, coords) -> list:
    atoms, gens, mono = key
    parts = []
    for a, p in atoms:
        s = format_atom(a, coords)
        parts.append(s if p == 1 else f"{s}^{p}")
    if gens:
        parts.append("∧".join(f"D{format_atom(g, coords)}" for g in gens))
    if mono:
        parts.append("∧".join(f"d{coords[i]}" for i in mono))
    return parts


def to_text(expr: FormExpr, coords=None) -> str:
    if not expr.terms:
        return "0"
    coords = _labels(expr.n, coords)
    out = []
    for i, (key, c) in enumerate(expr.sorted_terms()):
        body = " ".join(_term_text(key, coords))
        piece = " ".join(p for p in (_coef_text(c, bool(body)), body) if p)
        if i == 0:
            out.append(("-" if c < 0 else "") + piece)
        else:
            out.append((" - " if c < 0 else " + ") + piece)
    return "".join(out)


def _atom_latex(a, coords) -> str:
    if a.kind == "j":
        name = a.field
        if len(name) > 1:
            name = {"w": r"\omega", "lam": r"\lambda", "phi": r"\varphi"}.get(name, rf"\mathrm{{{name}}}")
        elif name == "w":
            name = r"\omega"
        sup = "".join(map(str, a.slots))
        sub = "".join(coords[i] for i in a.comp)
        if a.deriv:
            sub += "," + "".join(coords[i] for i in a.deriv)
        s = name
        if sup:
            s += f"^{{{sup}}}"
        if sub:
            s += f"_{{{sub}}}"
        return s
    if a.kind == "f":
        primes = "'" * a.order if a.order <= 3 else f"^{{({a.order})}}"
        return f"{a.name}{primes}({_atom_latex(a.arg, coords)})"
    s = rf"\mathrm{{{a.name}}}"
    if a.slots:
        s += "^{" + "".join(map(str, a.slots)) + "}"
    return s


def to_latex(expr: FormExpr, coords=None) -> str:
    if not expr.terms:
        return "0"
    coords = _labels(expr.n, coords)
    out = []
    for i, ((atoms, gens, mono), c) in enumerate(expr.sorted_terms()):
        body = []
        for a, p in atoms:
            s = _atom_latex(a, coords)
            body.append(s if p == 1 else f"({s})^{{{p}}}")
        if gens:
            body.append(r" \wedge ".join(rf"\mathbb{{D}}{_atom_latex(g, coords)}" for g in gens))
        if mono:
            body.append(r" \wedge ".join(rf"\mathrm{{d}}{coords[m]}" for m in mono))
        mag = abs(c)
        coef = "" if (mag == 1 and body) else (
            str(mag.numerator) if mag.denominator == 1 else rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        )
        sign = "-" if c < 0 else ("" if i == 0 else "+")
        piece = (sign if i == 0 else f" {sign} ") + coef + (r"\," if coef and body else "") + r"\,".join(body)
        out.append(piece)
    return "".join(out)


# form-level names ------------------------------------------------------------


def _with_coef(c: Fraction, body: str, format: str) -> str:
    sign = "-" if c < 0 else ""
    mag = abs(c)
    if mag == 1:
        return sign + body
    if format == "latex" and mag.denominator != 1:
        return rf"{sign}\frac{{{mag.numerator}}}{{{mag.denominator}}}\, {body}"
    num = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
    return f"{sign}{num} {body}" if format == "text" else rf"{sign}{num}\, {body}"


def _candidates(registry) -> list:
    """``(form, text, latex)`` for short expressions in the declared fields."""
    from ..forms import coordinate_star, exterior_derivative, metric_star, wedge

    chart = registry.chart
    if chart.signature is not None:
        star = lambda e: metric_star(e, chart)  # noqa: E731
    else:
        star = coordinate_star
    base = []
    for decl in registry.fields.values():
        insts = decl.instances()
        for inst in insts:
            c = registry.form(decl.name, inst)
            sup = ",".join(map(str, inst))
            t = decl.name + (f"^{sup}" if sup else "")
            lt = _atom_latex(JetAtom("j", decl.name, inst, (), ()), ())
            dc = exterior_derivative(c, max_order=1)
            base += [(c, t, lt), (dc, "d" + t, r"\mathrm{d}" + lt)]
    out = list(base)
    for f, t, lt in base:
        sf = star(f)
        out.append((sf, "⋆" + t, r"\star " + lt))
        try:
            out.append((exterior_derivative(sf), "d⋆" + t, r"\mathrm{d}\star " + lt))
        except ValueError:
            pass
    if len(base) <= 4:
        for i, (f, t, lt) in enumerate(base):
            for g, u, lu in base[i:] + [(star(h), "⋆" + v, r"\star " + lv) for h, v, lv in base]:
                w = wedge(f, g)
                if w:
                    out.append((w, f"{t}∧{u}", rf"{lt} \wedge {lu}"))
    return [c for c in out if c[0]]


def recognize(expr: FormExpr, registry):
    """``(coefficient, text, latex)`` if ``expr`` is a rational multiple of a
    short field expression, else ``None``."""
    if not expr.terms:
        return None
    key, c0 = expr.sorted_terms()[0]
    for form, text, latex in _candidates(registry):
        if form.n != expr.n or len(form.terms) != len(expr.terms) or key not in form.terms:
            continue
        k = c0 / form.terms[key]
        if form.scale(k) == expr:
            return k, text, latex
    return None


# structured ------------------------------------------------------------------


def _atom_json(a):
    if a.kind == "j":
        return ["j", a.field, list(a.slots), list(a.comp), list(a.deriv)]
    if a.kind == "f":
        return ["f", a.name, _atom_json(a.arg), a.order]
    return ["p", a.name, list(a.slots)]


def _atom_from_json(obj):
    tag = obj[0]
    if tag == "j":
        return JetAtom("j", obj[1], tuple(obj[2]), tuple(obj[3]), tuple(obj[4]))
    if tag == "f":
        return FuncAtom("f", obj[1], _atom_from_json(obj[2]), int(obj[3]))
    if tag == "p":
        return ParamAtom("p", obj[1], tuple(obj[2]))
    raise ValueError(f"unknown atom tag {tag!r}")


def to_structured_obj(expr: FormExpr, provenance: Optional[dict] = None) -> dict:
    terms = []
    for (atoms, gens, mono), c in expr.sorted_terms():
        terms.append({
            "c": str(c),
            "atoms": [[_atom_json(a), p] for a, p in atoms],
            "D": [_atom_json(g) for g in gens],
            "dx": list(mono),
        })
    bideg = expr.bidegree if expr.is_homogeneous() else None
    return {
        "format": STRUCTURED_FORMAT,
        "version": STRUCTURED_VERSION,
        "n": expr.n,
        "bidegree": list(bideg) if bideg else None,
        "terms": terms,
        "provenance": provenance or {},
    }


def to_structured(expr: FormExpr, provenance: Optional[dict] = None) -> str:
    return json.dumps(to_structured_obj(expr, provenance), ensure_ascii=False, separators=(",", ":"))


def from_structured_obj(obj: dict) -> FormExpr:
    if obj.get("format") != STRUCTURED_FORMAT:
        raise ValueError(f"not a {STRUCTURED_FORMAT} document")
    if obj.get("version") != STRUCTURED_VERSION:
        raise ValueError(f"unsupported structured version {obj.get('version')}")
    n = int(obj["n"])
    raw = []
    for t in obj["terms"]:
        atoms = []
        for a, p in t["atoms"]:
            atoms += [_atom_from_json(a)] * int(p)
        raw.append((Fraction(t["c"]), atoms, [_atom_from_json(g) for g in t["D"]], list(t["dx"])))
    return canonicalize(raw, n)


def parse_structured(text: str) -> FormExpr:
    return from_structured_obj(json.loads(text))


def pretty_print(expr: FormExpr, format: str = "text", coords=None, provenance=None,
                 registry=None) -> str:
    """Render ``expr`` as ``text``, ``latex`` or ``structured``.

    With a ``registry`` (or a model), text and LaTeX first try to name the
    expression as a multiple of a short form built from the declared fields,
    such as ``⋆dA``; otherwise the expanded component sum is printed.
    """
    if registry is not None and hasattr(registry, "registry"):
        registry = registry.registry
    if registry is not None and coords is None:
        coords = registry.chart.coords or None
    if format in ("text", "latex") and registry is not None:
        named = recognize(expr, registry)
        if named is not None:
            c, text, latex = named
            return _with_coef(c, text if format == "text" else latex, format)
    if format == "text":
        return to_text(expr, coords)
    if format == "latex":
        return to_latex(expr, coords)
    if format == "structured":
        return to_structured(expr, provenance)
    raise ValueError(f"unknown format {format!r}")


def model_to_structured_obj(model, symmetries=()) -> dict:
    """Chart, declarations, Lagrangian and symmetries as one JSON-ready tree."""
    reg = model.registry
    chart = model.chart
    return {
        "format": "histcalc.model",
        "version": STRUCTURED_VERSION,
        "chart": {"n": chart.n, "coords": list(chart.coords),
                  "signature": list(chart.signature) if chart.signature else None},
        "fields": [
            {"name": d.name, "degree": d.degree, "slots": list(d.slots), "param": d.param,
             "symmetries": [[s.kind, list(s.positions)] for s in d.symmetries]}
            for d in sorted(reg.fields.values(), key=lambda d: d.name)
        ],
        "functions": {k: v for k, v in sorted(reg.functions.items())},
        "lagrangian": to_structured_obj(model.lagrangian),
        "symmetries": [
            {"name": s.name, "params": sorted(s.params),
             "boundary": to_structured_obj(s.boundary if s.boundary is not None else FormExpr(model.n)),
             "variations": [[name, list(slots), to_structured_obj(v)]
                            for (name, slots), v in sorted(s.variations.items())]}
            for s in symmetries
        ],
    }


def model_to_structured(model, symmetries=()) -> str:
    return json.dumps(model_to_structured_obj(model, symmetries), ensure_ascii=False,
                      separators=(",", ":"))
