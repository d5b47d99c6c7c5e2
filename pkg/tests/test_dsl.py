import json
import random
from fractions import Fraction

import pytest

from histcalc import fixtures
from histcalc.dsl.parser import ParseError, parse
from histcalc.dsl.printer import (
    model_to_structured,
    parse_structured,
    pretty_print,
    to_structured,
)
from histcalc.forms import FormExpr, exterior_derivative, metric_star, wedge
from histcalc.randexpr import random_form, random_registry
from histcalc.variational import euler_lagrange


def src(*lines):
    return "\n".join(lines) + "\n"


EM = src("chart t x y z", "signature - + + +", "field A : 1", "L = 1/2 * d(A) gstar(d(A))")


def test_em_source_builds_maxwell_model():
    model, syms = parse(EM)
    A = model.registry.form("A")
    dA = exterior_derivative(A)
    assert model.lagrangian == wedge(dA, metric_star(dA, model.chart)).scale(Fraction(1, 2))
    assert syms == []


def test_gravity_source_matches_builder():
    parsed, _ = parse(fixtures.source("palatini"))
    built, _ = fixtures.build("palatini")
    assert parsed.lagrangian == built.lagrangian
    assert len(parsed.lagrangian) > 0


@pytest.mark.parametrize("name", fixtures.names())
def test_fixture_files_match_programmatic_models(name):
    loaded = fixtures.load(name)
    built = fixtures.build(name)
    assert model_to_structured(*loaded) == model_to_structured(*built)


def test_grade_error_has_position():
    with pytest.raises(ParseError) as info:
        parse(src("chart t", "field q : 0", "L = q q"))
    err = info.value
    assert (err.line, err.col) == (3, 5)
    assert "grade 0" in str(err) and "expected 1" in str(err)


@pytest.mark.parametrize("text, line, col, fragment", [
    (src("chart t", "field q : 0", "L = q q dt"), 3, 9, "unknown identifier"),
    (src("chart t", "field q : 0", "L = 1/2 * d(q) star(d(q)) +"), 3, 28, "unexpected"),
    (src("chart t", "field q : 0", "field q : 0", "L = 0"), 3, 1, "duplicate"),
    (src("chart t", "field q : 0", "L = d(d(q))"), 3, 5, "first order"),
    (src("chart t x", "signature - +", "field e[I:2] : 1", "L = e[I] e[J]"), 4, 5, "not summed"),
    (src("chart t x", "field A : 1", "L = gstar(d(A))"), 3, 5, "signature"),
])
def test_errors_carry_line_and_column(text, line, col, fragment):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.col) == (line, col)
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}, col {col}: ")


def test_comments_and_blank_lines_ignored():
    model, _ = parse("# header\n\n" + EM.replace("field A : 1", "field A : 1   # potential"))
    assert model.lagrangian == parse(EM).model.lagrangian


def test_caret_equals_juxtaposition():
    a = parse(EM).model.lagrangian
    b = parse(EM.replace("d(A) gstar", "d(A) ^ gstar")).model.lagrangian
    assert a == b


def test_repeated_index_in_same_position_inserts_metric():
    s = src("chart t x", "signature - +", "field f[I:2] : 0")
    same = parse(s + "L = f[I] f[I] d(t) d(x)\n").model.lagrangian
    mixed = parse(s + "L = f[I] f[_I] d(t) d(x)\n").model.lagrangian
    explicit = parse(s + "L = eta[I,J] f[I] f[J] d(t) d(x)\n").model.lagrangian
    assert same == mixed == explicit
    f0 = FormExpr.atom(next(a for a in same.atoms() if a.slots == (0,)), 2)
    f1 = FormExpr.atom(next(a for a in same.atoms() if a.slots == (1,)), 2)
    vol = parse(s + "L = vol\n").model.lagrangian
    assert same == wedge(f1 * f1 - f0 * f0, vol)


def test_symmetry_blocks():
    model, syms = fixtures.load("scalar")
    assert [s.name for s in syms] == ["shift_t", "shift_x"]
    assert syms[0].boundary.grade == 3


def test_empty_lagrangian_model():
    model, _ = parse(src("chart t", "field q : 0", "L = 0"))
    assert not euler_lagrange(model, "q")


def test_parse_deterministic():
    a = model_to_structured(*parse(fixtures.source("palatini")))
    b = model_to_structured(*parse(fixtures.source("palatini")))
    assert a == b


# printing ---------------------------------------------------------------------------


def test_em_momentum_names():
    model, _ = fixtures.build("em")
    P_A = model.momentum("A")
    assert pretty_print(P_A, "text", registry=model) == "⋆dA"
    assert pretty_print(P_A, "latex", registry=model) == r"\star \mathrm{d}A"
    assert pretty_print(euler_lagrange(model, "A"), "text", registry=model) == "d⋆dA"


def test_zero_prints_as_zero():
    for fmt in ("text", "latex"):
        assert pretty_print(FormExpr(4), fmt) == "0"


def test_gravity_momentum_expansion_stable():
    model, _ = fixtures.build("palatini")
    Pi = model.momentum("w", (0, 1))
    assert len(Pi) == 12
    first = pretty_print(Pi, "text", registry=model)
    assert first == pretty_print(fixtures.build("palatini")[0].momentum("w", (0, 1)), "text", registry=model)
    assert first.count("dt∧dx") == 2


def test_structured_has_version_and_provenance():
    model, _ = fixtures.build("em")
    doc = json.loads(pretty_print(model.momentum("A"), "structured", provenance={"field": "A"}))
    assert doc["format"] == "histcalc.expr" and doc["version"] == 1
    assert doc["provenance"] == {"field": "A"}
    assert doc["bidegree"] == [0, 2]


def test_unknown_format():
    with pytest.raises(ValueError):
        pretty_print(FormExpr(1), "markdown")


def _fuzzed(count, seed=2024):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, 4)
        reg = random_registry(rng, n)
        yield random_form(rng, reg, rng.randint(0, n), nterms=rng.randint(0, 5),
                          max_order=rng.randint(0, 2), vgrade=rng.randint(0, 2))


def test_structured_round_trip_fuzzed():
    count = 0
    for e in _fuzzed(500):
        text = to_structured(e)
        back = parse_structured(text)
        assert back == e
        assert to_structured(back) == text
        count += 1
    assert count == 500


def test_structured_rejects_foreign_documents():
    with pytest.raises(ValueError):
        parse_structured('{"format": "other", "version": 1}')
    with pytest.raises(ValueError):
        parse_structured('{"format": "histcalc.expr", "version": 99}')
