from fractions import Fraction

import pytest

from histcalc import fixtures
from histcalc.atoms import jet
from histcalc.eom import EomIdeal, reduce_mod_eom
from histcalc.forms import FormExpr, dx, exterior_derivative, wedge
from histcalc.variational import euler_lagrange, omega


@pytest.fixture(scope="module")
def osc():
    return fixtures.build("oscillator")[0]


def test_residual_reduces_to_itself(osc):
    ideal = EomIdeal.from_model(osc)
    el = euler_lagrange(osc, "q")
    rem, cert = reduce_mod_eom(el, ideal)
    assert not rem
    assert len(cert.entries) == 1
    label, mult, gen = cert.entries[0]
    assert mult == FormExpr.scalar(1, 1)
    assert gen == el


def test_multiple_of_residual(osc):
    ideal = EomIdeal.from_model(osc)
    el = euler_lagrange(osc, "q")
    target = FormExpr.atom(jet("q", (), (0,)), 1) * el.scale(3)
    rem, cert = reduce_mod_eom(target, ideal)
    assert not rem and cert.verify(target)


def test_off_shell_expression_is_returned(osc):
    ideal = EomIdeal.from_model(osc)
    target = FormExpr.atom(jet("q"), 1) * dx(0, 1)
    rem, cert = reduce_mod_eom(target, ideal)
    assert rem == target
    assert cert is None


def test_degree_bound_limits_search(osc):
    ideal = EomIdeal.from_model(osc)
    el = euler_lagrange(osc, "q")
    qd = FormExpr.atom(jet("q", (), (0,)), 1)
    target = qd * qd * el
    assert reduce_mod_eom(target, ideal, degree_bound=0)[1] is None
    assert not reduce_mod_eom(target, ideal, degree_bound=2)[0]


def test_zero_reduces_trivially(osc):
    rem, cert = reduce_mod_eom(FormExpr(1), EomIdeal.from_model(osc))
    assert not rem and cert.entries == []


@pytest.mark.parametrize("name", ["scalar", "em", "oscillator", "harmonic"])
def test_symplectic_current_conserved(name):
    model = fixtures.build(name)[0]
    dw = exterior_derivative(omega(model), 3)
    if not dw:
        return
    rem, cert = reduce_mod_eom(dw, EomIdeal.from_model(model))
    assert not rem
    assert cert.verify(dw)
    assert cert.to_obj()


def test_generators_include_derivatives():
    model = fixtures.build("scalar")[0]
    ideal = EomIdeal.from_model(model)
    labels = [lab for lab, _ in ideal.generators(exterior_derivative(omega(model), 3))]
    assert any(l.startswith("EL[") for l in labels)
    assert any(l.startswith("D(") for l in labels)
